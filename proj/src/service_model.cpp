#include "elastic/service_model.hpp"

#include "elastic/profiling.hpp"
#include "text_util.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace elastic {

ServiceTopology::ServiceTopology(std::string name, std::vector<OperatorSpec> operators)
    : name_(std::move(name)), operators_(std::move(operators))
{
    std::set<std::string> op_names;
    for (const auto& op : operators_) {
        if (!op_names.insert(op.name).second)
            throw Error("topology '" + name_ + "': duplicate operator '" + op.name + "'");
        if (op.granularity < 1)
            throw Error("operator '" + op.name + "': granularity must be >= 1");
        std::set<std::string> param_names;
        for (const auto& p : op.parameters) {
            if (!param_names.insert(p.name).second)
                throw Error("operator '" + op.name + "': duplicate parameter '" + p.name + "'");
            if (p.values.empty())
                throw Error("parameter '" + p.name + "' has no values");
            std::set<std::string> labels(p.values.begin(), p.values.end());
            if (labels.size() != p.values.size())
                throw Error("parameter '" + p.name + "' has duplicate value labels");
            flat_.push_back(p);
        }
    }
}

std::vector<std::size_t> ServiceTopology::value_counts() const
{
    std::vector<std::size_t> counts;
    counts.reserve(flat_.size());
    for (const auto& p : flat_)
        counts.push_back(p.values.size());
    return counts;
}

std::size_t ServiceTopology::configuration_count() const
{
    if (flat_.empty())
        return 0;
    auto counts = value_counts();
    return std::accumulate(counts.begin(), counts.end(), std::size_t{1}, std::multiplies<>{});
}

std::string format_assignment(const Assignment& assignment)
{
    std::string out;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        if (i)
            out += ';';
        out += std::to_string(assignment[i]);
    }
    return out;
}

Assignment parse_assignment(std::string_view text)
{
    Assignment out;
    for (auto part : detail::split(text, ';')) {
        auto v = detail::parse_number<int>(part);
        if (!v || *v < 0)
            throw Error("malformed assignment '" + std::string(text) + "'");
        out.push_back(*v);
    }
    return out;
}

bool is_valid_for(const Assignment& assignment, const ServiceTopology& topology)
{
    const auto& params = topology.parameters();
    if (assignment.size() != params.size())
        return false;
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (assignment[i] < 0 || static_cast<std::size_t>(assignment[i]) >= params[i].values.size())
            return false;
    }
    return true;
}

std::string_view to_string(Sense sense)
{
    return sense == Sense::maximize ? "maximize" : "minimize";
}

Sense parse_sense(std::string_view text)
{
    if (text == "maximize")
        return Sense::maximize;
    if (text == "minimize")
        return Sense::minimize;
    throw Error("unknown objective sense '" + std::string(text) + "'");
}

Requirement::Requirement(std::string objective_metric, Sense sense,
                         std::vector<ConstraintSpec> constraints)
    : objective_metric_(std::move(objective_metric)), sense_(sense),
      constraints_(std::move(constraints))
{
    if (constraints_.empty())
        throw Error("requirement needs at least one constraint");
    std::set<std::string> metrics;
    for (const auto& c : constraints_) {
        if (!(c.target > 0.0))
            throw Error("constraint on '" + c.metric + "': target must be > 0");
        if (c.metric == objective_metric_)
            throw Error("constraint metric '" + c.metric + "' is also the objective");
        if (!metrics.insert(c.metric).second)
            throw Error("duplicate constraint metric '" + c.metric + "'");
    }
}

std::size_t Requirement::latency_constraint() const
{
    for (std::size_t i = 0; i < constraints_.size(); ++i) {
        if (constraints_[i].metric == "latency")
            return i;
    }
    return 0;
}

std::vector<Configuration> enumerate_configurations(const ServiceTopology& topology)
{
    const auto counts = topology.value_counts();
    if (counts.empty())
        throw Error("topology '" + topology.name() + "' has no parameters: service is not configurable");

    std::vector<Configuration> out;
    out.reserve(topology.configuration_count());
    Assignment current(counts.size(), 0);
    while (true) {
        out.push_back(Configuration{current, -1});
        // odometer increment, last parameter fastest
        std::size_t i = counts.size();
        while (i > 0) {
            --i;
            if (static_cast<std::size_t>(++current[i]) < counts[i])
                break;
            current[i] = 0;
            if (i == 0)
                return out;
        }
    }
}

std::vector<Configuration> sort_by_objective(std::vector<Configuration> configs,
                                             const ProfileTable& profile,
                                             int reference_input,
                                             Sense sense)
{
    struct Keyed {
        double key;
        Configuration config;
    };
    std::vector<Keyed> keyed;
    keyed.reserve(configs.size());
    for (auto& c : configs) {
        if (!profile.contains(c.assignment))
            throw ProfileError(ProfileError::Kind::unknown_configuration,
                               "profile has no entry for configuration " + format_assignment(c.assignment));
        double objective = profile.lookup(c.assignment, reference_input).objective_value;
        keyed.push_back({sense == Sense::maximize ? objective : -objective, std::move(c)});
    }
    std::stable_sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
        if (a.key != b.key)
            return a.key > b.key;
        return a.config.assignment < b.config.assignment;
    });

    std::vector<Configuration> out;
    out.reserve(keyed.size());
    for (std::size_t i = 0; i < keyed.size(); ++i) {
        keyed[i].config.ordinal = static_cast<int>(i);
        out.push_back(std::move(keyed[i].config));
    }
    return out;
}

std::vector<Configuration> select_active_subset(const std::vector<Configuration>& sorted,
                                                std::size_t count)
{
    if (count == 0 || count >= sorted.size())
        return sorted;
    std::vector<Configuration> out;
    out.reserve(count);
    if (count == 1) {
        out.push_back(sorted.front());
        return out;
    }
    const double span = static_cast<double>(sorted.size() - 1);
    for (std::size_t i = 0; i < count; ++i) {
        auto pos = static_cast<std::size_t>(std::llround(span * static_cast<double>(i) /
                                                         static_cast<double>(count - 1)));
        out.push_back(sorted[pos]);
    }
    return out;
}

} // namespace elastic
