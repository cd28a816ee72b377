#include "elastic/profiling.hpp"

#include "text_util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace elastic {

namespace {

constexpr std::string_view profile_header = "assignment,input_size,base_latency_seconds,objective_value";

} // namespace

ProfileTable ProfileTable::from_entries(std::vector<ProfileEntry> entries)
{
    using Kind = ProfileError::Kind;

    std::set<int> sizes;
    for (const auto& e : entries) {
        if (e.input_size < 0)
            throw ProfileError(Kind::invalid_value, "negative input size for " + format_assignment(e.assignment));
        if (!(e.base_latency > 0.0) || !std::isfinite(e.base_latency))
            throw ProfileError(Kind::invalid_value,
                               "base latency must be > 0 for " + format_assignment(e.assignment));
        if (!(e.objective_value >= 0.0 && e.objective_value <= 1.0))
            throw ProfileError(Kind::invalid_value,
                               "objective must be in [0,1] for " + format_assignment(e.assignment));
        sizes.insert(e.input_size);
    }
    if (entries.empty())
        throw ProfileError(Kind::incomplete_grid, "profile has no entries");

    ProfileTable table;
    table.sizes_.assign(sizes.begin(), sizes.end());
    const auto size_index = [&](int size) {
        return static_cast<std::size_t>(
            std::lower_bound(table.sizes_.begin(), table.sizes_.end(), size) - table.sizes_.begin());
    };

    std::map<Assignment, std::vector<bool>> seen;
    for (auto& e : entries) {
        auto [it, inserted] = table.rows_.try_emplace(e.assignment);
        Row& row = it->second;
        auto& mask = seen[e.assignment];
        if (inserted) {
            row.objective = e.objective_value;
            row.latencies.assign(table.sizes_.size(), 0.0);
            mask.assign(table.sizes_.size(), false);
        } else if (row.objective != e.objective_value) {
            throw ProfileError(Kind::objective_varies, "objective varies across input sizes for " +
                                                           format_assignment(e.assignment));
        }
        auto k = size_index(e.input_size);
        if (mask[k])
            throw ProfileError(Kind::duplicate_entry, "duplicate entry for " + format_assignment(e.assignment) +
                                                          " at input size " + std::to_string(e.input_size));
        mask[k] = true;
        row.latencies[k] = e.base_latency;
    }

    for (const auto& [assignment, mask] : seen) {
        for (std::size_t k = 0; k < mask.size(); ++k) {
            if (!mask[k])
                throw ProfileError(Kind::incomplete_grid,
                                   "incomplete grid: no entry for " + format_assignment(assignment) +
                                       " at input size " + std::to_string(table.sizes_[k]));
        }
    }
    return table;
}

const ProfileTable::Row& ProfileTable::row(const Assignment& assignment) const
{
    auto it = rows_.find(assignment);
    if (it == rows_.end())
        throw ProfileError(ProfileError::Kind::unknown_configuration,
                           "profile has no entry for configuration " + format_assignment(assignment));
    return it->second;
}

ProfileLookup ProfileTable::lookup(const Assignment& assignment, int input_size) const
{
    const Row& r = row(assignment);
    if (input_size <= sizes_.front())
        return {r.latencies.front(), r.objective};
    if (input_size >= sizes_.back())
        return {r.latencies.back(), r.objective};

    auto hi = static_cast<std::size_t>(std::lower_bound(sizes_.begin(), sizes_.end(), input_size) - sizes_.begin());
    if (sizes_[hi] == input_size)
        return {r.latencies[hi], r.objective};
    const std::size_t lo = hi - 1;
    const double t = static_cast<double>(input_size - sizes_[lo]) / static_cast<double>(sizes_[hi] - sizes_[lo]);
    return {r.latencies[lo] + t * (r.latencies[hi] - r.latencies[lo]), r.objective};
}

double ProfileTable::objective(const Assignment& assignment) const
{
    return row(assignment).objective;
}

void ProfileTable::check_covers(const ServiceTopology& topology) const
{
    for (const auto& c : enumerate_configurations(topology)) {
        if (!contains(c.assignment))
            throw ProfileError(ProfileError::Kind::unknown_configuration,
                               "profile does not cover configuration " + format_assignment(c.assignment) +
                                   " of topology '" + topology.name() + "'");
    }
}

std::vector<ProfileEntry> ProfileTable::entries() const
{
    std::vector<ProfileEntry> out;
    out.reserve(rows_.size() * sizes_.size());
    for (const auto& [assignment, r] : rows_) {
        for (std::size_t k = 0; k < sizes_.size(); ++k)
            out.push_back({assignment, sizes_[k], r.latencies[k], r.objective});
    }
    return out;
}

ProfileLookup lookup(const ProfileTable& table, const Configuration& config, int input_size)
{
    return table.lookup(config.assignment, input_size);
}

void SyntheticProfileModel::validate(const ServiceTopology& topology) const
{
    const auto counts = topology.value_counts();
    if (latency_weights.size() != counts.size() || objective_weights.size() != counts.size())
        throw Error("synthetic model: need one weight list per parameter (" + std::to_string(counts.size()) + ")");
    for (std::size_t p = 0; p < counts.size(); ++p) {
        const auto& name = topology.parameters()[p].name;
        if (latency_weights[p].size() != counts[p] || objective_weights[p].size() != counts[p])
            throw Error("synthetic model: weight count mismatch for parameter '" + name + "'");
        for (double w : latency_weights[p]) {
            if (!(w >= 0.0))
                throw Error("synthetic model: negative latency weight for parameter '" + name + "'");
        }
        for (double w : objective_weights[p]) {
            if (!(w >= 0.0))
                throw Error("synthetic model: negative objective weight for parameter '" + name + "'");
        }
    }
    if (!(latency_floor > 0.0))
        throw Error("synthetic model: latency floor must be > 0");
    if (!(per_face_slope >= 0.0))
        throw Error("synthetic model: per-face slope must be >= 0");
    if (!(objective_base >= 0.0))
        throw Error("synthetic model: objective base must be >= 0");
}

ServiceTopology default_topology()
{
    return ServiceTopology(
        "face_detection_and_matching",
        {
            OperatorSpec{"preprocessing",
                         {
                             ParameterSpec{"image_resize", {"0.25", "0.5", "0.75", "1.0"}},
                             ParameterSpec{"colorization", {"grayscale", "color"}},
                         }},
            OperatorSpec{"face_detection",
                         {
                             ParameterSpec{"detection_algorithm", {"lbp", "haar"}},
                             ParameterSpec{"scale_factor", {"1.4", "1.3", "1.2", "1.1"}},
                             ParameterSpec{"min_neighbors", {"6", "5", "4", "3"}},
                         }},
            OperatorSpec{"face_matching",
                         {
                             ParameterSpec{"face_recognizer", {"eigenfaces", "lbph"}},
                         }},
        });
}

SyntheticProfileModel default_profile_model()
{
    // Each knob contributes value_index * radix units, with radices forming a
    // mixed-radix code over 0..511. Every configuration gets a distinct total,
    // and latency and objective share the same ranking (pure trade-off).
    const std::vector<int> radix = {128, 4, 2, 32, 8, 1};
    const std::vector<int> counts = {4, 2, 2, 4, 4, 2};
    constexpr double units = 511.0;
    constexpr double objective_span = 1.0 - 0.4195;
    constexpr double latency_span = 0.3;

    SyntheticProfileModel model;
    model.latency_floor = 0.28;
    model.per_face_slope = 0.003;
    model.objective_base = 0.4195;
    for (std::size_t p = 0; p < radix.size(); ++p) {
        std::vector<double> lat, obj;
        for (int v = 0; v < counts[p]; ++v) {
            const double u = static_cast<double>(v * radix[p]) / units;
            lat.push_back(latency_span * u);
            obj.push_back(objective_span * u);
        }
        model.latency_weights.push_back(std::move(lat));
        model.objective_weights.push_back(std::move(obj));
    }
    return model;
}

std::vector<int> default_input_sizes()
{
    return {6, 12, 24, 48, 96, 192};
}

ProfileTable generate_synthetic_profile(const SyntheticProfileModel& model,
                                        const ServiceTopology& topology,
                                        const std::vector<int>& input_sizes)
{
    model.validate(topology);
    if (input_sizes.empty())
        throw Error("synthetic profile: input sizes must be non-empty");
    for (std::size_t i = 0; i < input_sizes.size(); ++i) {
        if (input_sizes[i] < 0 || (i > 0 && input_sizes[i] <= input_sizes[i - 1]))
            throw Error("synthetic profile: input sizes must be non-negative and strictly increasing");
    }

    std::vector<ProfileEntry> entries;
    for (const auto& c : enumerate_configurations(topology)) {
        double latency_weight = 0.0;
        double objective = model.objective_base;
        for (std::size_t p = 0; p < c.assignment.size(); ++p) {
            const auto v = static_cast<std::size_t>(c.assignment[p]);
            latency_weight += model.latency_weights[p][v];
            objective += model.objective_weights[p][v];
        }
        objective = std::clamp(objective, 0.0, 1.0);
        const double fixed = model.latency_floor + latency_weight;
        const double slope = model.per_face_slope * fixed / model.latency_floor;
        for (int n : input_sizes)
            entries.push_back({c.assignment, n, fixed + slope * static_cast<double>(n), objective});
    }
    return ProfileTable::from_entries(std::move(entries));
}

void write_profile(const ProfileTable& table, std::ostream& out)
{
    out << profile_header << '\n';
    for (const auto& e : table.entries()) {
        out << format_assignment(e.assignment) << ',' << e.input_size << ',' << detail::format_double(e.base_latency)
            << ',' << detail::format_double(e.objective_value) << '\n';
    }
}

ProfileTable read_profile(std::istream& in)
{
    using Kind = ProfileError::Kind;

    std::string line;
    if (!std::getline(in, line) || detail::strip_cr(line) != profile_header)
        throw ProfileError(Kind::missing_header, "profile: expected header '" + std::string(profile_header) + "'");

    std::vector<ProfileEntry> entries;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        auto text = detail::strip_cr(line);
        if (text.empty())
            continue;
        const auto fields = detail::split(text, ',');
        const auto where = "profile line " + std::to_string(line_no);
        if (fields.size() != 4)
            throw ProfileError(Kind::malformed_row, where + ": expected 4 fields, got " + std::to_string(fields.size()));
        ProfileEntry e;
        try {
            e.assignment = parse_assignment(fields[0]);
        } catch (const Error&) {
            throw ProfileError(Kind::malformed_row, where + ": malformed assignment");
        }
        auto size = detail::parse_number<int>(fields[1]);
        auto latency = detail::parse_number<double>(fields[2]);
        auto objective = detail::parse_number<double>(fields[3]);
        if (!size || !latency || !objective)
            throw ProfileError(Kind::malformed_row, where + ": malformed number");
        e.input_size = *size;
        e.base_latency = *latency;
        e.objective_value = *objective;
        entries.push_back(std::move(e));
    }
    return ProfileTable::from_entries(std::move(entries));
}

void save_profile(const ProfileTable& table, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw ProfileError(ProfileError::Kind::io, "cannot write profile " + path.string());
    write_profile(table, out);
    if (!out)
        throw ProfileError(ProfileError::Kind::io, "failed writing profile " + path.string());
}

ProfileTable load_profile(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ProfileError(ProfileError::Kind::io, "cannot open profile " + path.string());
    return read_profile(in);
}

} // namespace elastic
