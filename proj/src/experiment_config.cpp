#include "elastic/experiment_config.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace elastic {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string> top_level_keys = {
    "topology",       "requirement", "profile", "reference_input", "active_actions", "traces",
    "trace_params",   "cpu",         "controllers", "heuristic",   "learning",      "runs",
    "seed",           "output_dir",  "qtable_dir",  "initial_qtable", "step_traces", "jobs"};

void reject_unknown(const json& obj, const std::set<std::string>& allowed, std::string_view where)
{
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.count(key))
            throw Error("config: unknown key '" + key + "' in " + std::string(where));
    }
}

template <typename T>
void read(const json& obj, const char* key, T& target)
{
    if (obj.contains(key))
        target = obj.at(key).get<T>();
}

fs::path resolve(const fs::path& base, const std::string& p)
{
    fs::path path(p);
    if (path.empty() || path.is_absolute() || base.empty())
        return path;
    return base / path;
}

ServiceTopology parse_topology(const json& j)
{
    reject_unknown(j, {"name", "operators"}, "topology");
    std::vector<OperatorSpec> ops;
    for (const auto& op : j.at("operators")) {
        reject_unknown(op, {"name", "granularity", "parameters"}, "operator");
        OperatorSpec spec;
        spec.name = op.at("name").get<std::string>();
        read(op, "granularity", spec.granularity);
        for (const auto& p : op.at("parameters")) {
            reject_unknown(p, {"name", "values"}, "parameter");
            ParameterSpec param;
            param.name = p.at("name").get<std::string>();
            for (const auto& v : p.at("values"))
                param.values.push_back(v.is_string() ? v.get<std::string>() : v.dump());
            spec.parameters.push_back(std::move(param));
        }
        ops.push_back(std::move(spec));
    }
    return ServiceTopology(j.value("name", std::string("service")), std::move(ops));
}

Requirement parse_requirement(const json& j)
{
    reject_unknown(j, {"objective", "sense", "constraints"}, "requirement");
    std::vector<ConstraintSpec> constraints;
    for (const auto& c : j.at("constraints")) {
        reject_unknown(c, {"metric", "target"}, "constraint");
        constraints.push_back({c.at("metric").get<std::string>(), c.at("target").get<double>()});
    }
    return Requirement(j.value("objective", std::string("precision")), parse_sense(j.value("sense", "maximize")),
                       std::move(constraints));
}

void parse_profile(const json& j, ProfileSource& source, const fs::path& base, bool custom_topology)
{
    reject_unknown(j, {"file", "synthetic", "input_sizes"}, "profile");
    if (j.contains("file") && j.contains("synthetic"))
        throw Error("config: profile takes either 'file' or 'synthetic', not both");
    if (j.contains("file"))
        source.file = resolve(base, j.at("file").get<std::string>());
    read(j, "input_sizes", source.input_sizes);
    if (j.contains("synthetic")) {
        const auto& s = j.at("synthetic");
        reject_unknown(s, {"latency_weights", "objective_weights", "per_face_slope", "latency_floor", "objective_base"},
                       "profile.synthetic");
        read(s, "latency_weights", source.model.latency_weights);
        read(s, "objective_weights", source.model.objective_weights);
        read(s, "per_face_slope", source.model.per_face_slope);
        read(s, "latency_floor", source.model.latency_floor);
        read(s, "objective_base", source.model.objective_base);
        if (custom_topology && (!s.contains("latency_weights") || !s.contains("objective_weights")))
            throw Error("config: a custom topology needs explicit synthetic weights or a profile file");
    } else if (custom_topology && source.file.empty()) {
        throw Error("config: a custom topology needs explicit synthetic weights or a profile file");
    }
}

void parse_trace_params(const json& j, TraceParams& p)
{
    reject_unknown(j,
                   {"fixed_size", "fixed_steps", "variable_blocks", "block_length", "full_day_hours", "random_sizes",
                    "random_change_prob", "random_steps"},
                   "trace_params");
    read(j, "fixed_size", p.fixed_size);
    read(j, "fixed_steps", p.fixed_steps);
    read(j, "variable_blocks", p.variable_blocks);
    read(j, "block_length", p.block_length);
    read(j, "full_day_hours", p.full_day_hours);
    read(j, "random_sizes", p.random_sizes);
    read(j, "random_change_prob", p.random_change_prob);
    read(j, "random_steps", p.random_steps);
}

void parse_cpu(const json& j, CpuChainParams& p)
{
    reject_unknown(j, {"min_avail", "max_avail", "change_prob", "delta_mean", "delta_stddev", "initial"}, "cpu");
    read(j, "min_avail", p.min_avail);
    read(j, "max_avail", p.max_avail);
    read(j, "change_prob", p.change_prob);
    read(j, "delta_mean", p.delta_mean);
    read(j, "delta_stddev", p.delta_stddev);
    read(j, "initial", p.initial);
}

void parse_learning(const json& j, LearningParams& p)
{
    reject_unknown(j, {"alpha", "gamma", "epsilon_start", "epsilon_min", "epsilon_decay", "seed"}, "learning");
    read(j, "alpha", p.alpha);
    read(j, "gamma", p.gamma);
    read(j, "epsilon_start", p.epsilon_start);
    read(j, "epsilon_min", p.epsilon_min);
    read(j, "epsilon_decay", p.epsilon_decay);
    read(j, "seed", p.seed);
}

} // namespace

CampaignSpec parse_campaign(std::string_view json_text, const fs::path& base_dir)
{
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw Error(std::string("config: ") + e.what());
    }
    if (!doc.is_object())
        throw Error("config: top level must be an object");

    try {
        reject_unknown(doc, top_level_keys, "config");
        CampaignSpec campaign;
        ExperimentSpec& spec = campaign.base;

        const bool custom_topology = doc.contains("topology");
        if (custom_topology)
            spec.topology = parse_topology(doc.at("topology"));
        if (doc.contains("requirement"))
            spec.requirement = parse_requirement(doc.at("requirement"));
        if (doc.contains("profile"))
            parse_profile(doc.at("profile"), spec.profile, base_dir, custom_topology);
        else if (custom_topology)
            throw Error("config: a custom topology needs a profile section");
        read(doc, "reference_input", spec.reference_input);
        read(doc, "active_actions", spec.active_actions);
        if (doc.contains("trace_params"))
            parse_trace_params(doc.at("trace_params"), spec.trace_params);
        if (doc.contains("cpu"))
            parse_cpu(doc.at("cpu"), spec.cpu);
        if (doc.contains("heuristic")) {
            reject_unknown(doc.at("heuristic"), {"upgrade_after"}, "heuristic");
            read(doc.at("heuristic"), "upgrade_after", spec.heuristic.upgrade_after);
        }
        if (doc.contains("learning"))
            parse_learning(doc.at("learning"), spec.learning);
        read(doc, "runs", spec.runs);
        read(doc, "seed", spec.base_seed);
        read(doc, "step_traces", spec.write_step_traces);
        if (doc.contains("initial_qtable"))
            spec.initial_qtable = resolve(base_dir, doc.at("initial_qtable").get<std::string>());

        if (doc.contains("traces")) {
            campaign.traces.clear();
            for (const auto& t : doc.at("traces"))
                campaign.traces.push_back(parse_trace_kind(t.get<std::string>()));
        }
        if (doc.contains("controllers")) {
            campaign.controllers.clear();
            for (const auto& c : doc.at("controllers"))
                campaign.controllers.push_back(parse_controller_kind(c.get<std::string>()));
        }
        if (doc.contains("output_dir"))
            campaign.output_dir = resolve(base_dir, doc.at("output_dir").get<std::string>());
        if (doc.contains("qtable_dir"))
            campaign.qtable_dir = resolve(base_dir, doc.at("qtable_dir").get<std::string>());
        read(doc, "jobs", campaign.jobs);
        return campaign;
    } catch (const json::exception& e) {
        throw Error(std::string("config: ") + e.what());
    }
}

CampaignSpec load_campaign(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open config " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_campaign(text.str(), path.parent_path());
}

} // namespace elastic
