#include "elastic/harness.hpp"

#include "elastic/report.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

namespace elastic {

namespace fs = std::filesystem;

std::string_view to_string(ControllerKind kind)
{
    switch (kind) {
    case ControllerKind::static_hp:
        return "static-hp";
    case ControllerKind::static_fast:
        return "static-fast";
    case ControllerKind::heuristic:
        return "heuristic";
    case ControllerKind::rl1:
        return "rl1";
    case ControllerKind::rl2:
        return "rl2";
    }
    return "?";
}

ControllerKind parse_controller_kind(std::string_view text)
{
    for (auto kind : all_controller_kinds()) {
        if (text == to_string(kind))
            return kind;
    }
    throw Error("unknown controller '" + std::string(text) +
                "' (expected static-hp, static-fast, heuristic, rl1 or rl2)");
}

bool is_learning(ControllerKind kind)
{
    return kind == ControllerKind::rl1 || kind == ControllerKind::rl2;
}

std::vector<ControllerKind> all_controller_kinds()
{
    return {ControllerKind::static_hp, ControllerKind::static_fast, ControllerKind::heuristic, ControllerKind::rl1,
            ControllerKind::rl2};
}

Requirement default_requirement()
{
    return Requirement("precision", Sense::maximize, {ConstraintSpec{"latency", 1.0}});
}

Scenario::Scenario(ServiceTopology topology, Requirement requirement, std::shared_ptr<const ProfileTable> profile,
                   int reference_input, std::size_t active_actions)
    : topology_(std::move(topology)), requirement_(std::move(requirement)), profile_(std::move(profile)),
      reference_input_(reference_input),
      sorted_([&] {
          if (!profile_)
              throw Error("scenario needs a profile");
          profile_->check_covers(topology_);
          return sort_by_objective(enumerate_configurations(topology_), *profile_, reference_input_,
                                   requirement_.sense());
      }()),
      active_(select_active_subset(sorted_, active_actions)), full_(sorted_)
{
}

const ActionSpace& Scenario::actions_for(ControllerKind kind) const
{
    return kind == ControllerKind::static_hp || kind == ControllerKind::static_fast ? full_ : active_;
}

Scenario Scenario::make_default()
{
    auto topology = default_topology();
    auto profile = std::make_shared<const ProfileTable>(
        generate_synthetic_profile(default_profile_model(), topology, default_input_sizes()));
    return Scenario(std::move(topology), default_requirement(), std::move(profile), 6, 16);
}

void ExperimentSpec::validate() const
{
    if (runs < 1)
        throw Error("experiment: runs must be >= 1");
    trace_params.validate();
    cpu.validate();
    heuristic.validate();
    learning.validate();
    if (!profile.file.empty() && !fs::exists(profile.file))
        throw Error("experiment: profile file " + profile.file.string() + " not found");
    if (!initial_qtable.empty() && !fs::exists(initial_qtable))
        throw Error("experiment: initial q-table " + initial_qtable.string() + " not found");
    for (const auto& c : requirement.constraints()) {
        if (!is_known_metric(c.metric))
            throw Error("experiment: simulator cannot measure constraint metric '" + c.metric + "'");
    }
}

Scenario build_scenario(const ExperimentSpec& spec)
{
    std::shared_ptr<const ProfileTable> profile;
    if (!spec.profile.file.empty())
        profile = std::make_shared<const ProfileTable>(load_profile(spec.profile.file));
    else
        profile = std::make_shared<const ProfileTable>(
            generate_synthetic_profile(spec.profile.model, spec.topology, spec.profile.input_sizes));
    return Scenario(spec.topology, spec.requirement, std::move(profile), spec.reference_input, spec.active_actions);
}

std::unique_ptr<Controller> make_controller(ControllerKind kind, const Scenario& scenario,
                                            const HeuristicParams& heuristic, const LearningParams& learning,
                                            std::optional<QTable> table)
{
    const auto& actions = scenario.actions_for(kind);
    switch (kind) {
    case ControllerKind::static_hp:
        return std::make_unique<StaticController>(0, "static-hp");
    case ControllerKind::static_fast:
        return std::make_unique<StaticController>(
            static_cast<std::size_t>(fastest_ordinal(scenario.sorted(), scenario.profile(), scenario.reference_input())),
            "static-fast");
    case ControllerKind::heuristic:
        return std::make_unique<HeuristicController>(actions.size(), heuristic);
    case ControllerKind::rl1:
    case ControllerKind::rl2: {
        const auto encoder = kind == ControllerKind::rl1 ? EncoderVersion::v1 : EncoderVersion::v2;
        if (!table)
            table.emplace(encoder, state_count(encoder, actions.size()), actions.size());
        return std::make_unique<QLearningController>(encoder, actions.size(), learning, scenario.requirement(),
                                                     std::move(*table));
    }
    }
    throw Error("unknown controller kind");
}

bool same_metrics(const RunMetrics& a, const RunMetrics& b)
{
    return a.run == b.run && a.seed == b.seed && a.steps == b.steps && a.mean_objective == b.mean_objective &&
           a.latency_satisfaction_pct == b.latency_satisfaction_pct && a.mean_reward == b.mean_reward;
}

RunMetrics summarize_steps(int run, std::uint64_t seed, const std::vector<StepRecord>& steps)
{
    RunMetrics m;
    m.run = run;
    m.seed = seed;
    m.steps = steps.size();
    if (steps.empty())
        return m;
    double objective = 0.0, reward_sum = 0.0;
    std::size_t satisfied = 0;
    for (const auto& s : steps) {
        objective += s.objective;
        reward_sum += s.reward;
        satisfied += s.satisfied ? 1 : 0;
    }
    const auto n = static_cast<double>(steps.size());
    m.mean_objective = objective / n;
    m.mean_reward = reward_sum / n;
    m.latency_satisfaction_pct = 100.0 * static_cast<double>(satisfied) / n;
    return m;
}

double median(std::vector<double> values)
{
    return percentile(std::move(values), 50.0);
}

// Nearest-rank percentile.
double percentile(std::vector<double> values, double pct)
{
    if (values.empty())
        return 0.0;
    std::sort(values.begin(), values.end());
    const double rank = std::ceil(pct / 100.0 * static_cast<double>(values.size()));
    const auto k = static_cast<std::size_t>(std::clamp(rank, 1.0, static_cast<double>(values.size()))) - 1;
    return values[k];
}

EpisodeResult run_episode(Environment& env, Controller& controller, const ActionSpace& actions, int run,
                          std::uint64_t seed)
{
    using clock = std::chrono::steady_clock;
    const Requirement& requirement = env.requirement();
    const std::size_t latency_index = requirement.latency_constraint();

    EpisodeResult result;
    env.reset(seed);
    result.steps.reserve(env.episode_length());
    result.decision_seconds.reserve(env.episode_length());

    ControllerObservation obs = make_observation(env.state(), requirement, actions);
    while (!env.finished()) {
        const auto t0 = clock::now();
        const std::size_t action = controller.decide(obs);
        const auto t1 = clock::now();
        result.decision_seconds.push_back(std::chrono::duration<double>(t1 - t0).count());

        const Configuration& config = actions[action];
        const auto outcome = env.step(config);
        obs = make_observation(outcome->observation, requirement, actions);

        StepRecord rec;
        rec.step = outcome->observation.step_index - 1;
        rec.cpu = outcome->cpu_availability;
        rec.input_size = outcome->input_size;
        rec.ordinal = config.ordinal;
        rec.latency = outcome->latency;
        rec.objective = outcome->objective;
        rec.satisfied = outcome->satisfied[latency_index];
        rec.reward = reward(obs, requirement);
        result.steps.push_back(rec);
    }
    controller.finish(obs);

    result.metrics = summarize_steps(run, seed, result.steps);
    result.metrics.decision_median_s = median(result.decision_seconds);
    result.metrics.decision_p99_s = percentile(result.decision_seconds, 99.0);
    return result;
}

namespace {

// Exclusive claim on a q-table path for the lifetime of a campaign.
class PathLock {
public:
    explicit PathLock(const fs::path& target) : lock_(target.string() + ".lock")
    {
        if (lock_.has_parent_path())
            fs::create_directories(lock_.parent_path());
        std::FILE* f = std::fopen(lock_.c_str(), "wx");
        if (!f)
            throw Error("q-table path " + target.string() + " is already used by another campaign (lock file " +
                        lock_.string() + " exists); refusing to run");
        std::fclose(f);
    }
    ~PathLock()
    {
        std::error_code ec;
        fs::remove(lock_, ec);
    }
    PathLock(const PathLock&) = delete;
    PathLock& operator=(const PathLock&) = delete;

private:
    fs::path lock_;
};

void write_timing(const std::vector<RunMetrics>& runs, const fs::path& dir)
{
    std::FILE* f = std::fopen((dir / "timing.csv").c_str(), "w");
    if (!f)
        throw Error("cannot write " + (dir / "timing.csv").string());
    std::fprintf(f, "run,decision_median_s,decision_p99_s\n");
    for (const auto& r : runs)
        std::fprintf(f, "%d,%.9g,%.9g\n", r.run, r.decision_median_s, r.decision_p99_s);
    std::fclose(f);
}

} // namespace

std::vector<RunMetrics> run_experiment(const ExperimentSpec& spec)
{
    spec.validate();
    return run_experiment(spec, build_scenario(spec));
}

std::vector<RunMetrics> run_experiment(const ExperimentSpec& spec, const Scenario& scenario)
{
    spec.validate();
    const bool learning = is_learning(spec.controller);
    const auto encoder = spec.controller == ControllerKind::rl1 ? EncoderVersion::v1 : EncoderVersion::v2;
    const ActionSpace& actions = scenario.actions_for(spec.controller);
    const bool writes = !spec.output_dir.empty();
    if (writes)
        fs::create_directories(spec.output_dir);

    fs::path qtable_path = spec.qtable_path;
    if (learning && qtable_path.empty() && writes)
        qtable_path = spec.output_dir / "qtable.txt";
    std::optional<PathLock> lock;
    if (learning && !qtable_path.empty())
        lock.emplace(qtable_path);

    std::optional<QTable> carried; // in-memory chaining when nothing is persisted
    std::vector<RunMetrics> runs;
    runs.reserve(static_cast<std::size_t>(spec.runs));
    for (int k = 0; k < spec.runs; ++k) {
        const std::uint64_t seed = spec.base_seed + static_cast<std::uint64_t>(k);
        Environment env(scenario.profile_ptr(), scenario.requirement(), spec.cpu, spec.trace, spec.trace_params);

        std::optional<QTable> table;
        LearningParams lp = spec.learning;
        if (learning) {
            lp.seed = spec.learning.seed + seed;
            if (k == 0)
                table = spec.initial_qtable.empty()
                            ? QTable(encoder, state_count(encoder, actions.size()), actions.size())
                            : qtable_load(spec.initial_qtable, encoder, actions.size());
            else if (!qtable_path.empty())
                table = qtable_load(qtable_path, encoder, actions.size());
            else
                table = std::move(carried);
        }
        auto controller = make_controller(spec.controller, scenario, spec.heuristic, lp, std::move(table));
        auto episode = run_episode(env, *controller, actions, k, seed);

        if (learning) {
            const auto& learned = static_cast<const QLearningController&>(*controller).table();
            if (!qtable_path.empty())
                qtable_save(learned, qtable_path);
            else
                carried = learned;
        }
        if (writes && spec.write_step_traces)
            write_step_trace(episode.steps, step_trace_path(spec.output_dir, k));
        runs.push_back(episode.metrics);
    }

    if (writes) {
        write_run_metrics(runs, spec.output_dir);
        write_timing(runs, spec.output_dir);
    }
    return runs;
}

std::vector<ExperimentSpec> expand_campaign(const CampaignSpec& campaign)
{
    if (campaign.traces.empty() || campaign.controllers.empty())
        throw Error("campaign needs at least one trace and one controller");
    std::vector<ExperimentSpec> specs;
    std::set<fs::path> qtables;
    std::set<std::pair<TraceKind, ControllerKind>> seen;
    for (auto trace : campaign.traces) {
        for (auto controller : campaign.controllers) {
            if (!seen.insert({trace, controller}).second)
                throw Error("campaign lists trace '" + std::string(to_string(trace)) + "' with controller '" +
                            std::string(to_string(controller)) + "' twice");
            ExperimentSpec spec = campaign.base;
            spec.trace = trace;
            spec.controller = controller;
            if (!campaign.output_dir.empty())
                spec.output_dir = experiment_dir(campaign.output_dir, trace, controller);
            if (is_learning(controller)) {
                const auto name = std::string(to_string(trace)) + "_" + std::string(to_string(controller)) + ".qtable";
                if (!campaign.qtable_dir.empty())
                    spec.qtable_path = campaign.qtable_dir / name;
                else if (!spec.output_dir.empty())
                    spec.qtable_path = spec.output_dir / "qtable.txt";
                if (!spec.qtable_path.empty() && !qtables.insert(spec.qtable_path).second)
                    throw Error("q-table path collision: " + spec.qtable_path.string());
            }
            specs.push_back(std::move(spec));
        }
    }
    return specs;
}

std::vector<ExperimentResult> run_campaign(const CampaignSpec& campaign)
{
    auto specs = expand_campaign(campaign);
    for (const auto& spec : specs)
        spec.validate();
    const Scenario scenario = build_scenario(campaign.base);

    std::vector<ExperimentResult> results(specs.size());
    std::vector<std::exception_ptr> errors(specs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < specs.size(); i = next++) {
            try {
                results[i] = {specs[i].trace, specs[i].controller, run_experiment(specs[i], scenario)};
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned jobs = std::max(1u, std::min<unsigned>(campaign.jobs, static_cast<unsigned>(specs.size())));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned j = 0; j < jobs; ++j)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }
    for (auto& e : errors) {
        if (e)
            std::rethrow_exception(e);
    }
    if (!campaign.output_dir.empty())
        emit_report(results, campaign.output_dir);
    return results;
}

OverheadReport measure_overhead(ControllerKind kind, std::size_t steps, const Scenario& scenario,
                                std::optional<double> reference_frame_s, std::uint64_t seed)
{
    using clock = std::chrono::steady_clock;
    if (steps == 0)
        throw Error("overhead: need at least one timed step");
    const std::size_t warmup = std::max<std::size_t>(steps / 2, 5000);

    TraceParams tp;
    tp.random_steps = warmup + steps;
    Environment env(scenario.profile_ptr(), scenario.requirement(), CpuChainParams{}, TraceKind::random, tp);
    const ActionSpace& actions = scenario.actions_for(kind);
    LearningParams lp;
    lp.seed = seed;
    auto controller = make_controller(kind, scenario, HeuristicParams{}, lp);

    env.reset(seed);
    std::vector<double> timings;
    timings.reserve(steps);
    ControllerObservation obs = make_observation(env.state(), scenario.requirement(), actions);
    for (std::size_t t = 0; !env.finished(); ++t) {
        const auto t0 = clock::now();
        const std::size_t action = controller->decide(obs);
        const auto t1 = clock::now();
        if (t >= warmup)
            timings.push_back(std::chrono::duration<double>(t1 - t0).count());
        const auto outcome = env.step(actions[action]);
        obs = make_observation(outcome->observation, scenario.requirement(), actions);
    }

    OverheadReport report;
    report.controller = kind;
    report.steps = timings.size();
    report.median_s = median(timings);
    report.p99_s = percentile(timings, 99.0);
    if (reference_frame_s) {
        report.reference_frame_s = *reference_frame_s;
    } else {
        const auto& sorted = scenario.sorted();
        const int smallest = scenario.profile().input_sizes().front();
        const auto fastest = static_cast<std::size_t>(fastest_ordinal(sorted, scenario.profile(), smallest));
        report.reference_frame_s = scenario.profile().lookup(sorted[fastest].assignment, smallest).base_latency;
    }
    report.total_s = report.median_s + report.reference_frame_s;
    report.impact_pct = report.total_s > 0.0 ? 100.0 * report.median_s / report.total_s : 0.0;
    return report;
}

} // namespace elastic
