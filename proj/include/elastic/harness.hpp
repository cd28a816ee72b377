// harness.hpp - experiment runner: scenario wiring, seeded multi-run
// campaigns with Q-table chaining, and controller overhead timing.

#ifndef ELASTIC_HARNESS_HPP
#define ELASTIC_HARNESS_HPP

#include "elastic/controllers.hpp"
#include "elastic/profiling.hpp"
#include "elastic/service_model.hpp"
#include "elastic/sim_env.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

namespace elastic {

enum class ControllerKind { static_hp, static_fast, heuristic, rl1, rl2 };

std::string_view to_string(ControllerKind kind);
ControllerKind parse_controller_kind(std::string_view text);
bool is_learning(ControllerKind kind);
std::vector<ControllerKind> all_controller_kinds();

// Maximize precision subject to end-to-end latency <= 1 s.
Requirement default_requirement();

struct ProfileSource {
    std::filesystem::path file; // empty: generate from the synthetic model
    SyntheticProfileModel model = default_profile_model();
    std::vector<int> input_sizes = default_input_sizes();
};

// Topology, requirement and profile resolved into the lists controllers act on.
class Scenario {
public:
    Scenario(ServiceTopology topology, Requirement requirement, std::shared_ptr<const ProfileTable> profile,
             int reference_input, std::size_t active_actions);

    const ServiceTopology& topology() const { return topology_; }
    const Requirement& requirement() const { return requirement_; }
    const ProfileTable& profile() const { return *profile_; }
    std::shared_ptr<const ProfileTable> profile_ptr() const { return profile_; }
    int reference_input() const { return reference_input_; }

    // All configurations, objective-sorted with ordinals assigned.
    const std::vector<Configuration>& sorted() const { return sorted_; }
    // Actions of the elastic controllers.
    const ActionSpace& active() const { return active_; }
    // Actions of the static baselines (every configuration).
    const ActionSpace& full() const { return full_; }

    const ActionSpace& actions_for(ControllerKind kind) const;
    // Default: synthetic face-detection service, 16 active actions.
    static Scenario make_default();

private:
    ServiceTopology topology_;
    Requirement requirement_;
    std::shared_ptr<const ProfileTable> profile_;
    int reference_input_;
    std::vector<Configuration> sorted_;
    ActionSpace active_;
    ActionSpace full_;
};

struct ExperimentSpec {
    ServiceTopology topology = default_topology();
    Requirement requirement = default_requirement();
    ProfileSource profile;
    int reference_input = 6;
    std::size_t active_actions = 16; // 0: all configurations

    TraceKind trace = TraceKind::variable;
    TraceParams trace_params;
    CpuChainParams cpu;

    ControllerKind controller = ControllerKind::rl2;
    HeuristicParams heuristic;
    LearningParams learning;

    int runs = 50;
    std::uint64_t base_seed = 1;
    std::filesystem::path qtable_path;    // learning controllers; chained across runs
    std::filesystem::path initial_qtable; // optional starting table for run 0
    std::filesystem::path output_dir;     // empty: write nothing
    bool write_step_traces = true;

    void validate() const;
};

Scenario build_scenario(const ExperimentSpec& spec);

std::unique_ptr<Controller> make_controller(ControllerKind kind, const Scenario& scenario,
                                            const HeuristicParams& heuristic, const LearningParams& learning,
                                            std::optional<QTable> table = std::nullopt);

struct StepRecord {
    std::size_t step = 0;
    double cpu = 0.0;
    int input_size = 0;
    int ordinal = 0;
    double latency = 0.0;
    double objective = 0.0;
    bool satisfied = false; // latency constraint
    double reward = 0.0;

    friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct RunMetrics {
    int run = 0;
    std::uint64_t seed = 0;
    std::size_t steps = 0;
    double mean_objective = 0.0;
    double latency_satisfaction_pct = 0.0;
    double mean_reward = 0.0;
    // wall clock per decide() call, seconds; not part of the deterministic outputs
    double decision_median_s = 0.0;
    double decision_p99_s = 0.0;
};

// Deterministic fields only.
bool same_metrics(const RunMetrics& a, const RunMetrics& b);

RunMetrics summarize_steps(int run, std::uint64_t seed, const std::vector<StepRecord>& steps);

struct EpisodeResult {
    RunMetrics metrics;
    std::vector<StepRecord> steps;
    std::vector<double> decision_seconds;
};

// Resets `env` with `seed` and drives it to the end of its trace.
EpisodeResult run_episode(Environment& env, Controller& controller, const ActionSpace& actions, int run,
                          std::uint64_t seed);

// Run k uses seed base_seed + k. Learning controllers start run 0 from zeros
// (or initial_qtable) and every later run from the table saved by the run before.
std::vector<RunMetrics> run_experiment(const ExperimentSpec& spec);
std::vector<RunMetrics> run_experiment(const ExperimentSpec& spec, const Scenario& scenario);

struct CampaignSpec {
    ExperimentSpec base;
    std::vector<TraceKind> traces = {TraceKind::variable};
    std::vector<ControllerKind> controllers = all_controller_kinds();
    std::filesystem::path output_dir;
    std::filesystem::path qtable_dir; // empty: inside each experiment's output directory
    unsigned jobs = 1;
};

struct ExperimentResult {
    TraceKind trace;
    ControllerKind controller;
    std::vector<RunMetrics> runs;
};

// One experiment per (trace, controller) in <out>/<trace>/<controller>/,
// then the summary files in <out>.
std::vector<ExperimentResult> run_campaign(const CampaignSpec& campaign);
std::vector<ExperimentSpec> expand_campaign(const CampaignSpec& campaign);

struct OverheadReport {
    ControllerKind controller;
    std::size_t steps = 0;
    double median_s = 0.0;
    double p99_s = 0.0;
    double reference_frame_s = 0.0; // frame latency the decision is added to
    double total_s = 0.0;           // median decision + reference frame
    double impact_pct = 0.0;        // median / total * 100
};

// Times decide() (which includes the Q-update for learning controllers) over
// `steps` frames after an untimed warm-up. The reference frame defaults to
// the fastest configuration processing the smallest profiled input at full CPU.
OverheadReport measure_overhead(ControllerKind kind, std::size_t steps, const Scenario& scenario,
                                std::optional<double> reference_frame_s = std::nullopt, std::uint64_t seed = 1);

double median(std::vector<double> values);
double percentile(std::vector<double> values, double pct);

} // namespace elastic

#endif // ELASTIC_HARNESS_HPP
