// sim_env.hpp - discrete-time execution-context simulator.
//
// One step is one fully processed frame. CPU availability follows a Markov
// chain; the number of faces per frame follows an input trace. The effective
// latency of a frame is the profiled base latency divided by the CPU share.

#ifndef ELASTIC_SIM_ENV_HPP
#define ELASTIC_SIM_ENV_HPP

#include "elastic/profiling.hpp"
#include "elastic/service_model.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

namespace elastic {

using Rng = std::mt19937_64;

// Independent stream for (seed, stream id).
Rng make_rng(std::uint64_t seed, std::uint64_t stream);

struct CpuChainParams {
    double min_avail = 0.3;
    double max_avail = 1.0;
    double change_prob = 0.1;
    double delta_mean = 0.1;
    double delta_stddev = 0.1;
    double initial = 1.0;

    void validate() const;
};

struct CpuStep {
    double availability;
    // A transition was drawn this step (the value may still be unchanged when clamped).
    bool transitioned;
};

double apply_cpu_delta(double current, double signed_delta, const CpuChainParams& params);

// With probability change_prob the availability moves by sign * m,
// m ~ Normal(delta_mean, delta_stddev), sign uniform in {+1, -1}, then clamps.
CpuStep cpu_step(double current, const CpuChainParams& params, Rng& rng);

enum class TraceKind { fixed, variable, full_day, random };

std::string_view to_string(TraceKind kind);
TraceKind parse_trace_kind(std::string_view text);

struct TraceParams {
    int fixed_size = 48;
    std::size_t fixed_steps = 1000;

    std::vector<int> variable_blocks = {6, 12, 24, 48, 96, 192, 96, 48, 24, 12, 6};
    std::size_t block_length = 100;

    // Faces per frame for each hour of the day; 3600 one-second frames per hour.
    std::vector<int> full_day_hours = {6,  6,   6,   6,   6,   6,   96,  96, 96, 192, 192, 48,
                                       48, 48,  48,  48,  192, 192, 192, 96, 96, 96,  12,  12};

    std::vector<int> random_sizes = {6, 12, 24, 48, 96, 192};
    double random_change_prob = 0.1;
    std::size_t random_steps = 1000;

    void validate() const;
};

struct InputTrace {
    TraceKind kind = TraceKind::fixed;
    std::vector<int> sizes; // faces per step

    std::size_t length() const { return sizes.size(); }
};

// Deterministic for fixed/variable/full_day; the random kind depends on seed.
InputTrace make_trace(TraceKind kind, const TraceParams& params, std::uint64_t seed);

// "step,input_size" records with header.
void write_input_trace(const InputTrace& trace, std::ostream& out);
// "step,cpu" records with header; simulates the chain from params.initial.
void write_cpu_trace(const CpuChainParams& params, std::uint64_t seed, std::size_t steps, std::ostream& out);

struct EnvState {
    std::size_t step_index = 0;
    double cpu_availability = 1.0; // applies to the next frame
    int input_size = 0;            // faces in the next frame
    std::optional<double> last_latency;
    std::optional<double> last_objective;
    std::optional<int> last_config_ordinal;
    std::vector<double> last_metrics;  // per constraint, empty before the first step
    std::vector<bool> last_satisfied;  // per constraint
};

struct StepOutcome {
    double latency = 0.0;
    double objective = 0.0;
    double cpu_availability = 0.0; // share the frame ran with
    int input_size = 0;            // faces in the processed frame
    std::vector<double> metrics;   // c_i per constraint
    std::vector<bool> satisfied;   // c_i <= C_i
    EnvState observation;          // state after the step
    bool done = false;             // trace exhausted after this step

    bool all_satisfied() const;
};

// Constraint metrics understood by the simulator:
//   "latency"      effective frame latency in seconds
//   "base_latency" profiled latency at full CPU (CPU work), seconds
bool is_known_metric(std::string_view metric);

class Environment {
public:
    Environment(std::shared_ptr<const ProfileTable> profile, Requirement requirement, CpuChainParams cpu,
                TraceKind trace, TraceParams trace_params = {});

    // Replaces the Markov chain with a scripted availability: step t uses
    // schedule[min(t, size-1)]. An empty schedule restores the chain.
    void set_cpu_schedule(std::vector<double> schedule);

    EnvState reset(std::uint64_t seed);

    // nullopt once the trace is exhausted (or before the first reset).
    std::optional<StepOutcome> step(const Configuration& action);

    bool finished() const;
    const EnvState& state() const { return state_; }
    const InputTrace& trace() const { return trace_; }
    std::size_t episode_length() const { return trace_.length(); }
    const Requirement& requirement() const { return requirement_; }
    const ProfileTable& profile() const { return *profile_; }

private:
    double scheduled_cpu(std::size_t step) const;

    std::shared_ptr<const ProfileTable> profile_;
    Requirement requirement_;
    CpuChainParams cpu_params_;
    TraceKind trace_kind_;
    TraceParams trace_params_;
    std::vector<double> cpu_schedule_;

    InputTrace trace_;
    Rng cpu_rng_;
    EnvState state_;
    bool ready_ = false;
};

} // namespace elastic

#endif // ELASTIC_SIM_ENV_HPP
