#include "elastic/sim_env.hpp"

#include "text_util.hpp"

#include <algorithm>
#include <ostream>

namespace elastic {

namespace {

constexpr std::uint64_t cpu_stream = 1;
constexpr std::uint64_t trace_stream = 2;

} // namespace

Rng make_rng(std::uint64_t seed, std::uint64_t stream)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return Rng(seq);
}

void CpuChainParams::validate() const
{
    if (!(min_avail > 0.0 && min_avail <= max_avail && max_avail <= 1.0))
        throw Error("cpu chain: need 0 < min_avail <= max_avail <= 1");
    if (!(change_prob >= 0.0 && change_prob <= 1.0))
        throw Error("cpu chain: change_prob must be in [0,1]");
    if (!(delta_stddev >= 0.0))
        throw Error("cpu chain: delta_stddev must be >= 0");
    if (!(initial >= min_avail && initial <= max_avail))
        throw Error("cpu chain: initial availability outside [min_avail, max_avail]");
}

double apply_cpu_delta(double current, double signed_delta, const CpuChainParams& params)
{
    return std::clamp(current + signed_delta, params.min_avail, params.max_avail);
}

CpuStep cpu_step(double current, const CpuChainParams& params, Rng& rng)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (!(unit(rng) < params.change_prob))
        return {current, false};
    std::normal_distribution<double> magnitude(params.delta_mean, params.delta_stddev);
    const double m = params.delta_stddev > 0.0 ? magnitude(rng) : params.delta_mean;
    const double sign = unit(rng) < 0.5 ? 1.0 : -1.0;
    return {apply_cpu_delta(current, sign * m, params), true};
}

std::string_view to_string(TraceKind kind)
{
    switch (kind) {
    case TraceKind::fixed:
        return "fixed";
    case TraceKind::variable:
        return "variable";
    case TraceKind::full_day:
        return "full-day";
    case TraceKind::random:
        return "random";
    }
    return "?";
}

TraceKind parse_trace_kind(std::string_view text)
{
    if (text == "fixed")
        return TraceKind::fixed;
    if (text == "variable")
        return TraceKind::variable;
    if (text == "full-day" || text == "full_day")
        return TraceKind::full_day;
    if (text == "random")
        return TraceKind::random;
    throw Error("unknown trace kind '" + std::string(text) + "'");
}

void TraceParams::validate() const
{
    if (fixed_size < 0 || fixed_steps == 0)
        throw Error("trace: fixed trace needs a non-negative size and at least one step");
    if (variable_blocks.empty() || block_length == 0)
        throw Error("trace: variable trace needs blocks of positive length");
    if (full_day_hours.size() != 24)
        throw Error("trace: full-day schedule needs 24 hourly sizes");
    if (random_sizes.size() < 2 || random_steps == 0)
        throw Error("trace: random trace needs at least two candidate sizes and one step");
    if (!(random_change_prob >= 0.0 && random_change_prob <= 1.0))
        throw Error("trace: random change probability must be in [0,1]");
    auto negative = [](const std::vector<int>& v) {
        return std::any_of(v.begin(), v.end(), [](int x) { return x < 0; });
    };
    if (negative(variable_blocks) || negative(full_day_hours) || negative(random_sizes))
        throw Error("trace: input sizes must be non-negative");
}

InputTrace make_trace(TraceKind kind, const TraceParams& params, std::uint64_t seed)
{
    params.validate();
    InputTrace trace{kind, {}};
    switch (kind) {
    case TraceKind::fixed:
        trace.sizes.assign(params.fixed_steps, params.fixed_size);
        break;
    case TraceKind::variable:
        for (int size : params.variable_blocks)
            trace.sizes.insert(trace.sizes.end(), params.block_length, size);
        break;
    case TraceKind::full_day:
        trace.sizes.reserve(24 * 3600);
        for (int size : params.full_day_hours)
            trace.sizes.insert(trace.sizes.end(), 3600, size);
        break;
    case TraceKind::random: {
        // A change always picks a different size, so change_prob is the
        // observable change frequency.
        Rng rng = make_rng(seed, trace_stream);
        const auto n = params.random_sizes.size();
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        std::uniform_int_distribution<std::size_t> other(1, n - 1);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::size_t current = pick(rng);
        trace.sizes.reserve(params.random_steps);
        for (std::size_t t = 0; t < params.random_steps; ++t) {
            if (t > 0 && unit(rng) < params.random_change_prob)
                current = (current + other(rng)) % n;
            trace.sizes.push_back(params.random_sizes[current]);
        }
        break;
    }
    }
    return trace;
}

void write_input_trace(const InputTrace& trace, std::ostream& out)
{
    out << "step,input_size\n";
    for (std::size_t t = 0; t < trace.sizes.size(); ++t)
        out << t << ',' << trace.sizes[t] << '\n';
}

void write_cpu_trace(const CpuChainParams& params, std::uint64_t seed, std::size_t steps, std::ostream& out)
{
    params.validate();
    Rng rng = make_rng(seed, cpu_stream);
    double cpu = params.initial;
    out << "step,cpu\n";
    for (std::size_t t = 0; t < steps; ++t) {
        out << t << ',' << detail::format_double(cpu) << '\n';
        cpu = cpu_step(cpu, params, rng).availability;
    }
}

bool StepOutcome::all_satisfied() const
{
    return std::all_of(satisfied.begin(), satisfied.end(), [](bool s) { return s; });
}

bool is_known_metric(std::string_view metric)
{
    return metric == "latency" || metric == "base_latency";
}

Environment::Environment(std::shared_ptr<const ProfileTable> profile, Requirement requirement, CpuChainParams cpu,
                         TraceKind trace, TraceParams trace_params)
    : profile_(std::move(profile)), requirement_(std::move(requirement)), cpu_params_(cpu), trace_kind_(trace),
      trace_params_(std::move(trace_params))
{
    if (!profile_)
        throw Error("environment needs a profile table");
    cpu_params_.validate();
    trace_params_.validate();
    for (const auto& c : requirement_.constraints()) {
        if (!is_known_metric(c.metric))
            throw Error("simulator cannot measure constraint metric '" + c.metric + "'");
    }
}

void Environment::set_cpu_schedule(std::vector<double> schedule)
{
    for (double v : schedule) {
        if (!(v > 0.0 && v <= 1.0))
            throw Error("cpu schedule values must be in (0,1]");
    }
    cpu_schedule_ = std::move(schedule);
}

double Environment::scheduled_cpu(std::size_t step) const
{
    return cpu_schedule_[std::min(step, cpu_schedule_.size() - 1)];
}

EnvState Environment::reset(std::uint64_t seed)
{
    trace_ = make_trace(trace_kind_, trace_params_, seed);
    cpu_rng_ = make_rng(seed, cpu_stream);
    state_ = EnvState{};
    state_.cpu_availability = cpu_schedule_.empty() ? cpu_params_.initial : scheduled_cpu(0);
    state_.input_size = trace_.sizes.front();
    ready_ = true;
    return state_;
}

bool Environment::finished() const
{
    return !ready_ || state_.step_index >= trace_.length();
}

std::optional<StepOutcome> Environment::step(const Configuration& action)
{
    if (finished())
        return std::nullopt;

    const auto looked_up = profile_->lookup(action.assignment, state_.input_size);

    StepOutcome out;
    out.cpu_availability = state_.cpu_availability;
    out.input_size = state_.input_size;
    out.latency = looked_up.base_latency / state_.cpu_availability;
    out.objective = looked_up.objective_value;
    for (const auto& c : requirement_.constraints()) {
        const double value = c.metric == "latency" ? out.latency : looked_up.base_latency;
        out.metrics.push_back(value);
        out.satisfied.push_back(value <= c.target);
    }

    state_.step_index += 1;
    if (state_.step_index < trace_.length())
        state_.input_size = trace_.sizes[state_.step_index];
    if (cpu_schedule_.empty())
        state_.cpu_availability = cpu_step(state_.cpu_availability, cpu_params_, cpu_rng_).availability;
    else
        state_.cpu_availability = scheduled_cpu(state_.step_index);
    state_.last_latency = out.latency;
    state_.last_objective = out.objective;
    state_.last_config_ordinal = action.ordinal;
    state_.last_metrics = out.metrics;
    state_.last_satisfied = out.satisfied;

    out.observation = state_;
    out.done = state_.step_index >= trace_.length();
    return out;
}

} // namespace elastic
