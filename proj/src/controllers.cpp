#include "elastic/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace elastic {

ActionSpace::ActionSpace(std::vector<Configuration> sorted_actions) : actions_(std::move(sorted_actions))
{
    if (actions_.empty())
        throw Error("action space is empty");
}

std::optional<std::size_t> ActionSpace::index_of_ordinal(int ordinal) const
{
    auto it = std::find_if(actions_.begin(), actions_.end(),
                           [ordinal](const Configuration& c) { return c.ordinal == ordinal; });
    if (it == actions_.end())
        return std::nullopt;
    return static_cast<std::size_t>(it - actions_.begin());
}

bool ControllerObservation::all_satisfied() const
{
    return std::all_of(satisfied_last.begin(), satisfied_last.end(), [](bool s) { return s; });
}

ControllerObservation make_observation(const EnvState& state, const Requirement& requirement,
                                       const ActionSpace& actions)
{
    ControllerObservation obs;
    obs.cpu_availability = state.cpu_availability;
    if (state.last_metrics.empty())
        return obs;

    const auto& constraints = requirement.constraints();
    for (std::size_t i = 0; i < constraints.size(); ++i)
        obs.constraint_ratios.push_back(state.last_metrics.at(i) / constraints[i].target);
    obs.satisfied_last = state.last_satisfied;
    obs.last_latency_ratio = obs.constraint_ratios.at(requirement.latency_constraint());
    obs.last_objective = state.last_objective;
    if (state.last_config_ordinal)
        obs.last_action = actions.index_of_ordinal(*state.last_config_ordinal);
    return obs;
}

int latency_bin(std::optional<double> ratio)
{
    if (!ratio || *ratio < 0.8)
        return 0;
    return *ratio <= 1.0 ? 1 : 2;
}

int cpu_bin(double availability)
{
    if (availability < 0.5)
        return 0;
    return availability < 0.8 ? 1 : 2;
}

namespace {

std::size_t last_action_or_zero(const ControllerObservation& obs, std::size_t action_count)
{
    if (!obs.has_history() || !obs.last_action)
        return 0;
    if (*obs.last_action >= action_count)
        throw Error("observation's last action is outside the action space");
    return *obs.last_action;
}

} // namespace

DiscreteState encode_state_v1(const ControllerObservation& obs, std::size_t action_count)
{
    const auto b = static_cast<std::size_t>(latency_bin(obs.last_latency_ratio));
    return {b * action_count + last_action_or_zero(obs, action_count)};
}

DiscreteState encode_state_v2(const ControllerObservation& obs, std::size_t action_count)
{
    const auto b = static_cast<std::size_t>(latency_bin(obs.last_latency_ratio));
    const auto u = static_cast<std::size_t>(cpu_bin(obs.cpu_availability));
    return {(b * 3 + u) * action_count + last_action_or_zero(obs, action_count)};
}

DiscreteState encode_state(EncoderVersion version, const ControllerObservation& obs, std::size_t action_count)
{
    return version == EncoderVersion::v1 ? encode_state_v1(obs, action_count) : encode_state_v2(obs, action_count);
}

std::size_t state_count(EncoderVersion version, std::size_t action_count)
{
    return (version == EncoderVersion::v1 ? 3 : 9) * action_count;
}

double reward(const ControllerObservation& obs, const Requirement& requirement)
{
    if (!obs.has_history() || !obs.last_objective)
        throw Error("reward needs the metrics of a completed step");
    if (obs.satisfied_last.size() != requirement.constraints().size() ||
        obs.constraint_ratios.size() != requirement.constraints().size())
        throw Error("observation does not match the requirement's constraints");

    if (obs.all_satisfied())
        return requirement.oriented_objective(*obs.last_objective);
    double penalty = 0.0;
    for (std::size_t i = 0; i < obs.satisfied_last.size(); ++i) {
        if (!obs.satisfied_last[i])
            penalty += obs.constraint_ratios[i];
    }
    return -penalty;
}

QTable::QTable(EncoderVersion encoder, std::size_t states, std::size_t actions)
    : encoder_(encoder), states_(states), actions_(actions), values_(states * actions, 0.0),
      visits_(states * actions, 0)
{
    if (states == 0 || actions == 0)
        throw Error("q-table needs at least one state and one action");
}

std::size_t QTable::offset(std::size_t state, std::size_t action) const
{
    if (state >= states_ || action >= actions_)
        throw Error("q-table index (" + std::to_string(state) + ", " + std::to_string(action) +
                    ") out of range for " + std::to_string(states_) + " x " + std::to_string(actions_));
    return state * actions_ + action;
}

std::span<const double> QTable::row(std::size_t state) const
{
    return std::span<const double>(values_).subspan(offset(state, 0), actions_);
}

std::uint64_t QTable::total_visits() const
{
    return std::accumulate(visits_.begin(), visits_.end(), std::uint64_t{0});
}

void QTable::set(std::size_t state, std::size_t action, double value, std::uint64_t visits)
{
    const auto k = offset(state, action);
    values_[k] = value;
    visits_[k] = visits;
}

void LearningParams::validate() const
{
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw Error("learning: alpha must be in (0,1]");
    if (!(gamma >= 0.0 && gamma < 1.0))
        throw Error("learning: gamma must be in [0,1)");
    if (!(epsilon_min >= 0.0 && epsilon_min <= epsilon_start && epsilon_start <= 1.0))
        throw Error("learning: need 0 <= epsilon_min <= epsilon_start <= 1");
    if (!(epsilon_decay > 0.0 && epsilon_decay <= 1.0))
        throw Error("learning: epsilon_decay must be in (0,1]");
}

void q_update(QTable& table, DiscreteState state, std::size_t action, double reward, DiscreteState next_state,
              const LearningParams& params)
{
    const auto next_row = table.row(next_state.index);
    const double best_next = *std::max_element(next_row.begin(), next_row.end());
    const double current = table.value(state.index, action);
    const double updated = current + params.alpha * (reward + params.gamma * best_next - current);
    table.set(state.index, action, updated, table.visits(state.index, action) + 1);
}

double epsilon_after(const LearningParams& params, std::uint64_t steps)
{
    const double decayed = params.epsilon_start * std::pow(params.epsilon_decay, static_cast<double>(steps));
    return std::max(params.epsilon_min, decayed);
}

std::size_t greedy_action(const QTable& table, DiscreteState state)
{
    const auto r = table.row(state.index);
    return static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
}

std::size_t select_action(const QTable& table, DiscreteState state, double epsilon, Rng& rng)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (epsilon > 0.0 && unit(rng) < epsilon) {
        std::uniform_int_distribution<std::size_t> pick(0, table.action_count() - 1);
        return pick(rng);
    }
    return greedy_action(table, state);
}

void HeuristicParams::validate() const
{
    if (upgrade_after < 1)
        throw Error("heuristic: upgrade_after must be >= 1");
}

Configuration static_decide(const std::vector<Configuration>& sorted, int fixed_ordinal)
{
    if (fixed_ordinal < 0 || static_cast<std::size_t>(fixed_ordinal) >= sorted.size())
        throw Error("static controller: ordinal " + std::to_string(fixed_ordinal) + " out of range");
    return sorted[static_cast<std::size_t>(fixed_ordinal)];
}

int fastest_ordinal(const std::vector<Configuration>& sorted, const ProfileTable& profile, int reference_input)
{
    if (sorted.empty())
        throw Error("no configurations");
    std::size_t best = 0;
    double best_latency = profile.lookup(sorted[0].assignment, reference_input).base_latency;
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        const double latency = profile.lookup(sorted[i].assignment, reference_input).base_latency;
        if (latency < best_latency) {
            best = i;
            best_latency = latency;
        }
    }
    return static_cast<int>(best);
}

HeuristicController::HeuristicController(std::size_t action_count, HeuristicParams params,
                                         std::size_t initial_action)
    : action_count_(action_count), params_(params), current_(initial_action)
{
    params_.validate();
    if (action_count_ == 0 || initial_action >= action_count_)
        throw Error("heuristic: invalid action count or initial action");
}

std::size_t HeuristicController::decide(const ControllerObservation& obs)
{
    if (!obs.has_history())
        return current_;

    if (!obs.all_satisfied()) {
        // degrade
        current_ = std::min(current_ + 1, action_count_ - 1);
        satisfied_streak_ = 0;
    } else if (++satisfied_streak_ >= params_.upgrade_after) {
        // upgrade
        current_ = current_ > 0 ? current_ - 1 : 0;
        satisfied_streak_ = 0;
    }
    return current_;
}

QLearningController::QLearningController(EncoderVersion encoder, std::size_t action_count, LearningParams params,
                                         Requirement requirement, QTable table)
    : encoder_(encoder), action_count_(action_count), params_(params), requirement_(std::move(requirement)),
      table_(std::move(table)), rng_(make_rng(params.seed, 0x51)), steps_(table_.total_visits())
{
    params_.validate();
    if (table_.encoder() != encoder_ || table_.action_count() != action_count_ ||
        table_.state_count() != state_count(encoder_, action_count_))
        throw Error("q-table shape does not match the controller's encoder and action count");
}

void QLearningController::learn(const ControllerObservation& obs, DiscreteState next)
{
    if (!last_state_ || !obs.has_history())
        return;
    q_update(table_, *last_state_, last_action_, reward(obs, requirement_), next, params_);
}

std::size_t QLearningController::decide(const ControllerObservation& obs)
{
    const DiscreteState state = encode_state(encoder_, obs, action_count_);
    learn(obs, state);
    const double eps = greedy_ ? 0.0 : epsilon_after(params_, steps_);
    const std::size_t action = select_action(table_, state, eps, rng_);
    ++steps_;
    last_state_ = state;
    last_action_ = action;
    return action;
}

void QLearningController::finish(const ControllerObservation& obs)
{
    learn(obs, encode_state(encoder_, obs, action_count_));
    last_state_.reset();
}

} // namespace elastic
