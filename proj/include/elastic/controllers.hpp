// controllers.hpp - orchestration policies.
//
// Every controller picks an action index into an action space: a list of
// configurations sorted by objective, index 0 being the best objective.
// Static controllers always return the same index. The heuristic walks the
// sorted list one step at a time. The Q-learning controller keeps a
// state x action table and learns from the reward after every frame.

#ifndef ELASTIC_CONTROLLERS_HPP
#define ELASTIC_CONTROLLERS_HPP

#include "elastic/service_model.hpp"
#include "elastic/sim_env.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace elastic {

// Objective-sorted actions available to a controller.
class ActionSpace {
public:
    explicit ActionSpace(std::vector<Configuration> sorted_actions);

    std::size_t size() const { return actions_.size(); }
    const Configuration& operator[](std::size_t index) const { return actions_.at(index); }
    const std::vector<Configuration>& actions() const { return actions_; }

    // Action index of the configuration with the given global ordinal.
    std::optional<std::size_t> index_of_ordinal(int ordinal) const;

private:
    std::vector<Configuration> actions_;
};

struct ControllerObservation {
    std::optional<double> last_latency_ratio; // last latency / latency target
    double cpu_availability = 1.0;            // for the frame about to be processed
    std::optional<std::size_t> last_action;   // action index used last step
    std::vector<bool> satisfied_last;         // per constraint
    std::vector<double> constraint_ratios;    // c_i / C_i per constraint
    std::optional<double> last_objective;

    bool has_history() const { return last_latency_ratio.has_value(); }
    bool all_satisfied() const;
};

ControllerObservation make_observation(const EnvState& state, const Requirement& requirement,
                                       const ActionSpace& actions);

struct DiscreteState {
    std::size_t index = 0;
    friend bool operator==(const DiscreteState&, const DiscreteState&) = default;
};

enum class EncoderVersion : int { v1 = 1, v2 = 2 };

// 0: ratio < 0.8, 1: 0.8 <= ratio <= 1.0, 2: ratio > 1.0; no history -> 0.
int latency_bin(std::optional<double> ratio);
// 0: avail < 0.5, 1: 0.5 <= avail < 0.8, 2: avail >= 0.8.
int cpu_bin(double availability);

// index = latency_bin * actions + last action
DiscreteState encode_state_v1(const ControllerObservation& obs, std::size_t action_count);
// index = (latency_bin * 3 + cpu_bin) * actions + last action
DiscreteState encode_state_v2(const ControllerObservation& obs, std::size_t action_count);
DiscreteState encode_state(EncoderVersion version, const ControllerObservation& obs, std::size_t action_count);
std::size_t state_count(EncoderVersion version, std::size_t action_count);

// Last objective when every constraint held, otherwise minus the sum of
// c_i / C_i over the violated constraints.
double reward(const ControllerObservation& obs, const Requirement& requirement);

class QTable {
public:
    QTable(EncoderVersion encoder, std::size_t states, std::size_t actions);

    EncoderVersion encoder() const { return encoder_; }
    std::size_t state_count() const { return states_; }
    std::size_t action_count() const { return actions_; }

    double value(std::size_t state, std::size_t action) const { return values_[offset(state, action)]; }
    std::uint64_t visits(std::size_t state, std::size_t action) const { return visits_[offset(state, action)]; }
    std::span<const double> row(std::size_t state) const;
    std::uint64_t total_visits() const;

    void set(std::size_t state, std::size_t action, double value, std::uint64_t visits);

    const std::vector<double>& values() const { return values_; }
    const std::vector<std::uint64_t>& visit_counts() const { return visits_; }

    friend bool operator==(const QTable&, const QTable&) = default;

private:
    std::size_t offset(std::size_t state, std::size_t action) const;

    EncoderVersion encoder_;
    std::size_t states_;
    std::size_t actions_;
    std::vector<double> values_;
    std::vector<std::uint64_t> visits_;
};

struct LearningParams {
    double alpha = 0.1;
    double gamma = 0.9;
    double epsilon_start = 1.0;
    double epsilon_min = 0.05;
    double epsilon_decay = 0.995;
    std::uint64_t seed = 0;

    void validate() const;
};

// Q(s,a) += alpha * (r + gamma * max_a' Q(s',a') - Q(s,a)); bumps the visit count.
void q_update(QTable& table, DiscreteState state, std::size_t action, double reward, DiscreteState next_state,
              const LearningParams& params);

// epsilon_start * decay^steps, floored at epsilon_min.
double epsilon_after(const LearningParams& params, std::uint64_t steps);

// Uniform random action with probability epsilon, else argmax (lowest index on ties).
std::size_t select_action(const QTable& table, DiscreteState state, double epsilon, Rng& rng);
std::size_t greedy_action(const QTable& table, DiscreteState state);

// Plain-text table file; see docs/formats.md.
void qtable_save(const QTable& table, const std::filesystem::path& path);
QTable qtable_load(const std::filesystem::path& path, EncoderVersion expected_encoder, std::size_t expected_actions);
// An absent file yields a zero table.
QTable qtable_load_or_zero(const std::filesystem::path& path, EncoderVersion encoder, std::size_t actions);

struct HeuristicParams {
    int upgrade_after = 10;
    void validate() const;
};

class Controller {
public:
    virtual ~Controller() = default;

    virtual std::size_t decide(const ControllerObservation& obs) = 0;
    // Called with the observation after the last frame of an episode.
    virtual void finish(const ControllerObservation& /*obs*/) {}
    virtual std::string_view name() const = 0;
};

class StaticController final : public Controller {
public:
    explicit StaticController(std::size_t action, std::string_view label = "static") : action_(action), label_(label) {}

    std::size_t decide(const ControllerObservation&) override { return action_; }
    std::string_view name() const override { return label_; }

private:
    std::size_t action_;
    std::string_view label_;
};

// The configuration a static baseline keeps: ordinal `fixed_ordinal` of the sorted list.
Configuration static_decide(const std::vector<Configuration>& sorted, int fixed_ordinal);
// Sorted-list ordinal with the lowest base latency at reference_input (lowest ordinal on ties).
int fastest_ordinal(const std::vector<Configuration>& sorted, const ProfileTable& profile, int reference_input);

class HeuristicController final : public Controller {
public:
    HeuristicController(std::size_t action_count, HeuristicParams params, std::size_t initial_action = 0);

    std::size_t decide(const ControllerObservation& obs) override;
    std::string_view name() const override { return "heuristic"; }

    std::size_t current() const { return current_; }

private:
    std::size_t action_count_;
    HeuristicParams params_;
    std::size_t current_;
    int satisfied_streak_ = 0;
};

class QLearningController final : public Controller {
public:
    QLearningController(EncoderVersion encoder, std::size_t action_count, LearningParams params,
                        Requirement requirement, QTable table);

    // Learns from the previous step (when there is one) and chooses the next action.
    std::size_t decide(const ControllerObservation& obs) override;
    void finish(const ControllerObservation& obs) override;
    std::string_view name() const override { return encoder_ == EncoderVersion::v1 ? "rl1" : "rl2"; }

    const QTable& table() const { return table_; }
    double epsilon() const { return epsilon_after(params_, steps_); }
    // Disables exploration regardless of the schedule.
    void set_greedy(bool greedy) { greedy_ = greedy; }

private:
    void learn(const ControllerObservation& obs, DiscreteState next);

    EncoderVersion encoder_;
    std::size_t action_count_;
    LearningParams params_;
    Requirement requirement_;
    QTable table_;
    Rng rng_;
    std::uint64_t steps_;
    bool greedy_ = false;
    std::optional<DiscreteState> last_state_;
    std::size_t last_action_ = 0;
};

} // namespace elastic

#endif // ELASTIC_CONTROLLERS_HPP
