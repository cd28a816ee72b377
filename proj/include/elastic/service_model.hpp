// service_model.hpp - parameterized services, configuration space and requirements.
//
// A service topology is an ordered list of operators, each carrying an ordered
// list of tunable parameters (the adaptation knobs). A configuration picks one
// value index per parameter, in topology order. Requirements are expressed as a
// constrained optimization problem: optimize one objective metric subject to
// upper-bound constraints on other metrics.

#ifndef ELASTIC_SERVICE_MODEL_HPP
#define ELASTIC_SERVICE_MODEL_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace elastic {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ProfileTable;

struct ParameterSpec {
    std::string name;
    std::vector<std::string> values;
};

struct OperatorSpec {
    std::string name;
    std::vector<ParameterSpec> parameters;
    // Accepted for topology files; the simulator runs one instance per operator.
    int granularity = 1;
};

class ServiceTopology {
public:
    ServiceTopology() = default;
    ServiceTopology(std::string name, std::vector<OperatorSpec> operators);

    const std::string& name() const { return name_; }
    const std::vector<OperatorSpec>& operators() const { return operators_; }

    // Parameters flattened in declaration order.
    const std::vector<ParameterSpec>& parameters() const { return flat_; }
    std::size_t parameter_count() const { return flat_.size(); }
    std::vector<std::size_t> value_counts() const;
    std::size_t configuration_count() const;

private:
    std::string name_;
    std::vector<OperatorSpec> operators_;
    std::vector<ParameterSpec> flat_;
};

// One value index per parameter, in topology order.
using Assignment = std::vector<int>;

struct Configuration {
    Assignment assignment;
    // Rank after sort_by_objective (0 = best objective); -1 before sorting.
    int ordinal = -1;

    friend bool operator==(const Configuration&, const Configuration&) = default;
};

std::string format_assignment(const Assignment& assignment);
Assignment parse_assignment(std::string_view text);

// Checks that the assignment has one in-range index per parameter.
bool is_valid_for(const Assignment& assignment, const ServiceTopology& topology);

enum class Sense { maximize, minimize };

std::string_view to_string(Sense sense);
Sense parse_sense(std::string_view text);

// Upper-bound constraint c_i <= target.
struct ConstraintSpec {
    std::string metric;
    double target = 1.0;
};

class Requirement {
public:
    Requirement(std::string objective_metric, Sense sense, std::vector<ConstraintSpec> constraints);

    const std::string& objective_metric() const { return objective_metric_; }
    Sense sense() const { return sense_; }
    const std::vector<ConstraintSpec>& constraints() const { return constraints_; }

    // Index of the constraint on "latency", or 0 when no constraint has that name.
    std::size_t latency_constraint() const;

    // Objective mapped so that larger is better and [0,1] stays [0,1].
    double oriented_objective(double objective) const
    {
        return sense_ == Sense::maximize ? objective : 1.0 - objective;
    }

private:
    std::string objective_metric_;
    Sense sense_;
    std::vector<ConstraintSpec> constraints_;
};

// Full cross product in lexicographic declaration order (last parameter varies fastest).
std::vector<Configuration> enumerate_configurations(const ServiceTopology& topology);

// Descending oriented objective at reference_input; ties keep lexicographic
// assignment order. Assigns ordinals 0..n-1.
std::vector<Configuration> sort_by_objective(std::vector<Configuration> configs,
                                             const ProfileTable& profile,
                                             int reference_input,
                                             Sense sense = Sense::maximize);

// `count` evenly spaced entries of an objective-sorted list (always including
// the first and last), in the same order. count == 0 or >= size keeps all.
std::vector<Configuration> select_active_subset(const std::vector<Configuration>& sorted,
                                                std::size_t count);

} // namespace elastic

#endif // ELASTIC_SERVICE_MODEL_HPP
