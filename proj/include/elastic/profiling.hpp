// profiling.hpp - profile tables: (configuration, input size) -> base latency and objective.
//
// The profile is the simulator's ground truth. Latency is the expected
// processing time of one frame at full CPU availability; the objective value
// (e.g. precision) depends only on the configuration.

#ifndef ELASTIC_PROFILING_HPP
#define ELASTIC_PROFILING_HPP

#include "elastic/service_model.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <vector>

namespace elastic {

struct ProfileEntry {
    Assignment assignment;
    int input_size = 0;
    double base_latency = 0.0;
    double objective_value = 0.0;

    friend bool operator==(const ProfileEntry&, const ProfileEntry&) = default;
};

struct ProfileLookup {
    double base_latency;
    double objective_value;
};

class ProfileError : public Error {
public:
    enum class Kind {
        io,
        missing_header,
        malformed_row,
        invalid_value,
        duplicate_entry,
        incomplete_grid,
        objective_varies,
        unknown_configuration,
    };

    ProfileError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

class ProfileTable {
public:
    ProfileTable() = default;

    // Validates a complete grid with constant per-configuration objective.
    static ProfileTable from_entries(std::vector<ProfileEntry> entries);

    const std::vector<int>& input_sizes() const { return sizes_; }
    std::size_t configuration_count() const { return rows_.size(); }
    bool contains(const Assignment& assignment) const { return rows_.count(assignment) != 0; }

    // Linear interpolation between profiled sizes, clamped outside the range.
    ProfileLookup lookup(const Assignment& assignment, int input_size) const;
    double objective(const Assignment& assignment) const;

    // Every configuration of the topology is present.
    void check_covers(const ServiceTopology& topology) const;

    // Sorted by (assignment, input_size).
    std::vector<ProfileEntry> entries() const;

    friend bool operator==(const ProfileTable&, const ProfileTable&) = default;

private:
    struct Row {
        double objective = 0.0;
        std::vector<double> latencies; // parallel to sizes_

        friend bool operator==(const Row&, const Row&) = default;
    };

    const Row& row(const Assignment& assignment) const;

    std::map<Assignment, Row> rows_;
    std::vector<int> sizes_;
};

ProfileLookup lookup(const ProfileTable& table, const Configuration& config, int input_size);

// base_latency(c, n) = (floor + W(c)) * (1 + per_face_slope * n / floor)
//   where W(c) is the sum of latency weights of the chosen values, so the
//   per-face slope of a configuration is per_face_slope * (floor + W(c)) / floor
//   (the cheapest possible configuration has slope exactly per_face_slope).
// objective(c) = clamp(objective_base + sum of objective weights, 0, 1)
struct SyntheticProfileModel {
    std::vector<std::vector<double>> latency_weights;   // [parameter][value], seconds
    std::vector<std::vector<double>> objective_weights; // [parameter][value]
    double per_face_slope = 0.0;                        // seconds per face
    double latency_floor = 0.1;                         // seconds
    double objective_base = 0.0;

    // Throws on negative weights, non-positive floor or shape mismatch.
    void validate(const ServiceTopology& topology) const;
};

// The face detection and matching service: 4^3 * 2^3 = 512 configurations.
ServiceTopology default_topology();
SyntheticProfileModel default_profile_model();
std::vector<int> default_input_sizes();

ProfileTable generate_synthetic_profile(const SyntheticProfileModel& model,
                                        const ServiceTopology& topology,
                                        const std::vector<int>& input_sizes);

// Text format, one record per line after a header:
//   assignment,input_size,base_latency_seconds,objective_value
// with the assignment written as semicolon-joined indices, e.g. "0;3;1".
void write_profile(const ProfileTable& table, std::ostream& out);
ProfileTable read_profile(std::istream& in);
void save_profile(const ProfileTable& table, const std::filesystem::path& path);
ProfileTable load_profile(const std::filesystem::path& path);

} // namespace elastic

#endif // ELASTIC_PROFILING_HPP
