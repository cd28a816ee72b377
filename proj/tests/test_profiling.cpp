#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "elastic/profiling.hpp"
#include "test_support.hpp"

#include <algorithm>
#include <sstream>

using namespace elastic;
using Kind = ProfileError::Kind;

namespace {

Kind parse_kind(const std::string& text)
{
    std::istringstream in(text);
    try {
        read_profile(in);
    } catch (const ProfileError& e) {
        return e.kind();
    }
    FAIL("profile parsed without error");
    return Kind::io;
}

const std::string header = "assignment,input_size,base_latency_seconds,objective_value\n";

ProfileTable shipped()
{
    return generate_synthetic_profile(default_profile_model(), default_topology(), default_input_sizes());
}

} // namespace

TEST_CASE("from_entries validation")
{
    CHECK_THROWS_AS(ProfileTable::from_entries({}), ProfileError);
    auto kind_of = [](std::vector<ProfileEntry> e) {
        try {
            ProfileTable::from_entries(std::move(e));
        } catch (const ProfileError& err) {
            return err.kind();
        }
        return Kind::io;
    };
    CHECK(kind_of({{{0}, 6, 0.0, 0.5}}) == Kind::invalid_value);
    CHECK(kind_of({{{0}, 6, 0.1, 1.5}}) == Kind::invalid_value);
    CHECK(kind_of({{{0}, 6, 0.1, 0.5}, {{0}, 12, 0.2, 0.6}}) == Kind::objective_varies);
    CHECK(kind_of({{{0}, 6, 0.1, 0.5}, {{0}, 6, 0.1, 0.5}}) == Kind::duplicate_entry);
    CHECK(kind_of({{{0}, 6, 0.1, 0.5}, {{0}, 12, 0.2, 0.5}, {{1}, 6, 0.1, 0.4}}) == Kind::incomplete_grid);
}

TEST_CASE("lookup interpolates and clamps")
{
    const auto table = testing::flat_profile({0.1}, {0.5}, {6, 12});
    // 6 -> 0.1 is what flat_profile stores for every size; build a sloped one
    const auto sloped = ProfileTable::from_entries({{{0}, 6, 0.1, 0.5}, {{0}, 12, 0.2, 0.5}});
    CHECK(sloped.lookup({0}, 9).base_latency == doctest::Approx(0.15));
    CHECK(sloped.lookup({0}, 3).base_latency == doctest::Approx(0.1));
    CHECK(sloped.lookup({0}, 40).base_latency == doctest::Approx(0.2));
    CHECK(sloped.lookup({0}, 12).base_latency == 0.2);
    CHECK(sloped.lookup({0}, 6).base_latency == 0.1);
    CHECK(sloped.lookup({0}, 9).objective_value == 0.5);
    CHECK(table.lookup({0}, 9).base_latency == 0.1);

    try {
        sloped.lookup({3}, 6);
        FAIL("expected an error");
    } catch (const ProfileError& e) {
        CHECK(e.kind() == Kind::unknown_configuration);
    }
}

TEST_CASE("interpolated latency stays between its neighbours")
{
    const auto table = shipped();
    const auto sizes = table.input_sizes();
    for (const auto& c : enumerate_configurations(default_topology())) {
        for (std::size_t i = 1; i < sizes.size(); ++i) {
            const double lo = table.lookup(c.assignment, sizes[i - 1]).base_latency;
            const double hi = table.lookup(c.assignment, sizes[i]).base_latency;
            for (int n = sizes[i - 1]; n <= sizes[i]; n += 5) {
                const double v = table.lookup(c.assignment, n).base_latency;
                CHECK(v >= std::min(lo, hi) - 1e-15);
                CHECK(v <= std::max(lo, hi) + 1e-15);
            }
        }
    }
}

TEST_CASE("synthetic model")
{
    const auto topo = default_topology();
    SUBCASE("constant model")
    {
        SyntheticProfileModel m;
        m.latency_floor = 0.1;
        m.per_face_slope = 0.0;
        for (const auto& p : topo.parameters()) {
            m.latency_weights.emplace_back(p.values.size(), 0.0);
            m.objective_weights.emplace_back(p.values.size(), 0.0);
        }
        const auto table = generate_synthetic_profile(m, topo, default_input_sizes());
        for (const auto& e : table.entries())
            CHECK(e.base_latency == doctest::Approx(0.1));
    }
    SUBCASE("negative weight rejected")
    {
        auto m = default_profile_model();
        m.latency_weights[2][1] = -0.01;
        CHECK_THROWS_AS(generate_synthetic_profile(m, topo, default_input_sizes()), Error);
    }
    SUBCASE("shape mismatch rejected")
    {
        auto m = default_profile_model();
        m.objective_weights.pop_back();
        CHECK_THROWS_AS(generate_synthetic_profile(m, topo, default_input_sizes()), Error);
    }
    SUBCASE("formula")
    {
        // oracle: the documented closed form, evaluated independently
        const auto m = default_profile_model();
        const auto table = generate_synthetic_profile(m, topo, default_input_sizes());
        for (const auto& c : enumerate_configurations(topo)) {
            double w = 0.0, o = m.objective_base;
            for (std::size_t p = 0; p < c.assignment.size(); ++p) {
                w += m.latency_weights[p][c.assignment[p]];
                o += m.objective_weights[p][c.assignment[p]];
            }
            o = std::clamp(o, 0.0, 1.0);
            for (int n : default_input_sizes()) {
                const double expected = (m.latency_floor + w) * (1.0 + m.per_face_slope * n / m.latency_floor);
                CHECK(table.lookup(c.assignment, n).base_latency == doctest::Approx(expected).epsilon(1e-12));
            }
            CHECK(table.objective(c.assignment) == doctest::Approx(o).epsilon(1e-12));
        }
    }
}

TEST_CASE("shipped profile shape")
{
    const auto topo = default_topology();
    const auto table = shipped();
    const auto sorted = sort_by_objective(enumerate_configurations(topo), table, 6);

    for (const auto& c : sorted)
        CHECK(table.lookup(c.assignment, 192).base_latency > table.lookup(c.assignment, 6).base_latency);

    // exhaustive scan: the best objective is also the slowest at every size
    for (int n : table.input_sizes()) {
        double slowest = 0.0;
        for (const auto& c : sorted)
            slowest = std::max(slowest, table.lookup(c.assignment, n).base_latency);
        CHECK(table.lookup(sorted.front().assignment, n).base_latency == slowest);
    }
    // pure trade-off: objective order is the reverse of latency order
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        CHECK(table.lookup(sorted[i - 1].assignment, 6).base_latency >
              table.lookup(sorted[i].assignment, 6).base_latency);
    }
    // fastest configuration on 6 faces at full CPU: a bit under 0.3 s
    const double fastest = table.lookup(sorted.back().assignment, 6).base_latency;
    CHECK(fastest == doctest::Approx(0.28 + 0.003 * 6));
    CHECK(table.objective(sorted.front().assignment) == doctest::Approx(1.0));
}

TEST_CASE("profile file round trip and errors")
{
    const auto table = shipped();
    const auto dir = testing::scratch_dir("profiling");
    save_profile(table, dir / "p.csv");
    const auto back = load_profile(dir / "p.csv");
    CHECK(back == table);
    CHECK(back.configuration_count() == 512);
    CHECK(back.input_sizes().size() == 6);
    CHECK_NOTHROW(back.check_covers(default_topology()));

    CHECK(parse_kind("config,n,lat,obj\n0,6,0.1,0.5\n") == Kind::missing_header);
    CHECK(parse_kind(header + "0,6,0.1\n") == Kind::malformed_row);
    CHECK(parse_kind(header + "0,6,fast,0.5\n") == Kind::malformed_row);
    CHECK(parse_kind(header + "0,6,0.1,0.5\n0,12,0.2,0.5\n1,6,0.1,0.4\n") == Kind::incomplete_grid);
    CHECK(parse_kind(header + "0,6,0.1,0.5\n0,6,0.1,0.5\n") == Kind::duplicate_entry);
    CHECK(parse_kind(header + "0,6,0.1,0.5\n0,12,0.2,0.6\n") == Kind::objective_varies);

    // one cell deleted from the full table
    std::ostringstream out;
    write_profile(table, out);
    std::string text = out.str();
    const auto first_row = text.find('\n') + 1;
    text.erase(first_row, text.find('\n', first_row) + 1 - first_row);
    CHECK(parse_kind(text) == Kind::incomplete_grid);

    CHECK_THROWS_AS(load_profile(dir / "absent.csv"), ProfileError);

    // covers: a table for a smaller topology does not cover the default one
    CHECK_THROWS_AS(testing::flat_profile({0.1}, {0.5}).check_covers(default_topology()), ProfileError);
}
