// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
// Every tolerance, seed and runtime budget is a constant below.

#include "elastic/controllers.hpp"
#include "elastic/harness.hpp"
#include "elastic/report.hpp"
#include "test_support.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>

using namespace elastic;
namespace fs = std::filesystem;

namespace {

// reward oracle
constexpr int reward_triples = 1000;
constexpr std::uint64_t reward_seed = 20240601;
// cpu chain
constexpr std::size_t chain_steps = 100'000;
constexpr double chain_frequency = 0.10;
constexpr double chain_tolerance = 0.01;
constexpr std::uint64_t chain_seed = 1;
// toy convergence
constexpr int toy_seeds = 100;
constexpr int toy_required = 95;
constexpr std::size_t toy_steps = 500;
// controller comparison campaign
constexpr int campaign_runs = 50;
constexpr std::uint64_t campaign_seed = 1;
// overhead
constexpr std::size_t overhead_steps = 10'000;
constexpr double overhead_median_limit_s = 0.5e-3;
constexpr double overhead_impact_limit_pct = 0.5;
constexpr double overhead_reference_frame_s = 0.070;
// rapid adaptation
constexpr std::size_t drop_step = 485;
constexpr std::size_t recover_step = 515;
constexpr double drop_cpu = 0.4;
constexpr std::size_t react_within = 10;
constexpr std::size_t return_within = 20;
constexpr double window_satisfaction_pct = 90.0;
constexpr int adaptation_faces = 6;
constexpr int adaptation_training_runs = 50;

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof(buf), f, args...);
    return buf;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// ---- 1 ----------------------------------------------------------------

// Direct evaluation of the reward for one latency constraint.
double reward_oracle(double objective, double latency, double target)
{
    if (latency <= target)
        return objective;
    return -(latency / target);
}

Outcome reward_oracle_check()
{
    std::mt19937_64 gen(reward_seed);
    std::uniform_real_distribution<double> obj(0.0, 1.0), lat(0.05, 3.0), tgt(0.1, 2.0);
    int mismatches = 0, satisfied = 0, violated = 0;
    for (int i = 0; i < reward_triples; ++i) {
        const double o = obj(gen), t = tgt(gen);
        // every tenth triple sits exactly on the bound
        const double l = i % 10 == 0 ? t : lat(gen);

        const Requirement req("precision", Sense::maximize, {{"latency", t}});
        auto profile = std::make_shared<const ProfileTable>(testing::flat_profile({l}, {o}));
        Environment env(profile, req, CpuChainParams{}, TraceKind::fixed);
        env.set_cpu_schedule({1.0});
        env.reset(static_cast<std::uint64_t>(i));
        const ActionSpace actions({{{0}, 0}});
        const auto out = env.step(actions[0]);
        const double r = reward(make_observation(out->observation, req, actions), req);

        const double expected = reward_oracle(o, l, t);
        mismatches += r != expected;
        (l <= t ? satisfied : violated) += 1;
    }
    return {mismatches == 0 && satisfied > 0 && violated > 0,
            fmt("%d triples, %d mismatches, %d satisfied / %d violated branch", reward_triples, mismatches, satisfied,
                violated)};
}

// ---- 2 ----------------------------------------------------------------

Outcome encoder_check()
{
    constexpr std::size_t actions = 16;
    const double ratio_for_bin[] = {0.5, 0.9, 1.5};
    const double cpu_for_bin[] = {0.4, 0.6, 0.9};
    std::map<std::size_t, int> v1_hits, v2_hits;
    for (int b = 0; b < 3; ++b) {
        for (std::size_t a = 0; a < actions; ++a) {
            ControllerObservation obs;
            obs.last_latency_ratio = ratio_for_bin[b];
            obs.last_action = a;
            obs.satisfied_last = {ratio_for_bin[b] <= 1.0};
            obs.constraint_ratios = {ratio_for_bin[b]};
            ++v1_hits[encode_state_v1(obs, actions).index];
            for (double cpu : cpu_for_bin) {
                obs.cpu_availability = cpu;
                ++v2_hits[encode_state_v2(obs, actions).index];
            }
        }
    }
    auto exact = [](const std::map<std::size_t, int>& hits, std::size_t n) {
        if (hits.size() != n)
            return false;
        std::size_t expect = 0;
        for (const auto& [index, count] : hits) {
            if (index != expect++ || count != 1)
                return false;
        }
        return true;
    };
    const bool ok = exact(v1_hits, 48) && exact(v2_hits, 144) && state_count(EncoderVersion::v1, actions) == 48 &&
                    state_count(EncoderVersion::v2, actions) == 144;
    return {ok, fmt("v1 covers %zu indices, v2 covers %zu indices, each hit once: %s", v1_hits.size(), v2_hits.size(),
                    ok ? "yes" : "no")};
}

// ---- 3 ----------------------------------------------------------------

Outcome cpu_chain_check()
{
    const CpuChainParams p;
    auto rng = make_rng(chain_seed, 1);
    double c = p.initial;
    std::size_t transitions = 0, value_changes = 0, outside = 0;
    for (std::size_t i = 0; i < chain_steps; ++i) {
        const auto s = cpu_step(c, p, rng);
        transitions += s.transitioned;
        value_changes += s.availability != c;
        outside += s.availability < p.min_avail || s.availability > p.max_avail;
        c = s.availability;
    }
    const double freq = static_cast<double>(transitions) / chain_steps;
    const bool ok = std::abs(freq - chain_frequency) <= chain_tolerance && outside == 0;
    return {ok, fmt("transition frequency %.4f (target %.2f +/- %.2f), value-change frequency %.4f, %zu excursions",
                    freq, chain_frequency, chain_tolerance, static_cast<double>(value_changes) / chain_steps,
                    outside)};
}

// ---- 4 ----------------------------------------------------------------

Outcome toy_check()
{
    int converged = 0;
    for (int seed = 0; seed < toy_seeds; ++seed)
        converged += testing::toy_q_converges(static_cast<std::uint64_t>(seed), toy_steps);
    return {converged >= toy_required,
            fmt("%d / %d seeds greedy-optimal in all reachable states after %zu steps (need %d)", converged,
                toy_seeds, toy_steps, toy_required)};
}

// ---- 5, 6, 9 ----------------------------------------------------------

struct CampaignRun {
    std::map<ControllerKind, std::vector<RunMetrics>> runs;
    fs::path out;
};

const fs::path work_root = fs::temp_directory_path() / "elastic_acceptance";

CampaignRun comparison_campaign(const std::string& tag)
{
    CampaignSpec campaign;
    campaign.base.runs = campaign_runs;
    campaign.base.base_seed = campaign_seed;
    campaign.traces = {TraceKind::variable};
    campaign.controllers = all_controller_kinds();
    campaign.output_dir = work_root / tag;
    fs::remove_all(campaign.output_dir);
    CampaignRun result;
    result.out = campaign.output_dir;
    for (auto& r : run_campaign(campaign))
        result.runs[r.controller] = std::move(r.runs);
    return result;
}

const CampaignRun& first_campaign()
{
    static const CampaignRun run = comparison_campaign("campaign_a");
    return run;
}

double mean_of(const std::vector<RunMetrics>& runs, std::size_t from, std::size_t to, double RunMetrics::*field)
{
    double sum = 0.0;
    for (std::size_t i = from; i < to; ++i)
        sum += runs[i].*field;
    return sum / static_cast<double>(to - from);
}

Outcome comparison_check()
{
    const auto& c = first_campaign();
    auto agg = [&](ControllerKind k) { return aggregate(c.runs.at(k)); };
    const auto hp = agg(ControllerKind::static_hp), fast = agg(ControllerKind::static_fast);
    const auto heur = agg(ControllerKind::heuristic), rl1 = agg(ControllerKind::rl1), rl2 = agg(ControllerKind::rl2);

    bool a = true, b = true;
    for (const auto* e : {&heur, &rl1, &rl2}) {
        a = a && hp.latency_satisfaction_pct < e->latency_satisfaction_pct;
        b = b && fast.mean_objective < e->mean_objective;
    }
    const bool cc = rl2.mean_objective >= heur.mean_objective;
    const bool d = rl2.mean_objective >= rl1.mean_objective;
    const auto row = [](const char* name, const RunMetrics& m) {
        return fmt("%s %.4f/%.2f%%", name, m.mean_objective, m.latency_satisfaction_pct);
    };
    std::string detail = fmt("(a)%s (b)%s (c)%s (d)%s | precision/satisfaction: ", a ? "ok" : "FAIL",
                             b ? "ok" : "FAIL", cc ? "ok" : "FAIL", d ? "ok" : "FAIL");
    detail += row("static-hp", hp) + ", " + row("static-fast", fast) + ", " + row("heuristic", heur) + ", " +
              row("rl1", rl1) + ", " + row("rl2", rl2);
    detail += fmt(" | rl2 vs heuristic precision %+.1f%%",
                  100.0 * (rl2.mean_objective - heur.mean_objective) / heur.mean_objective);
    return {a && b && cc && d, detail};
}

Outcome learning_effect_check()
{
    const auto& c = first_campaign();
    const auto& rl2 = c.runs.at(ControllerKind::rl2);
    const auto& heur = c.runs.at(ControllerKind::heuristic);
    const double first = mean_of(rl2, 0, 10, &RunMetrics::mean_reward);
    const double last = mean_of(rl2, 40, 50, &RunMetrics::mean_reward);
    // same run seeds under a non-learning controller: how much of the change the CPU traces alone explain
    const double heur_first = mean_of(heur, 0, 10, &RunMetrics::mean_reward);
    const double heur_last = mean_of(heur, 40, 50, &RunMetrics::mean_reward);
    return {last > first, fmt("rl2 mean reward runs 1-10 %.4f, runs 41-50 %.4f (change %+.4f); heuristic on the same "
                              "seeds %.4f -> %.4f (change %+.4f)",
                              first, last, last - first, heur_first, heur_last, heur_last - heur_first)};
}

// Deterministic files of a campaign directory, timing files excluded.
std::map<std::string, std::string> deterministic_files(const fs::path& root)
{
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file() || e.path().filename() == "timing.csv")
            continue;
        files[fs::relative(e.path(), root).string()] = slurp(e.path());
    }
    return files;
}

Outcome determinism_check()
{
    const auto& a = first_campaign();
    const auto b = comparison_campaign("campaign_b");
    const auto fa = deterministic_files(a.out), fb = deterministic_files(b.out);
    std::size_t differing = 0;
    for (const auto& [name, text] : fa) {
        auto it = fb.find(name);
        differing += it == fb.end() || it->second != text;
    }
    differing += fb.size() > fa.size() ? fb.size() - fa.size() : 0;
    return {differing == 0 && !fa.empty(),
            fmt("%zu files compared (summary, runs, step traces, q-tables), %zu differ", fa.size(), differing)};
}

// ---- 7 ----------------------------------------------------------------

Outcome overhead_check()
{
    const auto scenario = Scenario::make_default();
    bool ok = true;
    std::string detail;
    for (auto kind : {ControllerKind::heuristic, ControllerKind::rl1, ControllerKind::rl2}) {
        const auto r = measure_overhead(kind, overhead_steps, scenario, overhead_reference_frame_s);
        ok = ok && r.median_s < overhead_median_limit_s && r.impact_pct < overhead_impact_limit_pct;
        detail += fmt("%s median %.5f ms p99 %.5f ms impact %.5f%%; ", std::string(to_string(kind)).c_str(),
                      r.median_s * 1e3, r.p99_s * 1e3, r.impact_pct);
    }
    detail += fmt("limits %.2f ms, %.2f%% of a %.0f ms frame", overhead_median_limit_s * 1e3,
                  overhead_impact_limit_pct, overhead_reference_frame_s * 1e3);
    return {ok, detail};
}

// ---- 8 ----------------------------------------------------------------

Outcome adaptation_check()
{
    const auto scenario = Scenario::make_default();
    const auto dir = work_root / "adaptation";
    fs::remove_all(dir);
    fs::create_directories(dir);

    // training: chained runs on a fixed trace under the stochastic CPU chain
    ExperimentSpec spec;
    spec.controller = ControllerKind::rl2;
    spec.trace = TraceKind::fixed;
    spec.trace_params.fixed_size = adaptation_faces;
    spec.runs = adaptation_training_runs;
    spec.base_seed = campaign_seed;
    spec.qtable_path = dir / "rl2.qtable";
    run_experiment(spec, scenario);

    // evaluation: scripted availability, greedy policy
    const auto& actions = scenario.active();
    auto table = qtable_load(spec.qtable_path, EncoderVersion::v2, actions.size());
    LearningParams lp;
    QLearningController agent(EncoderVersion::v2, actions.size(), lp, scenario.requirement(), std::move(table));
    agent.set_greedy(true);

    Environment env(scenario.profile_ptr(), scenario.requirement(), spec.cpu, TraceKind::fixed, spec.trace_params);
    std::vector<double> schedule(spec.trace_params.fixed_steps, 1.0);
    for (std::size_t t = drop_step; t < recover_step; ++t)
        schedule[t] = drop_cpu;
    env.set_cpu_schedule(schedule);
    const auto episode = run_episode(env, agent, actions, 0, campaign_seed);
    const auto& steps = episode.steps;

    const auto& before = steps[drop_step - 1];
    std::optional<std::size_t> reacted, returned;
    for (std::size_t t = drop_step; t < drop_step + react_within; ++t) {
        if (steps[t].objective < before.objective) {
            reacted = t;
            break;
        }
    }
    for (std::size_t t = recover_step; t < recover_step + return_within; ++t) {
        if (steps[t].objective >= before.objective) {
            returned = t;
            break;
        }
    }
    const std::size_t window_end = recover_step + return_within;
    std::size_t ok_steps = 0;
    for (std::size_t t = drop_step; t < window_end; ++t)
        ok_steps += steps[t].satisfied;
    const double pct = 100.0 * static_cast<double>(ok_steps) / static_cast<double>(window_end - drop_step);

    // trace for plotting
    write_step_trace(steps, dir / "response.csv");

    auto at = [](std::optional<std::size_t> t) { return t ? static_cast<long>(*t) : -1L; };
    const bool pass = reacted && returned && pct >= window_satisfaction_pct;
    return {pass, fmt("%d faces, ordinal before drop %d; lower-objective config at step %ld (limit %zu), back at step "
                      "%ld (limit %zu); satisfaction over steps %zu-%zu %.1f%% (need %.0f%%); lowest objective in "
                      "window %d",
                      adaptation_faces, before.ordinal, at(reacted), drop_step + react_within - 1, at(returned),
                      recover_step + return_within - 1, drop_step, window_end - 1, pct, window_satisfaction_pct,
                      [&] {
                          int worst = 0;
                          for (std::size_t t = drop_step; t < recover_step; ++t)
                              worst = std::max(worst, steps[t].ordinal);
                          return worst;
                      }())};
}

} // namespace

int main()
{
    const std::vector<Criterion> criteria = {
        {1, "reward oracle", 1.0, reward_oracle_check},
        {2, "encoder bijectivity", 1.0, encoder_check},
        {3, "cpu chain statistics", 5.0, cpu_chain_check},
        {4, "toy q-learning convergence", 10.0, toy_check},
        {5, "controller ordering (variable trace, 50 runs)", 300.0, comparison_check},
        {6, "learning effect", 300.0, learning_effect_check},
        {7, "controller overhead", 30.0, overhead_check},
        {8, "rapid adaptation", 10.0, adaptation_check},
        {9, "determinism", 300.0, determinism_check},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_budget = elapsed < c.budget_s;
        const bool pass = o.pass && in_budget;
        failed += !pass;
        std::printf("%s %d %s: %s [%.2f s, budget %.0f s%s]\n", pass ? "PASS" : "FAIL", c.id, c.name,
                    o.detail.c_str(), elapsed, c.budget_s, in_budget ? "" : ", OVER BUDGET");
        std::fflush(stdout);
    }
    std::printf("%zu criteria, %d failed\n", criteria.size(), failed);
    return failed == 0 ? 0 : 1;
}
