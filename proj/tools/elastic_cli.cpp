// elastic_cli - profile, simulate and report on elastic-service orchestration.

#include "elastic/experiment_config.hpp"
#include "elastic/harness.hpp"
#include "elastic/profiling.hpp"
#include "elastic/report.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

namespace {

using namespace elastic;
namespace fs = std::filesystem;

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> runs;
    std::string out;
    std::vector<std::string> controllers;
    std::vector<std::string> traces;
};

CampaignSpec campaign_from(const CommonOptions& opt)
{
    CampaignSpec campaign = opt.config.empty() ? CampaignSpec{} : load_campaign(opt.config);
    if (opt.seed)
        campaign.base.base_seed = *opt.seed;
    if (opt.runs)
        campaign.base.runs = *opt.runs;
    if (!opt.out.empty())
        campaign.output_dir = opt.out;
    if (!opt.controllers.empty()) {
        campaign.controllers.clear();
        for (const auto& c : opt.controllers)
            campaign.controllers.push_back(parse_controller_kind(c));
    }
    if (!opt.traces.empty()) {
        campaign.traces.clear();
        for (const auto& t : opt.traces)
            campaign.traces.push_back(parse_trace_kind(t));
    }
    return campaign;
}

int cmd_profile(const CommonOptions& opt, const std::string& out_path, const std::string& validate_path)
{
    const auto campaign = campaign_from(opt);
    const auto& spec = campaign.base;
    if (!validate_path.empty()) {
        const auto table = load_profile(validate_path);
        table.check_covers(spec.topology);
        std::printf("%s: %zu configurations x %zu input sizes, complete\n", validate_path.c_str(),
                    table.configuration_count(), table.input_sizes().size());
        return 0;
    }
    if (out_path.empty())
        throw Error("profile: pass --out <path> to generate or --validate <path> to check a file");
    const auto table = generate_synthetic_profile(spec.profile.model, spec.topology, spec.profile.input_sizes);
    save_profile(table, out_path);
    std::printf("wrote %s (%zu configurations x %zu input sizes)\n", out_path.c_str(), table.configuration_count(),
                table.input_sizes().size());
    return 0;
}

int cmd_run(const CommonOptions& opt)
{
    auto campaign = campaign_from(opt);
    if (campaign.output_dir.empty())
        campaign.output_dir = "out";
    const auto results = run_campaign(campaign);
    std::ifstream summary(campaign.output_dir / "summary.csv");
    std::cout << summary.rdbuf();
    std::printf("results in %s\n", campaign.output_dir.c_str());
    (void)results;
    return 0;
}

int cmd_overhead(const CommonOptions& opt, std::size_t steps, std::optional<double> reference_ms)
{
    const auto campaign = campaign_from(opt);
    const auto scenario = build_scenario(campaign.base);
    std::vector<ControllerKind> kinds = campaign.controllers;
    if (opt.controllers.empty())
        kinds = {ControllerKind::heuristic, ControllerKind::rl1, ControllerKind::rl2};
    std::optional<double> reference;
    if (reference_ms)
        reference = *reference_ms / 1000.0;

    std::printf("controller,steps,median_ms,p99_ms,total_ms,impact_pct\n");
    for (auto kind : kinds) {
        const auto r = measure_overhead(kind, steps, scenario, reference, campaign.base.base_seed);
        std::printf("%s,%zu,%.6f,%.6f,%.6f,%.6f\n", std::string(to_string(kind)).c_str(), r.steps,
                    r.median_s * 1e3, r.p99_s * 1e3, r.total_s * 1e3, r.impact_pct);
    }
    return 0;
}

int cmd_report(const CommonOptions& opt)
{
    const fs::path out = opt.out.empty() ? fs::path("out") : fs::path(opt.out);
    const auto check = rerender_report(out);
    for (const auto& m : check.mismatches)
        std::fprintf(stderr, "mismatch: %s\n", m.c_str());
    std::printf("re-rendered %s from %zu step traces\n", out.c_str(), check.runs_checked);
    if (check.mismatches.empty())
        return 0;
    std::fprintf(stderr, "error: %zu runs disagree with runs.csv\n", check.mismatches.size());
    return 1;
}

int cmd_trace(const CommonOptions& opt, const std::string& out_path, std::size_t cpu_steps)
{
    const auto campaign = campaign_from(opt);
    const auto seed = campaign.base.base_seed;
    std::ofstream out(out_path);
    if (!out)
        throw Error("cannot write " + out_path);
    if (cpu_steps > 0) {
        write_cpu_trace(campaign.base.cpu, seed, cpu_steps, out);
    } else {
        write_input_trace(make_trace(campaign.traces.front(), campaign.base.trace_params, seed), out);
    }
    return 0;
}

void add_common(CLI::App* app, CommonOptions& opt)
{
    app->add_option("--config", opt.config, "Experiment config file (JSON)")->check(CLI::ExistingFile);
    app->add_option("--seed", opt.seed, "Base seed");
    app->add_option("--runs", opt.runs, "Runs per experiment");
    app->add_option("--out", opt.out, "Output path or directory");
    app->add_option("--controller", opt.controllers, "static-hp|static-fast|heuristic|rl1|rl2 (repeatable)");
    app->add_option("--trace", opt.traces, "fixed|variable|full-day|random (repeatable)");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Simulator and controllers for elastic-service orchestration"};
    app.require_subcommand(1);

    CommonOptions opt;
    std::string profile_validate;
    std::size_t overhead_steps = 10000;
    std::optional<double> reference_ms;
    std::size_t cpu_steps = 0;

    auto* profile = app.add_subcommand("profile", "Generate or validate a profile file");
    add_common(profile, opt);
    profile->add_option("--validate", profile_validate, "Profile file to check")->check(CLI::ExistingFile);

    auto* run = app.add_subcommand("run", "Run a campaign");
    add_common(run, opt);

    auto* overhead = app.add_subcommand("overhead", "Time controller decisions");
    add_common(overhead, opt);
    overhead->add_option("--steps", overhead_steps, "Timed decisions")->check(CLI::PositiveNumber);
    overhead->add_option("--reference-ms", reference_ms, "Reference frame latency in ms");

    auto* report = app.add_subcommand("report", "Re-render summary files from step traces");
    add_common(report, opt);

    auto* trace = app.add_subcommand("trace", "Export an input trace or a CPU availability trace");
    add_common(trace, opt);
    trace->add_option("--cpu-steps", cpu_steps, "Export this many CPU chain steps instead of the input trace");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*profile)
            return cmd_profile(opt, opt.out, profile_validate);
        if (*run)
            return cmd_run(opt);
        if (*overhead)
            return cmd_overhead(opt, overhead_steps, reference_ms);
        if (*report)
            return cmd_report(opt);
        if (*trace) {
            if (opt.out.empty())
                throw Error("trace: --out <path> is required");
            return cmd_trace(opt, opt.out, cpu_steps);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
