// report.hpp - metric and trace files.
//
// Layout under an output directory:
//   summary.csv                       metric rows per trace, one column per controller
//   averages.csv                      per-controller averages over all traces
//   <trace>/<controller>/runs.csv     per-run metrics (deterministic fields)
//   <trace>/<controller>/timing.csv   per-run decision times (wall clock)
//   <trace>/<controller>/run_NNN.csv  per-step records

#ifndef ELASTIC_REPORT_HPP
#define ELASTIC_REPORT_HPP

#include "elastic/harness.hpp"

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace elastic {

std::filesystem::path experiment_dir(const std::filesystem::path& out, TraceKind trace, ControllerKind controller);
std::filesystem::path step_trace_path(const std::filesystem::path& experiment_dir, int run);

void write_step_trace(const std::vector<StepRecord>& steps, std::ostream& out);
void write_step_trace(const std::vector<StepRecord>& steps, const std::filesystem::path& path);
std::vector<StepRecord> read_step_trace(const std::filesystem::path& path);

void write_run_metrics(const std::vector<RunMetrics>& runs, const std::filesystem::path& experiment_dir);
std::vector<RunMetrics> read_run_metrics(const std::filesystem::path& experiment_dir);

// Mean over runs.
RunMetrics aggregate(const std::vector<RunMetrics>& runs);

// Writes summary.csv and averages.csv. Throws before writing anything when a
// result has no runs or the directory cannot be created.
void emit_report(const std::vector<ExperimentResult>& results, const std::filesystem::path& out);
void write_summary(const std::vector<ExperimentResult>& results, std::ostream& out);
void write_averages(const std::vector<ExperimentResult>& results, std::ostream& out);

struct ReportCheck {
    std::vector<ExperimentResult> results;
    std::size_t runs_checked = 0;
    std::vector<std::string> mismatches;
};

// Recomputes every run's metrics from its step trace, compares them with
// runs.csv and rewrites the summary files.
ReportCheck rerender_report(const std::filesystem::path& out);

} // namespace elastic

#endif // ELASTIC_REPORT_HPP
