#include "elastic/report.hpp"

#include "text_util.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace elastic {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view step_header = "step,cpu,input_size,ordinal,latency,objective,satisfied,reward";
constexpr std::string_view runs_header = "run,seed,steps,mean_objective,latency_satisfaction_pct,mean_reward";

std::ofstream open_out(const fs::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write " + path.string());
    return out;
}

std::ifstream open_in(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open " + path.string());
    return in;
}

template <typename T>
T field(std::string_view text, const fs::path& path, std::size_t line)
{
    auto v = detail::parse_number<T>(text);
    if (!v)
        throw Error(path.string() + " line " + std::to_string(line) + ": malformed value '" + std::string(text) + "'");
    return *v;
}

// Traces and controllers in first-seen order.
template <typename Key, typename Get>
std::vector<Key> distinct(const std::vector<ExperimentResult>& results, Get get)
{
    std::vector<Key> out;
    for (const auto& r : results) {
        if (std::find(out.begin(), out.end(), get(r)) == out.end())
            out.push_back(get(r));
    }
    return out;
}

const ExperimentResult* find_result(const std::vector<ExperimentResult>& results, TraceKind t, ControllerKind c)
{
    for (const auto& r : results) {
        if (r.trace == t && r.controller == c)
            return &r;
    }
    return nullptr;
}

void check_results(const std::vector<ExperimentResult>& results)
{
    if (results.empty())
        throw Error("report: no experiments to report");
    for (const auto& r : results) {
        if (r.runs.empty())
            throw Error("report: experiment " + std::string(to_string(r.trace)) + "/" +
                        std::string(to_string(r.controller)) + " has no completed runs");
    }
}

} // namespace

fs::path experiment_dir(const fs::path& out, TraceKind trace, ControllerKind controller)
{
    return out / std::string(to_string(trace)) / std::string(to_string(controller));
}

fs::path step_trace_path(const fs::path& experiment_dir, int run)
{
    char name[32];
    std::snprintf(name, sizeof(name), "run_%03d.csv", run);
    return experiment_dir / name;
}

void write_step_trace(const std::vector<StepRecord>& steps, std::ostream& out)
{
    out << step_header << '\n';
    for (const auto& s : steps) {
        out << s.step << ',' << detail::format_double(s.cpu) << ',' << s.input_size << ',' << s.ordinal << ','
            << detail::format_double(s.latency) << ',' << detail::format_double(s.objective) << ','
            << (s.satisfied ? 1 : 0) << ',' << detail::format_double(s.reward) << '\n';
    }
}

void write_step_trace(const std::vector<StepRecord>& steps, const fs::path& path)
{
    auto out = open_out(path);
    write_step_trace(steps, out);
    if (!out)
        throw Error("failed writing " + path.string());
}

std::vector<StepRecord> read_step_trace(const fs::path& path)
{
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line) || detail::strip_cr(line) != step_header)
        throw Error(path.string() + ": not a step trace");
    std::vector<StepRecord> steps;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        auto text = detail::strip_cr(line);
        if (text.empty())
            continue;
        auto f = detail::split(text, ',');
        if (f.size() != 8)
            throw Error(path.string() + " line " + std::to_string(line_no) + ": expected 8 fields");
        StepRecord s;
        s.step = field<std::size_t>(f[0], path, line_no);
        s.cpu = field<double>(f[1], path, line_no);
        s.input_size = field<int>(f[2], path, line_no);
        s.ordinal = field<int>(f[3], path, line_no);
        s.latency = field<double>(f[4], path, line_no);
        s.objective = field<double>(f[5], path, line_no);
        s.satisfied = field<int>(f[6], path, line_no) != 0;
        s.reward = field<double>(f[7], path, line_no);
        steps.push_back(s);
    }
    return steps;
}

void write_run_metrics(const std::vector<RunMetrics>& runs, const fs::path& experiment_dir)
{
    const auto path = experiment_dir / "runs.csv";
    auto out = open_out(path);
    out << runs_header << '\n';
    for (const auto& r : runs) {
        out << r.run << ',' << r.seed << ',' << r.steps << ',' << detail::format_double(r.mean_objective) << ','
            << detail::format_double(r.latency_satisfaction_pct) << ',' << detail::format_double(r.mean_reward)
            << '\n';
    }
    if (!out)
        throw Error("failed writing " + path.string());
}

std::vector<RunMetrics> read_run_metrics(const fs::path& experiment_dir)
{
    const auto path = experiment_dir / "runs.csv";
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line) || detail::strip_cr(line) != runs_header)
        throw Error(path.string() + ": not a run metrics file");
    std::vector<RunMetrics> runs;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        auto text = detail::strip_cr(line);
        if (text.empty())
            continue;
        auto f = detail::split(text, ',');
        if (f.size() != 6)
            throw Error(path.string() + " line " + std::to_string(line_no) + ": expected 6 fields");
        RunMetrics r;
        r.run = field<int>(f[0], path, line_no);
        r.seed = field<std::uint64_t>(f[1], path, line_no);
        r.steps = field<std::size_t>(f[2], path, line_no);
        r.mean_objective = field<double>(f[3], path, line_no);
        r.latency_satisfaction_pct = field<double>(f[4], path, line_no);
        r.mean_reward = field<double>(f[5], path, line_no);
        runs.push_back(r);
    }
    return runs;
}

RunMetrics aggregate(const std::vector<RunMetrics>& runs)
{
    RunMetrics m;
    if (runs.empty())
        return m;
    for (const auto& r : runs) {
        m.steps += r.steps;
        m.mean_objective += r.mean_objective;
        m.latency_satisfaction_pct += r.latency_satisfaction_pct;
        m.mean_reward += r.mean_reward;
        m.decision_median_s += r.decision_median_s;
        m.decision_p99_s += r.decision_p99_s;
    }
    const auto n = static_cast<double>(runs.size());
    m.run = static_cast<int>(runs.size());
    m.mean_objective /= n;
    m.latency_satisfaction_pct /= n;
    m.mean_reward /= n;
    m.decision_median_s /= n;
    m.decision_p99_s /= n;
    return m;
}

void write_summary(const std::vector<ExperimentResult>& results, std::ostream& out)
{
    const auto traces = distinct<TraceKind>(results, [](const ExperimentResult& r) { return r.trace; });
    const auto controllers =
        distinct<ControllerKind>(results, [](const ExperimentResult& r) { return r.controller; });

    out << "metric,trace";
    for (auto c : controllers)
        out << ',' << to_string(c);
    out << '\n';

    auto rows = [&](std::string_view metric, auto value) {
        for (auto t : traces) {
            out << metric << ',' << to_string(t);
            for (auto c : controllers) {
                out << ',';
                if (const auto* r = find_result(results, t, c))
                    out << detail::format_double(value(aggregate(r->runs)));
            }
            out << '\n';
        }
    };
    rows("precision", [](const RunMetrics& m) { return m.mean_objective; });
    rows("latency_satisfaction_pct", [](const RunMetrics& m) { return m.latency_satisfaction_pct; });
}

void write_averages(const std::vector<ExperimentResult>& results, std::ostream& out)
{
    const auto controllers =
        distinct<ControllerKind>(results, [](const ExperimentResult& r) { return r.controller; });
    out << "controller,precision,latency_satisfaction_pct,traces\n";
    for (auto c : controllers) {
        double precision = 0.0, satisfaction = 0.0;
        std::size_t n = 0;
        for (const auto& r : results) {
            if (r.controller != c)
                continue;
            const auto m = aggregate(r.runs);
            precision += m.mean_objective;
            satisfaction += m.latency_satisfaction_pct;
            ++n;
        }
        out << to_string(c) << ',' << detail::format_double(precision / static_cast<double>(n)) << ','
            << detail::format_double(satisfaction / static_cast<double>(n)) << ',' << n << '\n';
    }
}

void emit_report(const std::vector<ExperimentResult>& results, const fs::path& out)
{
    check_results(results);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec || !fs::is_directory(out))
        throw Error("report: cannot create output directory " + out.string());

    std::ostringstream summary, averages;
    write_summary(results, summary);
    write_averages(results, averages);
    {
        auto f = open_out(out / "summary.csv");
        f << summary.str();
    }
    auto f = open_out(out / "averages.csv");
    f << averages.str();
}

ReportCheck rerender_report(const fs::path& out)
{
    if (!fs::is_directory(out))
        throw Error("report: " + out.string() + " is not a directory");
    ReportCheck check;
    for (auto trace : {TraceKind::fixed, TraceKind::variable, TraceKind::full_day, TraceKind::random}) {
        for (auto controller : all_controller_kinds()) {
            const auto dir = experiment_dir(out, trace, controller);
            if (!fs::exists(dir / "runs.csv"))
                continue;
            const auto recorded = read_run_metrics(dir);
            ExperimentResult result{trace, controller, {}};
            for (const auto& r : recorded) {
                const auto path = step_trace_path(dir, r.run);
                if (!fs::exists(path)) {
                    check.mismatches.push_back(path.string() + ": step trace missing");
                    result.runs.push_back(r);
                    continue;
                }
                const auto recomputed = summarize_steps(r.run, r.seed, read_step_trace(path));
                if (!same_metrics(recomputed, r))
                    check.mismatches.push_back(path.string() + ": metrics differ from runs.csv");
                result.runs.push_back(recomputed);
                ++check.runs_checked;
            }
            check.results.push_back(std::move(result));
        }
    }
    if (check.results.empty())
        throw Error("report: no experiment directories under " + out.string());
    emit_report(check.results, out);
    return check;
}

} // namespace elastic
