#pragma once

// Experiment harness: scenario grids, seeded trials for every optimizer,
// crash-safe CSV records and the JSON/CSV summaries built from them.

#include <quasar/benchfn.hpp>
#include <quasar/de.hpp>
#include <quasar/optimizer.hpp>
#include <quasar/stats.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

namespace quasar::harness {

namespace fs = std::filesystem;

class HarnessError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kCsvHeader = "algo,function,dim,pop,gmax,trial,seed,final_error,runtime_sec,evals";
inline constexpr std::string_view kFailedMarker = "failed";
inline constexpr std::string_view kRecordsFile = "records.csv";
inline constexpr std::string_view kSummaryFile = "summary.json";
inline constexpr std::string_view kReferenceAlgorithm = "quasar";
inline constexpr std::string_view kWorkersEnv = "QUASAR_WORKERS";

enum class PlanMode { DimensionVariant, SampleVariant, Custom };

inline PlanMode parse_mode(std::string_view text)
{
    if (text == "dim")
        return PlanMode::DimensionVariant;
    if (text == "sample")
        return PlanMode::SampleVariant;
    if (text == "custom")
        return PlanMode::Custom;
    throw ContractError("unknown plan mode '" + std::string(text) + "' (expected dim, sample or custom)");
}

struct ExperimentPlan {
    PlanMode mode = PlanMode::DimensionVariant;
    std::vector<std::size_t> dims;
    std::vector<std::size_t> pop_sizes;
    std::size_t g_max = 100;
    std::size_t trials = 10;
    std::uint64_t master_seed = 42;
    std::uint64_t suite_seed = 2017;
    std::vector<std::string> algorithms{"quasar", "de"};
    /// Empty means the whole suite.
    std::vector<std::string> functions;
    bool write_traces = false;
    /// 0 means: QUASAR_WORKERS if set, else hardware concurrency.
    std::size_t workers = 0;

    /// Desk-scale defaults for each mode.
    static ExperimentPlan defaults(PlanMode mode)
    {
        ExperimentPlan plan;
        plan.mode = mode;
        switch (mode) {
        case PlanMode::DimensionVariant:
            plan.dims = {10, 30};
            plan.pop_sizes = {300};
            break;
        case PlanMode::SampleVariant:
            plan.dims = {30};
            plan.pop_sizes = {100, 300};
            break;
        case PlanMode::Custom:
            plan.dims = {10, 30};
            plan.pop_sizes = {100, 300};
            break;
        }
        return plan;
    }

    void validate() const
    {
        if (trials < 1)
            throw ContractError("plan: trials must be at least 1");
        if (dims.empty() || pop_sizes.empty())
            throw ContractError("plan: dimension and population grids must be non-empty");
        if (algorithms.empty())
            throw ContractError("plan: at least one algorithm is required");
        if (mode == PlanMode::DimensionVariant && pop_sizes.size() != 1)
            throw ContractError("plan: a dimension-variant plan takes exactly one population size");
        if (mode == PlanMode::SampleVariant && dims.size() != 1)
            throw ContractError("plan: a sample-variant plan takes exactly one dimension");
        for (const auto& a : algorithms) {
            if (a != "quasar" && a != "de")
                throw ContractError("plan: unknown algorithm '" + a + "' (expected quasar or de)");
        }
        for (auto d : dims) {
            if (d < 2)
                throw ContractError("plan: dimensions must be at least 2");
        }
        if (g_max < 1)
            throw ContractError("plan: gmax must be at least 1");
    }

    /// (D, N) grid cells.
    std::vector<std::pair<std::size_t, std::size_t>> cells() const
    {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        for (auto d : dims)
            for (auto n : pop_sizes)
                out.emplace_back(d, n);
        return out;
    }
};

/// Seed for one trial: a pure function of the plan coordinates.
inline std::uint64_t trial_seed(std::uint64_t master_seed, std::string_view algorithm, std::string_view function, std::size_t dim,
                                std::size_t pop, std::size_t trial)
{
    std::uint64_t h = fnv1a64(algorithm);
    h = fnv1a64("/", h);
    h = fnv1a64(function, h);
    std::uint64_t s = derive_seed(master_seed, h);
    s = derive_seed(s, dim);
    s = derive_seed(s, pop);
    return derive_seed(s, trial);
}

struct TrialRecord {
    std::string algorithm;
    std::string function;
    std::size_t dim = 0;
    std::size_t pop = 0;
    std::size_t g_max = 0;
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    /// Empty for a failed trial.
    std::optional<double> final_error;
    double runtime_seconds = 0.0;
    std::size_t evals = 0;
    /// Relative to the output directory; empty when traces are off.
    std::string trace_file;

    bool failed() const noexcept { return !final_error.has_value(); }

    using Key = std::tuple<std::string, std::string, std::size_t, std::size_t, std::size_t, std::size_t>;
    Key key() const { return {algorithm, function, dim, pop, g_max, trial}; }
};

inline std::string format_double(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string to_csv_row(const TrialRecord& r)
{
    std::ostringstream os;
    os << r.algorithm << ',' << r.function << ',' << r.dim << ',' << r.pop << ',' << r.g_max << ',' << r.trial << ',' << r.seed << ','
       << (r.final_error ? format_double(*r.final_error) : std::string(kFailedMarker)) << ',' << format_double(r.runtime_seconds) << ','
       << r.evals;
    return os.str();
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return out;
}

template <typename T>
T parse_number(std::string_view field, const char* what, std::size_t line_no)
{
    T value{};
    if constexpr (std::is_floating_point_v<T>) {
        // from_chars for doubles is missing on some standard libraries.
        std::string copy(field);
        char* end = nullptr;
        value = std::strtod(copy.c_str(), &end);
        if (copy.empty() || end != copy.c_str() + copy.size())
            throw HarnessError("records line " + std::to_string(line_no) + ": bad " + what + " '" + copy + "'");
    } else {
        const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
        if (ec != std::errc{} || ptr != field.data() + field.size())
            throw HarnessError("records line " + std::to_string(line_no) + ": bad " + what + " '" + std::string(field) + "'");
    }
    return value;
}

} // namespace detail

inline TrialRecord parse_csv_row(std::string_view line, std::size_t line_no)
{
    const auto f = detail::split(line, ',');
    if (f.size() != 10)
        throw HarnessError("records line " + std::to_string(line_no) + ": expected 10 fields, found " + std::to_string(f.size()));
    TrialRecord r;
    r.algorithm = std::string(f[0]);
    r.function = std::string(f[1]);
    if (r.algorithm.empty() || r.function.empty())
        throw HarnessError("records line " + std::to_string(line_no) + ": empty algorithm or function");
    r.dim = detail::parse_number<std::size_t>(f[2], "dim", line_no);
    r.pop = detail::parse_number<std::size_t>(f[3], "pop", line_no);
    r.g_max = detail::parse_number<std::size_t>(f[4], "gmax", line_no);
    r.trial = detail::parse_number<std::size_t>(f[5], "trial", line_no);
    r.seed = detail::parse_number<std::uint64_t>(f[6], "seed", line_no);
    if (f[7] != kFailedMarker) {
        r.final_error = detail::parse_number<double>(f[7], "final_error", line_no);
        if (!std::isfinite(*r.final_error) || *r.final_error < 0.0)
            throw HarnessError("records line " + std::to_string(line_no) + ": final_error must be finite and >= 0");
    }
    r.runtime_seconds = detail::parse_number<double>(f[8], "runtime_sec", line_no);
    r.evals = detail::parse_number<std::size_t>(f[9], "evals", line_no);
    return r;
}

/// Reads a records file. A trailing line without a newline (an interrupted
/// write) is ignored.
inline std::vector<TrialRecord> read_records(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw HarnessError("cannot open records file " + path.string());
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (const auto last = content.rfind('\n'); last == std::string::npos)
        content.clear();
    else
        content.resize(last + 1);

    std::vector<TrialRecord> out;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < content.size()) {
        const auto end = content.find('\n', start);
        std::string_view line(content.data() + start, end - start);
        ++line_no;
        start = end + 1;
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        if (line_no == 1) {
            if (line != kCsvHeader)
                throw HarnessError("records line 1: header must be exactly '" + std::string(kCsvHeader) + "'");
            continue;
        }
        if (line.empty())
            continue;
        out.push_back(parse_csv_row(line, line_no));
    }
    if (line_no == 0)
        throw HarnessError("records file " + path.string() + " has no header");
    return out;
}

// ---------------------------------------------------------------------------
// Summary

struct AlgorithmStats {
    std::string algorithm;
    std::size_t trials = 0;
    std::size_t failed = 0;
    double median_error = 0.0;
    double gm_error = 0.0;
    double mean_runtime = 0.0;
    bool operator==(const AlgorithmStats&) const = default;
};

struct ComparisonStats {
    std::string algorithm;
    std::size_t pairs = 0;
    double gmerf = 1.0;
    std::optional<double> ci_low;
    std::optional<double> ci_high;
    /// Wilcoxon p on final errors; empty when fewer than 5 non-zero differences.
    std::optional<double> p_error;
    std::optional<double> p_runtime;
    /// mean runtime(comparison) / mean runtime(quasar).
    double runtime_ratio = 1.0;
    /// Errors raised to the 1e-12 floor in this comparison.
    std::size_t floored = 0;
    bool operator==(const ComparisonStats&) const = default;
};

struct ScenarioSummary {
    std::string function;
    std::size_t dim = 0;
    std::size_t pop = 0;
    std::vector<AlgorithmStats> algorithms;
    std::vector<ComparisonStats> comparisons;
    bool operator==(const ScenarioSummary&) const = default;
};

struct GroupComparison {
    std::string algorithm;
    double gmerf_overall = 1.0;
    double runtime_ratio = 1.0;
    double paired_runtime_ratio = 1.0;
    bool operator==(const GroupComparison&) const = default;
};

/// Aggregates for one (D, N) grid cell across functions.
struct GroupSummary {
    std::size_t dim = 0;
    std::size_t pop = 0;
    std::vector<GroupComparison> comparisons;
    bool operator==(const GroupSummary&) const = default;
};

struct OverallComparison {
    std::string algorithm;
    double gmerf_overall = 1.0;
    std::optional<double> ci_low;
    std::optional<double> ci_high;
    double runtime_ratio_overall = 1.0;
    bool operator==(const OverallComparison&) const = default;
};

struct SummaryTable {
    std::string reference{kReferenceAlgorithm};
    std::vector<std::string> algorithms;
    std::vector<ScenarioSummary> scenarios;
    std::map<std::string, double> rank_sums;
    double friedman_chi_square = 0.0;
    std::optional<double> friedman_p;
    std::vector<GroupSummary> groups;
    std::vector<OverallComparison> overall;
    double error_floor = stats::kErrorFloor;
    std::size_t floored_errors = 0;
    std::size_t failed_trials = 0;
    bool operator==(const SummaryTable&) const = default;
};

namespace detail {

template <typename T>
nlohmann::json opt(const std::optional<T>& v)
{
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

template <typename T>
std::optional<T> opt_from(const nlohmann::json& j)
{
    if (j.is_null())
        return std::nullopt;
    return j.get<T>();
}

} // namespace detail

inline void to_json(nlohmann::json& j, const AlgorithmStats& s)
{
    j = {{"algorithm", s.algorithm},       {"trials", s.trials},     {"failed", s.failed},
         {"median_error", s.median_error}, {"gm_error", s.gm_error}, {"mean_runtime_sec", s.mean_runtime}};
}

inline void from_json(const nlohmann::json& j, AlgorithmStats& s)
{
    j.at("algorithm").get_to(s.algorithm);
    j.at("trials").get_to(s.trials);
    j.at("failed").get_to(s.failed);
    j.at("median_error").get_to(s.median_error);
    j.at("gm_error").get_to(s.gm_error);
    j.at("mean_runtime_sec").get_to(s.mean_runtime);
}

inline void to_json(nlohmann::json& j, const ComparisonStats& c)
{
    j = {{"algorithm", c.algorithm},
         {"pairs", c.pairs},
         {"gmerf", c.gmerf},
         {"ci95", {detail::opt(c.ci_low), detail::opt(c.ci_high)}},
         {"p_error", detail::opt(c.p_error)},
         {"p_runtime", detail::opt(c.p_runtime)},
         {"runtime_ratio", c.runtime_ratio},
         {"floored", c.floored}};
}

inline void from_json(const nlohmann::json& j, ComparisonStats& c)
{
    j.at("algorithm").get_to(c.algorithm);
    j.at("pairs").get_to(c.pairs);
    j.at("gmerf").get_to(c.gmerf);
    c.ci_low = detail::opt_from<double>(j.at("ci95").at(0));
    c.ci_high = detail::opt_from<double>(j.at("ci95").at(1));
    c.p_error = detail::opt_from<double>(j.at("p_error"));
    c.p_runtime = detail::opt_from<double>(j.at("p_runtime"));
    j.at("runtime_ratio").get_to(c.runtime_ratio);
    j.at("floored").get_to(c.floored);
}

inline void to_json(nlohmann::json& j, const ScenarioSummary& s)
{
    j = {{"function", s.function}, {"dim", s.dim}, {"pop", s.pop}, {"algorithms", s.algorithms}, {"comparisons", s.comparisons}};
}

inline void from_json(const nlohmann::json& j, ScenarioSummary& s)
{
    j.at("function").get_to(s.function);
    j.at("dim").get_to(s.dim);
    j.at("pop").get_to(s.pop);
    j.at("algorithms").get_to(s.algorithms);
    j.at("comparisons").get_to(s.comparisons);
}

inline void to_json(nlohmann::json& j, const GroupComparison& g)
{
    j = {{"algorithm", g.algorithm},
         {"gmerf_overall", g.gmerf_overall},
         {"runtime_ratio", g.runtime_ratio},
         {"paired_runtime_ratio", g.paired_runtime_ratio}};
}

inline void from_json(const nlohmann::json& j, GroupComparison& g)
{
    j.at("algorithm").get_to(g.algorithm);
    j.at("gmerf_overall").get_to(g.gmerf_overall);
    j.at("runtime_ratio").get_to(g.runtime_ratio);
    j.at("paired_runtime_ratio").get_to(g.paired_runtime_ratio);
}

inline void to_json(nlohmann::json& j, const GroupSummary& g) { j = {{"dim", g.dim}, {"pop", g.pop}, {"comparisons", g.comparisons}}; }

inline void from_json(const nlohmann::json& j, GroupSummary& g)
{
    j.at("dim").get_to(g.dim);
    j.at("pop").get_to(g.pop);
    j.at("comparisons").get_to(g.comparisons);
}

inline void to_json(nlohmann::json& j, const OverallComparison& o)
{
    j = {{"algorithm", o.algorithm},
         {"gmerf_overall", o.gmerf_overall},
         {"ci95", {detail::opt(o.ci_low), detail::opt(o.ci_high)}},
         {"runtime_ratio_overall", o.runtime_ratio_overall}};
}

inline void from_json(const nlohmann::json& j, OverallComparison& o)
{
    j.at("algorithm").get_to(o.algorithm);
    j.at("gmerf_overall").get_to(o.gmerf_overall);
    o.ci_low = detail::opt_from<double>(j.at("ci95").at(0));
    o.ci_high = detail::opt_from<double>(j.at("ci95").at(1));
    j.at("runtime_ratio_overall").get_to(o.runtime_ratio_overall);
}

inline void to_json(nlohmann::json& j, const SummaryTable& t)
{
    j = {{"reference", t.reference},
         {"algorithms", t.algorithms},
         {"scenarios", t.scenarios},
         {"friedman", {{"rank_sums", t.rank_sums}, {"chi_square", t.friedman_chi_square}, {"p_value", detail::opt(t.friedman_p)}}},
         {"groups", t.groups},
         {"overall", t.overall},
         {"error_floor", t.error_floor},
         {"floored_errors", t.floored_errors},
         {"failed_trials", t.failed_trials}};
}

inline void from_json(const nlohmann::json& j, SummaryTable& t)
{
    j.at("reference").get_to(t.reference);
    j.at("algorithms").get_to(t.algorithms);
    j.at("scenarios").get_to(t.scenarios);
    j.at("friedman").at("rank_sums").get_to(t.rank_sums);
    j.at("friedman").at("chi_square").get_to(t.friedman_chi_square);
    t.friedman_p = detail::opt_from<double>(j.at("friedman").at("p_value"));
    j.at("groups").get_to(t.groups);
    j.at("overall").get_to(t.overall);
    j.at("error_floor").get_to(t.error_floor);
    j.at("floored_errors").get_to(t.floored_errors);
    j.at("failed_trials").get_to(t.failed_trials);
}

namespace detail {

inline std::optional<double> wilcoxon_p(std::span<const double> x, std::span<const double> y)
{
    bool all_equal = true;
    for (std::size_t i = 0; i < x.size(); ++i)
        all_equal = all_equal && x[i] == y[i];
    if (all_equal)
        return 1.0;
    try {
        return stats::wilcoxon_signed_rank(x, y).p_value;
    } catch (const stats::StatsError&) {
        return std::nullopt;
    }
}

inline double mean(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

} // namespace detail

/// Builds the summary from trial records. Failed rows are counted and
/// excluded; comparisons use trials present for both algorithms.
inline SummaryTable summarize_records(const std::vector<TrialRecord>& records)
{
    using ScenarioKey = std::tuple<std::size_t, std::size_t, std::string>; // dim, pop, function
    // scenario -> algorithm -> trial -> record
    std::map<ScenarioKey, std::map<std::string, std::map<std::size_t, const TrialRecord*>>> grid;
    std::set<std::string> algo_set;
    SummaryTable table;
    for (const auto& r : records) {
        algo_set.insert(r.algorithm);
        if (r.failed()) {
            ++table.failed_trials;
            continue;
        }
        grid[{r.dim, r.pop, r.function}][r.algorithm][r.trial] = &r;
    }

    // Reference first, the rest alphabetically.
    if (algo_set.count(std::string(kReferenceAlgorithm)))
        table.algorithms.push_back(std::string(kReferenceAlgorithm));
    for (const auto& a : algo_set) {
        if (a != kReferenceAlgorithm)
            table.algorithms.push_back(a);
    }
    const bool has_reference = algo_set.count(std::string(kReferenceAlgorithm)) > 0;

    std::vector<std::vector<double>> medians;
    // group (dim, pop) -> algorithm -> per-scenario GMERFs / paired times
    struct GroupAcc {
        std::vector<double> gmerfs;
        std::vector<double> t_comp, t_ref;
        std::vector<std::string> labels;
    };
    std::map<std::pair<std::size_t, std::size_t>, std::map<std::string, GroupAcc>> group_acc;
    std::map<std::string, GroupAcc> overall_acc;

    for (const auto& [key, by_algo] : grid) {
        const auto& [dim, pop, function] = key;
        ScenarioSummary sc;
        sc.function = function;
        sc.dim = dim;
        sc.pop = pop;

        std::vector<double> row;
        bool complete = true;
        for (const auto& algo : table.algorithms) {
            AlgorithmStats as;
            as.algorithm = algo;
            const auto it = by_algo.find(algo);
            if (it == by_algo.end()) {
                complete = false;
                continue;
            }
            std::vector<double> errs, times;
            for (const auto& [trial, rec] : it->second) {
                errs.push_back(*rec->final_error);
                times.push_back(rec->runtime_seconds);
            }
            as.trials = errs.size();
            as.median_error = stats::median(errs);
            as.gm_error = stats::geometric_mean_error(errs);
            as.mean_runtime = detail::mean(times);
            row.push_back(as.median_error);
            sc.algorithms.push_back(as);
        }
        if (complete && table.algorithms.size() >= 2)
            medians.push_back(row);

        if (has_reference && by_algo.count(std::string(kReferenceAlgorithm))) {
            const auto& ref = by_algo.at(std::string(kReferenceAlgorithm));
            for (const auto& algo : table.algorithms) {
                if (algo == kReferenceAlgorithm || !by_algo.count(algo))
                    continue;
                std::vector<double> e_comp, e_ref, t_comp, t_ref;
                for (const auto& [trial, rec] : by_algo.at(algo)) {
                    const auto r = ref.find(trial);
                    if (r == ref.end())
                        continue;
                    e_comp.push_back(*rec->final_error);
                    e_ref.push_back(*r->second->final_error);
                    t_comp.push_back(rec->runtime_seconds);
                    t_ref.push_back(r->second->runtime_seconds);
                }
                if (e_comp.empty())
                    continue;
                ComparisonStats cs;
                cs.algorithm = algo;
                cs.pairs = e_comp.size();
                cs.gmerf = stats::gmerf(e_comp, e_ref);
                if (cs.pairs >= 2) {
                    const auto ci = stats::gmerf_ci(e_comp, e_ref);
                    cs.ci_low = ci.low;
                    cs.ci_high = ci.high;
                }
                cs.p_error = detail::wilcoxon_p(e_comp, e_ref);
                cs.p_runtime = detail::wilcoxon_p(t_comp, t_ref);
                cs.runtime_ratio = detail::mean(t_comp) / detail::mean(t_ref);
                cs.floored = stats::count_floored(e_comp) + stats::count_floored(e_ref);
                table.floored_errors += cs.floored;
                sc.comparisons.push_back(cs);

                const std::string label = "D=" + std::to_string(dim) + ",N=" + std::to_string(pop);
                for (auto* acc : {&group_acc[{dim, pop}][algo], &overall_acc[algo]}) {
                    acc->gmerfs.push_back(cs.gmerf);
                    acc->t_comp.insert(acc->t_comp.end(), t_comp.begin(), t_comp.end());
                    acc->t_ref.insert(acc->t_ref.end(), t_ref.begin(), t_ref.end());
                    acc->labels.insert(acc->labels.end(), t_comp.size(), label);
                }
            }
        }
        table.scenarios.push_back(std::move(sc));
    }

    if (!medians.empty()) {
        const auto fr = stats::friedman_rank_sums(medians);
        for (std::size_t k = 0; k < table.algorithms.size(); ++k)
            table.rank_sums[table.algorithms[k]] = fr.rank_sums[k];
        table.friedman_chi_square = fr.chi_square;
        table.friedman_p = fr.p_value;
    }

    for (const auto& [cell, by_algo] : group_acc) {
        GroupSummary gs;
        gs.dim = cell.first;
        gs.pop = cell.second;
        for (const auto& [algo, acc] : by_algo) {
            GroupComparison gc;
            gc.algorithm = algo;
            gc.gmerf_overall = stats::gmerf_overall(acc.gmerfs);
            const auto rr = stats::runtime_ratios(acc.t_comp, acc.t_ref, acc.labels);
            gc.runtime_ratio = rr.per_group.begin()->second;
            gc.paired_runtime_ratio = rr.paired_per_group.begin()->second;
            gs.comparisons.push_back(gc);
        }
        table.groups.push_back(std::move(gs));
    }

    for (const auto& [algo, acc] : overall_acc) {
        OverallComparison oc;
        oc.algorithm = algo;
        oc.gmerf_overall = stats::gmerf_overall(acc.gmerfs);
        if (acc.gmerfs.size() >= 2) {
            const auto ci = stats::gmerf_overall_ci(acc.gmerfs);
            oc.ci_low = ci.low;
            oc.ci_high = ci.high;
        }
        oc.runtime_ratio_overall = stats::runtime_ratios(acc.t_comp, acc.t_ref, acc.labels).overall;
        table.overall.push_back(oc);
    }
    return table;
}

/// Writes summary.json, plot_scenarios.csv (one row per scenario and
/// algorithm) and plot_cells.csv (one row per grid cell and algorithm) into
/// `out_dir`, and returns the summary.
inline SummaryTable emit_summary(const fs::path& records_csv, const fs::path& out_dir)
{
    const auto records = read_records(records_csv);
    SummaryTable table = summarize_records(records);
    fs::create_directories(out_dir);
    {
        std::ofstream js(out_dir / kSummaryFile);
        js << nlohmann::json(table).dump(2) << '\n';
    }
    {
        std::ofstream csv(out_dir / "plot_scenarios.csv");
        csv << "function,dim,pop,algo,gm_error,median_error,mean_runtime_sec\n";
        for (const auto& sc : table.scenarios)
            for (const auto& a : sc.algorithms)
                csv << sc.function << ',' << sc.dim << ',' << sc.pop << ',' << a.algorithm << ',' << format_double(a.gm_error) << ','
                    << format_double(a.median_error) << ',' << format_double(a.mean_runtime) << '\n';
    }
    {
        // Geometric mean over functions of the per-scenario GM error; arithmetic mean runtime.
        std::map<std::tuple<std::size_t, std::size_t, std::string>, std::pair<std::vector<double>, std::vector<double>>> cells;
        for (const auto& sc : table.scenarios)
            for (const auto& a : sc.algorithms) {
                auto& c = cells[{sc.dim, sc.pop, a.algorithm}];
                c.first.push_back(a.gm_error);
                c.second.push_back(a.mean_runtime);
            }
        std::ofstream csv(out_dir / "plot_cells.csv");
        csv << "dim,pop,algo,gm_error,mean_runtime_sec\n";
        for (const auto& [k, v] : cells) {
            const auto& [dim, pop, algo] = k;
            csv << dim << ',' << pop << ',' << algo << ',' << format_double(stats::geometric_mean_error(v.first)) << ','
                << format_double(detail::mean(v.second)) << '\n';
        }
    }
    return table;
}

inline SummaryTable load_summary(const fs::path& summary_json)
{
    std::ifstream in(summary_json);
    if (!in)
        throw HarnessError("cannot open summary file " + summary_json.string());
    return nlohmann::json::parse(in).get<SummaryTable>();
}

// ---------------------------------------------------------------------------
// Running

struct RunOutcome {
    SummaryTable summary;
    std::size_t executed = 0;
    std::size_t skipped = 0;
    std::size_t failed = 0;
};

inline std::size_t resolve_workers(std::size_t requested)
{
    if (requested > 0)
        return requested;
    if (const char* env = std::getenv(std::string(kWorkersEnv).c_str())) {
        std::size_t n = 0;
        const std::string_view text(env);
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), n);
        if (ec != std::errc{} || ptr != text.data() + text.size() || n == 0)
            throw ContractError(std::string(kWorkersEnv) + " must be a positive integer, got '" + std::string(text) + "'");
        return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

struct TrialJob {
    std::string algorithm;
    const bench::TestFunction* function = nullptr;
    std::size_t dim = 0;
    std::size_t pop = 0;
    std::size_t trial = 0;
};

/// Runs one trial; objective or configuration failures produce a failed record.
inline std::pair<TrialRecord, std::vector<double>> run_trial(const TrialJob& job, const ExperimentPlan& plan)
{
    TrialRecord rec;
    rec.algorithm = job.algorithm;
    rec.function = job.function->name();
    rec.dim = job.dim;
    rec.pop = job.pop;
    rec.g_max = plan.g_max;
    rec.trial = job.trial;
    rec.seed = trial_seed(plan.master_seed, job.algorithm, rec.function, job.dim, job.pop, job.trial);
    std::vector<double> trace;
    try {
        OptResult res;
        if (job.algorithm == "quasar") {
            QuasarConfig cfg;
            cfg.pop_size = job.pop;
            cfg.g_max = plan.g_max;
            cfg.seed = rec.seed;
            res = optimize(*job.function, job.function->bounds(), cfg);
        } else {
            DeConfig cfg;
            cfg.pop_size = job.pop;
            cfg.g_max = plan.g_max;
            cfg.seed = rec.seed;
            res = de_optimize(*job.function, job.function->bounds(), cfg);
        }
        rec.final_error = std::max(0.0, res.error);
        rec.runtime_seconds = std::max(res.runtime_seconds, 1e-9);
        rec.evals = res.eval_count;
        trace = std::move(res.trace);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "trial failed (%s, %s, D=%zu, N=%zu, trial %zu): %s\n", rec.algorithm.c_str(), rec.function.c_str(), rec.dim,
                     rec.pop, rec.trial, e.what());
    }
    return {std::move(rec), std::move(trace)};
}

/// Executes every (cell, function, algorithm, trial) of the plan not already
/// recorded in out_dir/records.csv, appending rows in plan order, then writes
/// the summary files.
inline RunOutcome run_plan(const ExperimentPlan& plan, const fs::path& out_dir)
{
    plan.validate();
    fs::create_directories(out_dir);
    const fs::path records_path = out_dir / kRecordsFile;

    std::set<TrialRecord::Key> done;
    if (fs::exists(records_path)) {
        // Drop any half-written trailing line before appending.
        const auto existing = read_records(records_path);
        for (const auto& r : existing)
            done.insert(r.key());
        std::string content;
        {
            std::ifstream in(records_path, std::ios::binary);
            content.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
        }
        if (!content.empty() && content.back() != '\n')
            fs::resize_file(records_path, content.rfind('\n') + 1);
    } else {
        std::ofstream out(records_path, std::ios::binary);
        out << kCsvHeader << '\n';
    }

    std::map<std::size_t, std::vector<bench::TestFunction>> suites;
    for (auto d : plan.dims) {
        auto suite = bench::make_suite(d, plan.suite_seed);
        if (!plan.functions.empty()) {
            for (const auto& name : plan.functions) {
                if (std::none_of(suite.begin(), suite.end(), [&](const auto& f) { return f.name() == name; }))
                    throw ContractError("plan: unknown function '" + name + "'");
            }
            std::erase_if(suite, [&](const auto& f) { return std::find(plan.functions.begin(), plan.functions.end(), f.name()) == plan.functions.end(); });
        }
        suites.emplace(d, std::move(suite));
    }

    RunOutcome outcome;
    std::vector<TrialJob> jobs;
    for (const auto& [dim, pop] : plan.cells())
        for (const auto& fn : suites.at(dim))
            for (const auto& algo : plan.algorithms)
                for (std::size_t t = 0; t < plan.trials; ++t) {
                    TrialJob job{algo, &fn, dim, pop, t};
                    if (done.count({algo, fn.name(), dim, pop, plan.g_max, t})) {
                        ++outcome.skipped;
                        continue;
                    }
                    jobs.push_back(job);
                }

    if (plan.write_traces)
        fs::create_directories(out_dir / "traces");

    // Workers fill result slots; this thread appends them in job order.
    std::vector<std::optional<std::pair<TrialRecord, std::vector<double>>>> slots(jobs.size());
    std::mutex mutex;
    std::condition_variable ready;
    std::atomic<std::size_t> next_job{0};
    const std::size_t workers = std::min(resolve_workers(plan.workers), std::max<std::size_t>(1, jobs.size()));
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t k = next_job++; k < jobs.size(); k = next_job++) {
                auto result = run_trial(jobs[k], plan);
                {
                    std::lock_guard lock(mutex);
                    slots[k] = std::move(result);
                }
                ready.notify_all();
            }
        });
    }

    {
        std::ofstream out(records_path, std::ios::binary | std::ios::app);
        for (std::size_t k = 0; k < jobs.size(); ++k) {
            std::pair<TrialRecord, std::vector<double>> result;
            {
                std::unique_lock lock(mutex);
                ready.wait(lock, [&] { return slots[k].has_value(); });
                result = std::move(*slots[k]);
                slots[k].reset();
            }
            auto& [rec, trace] = result;
            if (plan.write_traces && !rec.failed()) {
                rec.trace_file = "traces/" + rec.algorithm + "__" + rec.function + "__D" + std::to_string(rec.dim) + "__N"
                                 + std::to_string(rec.pop) + "__t" + std::to_string(rec.trial) + ".csv";
                std::ofstream tf(out_dir / rec.trace_file);
                tf << "generation,best_fitness\n";
                for (std::size_t g = 0; g < trace.size(); ++g)
                    tf << g << ',' << format_double(trace[g]) << '\n';
            }
            out << to_csv_row(rec) << '\n';
            out.flush();
            ++outcome.executed;
            if (rec.failed())
                ++outcome.failed;
        }
    }
    pool.clear();

    outcome.summary = emit_summary(records_path, out_dir);
    return outcome;
}

} // namespace quasar::harness
