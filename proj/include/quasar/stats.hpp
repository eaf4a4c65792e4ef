#pragma once

// Benchmark statistics: geometric-mean error ratios, Friedman rank sums,
// paired Wilcoxon signed-rank tests and runtime ratios.

#include <quasar/core.hpp>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace quasar::stats {

class StatsError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Errors below this are raised to it before any ratio is formed.
inline constexpr double kErrorFloor = 1e-12;

inline double floored(double e) { return std::max(e, kErrorFloor); }

/// Number of entries that the error floor changes.
inline std::size_t count_floored(std::span<const double> errors)
{
    return static_cast<std::size_t>(std::count_if(errors.begin(), errors.end(), [](double e) { return e < kErrorFloor; }));
}

namespace detail {

inline void require_aligned(std::span<const double> a, std::span<const double> b, std::size_t min_n, const char* what)
{
    if (a.size() != b.size())
        throw StatsError(std::string(what) + ": inputs have different lengths (" + std::to_string(a.size()) + " vs "
                         + std::to_string(b.size()) + ")");
    if (a.size() < min_n)
        throw StatsError(std::string(what) + ": need at least " + std::to_string(min_n) + " paired values, got " + std::to_string(a.size()));
}

inline void require_finite(std::span<const double> v, const char* what)
{
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i]))
            throw StatsError(std::string(what) + ": non-finite value " + std::to_string(v[i]) + " at position " + std::to_string(i));
    }
}

inline std::vector<double> log_ratios(std::span<const double> comparison, std::span<const double> quasar)
{
    std::vector<double> out(comparison.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = std::log(floored(comparison[i])) - std::log(floored(quasar[i]));
    return out;
}

/// Average ranks (1-based) of `values`; ties share the mean of their ranks.
inline std::vector<double> average_ranks(std::span<const double> values)
{
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]])
            ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k)
            ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

} // namespace detail

/// Geometric mean of comparison_i / quasar_i over paired trials, in log space.
/// Values above 1 mean QUASAR reached lower errors.
inline double gmerf(std::span<const double> comparison_errors, std::span<const double> quasar_errors)
{
    detail::require_aligned(comparison_errors, quasar_errors, 1, "gmerf");
    detail::require_finite(comparison_errors, "gmerf (comparison errors)");
    detail::require_finite(quasar_errors, "gmerf (quasar errors)");
    const auto logs = detail::log_ratios(comparison_errors, quasar_errors);
    return std::exp(std::accumulate(logs.begin(), logs.end(), 0.0) / static_cast<double>(logs.size()));
}

/// Geometric mean of per-scenario GMERF values.
inline double gmerf_overall(std::span<const double> per_scenario)
{
    if (per_scenario.empty())
        throw StatsError("gmerf_overall: no scenarios");
    double acc = 0.0;
    for (std::size_t i = 0; i < per_scenario.size(); ++i) {
        if (!(per_scenario[i] > 0.0) || !std::isfinite(per_scenario[i]))
            throw StatsError("gmerf_overall: value " + std::to_string(per_scenario[i]) + " at position " + std::to_string(i)
                             + " is not a positive finite number");
        acc += std::log(per_scenario[i]);
    }
    return std::exp(acc / static_cast<double>(per_scenario.size()));
}

struct Interval {
    double low;
    double high;
};

/// Student-t interval on the mean log-ratio, exponentiated.
inline Interval gmerf_ci(std::span<const double> comparison_errors, std::span<const double> quasar_errors, double level = 0.95)
{
    detail::require_aligned(comparison_errors, quasar_errors, 2, "gmerf_ci");
    detail::require_finite(comparison_errors, "gmerf_ci (comparison errors)");
    detail::require_finite(quasar_errors, "gmerf_ci (quasar errors)");
    if (!(level > 0.0 && level < 1.0))
        throw StatsError("gmerf_ci: level must lie in (0, 1)");
    const auto logs = detail::log_ratios(comparison_errors, quasar_errors);
    const double n = static_cast<double>(logs.size());
    const double mean = std::accumulate(logs.begin(), logs.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : logs)
        ss += (v - mean) * (v - mean);
    const double se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    const boost::math::students_t t(n - 1.0);
    const double q = boost::math::quantile(t, 0.5 + 0.5 * level);
    return {std::exp(mean - q * se), std::exp(mean + q * se)};
}

/// Student-t interval on the mean log-GMERF across scenarios, exponentiated.
inline Interval gmerf_overall_ci(std::span<const double> per_scenario, double level = 0.95)
{
    if (per_scenario.size() < 2)
        throw StatsError("gmerf_overall_ci: need at least two scenarios");
    std::vector<double> logs(per_scenario.size());
    for (std::size_t i = 0; i < logs.size(); ++i) {
        if (!(per_scenario[i] > 0.0) || !std::isfinite(per_scenario[i]))
            throw StatsError("gmerf_overall_ci: value at position " + std::to_string(i) + " is not a positive finite number");
        logs[i] = std::log(per_scenario[i]);
    }
    const double n = static_cast<double>(logs.size());
    const double mean = std::accumulate(logs.begin(), logs.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : logs)
        ss += (v - mean) * (v - mean);
    const double se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    const double q = boost::math::quantile(boost::math::students_t(n - 1.0), 0.5 + 0.5 * level);
    return {std::exp(mean - q * se), std::exp(mean + q * se)};
}

struct FriedmanResult {
    /// Sum over scenarios of each algorithm's rank (1 = lowest median error).
    std::vector<double> rank_sums;
    double chi_square = 0.0;
    double p_value = 1.0;
};

/// Friedman test on a scenario x algorithm matrix of median errors.
/// `median_errors[s][a]` is algorithm a's median error in scenario s.
inline FriedmanResult friedman_rank_sums(const std::vector<std::vector<double>>& median_errors)
{
    if (median_errors.empty())
        throw StatsError("friedman_rank_sums: need at least one scenario");
    const std::size_t a = median_errors.front().size();
    if (a < 2)
        throw StatsError("friedman_rank_sums: need at least two algorithms");
    FriedmanResult res;
    res.rank_sums.assign(a, 0.0);
    double tie_term = 0.0;
    for (std::size_t s = 0; s < median_errors.size(); ++s) {
        const auto& row = median_errors[s];
        if (row.size() != a)
            throw StatsError("friedman_rank_sums: scenario " + std::to_string(s) + " has " + std::to_string(row.size())
                             + " algorithms, expected " + std::to_string(a));
        for (std::size_t k = 0; k < a; ++k) {
            if (std::isnan(row[k]))
                throw StatsError("friedman_rank_sums: NaN median for algorithm " + std::to_string(k) + " in scenario " + std::to_string(s));
        }
        const auto ranks = detail::average_ranks(row);
        for (std::size_t k = 0; k < a; ++k)
            res.rank_sums[k] += ranks[k];
        // Tie correction: sum of (t^3 - t) over tie groups.
        std::vector<double> sorted(row);
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < a;) {
            std::size_t j = i;
            while (j + 1 < a && sorted[j + 1] == sorted[i])
                ++j;
            const double t = static_cast<double>(j - i + 1);
            tie_term += t * t * t - t;
            i = j + 1;
        }
    }
    const double s = static_cast<double>(median_errors.size());
    const double k = static_cast<double>(a);
    double sum_sq = 0.0;
    for (double r : res.rank_sums)
        sum_sq += r * r;
    const double raw = 12.0 / (s * k * (k + 1.0)) * sum_sq - 3.0 * s * (k + 1.0);
    const double correction = 1.0 - tie_term / (s * (k * k * k - k));
    if (correction <= 0.0) {
        res.chi_square = 0.0;
        res.p_value = 1.0;
        return res;
    }
    res.chi_square = std::max(0.0, raw / correction);
    res.p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared(k - 1.0), res.chi_square));
    return res;
}

struct WilcoxonResult {
    /// min(W+, W-), the conventional two-sided statistic.
    double statistic = 0.0;
    double w_plus = 0.0;
    double w_minus = 0.0;
    /// Pairs left after dropping zero differences.
    std::size_t n = 0;
    double z = 0.0;
    double p_value = 1.0;
};

inline constexpr std::size_t kWilcoxonMinPairs = 5;

/// Paired two-sided signed-rank test on x - y. Zero differences are dropped;
/// the p-value uses the normal approximation with tie and continuity corrections.
inline WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y)
{
    detail::require_aligned(x, y, 1, "wilcoxon_signed_rank");
    detail::require_finite(x, "wilcoxon_signed_rank (x)");
    detail::require_finite(y, "wilcoxon_signed_rank (y)");
    std::vector<double> diffs;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        if (d != 0.0)
            diffs.push_back(d);
    }
    if (diffs.empty())
        throw StatsError("wilcoxon_signed_rank: all differences are zero, the test is degenerate");
    if (diffs.size() < kWilcoxonMinPairs)
        throw StatsError("wilcoxon_signed_rank: need at least " + std::to_string(kWilcoxonMinPairs) + " non-zero differences, got "
                         + std::to_string(diffs.size()));

    std::vector<double> magnitudes(diffs.size());
    std::transform(diffs.begin(), diffs.end(), magnitudes.begin(), [](double d) { return std::abs(d); });
    const auto ranks = detail::average_ranks(magnitudes);

    WilcoxonResult res;
    res.n = diffs.size();
    for (std::size_t i = 0; i < diffs.size(); ++i)
        (diffs[i] > 0.0 ? res.w_plus : res.w_minus) += ranks[i];
    res.statistic = std::min(res.w_plus, res.w_minus);

    const double n = static_cast<double>(res.n);
    const double mean = n * (n + 1.0) / 4.0;
    double tie_term = 0.0;
    std::vector<double> sorted(ranks);
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i])
            ++j;
        const double t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }
    const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    const double dev = std::max(0.0, std::abs(res.w_plus - mean) - 0.5);
    res.z = var > 0.0 ? dev / std::sqrt(var) : 0.0;
    res.p_value = std::min(1.0, std::erfc(res.z / std::sqrt(2.0)));
    return res;
}

struct RuntimeRatios {
    /// Group label -> mean(comparison) / mean(quasar).
    std::map<std::string, double> per_group;
    /// Group label -> mean of paired per-trial ratios.
    std::map<std::string, double> paired_per_group;
    /// Mean over groups of the mean paired ratio.
    double overall = 0.0;
};

/// Runtime ratios comparison / QUASAR. `groups[i]` labels trial i (e.g. "D=10").
inline RuntimeRatios runtime_ratios(std::span<const double> times_comparison, std::span<const double> times_quasar,
                                    std::span<const std::string> groups)
{
    detail::require_aligned(times_comparison, times_quasar, 1, "runtime_ratios");
    if (groups.size() != times_comparison.size())
        throw StatsError("runtime_ratios: group labels are not aligned with the times");
    struct Acc {
        double sum_c = 0.0, sum_q = 0.0, sum_ratio = 0.0;
        std::size_t n = 0;
    };
    std::map<std::string, Acc> acc;
    for (std::size_t i = 0; i < times_comparison.size(); ++i) {
        const double c = times_comparison[i], q = times_quasar[i];
        if (!(c > 0.0) || !(q > 0.0) || !std::isfinite(c) || !std::isfinite(q))
            throw StatsError("runtime_ratios: non-positive or non-finite time at position " + std::to_string(i));
        auto& a = acc[groups[i]];
        a.sum_c += c;
        a.sum_q += q;
        a.sum_ratio += c / q;
        ++a.n;
    }
    RuntimeRatios out;
    double total = 0.0;
    for (const auto& [label, a] : acc) {
        out.per_group[label] = a.sum_c / a.sum_q;
        const double paired = a.sum_ratio / static_cast<double>(a.n);
        out.paired_per_group[label] = paired;
        total += paired;
    }
    out.overall = total / static_cast<double>(acc.size());
    return out;
}

inline double median(std::vector<double> values)
{
    if (values.empty())
        throw StatsError("median: empty input");
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

/// Geometric mean of floored errors.
inline double geometric_mean_error(std::span<const double> errors)
{
    if (errors.empty())
        throw StatsError("geometric_mean_error: empty input");
    double acc = 0.0;
    for (double e : errors)
        acc += std::log(floored(e));
    return std::exp(acc / static_cast<double>(errors.size()));
}

} // namespace quasar::stats
