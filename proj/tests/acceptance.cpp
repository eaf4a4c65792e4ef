// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <quasar/harness.hpp>
#include <quasar/quasar.hpp>

#include <Eigen/Cholesky>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace quasar;
namespace fs = std::filesystem;

namespace {

struct Check {
    bool ok = true;
    std::string detail;

    void expect(bool cond, const std::string& what)
    {
        if (!cond) {
            ok = false;
            if (!detail.empty())
                detail += "; ";
            detail += what;
        }
    }
};

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

double gray_radical_inverse(std::uint64_t k)
{
    std::uint64_t g = k ^ (k >> 1);
    double value = 0.0, scale = 0.5;
    for (; g; g >>= 1, scale *= 0.5)
        if (g & 1u)
            value += scale;
    return value;
}

Check reinit_decay()
{
    Check c;
    const double pf = 0.33, gf = 0.33;
    c.expect(reinit_probability(0, 100, pf, gf) == 1.0, "P(0) != 1");
    c.expect(std::abs(reinit_probability(33, 100, pf, gf) - 0.33) <= 1e-9, "P(33) off");
    const double p100 = reinit_probability(100, 100, pf, gf);
    c.expect(std::abs(p100 - 0.0348) <= 1e-4, "P(100)=" + fmt(p100));
    for (int g = 1; g <= 100; ++g)
        if (!(reinit_probability(g, 100, pf, gf) < reinit_probability(g - 1, 100, pf, gf)))
            c.expect(false, "not decreasing at g=" + std::to_string(g));
    c.detail = c.ok ? "P(100)=" + fmt(p100) : c.detail;
    return c;
}

Check crossover_table()
{
    Check c;
    c.expect(crossover_rate(0, 100, 0.33) == 1.0, "rank 0");
    c.expect(crossover_rate(33, 100, 0.33) == 66.0 / 99.0, "rank 33");
    c.expect(crossover_rate(99, 100, 0.33) == 0.33, "rank 99");
    return c;
}

Check distributions()
{
    Check c;
    const int n = 1'000'000;
    RngStream rng(20240601);
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double f = sample_f_local(rng);
        s += f;
        s2 += f * f;
    }
    const double sd_local = std::sqrt(s2 / n - (s / n) * (s / n));
    c.expect(std::abs(sd_local - 0.33) <= 0.003, "F_local sd " + fmt(sd_local));
    s = s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double f = sample_f_global(rng);
        s += f;
        s2 += f * f;
    }
    const double mean_g = s / n, var_g = s2 / n - mean_g * mean_g;
    c.expect(std::abs(mean_g) <= 0.002, "F_global mean " + fmt(mean_g));
    c.expect(std::abs(var_g - 0.3125) <= 0.01, "F_global var " + fmt(var_g));
    std::array<int, 3> counts{};
    for (int i = 0; i < n; ++i)
        ++counts[static_cast<std::size_t>(select_strategy(rng, 0.33))];
    const std::array<double, 3> expected{0.33, 0.335, 0.335};
    for (std::size_t k = 0; k < 3; ++k)
        c.expect(std::abs(counts[k] / double(n) - expected[k]) <= 0.01, "strategy " + std::to_string(k));
    if (c.ok)
        c.detail = "sd_local=" + fmt(sd_local) + " var_global=" + fmt(var_g);
    return c;
}

Check invariants()
{
    Check c;
    const auto suite = bench::make_suite(10, 2017);
    std::size_t fallbacks = 0, reinit_gens = 0;
    for (std::size_t k : {0u, 4u, 9u}) {
        const auto& fn = suite[k];
        QuasarConfig cfg;
        cfg.g_max = 100;
        RngStream rng(derive_seed(7, k));
        auto pop = evaluate_population(fn, sobol_sample(100, fn.bounds(), rng));
        double best = best_of(pop).fitness;
        for (std::size_t g = 0; g < 100; ++g) {
            const auto report = step(pop, fn, fn.bounds(), cfg, rng);
            const auto& next = report.population;
            for (std::size_t i = 0; i < next.size(); ++i) {
                const auto row = static_cast<Eigen::Index>(i);
                if (!fn.bounds().contains(next.positions.row(row).transpose()))
                    c.expect(false, fn.name() + ": out of bounds");
                if (!report.reinitialized[i] && next.fitness[row] > pop.fitness[row])
                    c.expect(false, fn.name() + ": individual worsened");
            }
            const double now = std::min(best, best_of(next).fitness);
            c.expect(now <= best, fn.name() + ": best-so-far increased");
            best = now;
            if (report.factor_path) {
                ++reinit_gens;
                fallbacks += *report.factor_path != FactorPath::Cholesky;
            }
            pop = next;
        }
    }
    if (c.ok)
        c.detail = std::to_string(reinit_gens) + " reinit generations, " + std::to_string(fallbacks) + " used a fallback factorization";
    return c;
}

Check sobol()
{
    Check c;
    SobolSequence seq(10);
    std::vector<std::vector<int>> bins(10, std::vector<int>(256, 0));
    std::vector<double> row(10);
    for (int i = 0; i < 256; ++i) {
        seq.next(row);
        for (std::size_t j = 0; j < 10; ++j)
            ++bins[j][static_cast<std::size_t>(std::floor(row[j] * 256))];
    }
    for (std::size_t j = 0; j < 10; ++j)
        for (int b : bins[j])
            if (b != 1)
                c.expect(false, "dim " + std::to_string(j) + " not stratified");
    RngStream rng(0);
    const Matrix m = sobol_sample(3, BoundsBox::uniform(1, 0, 1), rng);
    const std::array<double, 3> expected{0.5, 0.75, 0.25};
    for (Eigen::Index k = 0; k < 3; ++k) {
        c.expect(m(k, 0) == expected[static_cast<std::size_t>(k)], "point " + std::to_string(k));
        c.expect(m(k, 0) == gray_radical_inverse(static_cast<std::uint64_t>(k + 1)), "oracle " + std::to_string(k));
    }
    return c;
}

double exact_wilcoxon_p(const std::vector<double>& x, const std::vector<double>& y)
{
    const std::size_t n = x.size();
    std::vector<double> mag(n), ranks(n, 1.0);
    for (std::size_t i = 0; i < n; ++i)
        mag[i] = std::abs(x[i] - y[i]);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            ranks[i] += mag[j] < mag[i] ? 1.0 : (j != i && mag[j] == mag[i] ? 0.5 : 0.0);
    double w = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (x[i] > y[i])
            w += ranks[i];
    const double mean = static_cast<double>(n * (n + 1)) / 4.0, obs = std::abs(w - mean);
    std::size_t extreme = 0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (mask >> i & 1u)
                s += ranks[i];
        extreme += std::abs(s - mean) >= obs - 1e-12;
    }
    return static_cast<double>(extreme) / static_cast<double>(std::size_t{1} << n);
}

Check statistics()
{
    Check c;
    RngStream rng(5);
    for (int k = 0; k < 100; ++k) {
        std::vector<double> a(10), b(10);
        for (std::size_t i = 0; i < 10; ++i) {
            a[i] = std::exp(rng.uniform(-8, 8));
            b[i] = std::exp(rng.uniform(-8, 8));
        }
        if (std::abs(stats::gmerf(a, b) * stats::gmerf(b, a) - 1.0) > 1e-12)
            c.expect(false, "gmerf antisymmetry");
    }
    const auto fr = stats::friedman_rank_sums({{1, 2, 3}, {2, 1, 3}, {3, 1.5, 1.5}});
    c.expect(fr.rank_sums == std::vector<double>{6, 4.5, 7.5}, "friedman rank sums");
    const std::vector<double> x{3.1, 2.0, 5.5, 4.0, 1.2, 6.3, 2.2, 3.3}, y{2.0, 2.5, 3.0, 1.5, 1.0, 2.0, 3.9, 0.9};
    const double p = stats::wilcoxon_signed_rank(x, y).p_value, exact = exact_wilcoxon_p(x, y);
    c.expect(std::abs(p - exact) <= 0.02, "wilcoxon p " + fmt(p) + " vs exact " + fmt(exact));
    const std::vector<double> tq{1, 2, 3, 4}, tc{2, 4, 6, 8};
    const std::vector<std::string> groups{"a", "a", "b", "b"};
    const auto rr = stats::runtime_ratios(tc, tq, groups);
    c.expect(rr.overall == 2.0 && rr.per_group.at("a") == 2.0 && rr.per_group.at("b") == 2.0, "runtime ratio 2x");
    c.expect(stats::runtime_ratios(tq, tq, groups).overall == 1.0, "runtime ratio identity");
    if (c.ok)
        c.detail = "wilcoxon p=" + fmt(p) + " exact=" + fmt(exact);
    return c;
}

harness::ExperimentPlan desk_plan()
{
    auto plan = harness::ExperimentPlan::defaults(harness::PlanMode::DimensionVariant);
    plan.dims = {10, 30};
    plan.pop_sizes = {300};
    plan.g_max = 100;
    plan.trials = 10;
    return plan;
}

fs::path scratch(const std::string& name)
{
    const auto p = fs::temp_directory_path() / ("quasar_acceptance_" + name);
    fs::remove_all(p);
    return p;
}

std::vector<std::string> final_error_column(const fs::path& records)
{
    std::ifstream in(records);
    std::vector<std::string> col;
    for (std::string line; std::getline(in, line);) {
        const auto fields = harness::detail::split(line, ',');
        col.emplace_back(fields.at(0));
        col.back() += ',';
        col.back() += fields.at(1);
        col.back() += ',';
        col.back() += fields.at(7);
    }
    return col;
}

Check desk_reproduction(const fs::path& dir)
{
    Check c;
    const auto outcome = harness::run_plan(desk_plan(), dir);
    const auto& s = outcome.summary;
    c.expect(outcome.failed == 0, std::to_string(outcome.failed) + " failed trials");
    const double rq = s.rank_sums.at("quasar"), rd = s.rank_sums.at("de");
    c.expect(rq <= rd, "rank sums quasar " + fmt(rq) + " > de " + fmt(rd));
    const auto& o = s.overall.at(0);
    c.expect(o.gmerf_overall > 1.0, "overall GMERF " + fmt(o.gmerf_overall));
    c.expect(o.ci_low && *o.ci_low > 0.9, "CI low " + (o.ci_low ? fmt(*o.ci_low) : std::string("n/a")));
    std::ostringstream os;
    os << "rank sums quasar=" << rq << " de=" << rd << ", GMERF=" << fmt(o.gmerf_overall) << " CI=(" << fmt(o.ci_low.value_or(NAN)) << ", "
       << fmt(o.ci_high.value_or(NAN)) << ")";
    c.detail = c.ok ? os.str() : c.detail + " [" + os.str() + "]";
    return c;
}

Check determinism(const fs::path& first_dir)
{
    Check c;
    auto plan = desk_plan();
    plan.workers = 2;
    const auto dir = scratch("determinism");
    harness::run_plan(plan, dir);
    const auto a = final_error_column(first_dir / harness::kRecordsFile);
    const auto b = final_error_column(dir / harness::kRecordsFile);
    c.expect(a.size() == b.size() && a == b, "final_error columns differ");
    if (c.ok)
        c.detail = std::to_string(a.size() - 1) + " rows identical";
    fs::remove_all(dir);
    return c;
}

Check convergence()
{
    Check c;
    const auto suite = bench::make_suite(10, 2017);
    const auto& fn = suite[0];
    std::vector<double> q, d;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        QuasarConfig qc;
        qc.pop_size = 100;
        qc.g_max = 300;
        qc.seed = seed;
        q.push_back(optimize(fn, fn.bounds(), qc).error);
        DeConfig dc;
        dc.pop_size = 100;
        dc.g_max = 300;
        dc.seed = seed;
        d.push_back(de_optimize(fn, fn.bounds(), dc).error);
    }
    const double mq = stats::median(q), md = stats::median(d);
    c.expect(mq <= 1e-2, "QUASAR median " + fmt(mq));
    c.expect(md <= 1e-1, "DE median " + fmt(md));
    if (c.ok)
        c.detail = "median error quasar=" + fmt(mq) + " de=" + fmt(md);
    return c;
}

} // namespace

int main()
{
    int failures = 0;
    auto report = [&](int id, const char* name, const std::function<Check()>& run) {
        const auto start = std::chrono::steady_clock::now();
        Check c;
        try {
            c = run();
        } catch (const std::exception& e) {
            c.ok = false;
            c.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("[%s] criterion %d: %s (%.1fs)%s%s\n", c.ok ? "PASS" : "FAIL", id, name, secs, c.detail.empty() ? "" : " - ",
                    c.detail.c_str());
        std::fflush(stdout);
        failures += !c.ok;
    };

    report(1, "reinitialization decay curve", reinit_decay);
    report(2, "crossover rate table", crossover_table);
    report(3, "mutation factor and strategy distributions", distributions);
    report(4, "generation invariants", invariants);
    report(5, "Sobol stratification", sobol);
    report(6, "statistics oracles", statistics);
    const auto desk_dir = scratch("desk");
    report(7, "desk-scale ordering vs DE", [&] { return desk_reproduction(desk_dir); });
    report(8, "determinism across runs", [&] { return determinism(desk_dir); });
    report(9, "sphere convergence", convergence);
    fs::remove_all(desk_dir);

    std::printf("%d of 9 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
