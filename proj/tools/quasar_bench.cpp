// quasar_bench: run benchmark plans, summarize records, print suite manifests.
//
//   quasar_bench run --mode dim --dims 10,30 --pops 300 --gmax 100 --trials 10 --seed 42 --algos quasar,de --out DIR
//   quasar_bench summarize --in DIR
//   quasar_bench suite --dim 30 --seed 2017

#include <quasar/harness.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

using namespace quasar;

void print_summary(const harness::SummaryTable& t)
{
    std::printf("scenarios: %zu, failed trials: %zu, floored errors: %zu\n", t.scenarios.size(), t.failed_trials, t.floored_errors);
    if (!t.rank_sums.empty()) {
        std::printf("Friedman rank sums:");
        for (const auto& [algo, sum] : t.rank_sums)
            std::printf("  %s=%g", algo.c_str(), sum);
        if (t.friedman_p)
            std::printf("  (chi2=%.4g, p=%.3g)", t.friedman_chi_square, *t.friedman_p);
        std::printf("\n");
    }
    for (const auto& o : t.overall) {
        std::printf("vs %s: overall GMERF %.4g", o.algorithm.c_str(), o.gmerf_overall);
        if (o.ci_low && o.ci_high)
            std::printf(" (95%% CI %.4g, %.4g)", *o.ci_low, *o.ci_high);
        std::printf(", R_t overall %.4g\n", o.runtime_ratio_overall);
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"QUASAR benchmark harness"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run a benchmark plan and write records.csv and summary files");
    std::string mode = "dim";
    std::vector<std::size_t> dims, pops;
    std::vector<std::string> algos, functions;
    std::size_t gmax = 100, trials = 10, workers = 0;
    std::uint64_t seed = 42, suite_seed = 2017;
    std::string out_dir;
    bool traces = false;
    run->add_option("--mode", mode, "Grid mode: dim, sample or custom")->check(CLI::IsMember({"dim", "sample", "custom"}));
    run->add_option("--dims", dims, "Dimensions")->delimiter(',');
    run->add_option("--pops", pops, "Population sizes")->delimiter(',');
    run->add_option("--gmax", gmax, "Generations per run");
    run->add_option("--trials", trials, "Trials per scenario");
    run->add_option("--seed", seed, "Master seed");
    run->add_option("--suite-seed", suite_seed, "Seed of the benchmark suite (shifts and rotations)");
    run->add_option("--algos", algos, "Algorithms: quasar, de")->delimiter(',');
    run->add_option("--functions", functions, "Restrict to these suite functions")->delimiter(',');
    run->add_option("--workers", workers, "Worker threads (default: $QUASAR_WORKERS or all cores)");
    run->add_flag("--traces", traces, "Write per-trial convergence traces");
    run->add_option("--out", out_dir, "Output directory")->required();

    auto* summarize = app.add_subcommand("summarize", "Rebuild summary files from DIR/records.csv");
    std::string in_dir;
    summarize->add_option("--in", in_dir, "Directory holding records.csv")->required();

    auto* suite = app.add_subcommand("suite", "Print the benchmark suite manifest as JSON");
    std::size_t suite_dim = 10;
    std::uint64_t manifest_seed = 2017;
    suite->add_option("--dim", suite_dim, "Dimension")->required();
    suite->add_option("--seed", manifest_seed, "Suite seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            auto plan = harness::ExperimentPlan::defaults(harness::parse_mode(mode));
            if (!dims.empty())
                plan.dims = dims;
            if (!pops.empty())
                plan.pop_sizes = pops;
            if (!algos.empty())
                plan.algorithms = algos;
            plan.functions = functions;
            plan.g_max = gmax;
            plan.trials = trials;
            plan.master_seed = seed;
            plan.suite_seed = suite_seed;
            plan.workers = workers;
            plan.write_traces = traces;
            const auto outcome = harness::run_plan(plan, out_dir);
            std::printf("executed %zu trials (%zu skipped as already recorded, %zu failed)\n", outcome.executed, outcome.skipped,
                        outcome.failed);
            print_summary(outcome.summary);
            return outcome.failed == 0 ? 0 : 3;
        }
        if (*summarize) {
            const std::filesystem::path dir(in_dir);
            print_summary(harness::emit_summary(dir / harness::kRecordsFile, dir));
            return 0;
        }
        if (*suite) {
            const auto fns = bench::make_suite(suite_dim, manifest_seed);
            std::cout << bench::suite_manifest(fns, manifest_seed).dump(2) << '\n';
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
