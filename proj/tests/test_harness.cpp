#include <quasar/harness.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace quasar;
using namespace quasar::harness;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir()
    {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        _path = fs::temp_directory_path() / (std::string("quasar_harness_") + info->test_suite_name() + "_" + info->name());
        fs::remove_all(_path);
        fs::create_directories(_path);
    }
    ~TempDir() { fs::remove_all(_path); }
    const fs::path& path() const { return _path; }

private:
    fs::path _path;
};

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::vector<std::string> lines_of(const std::string& text)
{
    std::vector<std::string> out;
    std::istringstream is(text);
    for (std::string line; std::getline(is, line);)
        out.push_back(line);
    return out;
}

/// Drops the runtime_sec column.
std::string without_runtime(const std::string& csv)
{
    std::string out;
    for (const auto& line : lines_of(csv)) {
        auto fields = harness::detail::split(line, ',');
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i == 8)
                continue;
            out += fields[i];
            out += i + 1 < fields.size() ? "," : "\n";
        }
    }
    return out;
}

ExperimentPlan small_plan()
{
    auto plan = ExperimentPlan::defaults(PlanMode::Custom);
    plan.dims = {2};
    plan.pop_sizes = {10};
    plan.g_max = 5;
    plan.trials = 3;
    plan.functions = {"sphere"};
    plan.workers = 1;
    return plan;
}

TrialRecord record(std::string algo, std::string fn, std::size_t trial, double error, double runtime = 1.0)
{
    TrialRecord r;
    r.algorithm = std::move(algo);
    r.function = std::move(fn);
    r.dim = 10;
    r.pop = 100;
    r.g_max = 50;
    r.trial = trial;
    r.seed = trial;
    r.final_error = error;
    r.runtime_seconds = runtime;
    r.evals = 5100;
    return r;
}

} // namespace

TEST(Plan, ModesAndDefaults)
{
    EXPECT_EQ(parse_mode("dim"), PlanMode::DimensionVariant);
    EXPECT_EQ(parse_mode("sample"), PlanMode::SampleVariant);
    EXPECT_THROW(parse_mode("grid"), ContractError);
    const auto dim = ExperimentPlan::defaults(PlanMode::DimensionVariant);
    EXPECT_EQ(dim.dims, (std::vector<std::size_t>{10, 30}));
    EXPECT_EQ(dim.pop_sizes, std::vector<std::size_t>{300});
    const auto sample = ExperimentPlan::defaults(PlanMode::SampleVariant);
    EXPECT_EQ(sample.dims, std::vector<std::size_t>{30});
    EXPECT_EQ(sample.cells().size(), 2u);
    EXPECT_EQ(dim.g_max, 100u);
    EXPECT_EQ(dim.trials, 10u);
}

TEST(Plan, ValidationRejectsInconsistentGrids)
{
    auto plan = ExperimentPlan::defaults(PlanMode::DimensionVariant);
    plan.pop_sizes = {100, 300};
    EXPECT_THROW(plan.validate(), ContractError);
    plan = ExperimentPlan::defaults(PlanMode::SampleVariant);
    plan.dims = {10, 30};
    EXPECT_THROW(plan.validate(), ContractError);
    plan = ExperimentPlan::defaults(PlanMode::Custom);
    plan.algorithms = {"lshade"};
    EXPECT_THROW(plan.validate(), ContractError);
    plan = ExperimentPlan::defaults(PlanMode::Custom);
    plan.trials = 0;
    EXPECT_THROW(plan.validate(), ContractError);
}

TEST(Plan, TrialSeedsAreDistinctPerCoordinate)
{
    std::set<std::uint64_t> seeds;
    for (const char* algo : {"quasar", "de"})
        for (const char* fn : {"sphere", "levy"})
            for (std::size_t d : {10u, 30u})
                for (std::size_t t = 0; t < 10; ++t)
                    seeds.insert(trial_seed(42, algo, fn, d, 300, t));
    EXPECT_EQ(seeds.size(), 80u);
    EXPECT_EQ(trial_seed(42, "de", "levy", 10, 300, 3), trial_seed(42, "de", "levy", 10, 300, 3));
    EXPECT_NE(trial_seed(42, "de", "levy", 10, 300, 3), trial_seed(43, "de", "levy", 10, 300, 3));
}

TEST(Csv, RoundTrip)
{
    auto r = record("quasar", "rastrigin", 4, 0.1 + 0.2, 0.0123);
    const auto line = to_csv_row(r);
    EXPECT_EQ(line, "quasar,rastrigin,10,100,50,4,4,0.30000000000000004,0.0123,5100");
    const auto back = parse_csv_row(line, 2);
    EXPECT_EQ(back.key(), r.key());
    EXPECT_EQ(*back.final_error, *r.final_error);
    EXPECT_EQ(back.runtime_seconds, r.runtime_seconds);

    r.final_error.reset();
    const auto failed = to_csv_row(r);
    EXPECT_NE(failed.find(",failed,"), std::string::npos);
    EXPECT_TRUE(parse_csv_row(failed, 3).failed());
}

TEST(Csv, MalformedRowNamesTheLine)
{
    TempDir dir;
    const auto path = dir.path() / "records.csv";
    {
        std::ofstream out(path);
        out << kCsvHeader << '\n' << to_csv_row(record("de", "sphere", 0, 1.0)) << '\n' << "de,sphere,10,100,50,1,1,oops,1,5100\n";
    }
    try {
        read_records(path);
        FAIL() << "expected an error";
    } catch (const HarnessError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
    {
        std::ofstream out(path);
        out << "algo,function\n";
    }
    EXPECT_THROW(read_records(path), HarnessError);
    EXPECT_THROW(parse_csv_row("a,b,c", 7), HarnessError);
}

TEST(Csv, PartialTrailingLineIsIgnored)
{
    TempDir dir;
    const auto path = dir.path() / "records.csv";
    {
        std::ofstream out(path);
        out << kCsvHeader << '\n' << to_csv_row(record("de", "sphere", 0, 1.0)) << '\n' << "de,sphere,10,1";
    }
    EXPECT_EQ(read_records(path).size(), 1u);
}

TEST(RunPlan, CardinalityHeaderAndTraces)
{
    TempDir dir;
    auto plan = small_plan();
    plan.write_traces = true;
    const auto outcome = run_plan(plan, dir.path());
    EXPECT_EQ(outcome.executed, 6u);
    EXPECT_EQ(outcome.failed, 0u);
    const auto lines = lines_of(slurp(dir.path() / kRecordsFile));
    ASSERT_EQ(lines.size(), 7u);
    EXPECT_EQ(lines[0], kCsvHeader);
    const auto records = read_records(dir.path() / kRecordsFile);
    for (const auto& r : records) {
        EXPECT_FALSE(r.failed());
        EXPECT_EQ(r.evals, 10u * 6u);
        EXPECT_GE(*r.final_error, 0.0);
    }
    EXPECT_TRUE(fs::exists(dir.path() / "traces" / "de__sphere__D2__N10__t2.csv"));
    EXPECT_EQ(lines_of(slurp(dir.path() / "traces" / "quasar__sphere__D2__N10__t0.csv")).size(), 7u);
    EXPECT_TRUE(fs::exists(dir.path() / kSummaryFile));
    EXPECT_TRUE(fs::exists(dir.path() / "plot_scenarios.csv"));
    EXPECT_TRUE(fs::exists(dir.path() / "plot_cells.csv"));
}

TEST(RunPlan, ResumeIsIdempotent)
{
    TempDir dir;
    const auto plan = small_plan();
    run_plan(plan, dir.path());
    const auto first = slurp(dir.path() / kRecordsFile);
    const auto again = run_plan(plan, dir.path());
    EXPECT_EQ(again.executed, 0u);
    EXPECT_EQ(again.skipped, 6u);
    EXPECT_EQ(slurp(dir.path() / kRecordsFile), first);
}

TEST(RunPlan, ResumeAfterInterruptedWrite)
{
    TempDir dir;
    const auto plan = small_plan();
    run_plan(plan, dir.path());
    const auto complete = slurp(dir.path() / kRecordsFile);
    // Keep header + two rows and half of the third row.
    auto lines = lines_of(complete);
    {
        std::ofstream out(dir.path() / kRecordsFile, std::ios::binary);
        out << lines[0] << '\n' << lines[1] << '\n' << lines[2] << '\n' << lines[3].substr(0, 12);
    }
    const auto outcome = run_plan(plan, dir.path());
    EXPECT_EQ(outcome.skipped, 2u);
    EXPECT_EQ(outcome.executed, 4u);
    EXPECT_EQ(without_runtime(slurp(dir.path() / kRecordsFile)), without_runtime(complete));
}

TEST(RunPlan, WorkerCountDoesNotChangeResults)
{
    TempDir one, three;
    auto plan = small_plan();
    plan.functions = {"sphere", "rastrigin"};
    plan.workers = 1;
    run_plan(plan, one.path());
    plan.workers = 3;
    run_plan(plan, three.path());
    EXPECT_EQ(without_runtime(slurp(one.path() / kRecordsFile)), without_runtime(slurp(three.path() / kRecordsFile)));
}

TEST(RunPlan, FailedTrialsAreRecordedNotFatal)
{
    // QUASAR needs at least five individuals; DE runs with four.
    TempDir dir;
    auto plan = small_plan();
    plan.pop_sizes = {4};
    const auto outcome = run_plan(plan, dir.path());
    EXPECT_EQ(outcome.executed, 6u);
    EXPECT_EQ(outcome.failed, 3u);
    const auto records = read_records(dir.path() / kRecordsFile);
    for (const auto& r : records)
        EXPECT_EQ(r.failed(), r.algorithm == "quasar");
    EXPECT_EQ(outcome.summary.failed_trials, 3u);
}

TEST(RunPlan, UnknownFunctionIsRejected)
{
    TempDir dir;
    auto plan = small_plan();
    plan.functions = {"nope"};
    EXPECT_THROW(run_plan(plan, dir.path()), ContractError);
}

TEST(ResolveWorkers, ExplicitWins)
{
    EXPECT_EQ(resolve_workers(5), 5u);
    EXPECT_GE(resolve_workers(0), 1u);
}

TEST(Summary, HandBuiltTwoByTwo)
{
    // Two scenarios; DE's errors are 4x QUASAR's on f1 and equal on f2.
    std::vector<TrialRecord> recs;
    for (std::size_t t = 0; t < 6; ++t) {
        const double e = 1.0 + static_cast<double>(t);
        recs.push_back(record("quasar", "f1", t, e, 1.0));
        recs.push_back(record("de", "f1", t, 4.0 * e, 2.0));
        recs.push_back(record("quasar", "f2", t, e, 1.0));
        recs.push_back(record("de", "f2", t, e, 1.0));
    }
    const auto s = summarize_records(recs);
    EXPECT_EQ(s.algorithms, (std::vector<std::string>{"quasar", "de"}));
    ASSERT_EQ(s.scenarios.size(), 2u);
    const auto& f1 = s.scenarios[0];
    EXPECT_EQ(f1.function, "f1");
    ASSERT_EQ(f1.comparisons.size(), 1u);
    EXPECT_NEAR(f1.comparisons[0].gmerf, 4.0, 1e-12);
    EXPECT_NEAR(*f1.comparisons[0].ci_low, 4.0, 1e-12);
    EXPECT_LT(*f1.comparisons[0].p_error, 0.05);
    EXPECT_NEAR(f1.comparisons[0].runtime_ratio, 2.0, 1e-12);
    EXPECT_EQ(f1.algorithms[0].median_error, 3.5);
    const auto& f2 = s.scenarios[1];
    EXPECT_NEAR(f2.comparisons[0].gmerf, 1.0, 1e-12);
    EXPECT_GT(*f2.comparisons[0].p_error, 0.9);
    // Ranks: f1 (1, 2), f2 tie (1.5, 1.5).
    EXPECT_EQ(s.rank_sums.at("quasar"), 2.5);
    EXPECT_EQ(s.rank_sums.at("de"), 3.5);
    ASSERT_EQ(s.overall.size(), 1u);
    EXPECT_NEAR(s.overall[0].gmerf_overall, 2.0, 1e-12);
    EXPECT_NEAR(s.overall[0].runtime_ratio_overall, 1.5, 1e-12);
    ASSERT_EQ(s.groups.size(), 1u);
    EXPECT_NEAR(s.groups[0].comparisons[0].runtime_ratio, 1.5, 1e-12);
}

TEST(Summary, DominanceGivesRankSumEqualToScenarioCount)
{
    std::vector<TrialRecord> recs;
    for (const char* fn : {"a", "b", "c", "d"})
        for (std::size_t t = 0; t < 5; ++t) {
            recs.push_back(record("quasar", fn, t, 0.1 * static_cast<double>(t + 1)));
            recs.push_back(record("de", fn, t, 10.0 * static_cast<double>(t + 1)));
        }
    const auto s = summarize_records(recs);
    EXPECT_EQ(s.rank_sums.at("quasar"), 4.0);
    EXPECT_EQ(s.rank_sums.at("de"), 8.0);
    EXPECT_NEAR(s.overall[0].gmerf_overall, 100.0, 1e-9);
}

TEST(Summary, ZeroErrorsAreFlooredAndCounted)
{
    std::vector<TrialRecord> recs;
    for (std::size_t t = 0; t < 3; ++t) {
        recs.push_back(record("quasar", "f", t, 0.0));
        recs.push_back(record("de", "f", t, 1e-6));
    }
    const auto s = summarize_records(recs);
    EXPECT_EQ(s.floored_errors, 3u);
    EXPECT_NEAR(s.scenarios[0].comparisons[0].gmerf, 1e6, 1e-3);
    EXPECT_FALSE(s.scenarios[0].comparisons[0].p_error.has_value());
}

TEST(Summary, JsonRoundTrip)
{
    TempDir dir;
    auto plan = small_plan();
    plan.functions = {"sphere", "levy"};
    plan.trials = 5;
    const auto outcome = run_plan(plan, dir.path());
    const auto loaded = load_summary(dir.path() / kSummaryFile);
    EXPECT_EQ(loaded, outcome.summary);
    const auto rebuilt = emit_summary(dir.path() / kRecordsFile, dir.path() / "again");
    EXPECT_EQ(rebuilt, outcome.summary);
    EXPECT_EQ(slurp(dir.path() / "again" / kSummaryFile), slurp(dir.path() / kSummaryFile));
    const auto j = nlohmann::json::parse(slurp(dir.path() / kSummaryFile));
    EXPECT_EQ(j.at("error_floor"), 1e-12);
    EXPECT_TRUE(j.at("friedman").contains("rank_sums"));
}
