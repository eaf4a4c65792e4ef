#include <quasar/core.hpp>
#include <quasar/rng.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

using namespace quasar;

namespace {

Vector vec(std::initializer_list<double> v)
{
    Vector out(static_cast<Eigen::Index>(v.size()));
    std::copy(v.begin(), v.end(), out.data());
    return out;
}

Population with_fitness(std::initializer_list<double> f)
{
    Population p;
    p.fitness = vec(f);
    p.positions = Matrix::Zero(p.fitness.size(), 2);
    for (Eigen::Index i = 0; i < p.fitness.size(); ++i)
        p.positions(i, 0) = static_cast<double>(i);
    return p;
}

} // namespace

TEST(ClipToBounds, Saturates)
{
    EXPECT_EQ(clip_to_bounds(vec({5, -5}), BoundsBox::uniform(2, -1, 1)), vec({1, -1}));
}

TEST(ClipToBounds, IdentityInside)
{
    EXPECT_EQ(clip_to_bounds(vec({0.2, 0.3}), BoundsBox::uniform(2, -1, 1)), vec({0.2, 0.3}));
}

TEST(ClipToBounds, BoundaryClamp)
{
    EXPECT_EQ(clip_to_bounds(vec({-100.0001}), BoundsBox::uniform(1, -100, 100)), vec({-100}));
}

TEST(ClipToBounds, DimensionMismatchIsContractError)
{
    EXPECT_THROW(clip_to_bounds(vec({1, 2, 3}), BoundsBox::uniform(2, -1, 1)), ContractError);
}

TEST(ClipToBounds, IdempotentOnRandomVectors)
{
    RngStream rng(11);
    const auto bounds = BoundsBox(vec({-1, 0, 5}), vec({1, 10, 6}));
    for (int trial = 0; trial < 1000; ++trial) {
        Vector y(3);
        for (auto& v : y)
            v = rng.uniform(-50, 50);
        const Vector once = clip_to_bounds(y, bounds);
        EXPECT_EQ(clip_to_bounds(once, bounds), once);
        EXPECT_TRUE(bounds.contains(once));
    }
}

TEST(BoundsBox, RejectsEmptyOrInvertedIntervals)
{
    EXPECT_THROW(BoundsBox(Vector(0), Vector(0)), ContractError);
    EXPECT_THROW(BoundsBox(vec({0, 1}), vec({1, 1})), ContractError);
    EXPECT_THROW(BoundsBox(vec({0}), vec({1, 2})), ContractError);
}

TEST(RankPopulation, DirectSort)
{
    EXPECT_EQ(rank_population(with_fitness({3.0, 1.0, 2.0})), (std::vector<std::size_t>{2, 0, 1}));
}

TEST(RankPopulation, TieBrokenByIndex)
{
    EXPECT_EQ(rank_population(with_fitness({1.0, 1.0})), (std::vector<std::size_t>{0, 1}));
}

TEST(RankPopulation, Reversed)
{
    EXPECT_EQ(rank_population(with_fitness({5, 4, 3, 2, 1})), (std::vector<std::size_t>{4, 3, 2, 1, 0}));
}

TEST(RankPopulation, NaNNamesTheIndividual)
{
    const auto p = with_fitness({1.0, std::numeric_limits<double>::quiet_NaN(), 0.0});
    try {
        rank_population(p);
        FAIL() << "expected an error";
    } catch (const ContractError& e) {
        EXPECT_NE(std::string(e.what()).find("individual 1"), std::string::npos) << e.what();
    }
}

TEST(RankPopulation, IsPermutation)
{
    RngStream rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const auto n = static_cast<Eigen::Index>(1 + rng.index(40));
        Population p;
        p.positions = Matrix::Zero(n, 1);
        p.fitness.resize(n);
        for (auto& f : p.fitness)
            f = std::floor(rng.uniform(0, 5)); // plenty of ties
        auto ranks = rank_population(p);
        std::sort(ranks.begin(), ranks.end());
        std::vector<std::size_t> expected(static_cast<std::size_t>(n));
        std::iota(expected.begin(), expected.end(), std::size_t{0});
        EXPECT_EQ(ranks, expected);
    }
}

TEST(BestOf, Examples)
{
    EXPECT_EQ(best_of(with_fitness({2, 1, 3})).index, 1u);
    EXPECT_EQ(best_of(with_fitness({7})).index, 0u);
    EXPECT_EQ(best_of(with_fitness({1, 1})).index, 0u);
    EXPECT_EQ(best_of(with_fitness({2, 1, 3})).position[0], 1.0);
    EXPECT_EQ(best_of(with_fitness({2, 1, 3})).fitness, 1.0);
}

TEST(BestOf, EmptyPopulationIsContractError)
{
    EXPECT_THROW(best_of(Population{}), ContractError);
}

TEST(EvaluateChecked, NonFiniteNamesGenerationAndIndividual)
{
    auto bad = [](std::span<const double>) { return std::numeric_limits<double>::infinity(); };
    const Vector x = vec({1.0});
    try {
        evaluate_checked(bad, as_span(x), 4, 7);
        FAIL() << "expected an error";
    } catch (const ObjectiveError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("generation 4"), std::string::npos) << msg;
        EXPECT_NE(msg.find("individual 7"), std::string::npos) << msg;
    }
}

TEST(RngStream, EqualSeedsGiveEqualMillionDraws)
{
    RngStream a(123456789), b(123456789);
    for (int i = 0; i < 1'000'000; ++i)
        ASSERT_EQ(a.next(), b.next()) << "draw " << i;
}

TEST(RngStream, KnownFirstOutputsAreStable)
{
    // xoshiro256** reference outputs for a splitmix64-expanded seed of 0.
    RngStream a(0);
    EXPECT_EQ(a.next(), 0x99ec5f36cb75f2b4ULL);
    EXPECT_EQ(a.next(), 0xbf6e1f784956452aULL);
    EXPECT_EQ(a.next(), 0x1a5f849d4933e6e0ULL);
    EXPECT_NE(RngStream(1).next(), 0x99ec5f36cb75f2b4ULL);
}

TEST(RngStream, SubstreamsAreIndependentAndReproducible)
{
    const RngStream root(99);
    auto s0 = root.substream(0), s1 = root.substream(1), s0b = root.substream(0);
    int equal = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto a = s0.next();
        EXPECT_EQ(a, s0b.next());
        equal += a == s1.next();
    }
    EXPECT_EQ(equal, 0);
}

TEST(RngStream, UniformRanges)
{
    RngStream rng(3);
    double sum = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform();
        const double o = rng.uniform_open();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        ASSERT_GT(o, 0.0);
        ASSERT_LT(o, 1.0);
        sum += u;
    }
    EXPECT_NEAR(sum / 100000, 0.5, 0.01);
}

TEST(RngStream, IndexIsUniform)
{
    RngStream rng(8);
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i)
        ++counts[rng.index(7)];
    for (int c : counts)
        EXPECT_NEAR(c, 10000, 400);
}

TEST(RngStream, NormalMoments)
{
    RngStream rng(21);
    double s = 0.0, s2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        s += z;
        s2 += z * z;
    }
    EXPECT_NEAR(s / n, 0.0, 0.01);
    EXPECT_NEAR(s2 / n, 1.0, 0.01);
}
