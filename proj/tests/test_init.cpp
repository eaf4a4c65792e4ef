#include <quasar/init.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

using namespace quasar;

namespace {

/// Radical inverse in base 2 of the Gray code of k: the first Sobol coordinate
/// in Gray-code order, computed without direction numbers.
double gray_radical_inverse(std::uint64_t k)
{
    std::uint64_t g = k ^ (k >> 1);
    double value = 0.0, scale = 0.5;
    while (g) {
        if (g & 1u)
            value += scale;
        g >>= 1;
        scale *= 0.5;
    }
    return value;
}

std::vector<int> bin_counts(const Matrix& m, Eigen::Index col, int bins, double low, double high)
{
    std::vector<int> counts(static_cast<std::size_t>(bins), 0);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const int b = static_cast<int>(std::floor((m(i, col) - low) / (high - low) * bins));
        ++counts.at(static_cast<std::size_t>(std::min(b, bins - 1)));
    }
    return counts;
}

Matrix raw_sobol(std::size_t n, std::size_t d, std::uint64_t first_index)
{
    SobolSequence seq(d);
    seq.skip(first_index);
    Matrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    std::vector<double> row(d);
    for (std::size_t i = 0; i < n; ++i) {
        seq.next(row);
        for (std::size_t j = 0; j < d; ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
    }
    return out;
}

} // namespace

TEST(Sobol, FirstThreeOneDimensionalPoints)
{
    RngStream rng(0);
    const Matrix m = sobol_sample(3, BoundsBox::uniform(1, 0, 1), rng);
    ASSERT_EQ(m.rows(), 3);
    for (std::uint64_t k = 1; k <= 3; ++k)
        EXPECT_EQ(m(static_cast<Eigen::Index>(k - 1), 0), gray_radical_inverse(k));
    EXPECT_EQ(m(0, 0), 0.5);
    EXPECT_EQ(m(1, 0), 0.75);
    EXPECT_EQ(m(2, 0), 0.25);
}

TEST(Sobol, FirstCoordinateMatchesRadicalInverseOracle)
{
    const Matrix m = raw_sobol(4096, 1, 0);
    for (Eigen::Index k = 0; k < m.rows(); ++k)
        ASSERT_EQ(m(k, 0), gray_radical_inverse(static_cast<std::uint64_t>(k))) << "index " << k;
}

TEST(Sobol, SkipMatchesSequentialGeneration)
{
    const Matrix seq = raw_sobol(300, 7, 0);
    const Matrix jumped = raw_sobol(50, 7, 250);
    EXPECT_EQ(jumped, seq.bottomRows(50));
}

// Reference coordinates from an independent implementation (SciPy's unscrambled
// Sobol engine, same Joe-Kuo table), point indices 1..5, 100, 255, 256, 259.
TEST(Sobol, MatchesIndependentReferencePoints)
{
    const std::vector<std::pair<std::uint64_t, std::array<double, 10>>> expected{
        {1, {0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5}},
        {2, {0.75, 0.25, 0.25, 0.25, 0.75, 0.75, 0.25, 0.75, 0.75, 0.75}},
        {3, {0.25, 0.75, 0.75, 0.75, 0.25, 0.25, 0.75, 0.25, 0.25, 0.25}},
        {4, {0.375, 0.375, 0.625, 0.875, 0.375, 0.125, 0.375, 0.875, 0.875, 0.625}},
        {5, {0.875, 0.875, 0.125, 0.375, 0.875, 0.625, 0.875, 0.375, 0.375, 0.125}},
        {100, {0.4140625, 0.2578125, 0.7734375, 0.7265625, 0.8828125, 0.7421875, 0.0234375, 0.4765625, 0.6328125, 0.6953125}},
        {255, {0.00390625, 0.99609375, 0.76953125, 0.57421875, 0.61328125, 0.98046875, 0.88671875, 0.17578125, 0.44140625, 0.35546875}},
        {256, {0.005859375, 0.498046875, 0.677734375, 0.294921875, 0.779296875, 0.107421875, 0.365234375, 0.357421875, 0.287109375,
               0.408203125}},
        {259, {0.255859375, 0.748046875, 0.427734375, 0.544921875, 0.529296875, 0.357421875, 0.615234375, 0.107421875, 0.037109375,
               0.158203125}},
    };
    const Matrix m = raw_sobol(260, 10, 0);
    for (const auto& [k, row] : expected)
        for (std::size_t j = 0; j < 10; ++j)
            EXPECT_EQ(m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)), row[j]) << "index " << k << " dim " << j;
}

TEST(Sobol, First256SequencePointsAreStratifiedInEveryCoordinate)
{
    const Matrix m = raw_sobol(256, 10, 0);
    for (Eigen::Index j = 0; j < 10; ++j) {
        const auto counts = bin_counts(m, j, 256, 0.0, 1.0);
        for (int c : counts)
            EXPECT_EQ(c, 1) << "dim " << j;
    }
}

TEST(Sobol, HighDimensionalBalance)
{
    // Every one of the 1024 dimensions is a (0, m, 1)-sequence in each coordinate.
    const Matrix m = raw_sobol(64, SobolSequence::max_dim, 0);
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        const auto counts = bin_counts(m, j, 64, 0.0, 1.0);
        for (int c : counts)
            ASSERT_EQ(c, 1) << "dim " << j;
    }
}

TEST(SobolSample, SkippingTheOriginShiftsOnePointOutOfTheFirstBin)
{
    // Emitted points are sequence indices 1..256. Indices 1..255 fill bins
    // 1..255 once each; index 256 doubles up one of them, leaving bin 0 empty.
    RngStream rng(0);
    const Matrix m = sobol_sample(256, BoundsBox::uniform(2, 0, 1), rng);
    for (Eigen::Index j = 0; j < 2; ++j) {
        const auto first255 = bin_counts(m.topRows(255), j, 256, 0.0, 1.0);
        EXPECT_EQ(first255[0], 0);
        for (std::size_t b = 1; b < 256; ++b)
            EXPECT_EQ(first255[b], 1) << "dim " << j << " bin " << b;
        const auto all = bin_counts(m, j, 256, 0.0, 1.0);
        EXPECT_EQ(all[0], 0);
        EXPECT_EQ(std::count(all.begin(), all.end(), 2), 1);
        EXPECT_EQ(std::count(all.begin(), all.end(), 1), 254);
    }
}

TEST(SobolSample, SinglePointIsTheMidpoint)
{
    RngStream rng(0);
    const Matrix m = sobol_sample(1, BoundsBox::uniform(3, -5, 5), rng);
    EXPECT_EQ(m, Matrix::Zero(1, 3));
}

TEST(SobolSample, UnscrambledIsSeedIndependent)
{
    RngStream a(1), b(2);
    const auto bounds = BoundsBox::uniform(12, -3, 7);
    EXPECT_EQ(sobol_sample(100, bounds, a), sobol_sample(100, bounds, b));
}

TEST(SobolSample, ScrambledStaysInBoundsAndDependsOnSeed)
{
    RngStream a(1), b(2);
    const auto bounds = BoundsBox::uniform(5, -3, 7);
    const Matrix ma = sobol_sample(128, bounds, a, true);
    const Matrix mb = sobol_sample(128, bounds, b, true);
    EXPECT_NE(ma, mb);
    for (Eigen::Index i = 0; i < ma.rows(); ++i)
        EXPECT_TRUE(bounds.contains(ma.row(i).transpose()));
}

TEST(SobolSample, UnsupportedDimensionNamesTheLimit)
{
    RngStream rng(0);
    try {
        sobol_sample(4, BoundsBox::uniform(SobolSequence::max_dim + 1, 0, 1), rng);
        FAIL() << "expected an error";
    } catch (const UnsupportedDimension& e) {
        EXPECT_NE(std::string(e.what()).find(std::to_string(SobolSequence::max_dim)), std::string::npos) << e.what();
    }
}

TEST(SobolSample, HundredDimensionsSupported)
{
    RngStream rng(0);
    const auto bounds = BoundsBox::uniform(100, -100, 100);
    const Matrix m = sobol_sample(1000, bounds, rng);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        ASSERT_TRUE(bounds.contains(m.row(i).transpose()));
}

TEST(LatinHypercube, OnePointPerStratum)
{
    RngStream rng(4);
    const Matrix m = lhs_sample(4, BoundsBox::uniform(1, 0, 4), rng);
    const auto counts = bin_counts(m, 0, 4, 0.0, 4.0);
    EXPECT_EQ(counts, (std::vector<int>{1, 1, 1, 1}));
}

TEST(LatinHypercube, SinglePointInsideBox)
{
    RngStream rng(4);
    const auto bounds = BoundsBox::uniform(2, -1, 1);
    const Matrix m = lhs_sample(1, bounds, rng);
    EXPECT_TRUE(bounds.contains(m.row(0).transpose()));
}

TEST(LatinHypercube, StratifiedForRandomSizes)
{
    RngStream rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + rng.index(60);
        const std::size_t d = 1 + rng.index(8);
        const auto bounds = BoundsBox::uniform(d, -2.0, 3.0);
        const Matrix m = lhs_sample(n, bounds, rng);
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const auto counts = bin_counts(m, j, static_cast<int>(n), -2.0, 3.0);
            for (int c : counts)
                ASSERT_EQ(c, 1) << "n=" << n << " dim " << j;
        }
    }
}

TEST(LatinHypercube, DecilesInThreeDimensions)
{
    RngStream rng(10);
    const Matrix m = lhs_sample(10, BoundsBox::uniform(3, 0, 1), rng);
    for (Eigen::Index j = 0; j < 3; ++j)
        EXPECT_EQ(bin_counts(m, j, 10, 0.0, 1.0), std::vector<int>(10, 1));
}

TEST(UniformSample, MeanInBoundsAndDeterministic)
{
    RngStream a(77), b(77);
    const auto bounds = BoundsBox::uniform(1, 0, 1);
    const Matrix m = uniform_sample(10000, bounds, a);
    EXPECT_NEAR(m.mean(), 0.5, 0.02);
    EXPECT_GE(m.minCoeff(), 0.0);
    EXPECT_LT(m.maxCoeff(), 1.0);
    EXPECT_EQ(uniform_sample(10000, bounds, b), m);
}

TEST(InitialPositions, AllMethodsRespectBounds)
{
    const auto bounds = BoundsBox(Eigen::Vector3d(-1, 0, 10), Eigen::Vector3d(1, 5, 11));
    for (auto method : {InitMethod::Sobol, InitMethod::LatinHypercube, InitMethod::UniformRandom}) {
        RngStream rng(1);
        const Matrix m = initial_positions(method, 37, bounds, rng);
        ASSERT_EQ(m.rows(), 37);
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            EXPECT_TRUE(bounds.contains(m.row(i).transpose())) << to_string(method);
    }
}
