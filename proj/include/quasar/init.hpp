#pragma once

// Initial-population generators. Every generator fills the unit cube and is
// scaled into the bounds box, so points lie in [low, high) per coordinate.

#include <quasar/core.hpp>
#include <quasar/detail/joe_kuo_table.hpp>
#include <quasar/rng.hpp>

#include <array>
#include <bit>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

namespace quasar {

enum class InitMethod { Sobol, LatinHypercube, UniformRandom };

inline std::string_view to_string(InitMethod m)
{
    switch (m) {
    case InitMethod::Sobol: return "sobol";
    case InitMethod::LatinHypercube: return "lhs";
    case InitMethod::UniformRandom: return "uniform";
    }
    return "unknown";
}

class UnsupportedDimension : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Base-2 Sobol sequence in Gray-code order (Antonov-Saleev), 32-bit resolution.
///
/// Point 0 is the origin. `next()` returns points 0, 1, 2, ... in order;
/// `skip(k)` jumps to index k directly.
class SobolSequence {
public:
    static constexpr std::size_t max_dim = detail::kSobolTableDims;
    static constexpr int bits = 32;

    explicit SobolSequence(std::size_t dim) : _dim(dim), _directions(dim), _state(dim, 0u)
    {
        if (dim < 1)
            throw ContractError("SobolSequence: dimension must be at least 1");
        if (dim > max_dim)
            throw UnsupportedDimension("Sobol sequence supports at most " + std::to_string(max_dim) + " dimensions, requested "
                                       + std::to_string(dim));
        for (int k = 0; k < bits; ++k)
            _directions[0][k] = 1u << (bits - 1 - k);
        for (std::size_t j = 1; j < dim; ++j)
            _directions[j] = build_directions(detail::kJoeKuoTable[j - 1]);
    }

    std::size_t dim() const noexcept { return _dim; }
    std::uint64_t index() const noexcept { return _index; }

    /// Positions the sequence so the next call to next() returns point `k`.
    void skip(std::uint64_t k)
    {
        const std::uint64_t gray = k ^ (k >> 1);
        for (std::size_t j = 0; j < _dim; ++j) {
            std::uint32_t x = 0;
            for (int b = 0; b < bits; ++b) {
                if ((gray >> b) & 1u)
                    x ^= _directions[j][b];
            }
            _state[j] = x;
        }
        _index = k;
    }

    /// Writes the current point into `out` (length dim) and advances.
    void next(std::span<double> out)
    {
        for (std::size_t j = 0; j < _dim; ++j)
            out[j] = static_cast<double>(_state[j]) * 0x1.0p-32;
        // Gray-code update: flip the direction number at the lowest zero bit of the index.
        const int c = std::countr_one(_index);
        if (c >= bits)
            throw ContractError("SobolSequence: exhausted 2^32 points");
        for (std::size_t j = 0; j < _dim; ++j)
            _state[j] ^= _directions[j][c];
        ++_index;
    }

    /// Raw 32-bit integer coordinates of the current point (before scaling).
    std::uint32_t raw(std::size_t j) const { return _state[j]; }

private:
    using Directions = std::array<std::uint32_t, bits>;

    static Directions build_directions(const detail::DirectionEntry& e)
    {
        const std::uint32_t s = e.degree;
        std::array<std::uint32_t, bits> m{};
        for (std::uint32_t k = 0; k < s && k < static_cast<std::uint32_t>(bits); ++k)
            m[k] = e.m[k];
        for (std::uint32_t k = s; k < static_cast<std::uint32_t>(bits); ++k) {
            std::uint32_t value = m[k - s] ^ (m[k - s] << s);
            for (std::uint32_t l = 1; l < s; ++l) {
                if ((e.coeffs >> (s - 1 - l)) & 1u)
                    value ^= m[k - l] << l;
            }
            m[k] = value;
        }
        Directions v{};
        for (int k = 0; k < bits; ++k)
            v[k] = m[k] << (bits - 1 - k);
        return v;
    }

    std::size_t _dim;
    std::vector<Directions> _directions;
    std::vector<std::uint32_t> _state;
    std::uint64_t _index = 0;
};

/// `n` consecutive Sobol points starting at index 1 (the origin is skipped),
/// scaled into `bounds`. With `scramble` the points get a random digital XOR
/// shift drawn from `rng`; otherwise `rng` is not touched.
inline Matrix sobol_sample(std::size_t n, const BoundsBox& bounds, RngStream& rng, bool scramble = false)
{
    if (n < 1)
        throw ContractError("sobol_sample: n must be at least 1");
    const std::size_t d = bounds.dim();
    SobolSequence seq(d);
    seq.skip(1);

    std::vector<std::uint32_t> shift(d, 0u);
    if (scramble) {
        for (auto& s : shift)
            s = static_cast<std::uint32_t>(rng.next() >> 32);
    }

    Matrix unit(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    std::vector<double> scratch(d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j)
            unit(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = static_cast<double>(seq.raw(j) ^ shift[j]) * 0x1.0p-32;
        seq.next(scratch);
    }
    return scale_to_bounds(unit, bounds);
}

/// Latin hypercube: per dimension one point in each of n equal strata, strata
/// permuted independently per dimension, uniform jitter inside each stratum.
inline Matrix lhs_sample(std::size_t n, const BoundsBox& bounds, RngStream& rng)
{
    if (n < 1)
        throw ContractError("lhs_sample: n must be at least 1");
    const std::size_t d = bounds.dim();
    Matrix unit(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    std::vector<std::size_t> perm(n);
    for (std::size_t j = 0; j < d; ++j) {
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        for (std::size_t i = n - 1; i > 0; --i)
            std::swap(perm[i], perm[rng.index(i + 1)]);
        for (std::size_t i = 0; i < n; ++i) {
            const double u = (static_cast<double>(perm[i]) + rng.uniform()) / static_cast<double>(n);
            unit(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = u;
        }
    }
    return scale_to_bounds(unit, bounds);
}

inline Matrix uniform_sample(std::size_t n, const BoundsBox& bounds, RngStream& rng)
{
    if (n < 1)
        throw ContractError("uniform_sample: n must be at least 1");
    Matrix unit(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(bounds.dim()));
    for (Eigen::Index i = 0; i < unit.rows(); ++i)
        for (Eigen::Index j = 0; j < unit.cols(); ++j)
            unit(i, j) = rng.uniform();
    return scale_to_bounds(unit, bounds);
}

inline Matrix initial_positions(InitMethod method, std::size_t n, const BoundsBox& bounds, RngStream& rng)
{
    switch (method) {
    case InitMethod::Sobol: return sobol_sample(n, bounds, rng);
    case InitMethod::LatinHypercube: return lhs_sample(n, bounds, rng);
    case InitMethod::UniformRandom: return uniform_sample(n, bounds, rng);
    }
    throw ContractError("initial_positions: unknown init method");
}

} // namespace quasar
