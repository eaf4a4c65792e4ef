#pragma once

// Deterministic random streams.
//
// The generator is xoshiro256** (Blackman & Vigna) seeded through splitmix64.
// Normals use the Marsaglia polar method, which needs only sqrt and log, so a
// given seed yields the same draw sequence on every IEEE-754 platform with a
// correctly rounded sqrt and a faithful log.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string_view>

namespace quasar {

inline constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept
{
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Seed of the independent sub-stream `index` of `seed`.
inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept
{
    std::uint64_t s = seed ^ (0xD1B54A32D192ED03ULL * (index + 1));
    splitmix64(s);
    return splitmix64(s);
}

/// 64-bit FNV-1a, used to fold string coordinates into seeds.
inline constexpr std::uint64_t fnv1a64(std::string_view text,
                                       std::uint64_t hash = 0xCBF29CE484222325ULL) noexcept
{
    for (char c : text) {
        hash ^= static_cast<unsigned char>(c);
        hash *= 0x100000001B3ULL;
    }
    return hash;
}

class RngStream {
public:
    using result_type = std::uint64_t;

    explicit RngStream(std::uint64_t seed = 0) noexcept : _seed(seed)
    {
        std::uint64_t sm = seed;
        for (auto& word : _state)
            word = splitmix64(sm);
    }

    std::uint64_t seed() const noexcept { return _seed; }

    /// Independent stream for (seed, index); does not advance this stream.
    RngStream substream(std::uint64_t index) const noexcept { return RngStream(derive_seed(_seed, index)); }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept { return next(); }

    std::uint64_t next() noexcept
    {
        const std::uint64_t result = rotl(_state[1] * 5, 7) * 9;
        const std::uint64_t t = _state[1] << 17;
        _state[2] ^= _state[0];
        _state[3] ^= _state[1];
        _state[1] ^= _state[2];
        _state[0] ^= _state[3];
        _state[2] ^= t;
        _state[3] = rotl(_state[3], 45);
        return result;
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform on the open interval (0, 1).
    double uniform_open() noexcept { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

    double uniform(double low, double high) noexcept { return low + (high - low) * uniform(); }

    /// Unbiased integer in [0, n) (Lemire's multiply-and-reject). n must be > 0.
    std::uint64_t index(std::uint64_t n) noexcept
    {
        __uint128_t m = static_cast<__uint128_t>(next()) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                m = static_cast<__uint128_t>(next()) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    /// Standard normal draw.
    double normal() noexcept
    {
        if (_has_spare) {
            _has_spare = false;
            return _spare;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double scale = std::sqrt(-2.0 * std::log(s) / s);
        _spare = v * scale;
        _has_spare = true;
        return u * scale;
    }

    double normal(double mean, double stddev) noexcept { return mean + stddev * normal(); }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

    std::uint64_t _seed;
    std::array<std::uint64_t, 4> _state{};
    double _spare = 0.0;
    bool _has_spare = false;
};

} // namespace quasar
