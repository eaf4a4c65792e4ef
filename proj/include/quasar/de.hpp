#pragma once

// Classic DE/rand/1/bin, used as the comparison baseline.

#include <quasar/core.hpp>
#include <quasar/init.hpp>
#include <quasar/rng.hpp>

#include <array>
#include <chrono>
#include <cstdint>
#include <string>

namespace quasar {

struct DeConfig {
    double f_weight = 0.5;
    double cr = 0.9;
    /// 0 means the default of 10 * D.
    std::size_t pop_size = 0;
    std::size_t g_max = 100;
    std::uint64_t seed = 0;
    InitMethod init = InitMethod::LatinHypercube;

    std::size_t population_size(std::size_t dim) const { return pop_size == 0 ? 10 * dim : pop_size; }

    void validate(std::size_t dim) const
    {
        if (!std::isfinite(f_weight))
            throw ConfigError("DeConfig: f_weight must be finite");
        if (!(cr >= 0.0 && cr <= 1.0))
            throw ConfigError("DeConfig: cr must lie in [0, 1], got " + std::to_string(cr));
        if (population_size(dim) < 4)
            throw ConfigError("DeConfig: pop_size must be at least 4, got " + std::to_string(population_size(dim)));
    }
};

/// Three distinct indices in [0, n), all different from `target`.
inline std::array<std::size_t, 3> draw_three_distinct(RngStream& rng, std::size_t n, std::size_t target)
{
    std::array<std::size_t, 3> r{};
    for (std::size_t k = 0; k < 3; ++k) {
        std::size_t candidate;
        do {
            candidate = static_cast<std::size_t>(rng.index(n));
        } while (candidate == target || (k > 0 && candidate == r[0]) || (k > 1 && candidate == r[1]));
        r[k] = candidate;
    }
    return r;
}

/// One synchronous DE/rand/1/bin generation: v = X_r1 + F (X_r2 - X_r3),
/// clipped; binomial crossover with one forced mutant coordinate; greedy selection.
template <Objective F>
Population de_step(const Population& pop, const F& f, const BoundsBox& bounds, const DeConfig& cfg, RngStream& rng)
{
    const std::size_t n = pop.size();
    const auto d = static_cast<Eigen::Index>(pop.dim());
    Matrix trials = pop.positions;
    for (std::size_t i = 0; i < n; ++i) {
        const auto [r1, r2, r3] = draw_three_distinct(rng, n, i);
        const auto row = static_cast<Eigen::Index>(i);
        const auto forced = static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(d)));
        for (Eigen::Index j = 0; j < d; ++j) {
            const bool take = rng.uniform_open() <= cfg.cr || j == forced;
            if (!take)
                continue;
            const double v = pop.positions(static_cast<Eigen::Index>(r1), j)
                             + cfg.f_weight * (pop.positions(static_cast<Eigen::Index>(r2), j) - pop.positions(static_cast<Eigen::Index>(r3), j));
            trials(row, j) = std::clamp(v, bounds.low()[j], bounds.high()[j]);
        }
    }

    Population next = pop;
    next.generation = pop.generation + 1;
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        const double fu = evaluate_checked(f, row_span(trials, row), next.generation, i);
        ++next.eval_count;
        if (fu < pop.fitness[row]) {
            next.positions.row(row) = trials.row(row);
            next.fitness[row] = fu;
        }
    }
    return next;
}

template <Objective F>
OptResult de_optimize_from(const F& f, const BoundsBox& bounds, const DeConfig& cfg, Population initial)
{
    cfg.validate(bounds.dim());
    if (initial.size() < 4)
        throw ConfigError("de_optimize: population must have at least 4 individuals");
    const auto start = std::chrono::steady_clock::now();
    RngStream rng = RngStream(cfg.seed).substream(1);
    BestTracker tracker;
    tracker.observe(initial);
    Population pop = std::move(initial);
    for (std::size_t g = 0; g < cfg.g_max; ++g) {
        pop = de_step(pop, f, bounds, cfg, rng);
        tracker.observe(pop);
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return std::move(tracker).finish(f, pop.eval_count, seconds);
}

/// DE/rand/1/bin for exactly cfg.g_max generations.
template <Objective F>
OptResult de_optimize(const F& f, const BoundsBox& bounds, const DeConfig& cfg)
{
    cfg.validate(bounds.dim());
    const auto start = std::chrono::steady_clock::now();
    RngStream init_rng = RngStream(cfg.seed).substream(0);
    Population initial = evaluate_population(f, initial_positions(cfg.init, cfg.population_size(bounds.dim()), bounds, init_rng));
    OptResult result = de_optimize_from(f, bounds, cfg, std::move(initial));
    result.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

} // namespace quasar
