#pragma once

// QUASAR: DE-style search with probabilistically chosen mutation strategies,
// rank-based crossover rates and a decaying, elite-covariance-guided
// reinitialization of the worst individuals.

#include <quasar/core.hpp>
#include <quasar/init.hpp>
#include <quasar/rng.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace quasar {

struct QuasarConfig {
    /// Probability of the exploitative Spooky-Best strategy.
    double entangle_rate = 0.33;
    /// Lower cap on the rank-based crossover rate.
    double cr_floor = 0.33;
    /// Reinitialization probability reached at generation g_final * g_max.
    double p_final = 0.33;
    double g_final = 0.33;
    /// Fraction of the population (worst ranks) eligible for reinitialization.
    double reinit_fraction = 0.33;
    /// Fraction of the population (best ranks) used for the elite mean/covariance.
    double elite_fraction = 0.25;
    /// Reinit noise standard deviation is (high - low) / noise_divisor per axis.
    /// May be +infinity to disable the noise.
    double noise_divisor = 20.0;
    /// Diagonal jitter added to the elite covariance.
    double epsilon_jitter = 1e-12;
    /// F_local ~ N(0, f_local_sigma^2).
    double f_local_sigma = 0.33;
    /// F_global ~ 1/2 N(+f_global_mode, f_global_sigma^2) + 1/2 N(-f_global_mode, f_global_sigma^2).
    double f_global_mode = 0.5;
    double f_global_sigma = 0.25;
    /// 0 means the default of 10 * D.
    std::size_t pop_size = 0;
    std::size_t g_max = 100;
    std::uint64_t seed = 0;
    InitMethod init = InitMethod::Sobol;

    std::size_t population_size(std::size_t dim) const { return pop_size == 0 ? 10 * dim : pop_size; }

    /// Throws ConfigError when a field is outside its documented range.
    void validate(std::size_t dim) const
    {
        auto prob = [](const char* name, double v) {
            if (!(v > 0.0 && v <= 1.0))
                throw ConfigError(std::string("QuasarConfig: ") + name + " must lie in (0, 1], got " + std::to_string(v));
        };
        prob("entangle_rate", entangle_rate);
        prob("cr_floor", cr_floor);
        prob("p_final", p_final);
        prob("g_final", g_final);
        prob("reinit_fraction", reinit_fraction);
        prob("elite_fraction", elite_fraction);
        if (!(noise_divisor > 0.0))
            throw ConfigError("QuasarConfig: noise_divisor must be positive");
        if (!(epsilon_jitter > 0.0))
            throw ConfigError("QuasarConfig: epsilon_jitter must be positive");
        if (!(f_local_sigma >= 0.0) || !(f_global_sigma >= 0.0) || !std::isfinite(f_global_mode))
            throw ConfigError("QuasarConfig: mutation factor parameters must be finite and non-negative");
        if (population_size(dim) < 5)
            throw ConfigError("QuasarConfig: pop_size must be at least 5, got " + std::to_string(population_size(dim)));
        if (g_max < 1)
            throw ConfigError("QuasarConfig: g_max must be at least 1");
    }
};

enum class MutationStrategy { SpookyBest, SpookyCurrent, SpookyRandom };

inline MutationStrategy select_strategy(RngStream& rng, double entangle_rate)
{
    const double u = rng.uniform();
    if (u < entangle_rate)
        return MutationStrategy::SpookyBest;
    return u < entangle_rate + 0.5 * (1.0 - entangle_rate) ? MutationStrategy::SpookyCurrent : MutationStrategy::SpookyRandom;
}

inline double sample_f_local(RngStream& rng, double sigma = 0.33) { return sigma * rng.normal(); }

/// Equal-weight mixture of N(+mode, sigma^2) and N(-mode, sigma^2).
inline double sample_f_global(RngStream& rng, double mode = 0.5, double sigma = 0.25)
{
    const double centre = rng.uniform() < 0.5 ? mode : -mode;
    return centre + sigma * rng.normal();
}

/// The three mutation formulas with every random input supplied by the caller.
inline Vector apply_mutation(MutationStrategy strategy, const Vector& current, const Vector& best, const Vector& random, double factor)
{
    switch (strategy) {
    case MutationStrategy::SpookyBest: return best + factor * (current - random);
    case MutationStrategy::SpookyCurrent: return current + factor * (best - random);
    case MutationStrategy::SpookyRandom: return random + factor * (current - random);
    }
    throw ContractError("apply_mutation: unknown strategy");
}

/// Uniform index in [0, n) excluding `exclude`.
inline std::size_t draw_other_index(RngStream& rng, std::size_t n, std::size_t exclude)
{
    const auto r = static_cast<std::size_t>(rng.index(n - 1));
    return r >= exclude ? r + 1 : r;
}

/// Mutant for individual i: draws the factor, then X_rand (uniform over the
/// other individuals, shared wherever the formula repeats it), then clips.
inline Vector mutate(std::size_t i, MutationStrategy strategy, const Population& pop, std::size_t best_idx, const BoundsBox& bounds,
                     RngStream& rng, const QuasarConfig& cfg = {})
{
    if (pop.size() < 3)
        throw ConfigError("mutate: population needs at least 3 individuals, has " + std::to_string(pop.size()));
    if (i >= pop.size() || best_idx >= pop.size())
        throw ContractError("mutate: index out of range");
    const double factor = strategy == MutationStrategy::SpookyBest ? sample_f_local(rng, cfg.f_local_sigma)
                                                                   : sample_f_global(rng, cfg.f_global_mode, cfg.f_global_sigma);
    const std::size_t r = draw_other_index(rng, pop.size(), i);
    return clip_to_bounds(apply_mutation(strategy, pop.position(i), pop.position(best_idx), pop.position(r), factor), bounds);
}

/// max((n - 1 - rank) / (n - 1), cr_floor) with 0-based rank.
inline double crossover_rate(std::size_t rank, std::size_t n, double cr_floor)
{
    if (n < 2 || rank >= n)
        throw ContractError("crossover_rate: need n >= 2 and rank < n");
    const double raw = static_cast<double>(n - 1 - rank) / static_cast<double>(n - 1);
    return std::max(raw, cr_floor);
}

/// u[n] = v[n] when a uniform draw in (0, 1) is <= cr, else x[n].
inline Vector binomial_crossover(const Vector& x, const Vector& v, double cr, RngStream& rng)
{
    if (x.size() != v.size())
        throw ContractError("binomial_crossover: vectors differ in length");
    Vector u = x;
    for (Eigen::Index n = 0; n < x.size(); ++n) {
        if (rng.uniform_open() <= cr)
            u[n] = v[n];
    }
    return u;
}

struct Selected {
    Vector position;
    double fitness;
};

/// The trial replaces the current vector only if strictly better.
inline Selected greedy_select(const Vector& x, double fx, const Vector& u, double fu)
{
    if (fu < fx)
        return {u, fu};
    return {x, fx};
}

/// exp(ln(p_final) / (g_final * g_max) * g): 1 at g = 0, p_final at g = g_final * g_max.
inline double reinit_probability(double g, double g_max, double p_final, double g_final)
{
    if (g < 0.0 || g > g_max)
        throw ContractError("reinit_probability: generation outside [0, g_max]");
    return std::exp(std::log(p_final) / (g_final * g_max) * g);
}

struct EliteStats {
    Vector mu;
    /// Unbiased sample covariance of the elites plus epsilon * I.
    Eigen::MatrixXd sigma;
    std::size_t m = 0;
};

inline std::size_t elite_count(std::size_t n, double elite_fraction)
{
    return std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(elite_fraction * static_cast<double>(n))));
}

inline std::size_t reinit_slice_size(std::size_t n, double reinit_fraction)
{
    return static_cast<std::size_t>(std::floor(reinit_fraction * static_cast<double>(n)));
}

/// Mean and covariance of the best M = max(2, floor(elite_fraction * N)) individuals.
inline EliteStats compute_elite_stats(const Population& pop, double elite_fraction, double epsilon)
{
    const std::size_t m = elite_count(pop.size(), elite_fraction);
    if (m > pop.size())
        throw ConfigError("compute_elite_stats: need at least 2 individuals for a covariance, have " + std::to_string(pop.size()));
    const auto order = order_by_fitness(pop.fitness);
    const auto d = static_cast<Eigen::Index>(pop.dim());

    Eigen::MatrixXd elites(static_cast<Eigen::Index>(m), d);
    for (std::size_t k = 0; k < m; ++k)
        elites.row(static_cast<Eigen::Index>(k)) = pop.positions.row(static_cast<Eigen::Index>(order[k]));

    EliteStats stats;
    stats.m = m;
    stats.mu = elites.colwise().mean().transpose();
    const Eigen::MatrixXd centred = elites.rowwise() - stats.mu.transpose();
    stats.sigma = (centred.transpose() * centred) / static_cast<double>(m - 1);
    // Symmetrize exactly so sigma(a, b) == sigma(b, a) bit for bit.
    stats.sigma = 0.5 * (stats.sigma + stats.sigma.transpose()).eval();
    stats.sigma.diagonal().array() += epsilon;
    return stats;
}

/// How the elite covariance was factorized.
enum class FactorPath { Cholesky, JitteredCholesky, Diagonal };

/// Draws y ~ N(mu, sigma) + delta, delta ~ N(0, diag(((high - low) / divisor)^2)),
/// clipped into the bounds. The covariance factor is computed once.
class ReinitSampler {
public:
    ReinitSampler(const EliteStats& stats, double epsilon) : _mu(stats.mu)
    {
        Eigen::LLT<Eigen::MatrixXd> llt(stats.sigma);
        if (llt.info() == Eigen::Success) {
            _factor = llt.matrixL();
            _path = FactorPath::Cholesky;
            return;
        }
        Eigen::MatrixXd boosted = stats.sigma;
        boosted.diagonal().array() += epsilon * 1e6;
        llt.compute(boosted);
        if (llt.info() == Eigen::Success) {
            _factor = llt.matrixL();
            _path = FactorPath::JitteredCholesky;
            return;
        }
        _factor = stats.sigma.diagonal().cwiseMax(0.0).cwiseSqrt().asDiagonal();
        _path = FactorPath::Diagonal;
    }

    FactorPath path() const noexcept { return _path; }

    Vector sample(const BoundsBox& bounds, double noise_divisor, RngStream& rng) const
    {
        const auto d = _mu.size();
        Vector z(d);
        for (Eigen::Index n = 0; n < d; ++n)
            z[n] = rng.normal();
        Vector y = _mu + _factor.triangularView<Eigen::Lower>() * z;
        for (Eigen::Index n = 0; n < d; ++n)
            y[n] += rng.normal() * (bounds.high()[n] - bounds.low()[n]) / noise_divisor;
        return clip_to_bounds(y, bounds);
    }

private:
    Vector _mu;
    Eigen::MatrixXd _factor;
    FactorPath _path = FactorPath::Cholesky;
};

inline Vector sample_reinit_position(const EliteStats& stats, const BoundsBox& bounds, RngStream& rng, double noise_divisor = 20.0,
                                     double epsilon = 1e-12)
{
    if (static_cast<std::size_t>(stats.mu.size()) != bounds.dim())
        throw ContractError("sample_reinit_position: elite mean and bounds differ in dimension");
    return ReinitSampler(stats, epsilon).sample(bounds, noise_divisor, rng);
}

/// Outcome of one generation.
struct GenerationReport {
    Population population;
    /// reinitialized[i] is true when individual i was replaced by a covariance sample.
    std::vector<bool> reinitialized;
    /// Set when at least one reinitialization happened.
    std::optional<FactorPath> factor_path;
};

/// One generation.
///
/// Order: rank the population; each of the floor(reinit_fraction * N) worst
/// individuals is independently replaced, with probability P_reinit(g), by a
/// sample around the elite mean/covariance (evaluated, no crossover, no
/// selection); every other individual goes through strategy selection,
/// mutation, rank-based binomial crossover and greedy selection. Variation
/// reads the population as it stood at the start of the generation.
template <Objective F>
GenerationReport step(const Population& pop, const F& f, const BoundsBox& bounds, const QuasarConfig& cfg, RngStream& rng)
{
    const std::size_t n = pop.size();
    if (n < 3)
        throw ConfigError("step: population needs at least 3 individuals");
    if (pop.dim() != bounds.dim())
        throw ContractError("step: population and bounds differ in dimension");

    const auto order = order_by_fitness(pop.fitness);
    std::vector<std::size_t> rank(n);
    for (std::size_t r = 0; r < n; ++r)
        rank[order[r]] = r;
    const std::size_t best_idx = order.front();

    GenerationReport report{pop, std::vector<bool>(n, false), std::nullopt};
    Population& next = report.population;

    const double p_reinit = reinit_probability(static_cast<double>(pop.generation), static_cast<double>(cfg.g_max), cfg.p_final, cfg.g_final);
    const std::size_t slice = std::min(reinit_slice_size(n, cfg.reinit_fraction), n - 1);
    std::optional<ReinitSampler> sampler;
    for (std::size_t r = n - slice; r < n; ++r) {
        if (!rng.bernoulli(p_reinit))
            continue;
        if (!sampler) {
            sampler.emplace(compute_elite_stats(pop, cfg.elite_fraction, cfg.epsilon_jitter), cfg.epsilon_jitter);
            report.factor_path = sampler->path();
        }
        const std::size_t i = order[r];
        next.positions.row(static_cast<Eigen::Index>(i)) = sampler->sample(bounds, cfg.noise_divisor, rng).transpose();
        report.reinitialized[i] = true;
    }

    // Trial vectors are built from the start-of-generation snapshot.
    Matrix trials = pop.positions;
    std::vector<bool> has_trial(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        if (report.reinitialized[i])
            continue;
        const auto strategy = select_strategy(rng, cfg.entangle_rate);
        const Vector mutant = mutate(i, strategy, pop, best_idx, bounds, rng, cfg);
        const double cr = crossover_rate(rank[i], n, cfg.cr_floor);
        trials.row(static_cast<Eigen::Index>(i)) = binomial_crossover(pop.position(i), mutant, cr, rng).transpose();
        has_trial[i] = true;
    }

    const std::size_t g = pop.generation + 1;
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        if (report.reinitialized[i]) {
            next.fitness[row] = evaluate_checked(f, row_span(next.positions, row), g, i);
            ++next.eval_count;
        } else if (has_trial[i]) {
            const double fu = evaluate_checked(f, row_span(trials, row), g, i);
            ++next.eval_count;
            if (fu < pop.fitness[row]) {
                next.positions.row(row) = trials.row(row);
                next.fitness[row] = fu;
            }
        }
    }
    next.generation = g;
    return report;
}

/// Runs exactly cfg.g_max generations from `initial` (no early stopping).
template <Objective F>
OptResult optimize_from(const F& f, const BoundsBox& bounds, const QuasarConfig& cfg, Population initial)
{
    cfg.validate(bounds.dim());
    const auto start = std::chrono::steady_clock::now();
    RngStream rng = RngStream(cfg.seed).substream(1);
    BestTracker tracker;
    tracker.observe(initial);
    Population pop = std::move(initial);
    for (std::size_t g = 0; g < cfg.g_max; ++g) {
        pop = step(pop, f, bounds, cfg, rng).population;
        tracker.observe(pop);
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return std::move(tracker).finish(f, pop.eval_count, seconds);
}

/// QUASAR on `f` over `bounds`: initial population from cfg.init (Sobol by
/// default) of size cfg.population_size(D), then exactly g_max generations.
/// cfg.g_max == 0 returns the best of the initial population.
template <Objective F>
OptResult optimize(const F& f, const BoundsBox& bounds, const QuasarConfig& cfg)
{
    if (cfg.g_max == 0) {
        QuasarConfig probe = cfg;
        probe.g_max = 1;
        probe.validate(bounds.dim());
    }
    const auto start = std::chrono::steady_clock::now();
    const std::size_t n = cfg.population_size(bounds.dim());
    RngStream init_rng = RngStream(cfg.seed).substream(0);
    Population initial = evaluate_population(f, initial_positions(cfg.init, n, bounds, init_rng));
    if (cfg.g_max == 0) {
        BestTracker tracker;
        tracker.observe(initial);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return std::move(tracker).finish(f, initial.eval_count, seconds);
    }
    OptResult result = optimize_from(f, bounds, cfg, std::move(initial));
    result.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

} // namespace quasar
