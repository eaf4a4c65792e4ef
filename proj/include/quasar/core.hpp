#pragma once

// Shared domain types: bounds, populations, results and the objective contract.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace quasar {

using Vector = Eigen::VectorXd;
/// Row-major so that each individual is a contiguous row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A caller broke a documented precondition (dimension mismatch, empty input...).
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Invalid algorithm configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The objective produced a non-finite value.
class ObjectiveError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::span<const double> as_span(const Vector& v) noexcept { return {v.data(), static_cast<std::size_t>(v.size())}; }

inline std::span<const double> row_span(const Matrix& m, Eigen::Index row) noexcept
{
    return {m.data() + row * m.cols(), static_cast<std::size_t>(m.cols())};
}

class BoundsBox {
public:
    BoundsBox(Vector low, Vector high) : _low(std::move(low)), _high(std::move(high))
    {
        if (_low.size() < 1)
            throw ContractError("BoundsBox: dimension must be at least 1");
        if (_low.size() != _high.size())
            throw ContractError("BoundsBox: low and high have different lengths");
        for (Eigen::Index n = 0; n < _low.size(); ++n) {
            if (!(_low[n] < _high[n]))
                throw ContractError("BoundsBox: low[" + std::to_string(n) + "] must be < high[" + std::to_string(n) + "]");
        }
    }

    /// The same interval [low, high] on every one of `dim` axes.
    static BoundsBox uniform(std::size_t dim, double low, double high)
    {
        const auto d = static_cast<Eigen::Index>(dim);
        return BoundsBox(Vector::Constant(d, low), Vector::Constant(d, high));
    }

    std::size_t dim() const noexcept { return static_cast<std::size_t>(_low.size()); }
    const Vector& low() const noexcept { return _low; }
    const Vector& high() const noexcept { return _high; }
    double low(std::size_t n) const { return _low[static_cast<Eigen::Index>(n)]; }
    double high(std::size_t n) const { return _high[static_cast<Eigen::Index>(n)]; }
    double width(std::size_t n) const { return high(n) - low(n); }

    template <typename Derived>
    bool contains(const Eigen::MatrixBase<Derived>& x) const
    {
        return x.size() == _low.size() && (x.array() >= _low.array()).all() && (x.array() <= _high.array()).all();
    }

    bool operator==(const BoundsBox& other) const { return _low == other._low && _high == other._high; }

private:
    Vector _low;
    Vector _high;
};

inline Vector clip_to_bounds(const Vector& y, const BoundsBox& bounds)
{
    if (static_cast<std::size_t>(y.size()) != bounds.dim())
        throw ContractError("clip_to_bounds: vector has length " + std::to_string(y.size()) + ", bounds have dimension "
                            + std::to_string(bounds.dim()));
    return y.cwiseMax(bounds.low()).cwiseMin(bounds.high());
}

/// Scales points from the unit cube into `bounds`, row by row.
inline Matrix scale_to_bounds(const Matrix& unit, const BoundsBox& bounds)
{
    if (static_cast<std::size_t>(unit.cols()) != bounds.dim())
        throw ContractError("scale_to_bounds: column count does not match bounds dimension");
    const Eigen::RowVectorXd width = (bounds.high() - bounds.low()).transpose();
    Matrix out = unit.array().rowwise() * width.array();
    out.rowwise() += bounds.low().transpose();
    return out;
}

/// Anything callable on a position and returning a fitness (lower is better).
template <typename F>
concept Objective = requires(const F& f, std::span<const double> x) {
    { f(x) } -> std::convertible_to<double>;
};

/// The objective's known global minimum value, when it publishes one through `known_optimum()`.
template <Objective F>
std::optional<double> known_optimum_of(const F& f)
{
    if constexpr (requires { { f.known_optimum() } -> std::convertible_to<std::optional<double>>; })
        return f.known_optimum();
    else
        return std::nullopt;
}

template <Objective F>
double evaluate_checked(const F& f, std::span<const double> x, std::size_t generation, std::size_t individual)
{
    const double value = static_cast<double>(f(x));
    if (!std::isfinite(value))
        throw ObjectiveError("objective returned " + std::to_string(value) + " at generation " + std::to_string(generation)
                             + ", individual " + std::to_string(individual));
    return value;
}

struct Population {
    Matrix positions;
    Vector fitness;
    std::size_t generation = 0;
    std::size_t eval_count = 0;

    std::size_t size() const noexcept { return static_cast<std::size_t>(positions.rows()); }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(positions.cols()); }
    Vector position(std::size_t i) const { return positions.row(static_cast<Eigen::Index>(i)).transpose(); }
    std::span<const double> row(std::size_t i) const { return row_span(positions, static_cast<Eigen::Index>(i)); }
};

/// Evaluates every row of `positions` into a fresh population at generation 0.
template <Objective F>
Population evaluate_population(const F& f, Matrix positions)
{
    Population pop;
    pop.fitness.resize(positions.rows());
    for (Eigen::Index i = 0; i < positions.rows(); ++i)
        pop.fitness[i] = evaluate_checked(f, row_span(positions, i), 0, static_cast<std::size_t>(i));
    pop.eval_count = static_cast<std::size_t>(positions.rows());
    pop.positions = std::move(positions);
    return pop;
}

/// Indices sorted by ascending fitness, ties by index. Throws on NaN.
inline std::vector<std::size_t> order_by_fitness(const Vector& fitness)
{
    for (Eigen::Index i = 0; i < fitness.size(); ++i) {
        if (std::isnan(fitness[i]))
            throw ContractError("fitness of individual " + std::to_string(i) + " is NaN");
    }
    std::vector<std::size_t> order(static_cast<std::size_t>(fitness.size()));
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return fitness[static_cast<Eigen::Index>(a)] < fitness[static_cast<Eigen::Index>(b)];
    });
    return order;
}

/// 0-based ranks: rank 0 is the lowest fitness, ties go to the lower index.
inline std::vector<std::size_t> rank_population(const Population& pop)
{
    const auto order = order_by_fitness(pop.fitness);
    std::vector<std::size_t> rank(order.size());
    for (std::size_t r = 0; r < order.size(); ++r)
        rank[order[r]] = r;
    return rank;
}

struct BestIndividual {
    std::size_t index;
    Vector position;
    double fitness;
};

inline BestIndividual best_of(const Population& pop)
{
    if (pop.size() == 0)
        throw ContractError("best_of: empty population");
    std::size_t best = 0;
    for (std::size_t i = 1; i < pop.size(); ++i) {
        if (pop.fitness[static_cast<Eigen::Index>(i)] < pop.fitness[static_cast<Eigen::Index>(best)])
            best = i;
    }
    return {best, pop.position(best), pop.fitness[static_cast<Eigen::Index>(best)]};
}

struct OptResult {
    Vector best_position;
    double best_fitness = 0.0;
    /// best_fitness - known optimum when the objective publishes one, else best_fitness.
    double error = 0.0;
    /// Best-so-far fitness after initialization and after each generation (g_max + 1 entries).
    std::vector<double> trace;
    double runtime_seconds = 0.0;
    std::size_t eval_count = 0;
};

/// Best-so-far tracker shared by the optimizers.
class BestTracker {
public:
    void observe(const Population& pop)
    {
        const auto best = best_of(pop);
        if (!_seen || best.fitness < _fitness) {
            _seen = true;
            _fitness = best.fitness;
            _position = best.position;
        }
        _trace.push_back(_fitness);
    }

    template <Objective F>
    OptResult finish(const F& f, std::size_t eval_count, double runtime_seconds) &&
    {
        OptResult result;
        result.best_position = std::move(_position);
        result.best_fitness = _fitness;
        const auto optimum = known_optimum_of(f);
        result.error = optimum ? _fitness - *optimum : _fitness;
        result.trace = std::move(_trace);
        result.runtime_seconds = runtime_seconds;
        result.eval_count = eval_count;
        return result;
    }

private:
    bool _seen = false;
    double _fitness = 0.0;
    Vector _position;
    std::vector<double> _trace;
};

} // namespace quasar
