#pragma once

// Shifted and rotated classical benchmark functions.
//
// Every base function is written in canonical form: non-negative, with its
// global minimum value 0 at z = 0. A suite function evaluates
//     f(x) = base(M (x - o)) + bias
// with shift o drawn in the central 80% of the bounds and M a Haar-random
// orthogonal matrix.

#include <quasar/core.hpp>
#include <quasar/rng.hpp>

#include <Eigen/QR>
#include <nlohmann/json.hpp>

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

namespace quasar::bench {

enum class BaseFunction { Sphere, BentCigar, Discus, Rosenbrock, Rastrigin, Ackley, Griewank, Levy, Zakharov, Schwefel };

inline constexpr std::array<BaseFunction, 10> kAllBaseFunctions{
    BaseFunction::Sphere,   BaseFunction::BentCigar, BaseFunction::Discus, BaseFunction::Rosenbrock, BaseFunction::Rastrigin,
    BaseFunction::Ackley,   BaseFunction::Griewank,  BaseFunction::Levy,   BaseFunction::Zakharov,   BaseFunction::Schwefel,
};

inline std::string_view name_of(BaseFunction b)
{
    switch (b) {
    case BaseFunction::Sphere: return "sphere";
    case BaseFunction::BentCigar: return "bent_cigar";
    case BaseFunction::Discus: return "discus";
    case BaseFunction::Rosenbrock: return "rosenbrock";
    case BaseFunction::Rastrigin: return "rastrigin";
    case BaseFunction::Ackley: return "ackley";
    case BaseFunction::Griewank: return "griewank";
    case BaseFunction::Levy: return "levy";
    case BaseFunction::Zakharov: return "zakharov";
    case BaseFunction::Schwefel: return "schwefel";
    }
    return "unknown";
}

namespace detail {

inline constexpr double kPi = std::numbers::pi;

// Modified Schwefel 2.26: the inner variable is offset so the optimum sits at
// z = 0, and |w| > 500 is folded back with a quadratic penalty.
inline constexpr double kSchwefelOffset = 420.9687462275036;

inline double schwefel_term(double w, std::size_t dim)
{
    const double d = static_cast<double>(dim);
    if (w > 500.0) {
        const double r = 500.0 - std::fmod(w, 500.0);
        return r * std::sin(std::sqrt(r)) - (w - 500.0) * (w - 500.0) / (10000.0 * d);
    }
    if (w < -500.0) {
        const double r = 500.0 - std::fmod(std::abs(w), 500.0);
        return -r * std::sin(std::sqrt(r)) - (w + 500.0) * (w + 500.0) / (10000.0 * d);
    }
    return w * std::sin(std::sqrt(std::abs(w)));
}

inline double schwefel_peak() { return kSchwefelOffset * std::sin(std::sqrt(kSchwefelOffset)); }

} // namespace detail

inline double sphere(std::span<const double> z)
{
    double s = 0.0;
    for (double v : z)
        s += v * v;
    return s;
}

inline double bent_cigar(std::span<const double> z)
{
    double s = z[0] * z[0];
    for (std::size_t i = 1; i < z.size(); ++i)
        s += 1e6 * z[i] * z[i];
    return s;
}

inline double discus(std::span<const double> z)
{
    double s = 1e6 * z[0] * z[0];
    for (std::size_t i = 1; i < z.size(); ++i)
        s += z[i] * z[i];
    return s;
}

/// Textbook Rosenbrock evaluated at z + 1.
inline double rosenbrock(std::span<const double> z)
{
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < z.size(); ++i) {
        const double a = z[i] + 1.0;
        const double b = z[i + 1] + 1.0;
        s += 100.0 * (a * a - b) * (a * a - b) + (a - 1.0) * (a - 1.0);
    }
    return s;
}

inline double rastrigin(std::span<const double> z)
{
    double s = 0.0;
    for (double v : z)
        s += v * v + 10.0 * (1.0 - std::cos(2.0 * detail::kPi * v));
    return s;
}

/// 20 + e - 20 exp(-0.2 sqrt(mean z^2)) - exp(mean cos(2 pi z)), arranged so
/// both halves are exactly 0 at the origin.
inline double ackley(std::span<const double> z)
{
    const double d = static_cast<double>(z.size());
    double sq = 0.0, cs = 0.0;
    for (double v : z) {
        sq += v * v;
        cs += std::cos(2.0 * detail::kPi * v);
    }
    const double first = 20.0 - 20.0 * std::exp(-0.2 * std::sqrt(sq / d));
    const double second = std::exp(1.0) - std::exp(cs / d);
    return std::max(0.0, first + second);
}

inline double griewank(std::span<const double> z)
{
    double s = 0.0, p = 1.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        s += z[i] * z[i] / 4000.0;
        p *= std::cos(z[i] / std::sqrt(static_cast<double>(i + 1)));
    }
    return s + (1.0 - p);
}

/// Levy with w = 1 + z / 4 (textbook form with x = z + 1).
inline double levy(std::span<const double> z)
{
    auto w = [&](std::size_t i) { return 1.0 + z[i] / 4.0; };
    const std::size_t d = z.size();
    const double s0 = std::sin(detail::kPi * w(0));
    double s = s0 * s0;
    for (std::size_t i = 0; i + 1 < d; ++i) {
        const double wi = w(i);
        const double t = std::sin(detail::kPi * wi + 1.0);
        s += (wi - 1.0) * (wi - 1.0) * (1.0 + 10.0 * t * t);
    }
    const double wd = w(d - 1);
    const double t = std::sin(2.0 * detail::kPi * wd);
    s += (wd - 1.0) * (wd - 1.0) * (1.0 + t * t);
    return s;
}

inline double zakharov(std::span<const double> z)
{
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        s1 += z[i] * z[i];
        s2 += 0.5 * static_cast<double>(i + 1) * z[i];
    }
    const double s2sq = s2 * s2;
    return s1 + s2sq + s2sq * s2sq;
}

inline double schwefel(std::span<const double> z)
{
    const double peak = detail::schwefel_peak();
    double s = 0.0;
    for (double v : z)
        s += peak - detail::schwefel_term(v + detail::kSchwefelOffset, z.size());
    return std::max(0.0, s);
}

inline double evaluate_base(BaseFunction b, std::span<const double> z)
{
    switch (b) {
    case BaseFunction::Sphere: return sphere(z);
    case BaseFunction::BentCigar: return bent_cigar(z);
    case BaseFunction::Discus: return discus(z);
    case BaseFunction::Rosenbrock: return rosenbrock(z);
    case BaseFunction::Rastrigin: return rastrigin(z);
    case BaseFunction::Ackley: return ackley(z);
    case BaseFunction::Griewank: return griewank(z);
    case BaseFunction::Levy: return levy(z);
    case BaseFunction::Zakharov: return zakharov(z);
    case BaseFunction::Schwefel: return schwefel(z);
    }
    throw ContractError("evaluate_base: unknown base function");
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the signs
/// of R's diagonal folded into Q.
inline Eigen::MatrixXd random_rotation(std::size_t dim, RngStream& rng)
{
    const auto d = static_cast<Eigen::Index>(dim);
    Eigen::MatrixXd g(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            g(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < d; ++j) {
        if (r(j, j) < 0.0)
            q.col(j) *= -1.0;
    }
    return q;
}

class TestFunction {
public:
    TestFunction(std::string name, BaseFunction base, BoundsBox bounds, Vector shift, Eigen::MatrixXd rotation, double bias = 0.0,
                 std::uint64_t seed = 0)
        : _name(std::move(name)), _base(base), _bounds(std::move(bounds)), _shift(std::move(shift)), _rotation(std::move(rotation)),
          _bias(bias), _seed(seed)
    {
        const auto d = static_cast<Eigen::Index>(_bounds.dim());
        if (_shift.size() != d || _rotation.rows() != d || _rotation.cols() != d)
            throw ContractError("TestFunction '" + _name + "': shift/rotation do not match the bounds dimension");
    }

    /// Plain base function: no shift, identity rotation.
    static TestFunction unrotated(BaseFunction base, std::size_t dim, double low = -100.0, double high = 100.0)
    {
        const auto d = static_cast<Eigen::Index>(dim);
        return TestFunction(std::string(name_of(base)), base, BoundsBox::uniform(dim, low, high), Vector::Zero(d),
                            Eigen::MatrixXd::Identity(d, d));
    }

    const std::string& name() const noexcept { return _name; }
    BaseFunction base() const noexcept { return _base; }
    std::size_t dim() const noexcept { return _bounds.dim(); }
    const BoundsBox& bounds() const noexcept { return _bounds; }
    const Vector& shift() const noexcept { return _shift; }
    const Eigen::MatrixXd& rotation() const noexcept { return _rotation; }
    double optimum_value() const noexcept { return _bias; }
    std::optional<double> known_optimum() const { return _bias; }
    std::uint64_t seed() const noexcept { return _seed; }

    double operator()(std::span<const double> x) const
    {
        if (x.size() != dim())
            throw ContractError("TestFunction '" + _name + "': expected " + std::to_string(dim()) + " coordinates, got "
                                + std::to_string(x.size()));
        const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
        const Eigen::VectorXd z = _rotation * (xv - _shift);
        return evaluate_base(_base, as_span(z)) + _bias;
    }

    double evaluate(const Vector& x) const { return (*this)(as_span(x)); }

private:
    std::string _name;
    BaseFunction _base;
    BoundsBox _bounds;
    Vector _shift;
    Eigen::MatrixXd _rotation;
    double _bias;
    std::uint64_t _seed;
};

/// The ten-function suite for dimension `dim`. Function k uses the
/// sub-stream k of `seed`: shift first, then the rotation.
inline std::vector<TestFunction> make_suite(std::size_t dim, std::uint64_t seed, double low = -100.0, double high = 100.0)
{
    if (dim < 2)
        throw ContractError("make_suite: dimension must be at least 2");
    std::vector<TestFunction> suite;
    const BoundsBox bounds = BoundsBox::uniform(dim, low, high);
    const auto d = static_cast<Eigen::Index>(dim);
    for (std::size_t k = 0; k < kAllBaseFunctions.size(); ++k) {
        const std::uint64_t fn_seed = derive_seed(seed, k);
        RngStream rng(fn_seed);
        Vector shift(d);
        for (Eigen::Index n = 0; n < d; ++n) {
            const double width = bounds.high()[n] - bounds.low()[n];
            shift[n] = bounds.low()[n] + width * (0.1 + 0.8 * rng.uniform());
        }
        Eigen::MatrixXd rotation = random_rotation(dim, rng);
        suite.emplace_back(std::string(name_of(kAllBaseFunctions[k])), kAllBaseFunctions[k], bounds, std::move(shift), std::move(rotation),
                           0.0, fn_seed);
    }
    return suite;
}

/// Audit manifest: one entry per function.
inline nlohmann::json suite_manifest(const std::vector<TestFunction>& suite, std::uint64_t suite_seed)
{
    nlohmann::json functions = nlohmann::json::array();
    for (const auto& fn : suite) {
        functions.push_back({{"name", fn.name()},
                             {"dim", fn.dim()},
                             {"seed", fn.seed()},
                             {"optimum_value", fn.optimum_value()},
                             {"bounds", {fn.bounds().low()[0], fn.bounds().high()[0]}}});
    }
    return {{"suite_seed", suite_seed}, {"functions", functions}};
}

} // namespace quasar::bench
