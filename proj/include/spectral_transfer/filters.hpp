#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "spectral_transfer/error.hpp"
#include "spectral_transfer/graph.hpp"
#include "spectral_transfer/operators.hpp"
#include "spectral_transfer/rng.hpp"

namespace spectral_transfer {

// Finite power series g(z) = sum_k a_k z^k. The infinite series of the
// theory are truncations chosen by the caller; norm and perturbation
// constants are exact for finite coefficient lists.
struct EntireFilter {
    std::vector<Complex> coeffs;  // a_0 .. a_K, trailing zeros permitted
};

// Laurent series at omega, g(z) = sum_k b_k (z - omega)^-k; b_0 = g(infinity).
struct HolFilter {
    Complex omega;
    std::vector<Complex> coeffs;  // b_0 .. b_K
};

// Continuous bivariate series g(z) = sum a_{mu,nu} (omega-z)^-mu (conj(omega)-conj(z))^-nu.
// The summation runs over all stored (mu, nu); terms with mu + nu >= 1 enter
// the semi-norm. The conjugate factor carries the exponent -nu.
struct ContFilter {
    Complex omega;
    std::map<std::pair<int, int>, Complex> coeffs;
};

// Arbitrary spectral map; applicable to normal operators only.
struct GenericFilter {
    std::function<Complex(Complex)> rule;
    std::optional<double> lipschitz_hint;  // D_g when known
};

using Filter = std::variant<GenericFilter, EntireFilter, HolFilter, ContFilter>;

// Circular integration contour, equispaced trapezoidal nodes.
struct ContourSpec {
    Complex center;
    double radius = 1.0;
    int nodes = 512;
};

// ---------------------------------------------------------------------------
// Pointwise evaluation
// ---------------------------------------------------------------------------

inline Complex evaluate(const EntireFilter& g, Complex z) {
    Complex acc(0.0, 0.0);
    for (auto it = g.coeffs.rbegin(); it != g.coeffs.rend(); ++it) acc = acc * z + *it;
    return acc;
}

inline Complex evaluate(const HolFilter& g, Complex z) {
    if (g.coeffs.empty()) return {0.0, 0.0};
    Complex acc = g.coeffs[0];
    if (g.coeffs.size() > 1) {
        const Complex w = 1.0 / (z - g.omega);
        Complex p = w;
        for (std::size_t k = 1; k < g.coeffs.size(); ++k, p *= w) acc += g.coeffs[k] * p;
    }
    return acc;
}

inline Complex evaluate(const ContFilter& g, Complex z) {
    Complex acc(0.0, 0.0);
    const Complex u = g.omega - z;
    const Complex v = std::conj(g.omega) - std::conj(z);
    for (const auto& [exps, a] : g.coeffs) {
        const auto [mu, nu] = exps;
        acc += a * std::pow(u, -static_cast<double>(mu)) * std::pow(v, -static_cast<double>(nu));
    }
    return acc;
}

inline Complex evaluate(const GenericFilter& g, Complex z) { return g.rule(z); }

inline Complex evaluate(const Filter& g, Complex z) {
    return std::visit([&](const auto& f) { return evaluate(f, z); }, g);
}

// ---------------------------------------------------------------------------
// Application to operators
// ---------------------------------------------------------------------------

namespace detail {

// Phi diag(vals) Phi^H M : the spectral calculus in the weighted inner product.
inline Matrix spectral_assemble(const Matrix& phi, const Vector& diag_vals, const RealVector& mu) {
    Matrix out = phi * diag_vals.asDiagonal() * phi.adjoint();
    for (Index j = 0; j < out.cols(); ++j) out.col(j) *= mu[j];
    return out;
}

template <typename FilterT>
Matrix apply_spectral(const FilterT& g, const DenseOperator& t, const char* who) {
    if (!is_normal(t))
        throw ConfigError(std::string(who) +
                          ": operator is not normal; use entire or holomorphic filters instead");
    const SpectrumResult spec = spectrum(t);
    if (!spec.eigenvectors)
        throw NumericalError(std::string(who) + ": eigendecomposition unavailable");
    Vector vals(spec.eigenvalues.size());
    for (Index i = 0; i < vals.size(); ++i) vals[i] = evaluate(g, spec.eigenvalues[i]);
    return spectral_assemble(*spec.eigenvectors, vals, t.weights());
}

}  // namespace detail

// g(T) = Phi diag(g(lambda_i)) Phi^* for normal T.
inline Matrix apply_generic(const GenericFilter& g, const DenseOperator& t) {
    return detail::apply_spectral(g, t, "apply_generic");
}

inline Matrix apply_cont(const ContFilter& g, const DenseOperator& t) {
    return detail::apply_spectral(g, t, "apply_cont");
}

// Horner evaluation of the finite polynomial in T.
inline Matrix apply_entire(const EntireFilter& g, const DenseOperator& t) {
    const Index n = t.dim();
    Matrix acc = Matrix::Zero(n, n);
    for (auto it = g.coeffs.rbegin(); it != g.coeffs.rend(); ++it) {
        acc = t.matrix() * acc;
        acc.diagonal().array() += *it;
    }
    return acc;
}

// g(T) = b_0 Id + sum_{k>=1} b_k S^k with S = (T - omega Id)^-1 computed once.
inline Matrix apply_holomorphic(const HolFilter& g, const DenseOperator& t) {
    const Index n = t.dim();
    Matrix acc = Matrix::Zero(n, n);
    if (g.coeffs.empty()) return acc;
    acc.diagonal().array() += g.coeffs[0];
    if (g.coeffs.size() == 1) return acc;
    const Matrix s = -resolvent(t, g.omega).matrix();  // (T - omega Id)^-1
    Matrix p = Matrix::Identity(n, n);
    for (std::size_t k = 1; k < g.coeffs.size(); ++k) {
        p = p * s;
        acc += g.coeffs[k] * p;
    }
    return acc;
}

inline Matrix apply_filter(const Filter& g, const DenseOperator& t) {
    return std::visit(
        [&](const auto& f) -> Matrix {
            using F = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<F, GenericFilter>) return apply_generic(f, t);
            else if constexpr (std::is_same_v<F, EntireFilter>) return apply_entire(f, t);
            else if constexpr (std::is_same_v<F, HolFilter>) return apply_holomorphic(f, t);
            else return apply_cont(f, t);
        },
        g);
}

// ---------------------------------------------------------------------------
// Contour quadrature
// ---------------------------------------------------------------------------

namespace detail {

inline void validate_contour(const DenseOperator& t, const ContourSpec& c, const char* who) {
    require(c.radius > 0.0, std::string(who) + ": contour radius must be positive");
    require(c.nodes >= 16, std::string(who) + ": contour needs at least 16 nodes");
    const Vector& ev = eigenvalues(t);
    for (Index i = 0; i < ev.size(); ++i) {
        const double rho = std::abs(ev[i] - c.center);
        if (rho >= c.radius)
            throw ConfigError(std::string(who) + ": contour does not enclose the spectrum (|lambda - c| = " +
                              std::to_string(rho) + " >= radius)");
        if (c.radius - rho < c.radius * 1e-6)
            throw ConfigError(std::string(who) + ": contour passes within radius*1e-6 of the spectrum");
    }
}

// Equispaced trapezoid on the circle, node-doubling until the relative change
// drops below 1e-8 or 8192 nodes are reached.
template <typename Value, typename Eval, typename NormFn>
Value contour_refine(const ContourSpec& c, Eval&& eval_at_nodes, NormFn&& norm_of) {
    int m = std::max(c.nodes, 16);
    Value current = eval_at_nodes(m);
    while (m < 8192) {
        m *= 2;
        Value next = eval_at_nodes(m);
        const double scale = std::max(1.0, norm_of(next));
        const double change = norm_of(next - current);
        current = std::move(next);
        if (change <= 1e-8 * scale) break;
    }
    return current;
}

}  // namespace detail

// (1/2 pi i) oint g(z) (z Id - T)^-1 dz over the circle; the plain
// Riesz-Dunford integral without a g(infinity) term. Serves as a
// cross-validation oracle for entire filters.
inline Matrix apply_contour(const std::function<Complex(Complex)>& g, const DenseOperator& t,
                            const ContourSpec& c) {
    detail::validate_contour(t, c, "apply_contour");
    const Index n = t.dim();
    auto eval = [&](int m) {
        Matrix acc = Matrix::Zero(n, n);
        for (int j = 0; j < m; ++j) {
            const double theta = 2.0 * M_PI * j / m;
            const Complex e(std::cos(theta), std::sin(theta));
            const Complex z = c.center + c.radius * e;
            acc += g(z) * e * resolvent(t, z).matrix();
        }
        return Matrix((c.radius / m) * acc);
    };
    return detail::contour_refine<Matrix>(c, eval, [](const Matrix& m_) { return m_.norm(); });
}

inline Matrix apply_contour(const Filter& g, const DenseOperator& t, const ContourSpec& c) {
    return apply_contour([&](Complex z) { return evaluate(g, z); }, t, c);
}

// Real line integral (1/2 pi) oint h(z) d|z| over the circle.
inline double contour_line_integral(const std::function<double(Complex)>& h, const ContourSpec& c) {
    auto eval = [&](int m) {
        double acc = 0.0;
        for (int j = 0; j < m; ++j) {
            const double theta = 2.0 * M_PI * j / m;
            acc += h(c.center + c.radius * Complex(std::cos(theta), std::sin(theta)));
        }
        return c.radius * acc / m;  // (1/2pi) * (2 pi r / m) * sum
    };
    return detail::contour_refine<double>(c, eval, [](double v) { return std::abs(v); });
}

// Contour route for resolvent powers: (omega Id - T)^-k as the Riesz-Dunford
// integral of (omega - z)^-k. The contour must enclose sigma(T) but not omega.
inline Matrix resolvent_power_via_contour(const DenseOperator& t, Complex omega, int k,
                                          const ContourSpec& c) {
    require(k >= 1, "resolvent_power_via_contour: power must be >= 1");
    require(std::abs(omega - c.center) > c.radius,
            "resolvent_power_via_contour: omega must lie outside the contour");
    return apply_contour([&](Complex z) { return std::pow(omega - z, -static_cast<double>(k)); }, t, c);
}

// ---------------------------------------------------------------------------
// Semi-norms, norm bounds, perturbation constants
// ---------------------------------------------------------------------------

// ||g||_{F^hol_{omega,C}} = sum_{k>=1} |b_k| k C^(k-1).
inline double seminorm_hol(const HolFilter& g, double C) {
    require(C > 0.0, "seminorm_hol: C must be positive");
    double acc = 0.0;
    double cp = 1.0;  // C^(k-1)
    for (std::size_t k = 1; k < g.coeffs.size(); ++k, cp *= C)
        acc += std::abs(g.coeffs[k]) * static_cast<double>(k) * cp;
    return acc;
}

// ||g||_{F^cont_{omega,C}} = sum over mu+nu >= 1 of (mu+nu) C^(mu+nu-1) |a_{mu,nu}|.
inline double seminorm_cont(const ContFilter& g, double C) {
    require(C > 0.0, "seminorm_cont: C must be positive");
    double acc = 0.0;
    for (const auto& [exps, a] : g.coeffs) {
        const int order = exps.first + exps.second;
        if (order < 1) continue;
        acc += order * std::pow(C, order - 1) * std::abs(a);
    }
    return acc;
}

// T-independent norm bound for Laurent filters under gamma_T(omega) <= C:
// sum_k |b_k| C^k. (This is the quantity the bound's proof establishes; the
// semi-norm above is exposed separately and does not dominate it.)
inline double filter_norm_bound(const HolFilter& g, double C) {
    require(C > 0.0, "filter_norm_bound: C must be positive");
    double acc = 0.0;
    double cp = 1.0;
    for (std::size_t k = 0; k < g.coeffs.size(); ++k, cp *= C) acc += std::abs(g.coeffs[k]) * cp;
    return acc;
}

// Entire filters: sum_k |a_k| ||T||^k.
inline double filter_norm_bound(const EntireFilter& g, const DenseOperator& t) {
    const double nt = operator_norm(t);
    double acc = 0.0;
    double np = 1.0;
    for (std::size_t k = 0; k < g.coeffs.size(); ++k, np *= nt) acc += std::abs(g.coeffs[k]) * np;
    return acc;
}

// Holomorphic filters with an explicit contour:
// |g(infinity)| + (1/2pi) oint |g(z)| gamma_T(z) d|z|.
inline double filter_norm_bound(const HolFilter& g, const DenseOperator& t, const ContourSpec& c) {
    detail::validate_contour(t, c, "filter_norm_bound");
    require(std::abs(g.omega - c.center) > c.radius,
            "filter_norm_bound: the filter's pole must lie outside the contour");
    const double g_inf = g.coeffs.empty() ? 0.0 : std::abs(g.coeffs[0]);
    const double integral = contour_line_integral(
        [&](Complex z) { return std::abs(evaluate(g, z)) * resolvent_profile(t, z); }, c);
    return g_inf + integral;
}

// Context for the {C}-style constants; mismatched variant/context throws.
struct FilterBoundContext {
    std::optional<double> C;
    std::optional<DenseOperator> T;
    std::optional<ContourSpec> contour;
};

inline double filter_norm_bound(const Filter& g, const FilterBoundContext& ctx) {
    if (std::holds_alternative<HolFilter>(g)) {
        const auto& f = std::get<HolFilter>(g);
        if (ctx.T && ctx.contour) return filter_norm_bound(f, *ctx.T, *ctx.contour);
        if (ctx.C) return filter_norm_bound(f, *ctx.C);
        throw ConfigError("filter_norm_bound: holomorphic filter needs {C} or {T, contour}");
    }
    if (std::holds_alternative<EntireFilter>(g)) {
        if (ctx.T) return filter_norm_bound(std::get<EntireFilter>(g), *ctx.T);
        throw ConfigError("filter_norm_bound: entire filter needs {T}");
    }
    throw ConfigError("filter_norm_bound: no T-independent bound for this filter variant");
}

// K_g for entire g under ||T||, ||T~|| <= C: sum_{k>=1} |a_k| k C^(k-1).
inline double kg_entire(const EntireFilter& g, double C) {
    require(C > 0.0, "kg_entire: C must be positive");
    double acc = 0.0;
    double cp = 1.0;
    for (std::size_t k = 1; k < g.coeffs.size(); ++k, cp *= C)
        acc += std::abs(g.coeffs[k]) * static_cast<double>(k) * cp;
    return acc;
}

// K_g for holomorphic g and an operator pair:
// (1/2pi) oint (1/|z|) gamma_T(z) gamma_T~(z) |g(z)| d|z|.
inline double kg_holomorphic_pair(const std::function<Complex(Complex)>& g, const DenseOperator& t,
                                  const DenseOperator& t2, const ContourSpec& c) {
    detail::validate_contour(t, c, "kg_holomorphic_pair");
    detail::validate_contour(t2, c, "kg_holomorphic_pair");
    if (std::abs(std::abs(c.center) - c.radius) < 1e-9)
        throw ConfigError("kg_holomorphic_pair: contour passes within 1e-9 of z = 0; the integrand carries 1/|z|");
    return contour_line_integral(
        [&](Complex z) {
            return std::abs(g(z)) * resolvent_profile(t, z) * resolvent_profile(t2, z) / std::abs(z);
        },
        c);
}

// K_g of the resolvent-closeness lemma:
// (1/2pi) oint (1 + |z-omega| gamma_T(z)) (1 + |z-omega| gamma_T~(z)) |g(z)| d|z|.
inline double kg_resolvent_closeness(const std::function<Complex(Complex)>& g, const DenseOperator& t,
                                     const DenseOperator& t2, Complex omega, const ContourSpec& c) {
    detail::validate_contour(t, c, "kg_resolvent_closeness");
    detail::validate_contour(t2, c, "kg_resolvent_closeness");
    return contour_line_integral(
        [&](Complex z) {
            const double d = std::abs(z - omega);
            return (1.0 + d * resolvent_profile(t, z)) * (1.0 + d * resolvent_profile(t2, z)) *
                   std::abs(g(z));
        },
        c);
}

// {C}-context dispatcher: entire -> Lemma-4 constant; F^hol / F^cont -> the
// respective semi-norms (the resolvent-closeness constants).
inline double kg_constant(const Filter& g, double C) {
    if (std::holds_alternative<EntireFilter>(g)) return kg_entire(std::get<EntireFilter>(g), C);
    if (std::holds_alternative<HolFilter>(g)) return seminorm_hol(std::get<HolFilter>(g), C);
    if (std::holds_alternative<ContFilter>(g)) return seminorm_cont(std::get<ContFilter>(g), C);
    throw ConfigError("kg_constant: generic filters carry a Lipschitz constant, not a K_g");
}

// ---------------------------------------------------------------------------
// Lipschitz constants for generic filters
// ---------------------------------------------------------------------------

struct LipschitzEstimate {
    double value = 0.0;
    bool estimated = false;  // true when sampled rather than supplied
};

// D_g from the hint when present; otherwise the max finite-difference slope
// over sampled pairs on the convex hull of the supplied spectral points.
inline LipschitzEstimate lipschitz_constant(const GenericFilter& g, const std::vector<Complex>& hull_points,
                                            std::uint64_t seed = 0, int pairs = 10000) {
    if (g.lipschitz_hint) return {*g.lipschitz_hint, false};
    require(!hull_points.empty(), "lipschitz_constant: need spectral points to sample");
    Rng rng(seed);
    const auto sample_hull = [&]() {
        double total = 0.0;
        Complex z(0.0, 0.0);
        std::vector<double> w(hull_points.size());
        for (auto& wi : w) {
            wi = -std::log(1.0 - rng.uniform());
            total += wi;
        }
        for (std::size_t i = 0; i < w.size(); ++i) z += (w[i] / total) * hull_points[i];
        return z;
    };
    double best = 0.0;
    for (int i = 0; i < pairs; ++i) {
        const Complex z1 = sample_hull();
        const Complex z2 = sample_hull();
        const double d = std::abs(z1 - z2);
        if (d < 1e-12) continue;
        best = std::max(best, std::abs(g.rule(z1) - g.rule(z2)) / d);
    }
    return {best, true};
}

}  // namespace spectral_transfer
