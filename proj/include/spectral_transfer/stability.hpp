#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spectral_transfer/error.hpp"
#include "spectral_transfer/filters.hpp"
#include "spectral_transfer/graph.hpp"
#include "spectral_transfer/network.hpp"
#include "spectral_transfer/operators.hpp"
#include "spectral_transfer/rng.hpp"

namespace spectral_transfer {

enum class NormKind { Frobenius, Operator };

// || J T - T2 J || in the requested weighted norm; J maps the space of T
// into the space of T2.
inline double commutator_norm(const LinearMap& j, const DenseOperator& t, const DenseOperator& t2,
                              NormKind kind) {
    require(j.matrix.cols() == t.dim() && j.matrix.rows() == t2.dim(),
            "commutator_norm: shape mismatch between J and the operator pair");
    LinearMap diff(Matrix(j.matrix * t.matrix() - t2.matrix() * j.matrix), j.mu_dom, j.mu_cod);
    return kind == NormKind::Operator ? operator_norm(diff) : frobenius_norm(diff);
}

// || R2_omega J - J R_omega ||_op ; with `doubly` also the adjoint-resolvent
// version, returning the larger of the two.
inline double resolvent_closeness(const LinearMap& j, const DenseOperator& t, const DenseOperator& t2,
                                  Complex omega, bool doubly = false) {
    require(j.matrix.cols() == t.dim() && j.matrix.rows() == t2.dim(),
            "resolvent_closeness: shape mismatch");
    const Matrix r = resolvent(t, omega).matrix();
    const Matrix r2 = resolvent(t2, omega).matrix();
    const double eps =
        operator_norm(LinearMap(Matrix(r2 * j.matrix - j.matrix * r), j.mu_dom, j.mu_cod));
    if (!doubly) return eps;
    const Matrix ra = weighted_adjoint(r, t.weights());
    const Matrix r2a = weighted_adjoint(r2, t2.weights());
    const double eps_adj =
        operator_norm(LinearMap(Matrix(r2a * j.matrix - j.matrix * ra), j.mu_dom, j.mu_cod));
    return std::max(eps, eps_adj);
}

// || R2_omega^k J - J R_omega^k ||_op for the resolvent-monomial filters.
inline double resolvent_monomial_commutator(const LinearMap& j, const DenseOperator& t,
                                            const DenseOperator& t2, Complex omega, int k) {
    require(k >= 1, "resolvent_monomial_commutator: power must be >= 1");
    Matrix rk = resolvent(t, omega).matrix();
    Matrix r2k = resolvent(t2, omega).matrix();
    const Matrix r = rk, r2 = r2k;
    for (int i = 1; i < k; ++i) {
        rk = rk * r;
        r2k = r2k * r2;
    }
    return operator_norm(LinearMap(Matrix(r2k * j.matrix - j.matrix * rk), j.mu_dom, j.mu_cod));
}

// ---------------------------------------------------------------------------
// Bound reports
// ---------------------------------------------------------------------------

// Certified stability certificate. Global constants are the maxima of the
// per-layer values, exactly as the theorems assume; the per-layer lists stay
// in the report so the tighter (non-certified) per-layer product can be
// displayed alongside.
struct BoundReport {
    std::string formula;  // signal | edge | structural | graph-level | generalized
    int layers = 0;
    std::vector<double> B, L, R, D;
    double B_max = 0, L_max = 0, R_max = 0, D_max = 0;
    double input_norm = 0;
    double delta = 0;      // operator-level defect (edge / graph-level)
    double delta_frob = 0; // Frobenius-norm defect, when computed
    double epsilon = 0;    // resolvent-level defect (structural)
    double K = 0;          // aggregation constant of the graph-level bound
    double delta1 = 0, delta2 = 0;  // measured commutation defects (generalized)
    double defect_used = 0;         // the defect the certificate was evaluated with
    double value = 0;
    double per_layer_product = 0;  // prod L_n R_n B_n, not certified for edge routes
    std::uint64_t seed = 0;
    int samples = 0;
};

struct BoundInputs {
    int N = 1;
    double D = 1, R = 1, L = 1, B = 1;
    double input_norm = 1;
    double delta = 0, epsilon = 0, K = 0;
};

// Edge-perturbation certificate: N * DRL * (BRL)^(N-1) * ||f|| * delta.
inline double edge_bound(const BoundInputs& in) {
    return in.N * in.D * in.R * in.L * std::pow(in.B * in.R * in.L, in.N - 1) * in.input_norm * in.delta;
}

// Structural certificate: same shape evaluated with the resolvent defect.
inline double structural_bound(const BoundInputs& in) {
    return in.N * in.D * in.R * in.L * std::pow(in.B * in.R * in.L, in.N - 1) * in.input_norm * in.epsilon;
}

// Graph-level certificate: (N*DRL + K*BRL) * (BRL)^(N-1) * ||f|| * delta.
inline double graph_level_bound(const BoundInputs& in) {
    const double brl = in.B * in.R * in.L;
    return (in.N * in.D * in.R * in.L + in.K * brl) * std::pow(brl, in.N - 1) * in.input_norm * in.delta;
}

// Certificate when identification operators only almost commute:
// N * [RLD delta + delta1 BR + delta2 BL] * (BRL)^(N-1) * ||f||.
inline double generalized_bound(const BoundInputs& in, double delta1, double delta2) {
    const double brl = in.B * in.R * in.L;
    return in.N * (in.R * in.L * in.D * in.delta + delta1 * in.B * in.R + delta2 * in.B * in.L) *
           std::pow(brl, in.N - 1) * in.input_norm;
}

// Input-stability certificate of the Lipschitz theorem: prod L_n R_n B_n.
inline BoundReport signal_bound(const Network& net) {
    BoundReport rep;
    rep.formula = "signal";
    rep.layers = static_cast<int>(net.depth());
    double product = 1.0;
    for (const Layer& layer : net.layers()) {
        const double b = layer_constant_B(layer);
        rep.B.push_back(b);
        rep.L.push_back(layer.rho.lipschitz);
        rep.R.push_back(layer.connect_lipschitz);
        product *= b * layer.rho.lipschitz * layer.connect_lipschitz;
    }
    rep.B_max = *std::max_element(rep.B.begin(), rep.B.end());
    rep.L_max = *std::max_element(rep.L.begin(), rep.L.end());
    rep.R_max = *std::max_element(rep.R.begin(), rep.R.end());
    rep.per_layer_product = product;
    rep.value = product;
    return rep;
}

// ---------------------------------------------------------------------------
// Empirical harnesses
// ---------------------------------------------------------------------------

namespace detail {

inline FeatureBundle sample_unit_bundle(const GraphPtr& g, Index channels, Rng& rng) {
    Matrix s = rng.complex_gaussian_vector(g->size() * channels).reshaped(g->size(), channels);
    FeatureBundle f(std::move(s), g);
    const double nrm = bundle_norm(f);
    if (nrm > 0) f.signals /= nrm;
    return f;
}

}  // namespace detail

// max over sampled pairs of ||Phi(f) - Phi(h)|| / ||f - h||, unit-sphere
// complex Gaussian samples with per-sample seeds (seed + index).
inline double empirical_lipschitz(const Network& net, int samples, std::uint64_t seed) {
    require(samples >= 1, "empirical_lipschitz: need at least one sample");
    double best = 0.0;
    for (int s = 0; s < samples; ++s) {
        Rng rng(seed + static_cast<std::uint64_t>(s));
        const FeatureBundle f = detail::sample_unit_bundle(net.input_graph(), net.input_channels(), rng);
        const FeatureBundle h = detail::sample_unit_bundle(net.input_graph(), net.input_channels(), rng);
        const double denom = bundle_distance(f, h);
        if (denom < 1e-14) continue;
        const double num = bundle_distance(forward(net, f), forward(net, h));
        best = std::max(best, num / denom);
    }
    return best;
}

// Per-layer commutation defects of an identification family J_0..J_N:
// delta1 for the nonlinearities (sampled), delta2 for the connecting
// operators (exact, both sides linear).
struct IdentificationSet {
    std::vector<LinearMap> J;  // N + 1 maps
    std::vector<double> delta1, delta2;

    double max_delta1() const { return delta1.empty() ? 0.0 : *std::max_element(delta1.begin(), delta1.end()); }
    double max_delta2() const { return delta2.empty() ? 0.0 : *std::max_element(delta2.begin(), delta2.end()); }
};

// sup over samples of || rho(J f) - J rho(f) || / || f ||.
inline double measure_rho_defect(const Nonlinearity& rho, const LinearMap& j, int samples,
                                 std::uint64_t seed, bool nonnegative_samples = false) {
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
        Rng rng(seed + static_cast<std::uint64_t>(s));
        Vector f(j.matrix.cols());
        for (Index i = 0; i < f.size(); ++i)
            f[i] = nonnegative_samples ? Complex(rng.uniform(), 0.0) : rng.complex_gaussian();
        const double nf = weighted_norm(f, j.mu_dom);
        if (nf < 1e-14) continue;
        Vector jf = j.matrix * f;
        Vector rho_jf = jf, rho_f = f;
        for (Index i = 0; i < rho_jf.size(); ++i) rho_jf[i] = rho(rho_jf[i]);
        for (Index i = 0; i < rho_f.size(); ++i) rho_f[i] = rho(rho_f[i]);
        const double defect = weighted_norm(Vector(rho_jf - j.matrix * rho_f), j.mu_cod);
        worst = std::max(worst, defect / nf);
    }
    return worst;
}

inline IdentificationSet measure_commutation_defects(const Network& net, const Network& net2,
                                                     std::vector<LinearMap> js, int samples = 200,
                                                     std::uint64_t seed = 0) {
    require(js.size() == static_cast<std::size_t>(net.depth()) + 1,
            "measure_commutation_defects: need N + 1 identification operators");
    require(net.depth() == net2.depth(), "measure_commutation_defects: depth mismatch");
    IdentificationSet out;
    for (Index n = 0; n < net.depth(); ++n) {
        const Layer& a = net.layers()[n];
        const Layer& b = net2.layers()[n];
        const LinearMap& j_prev = js[n];
        const LinearMap& j_next = js[n + 1];
        require(j_next.matrix.cols() == a.graph->size() && j_next.matrix.rows() == b.graph->size(),
                "measure_commutation_defects: J_" + std::to_string(n + 1) + " shape mismatch");
        // delta1: nonlinearity on the layer's own space
        out.delta1.push_back(measure_rho_defect(a.rho, j_next, samples, seed + 8191 * n));
        // delta2: || P~ J_{n-1} - J_n P ||_op, exact for linear connections
        Matrix pa = a.connect ? *a.connect : Matrix::Identity(a.graph->size(), j_prev.matrix.cols());
        Matrix pb = b.connect ? *b.connect : Matrix::Identity(b.graph->size(), j_prev.matrix.rows());
        out.delta2.push_back(
            operator_norm(LinearMap(Matrix(pb * j_prev.matrix - j_next.matrix * pa), j_prev.mu_dom,
                                    j_next.mu_cod)));
    }
    out.J = std::move(js);
    return out;
}

// ---------------------------------------------------------------------------
// Exact per-filter perturbation constants for paired networks
// ---------------------------------------------------------------------------

// Lipschitz constant of a filter on a real spectral interval [lo, hi],
// derived from coefficient sums; exact, no sampling. Generic filters must
// carry a hint.
inline double lipschitz_bound_real_interval(const Filter& g, double lo, double hi) {
    if (std::holds_alternative<GenericFilter>(g)) {
        const auto& f = std::get<GenericFilter>(g);
        require(f.lipschitz_hint.has_value(),
                "lipschitz_bound_real_interval: generic filter without a Lipschitz hint");
        return *f.lipschitz_hint;
    }
    if (std::holds_alternative<EntireFilter>(g)) {
        return kg_entire(std::get<EntireFilter>(g), std::max({std::abs(lo), std::abs(hi), 1e-300}));
    }
    const auto dist_to_interval = [&](Complex omega) {
        const double re = std::clamp(omega.real(), lo, hi);
        return std::abs(omega - Complex(re, 0.0));
    };
    if (std::holds_alternative<HolFilter>(g)) {
        const auto& f = std::get<HolFilter>(g);
        const double d = dist_to_interval(f.omega);
        require(d > 0.0, "lipschitz_bound_real_interval: pole touches the spectral interval");
        double acc = 0.0;
        for (std::size_t k = 1; k < f.coeffs.size(); ++k)
            acc += static_cast<double>(k) * std::abs(f.coeffs[k]) * std::pow(d, -(static_cast<double>(k) + 1));
        return acc;
    }
    const auto& f = std::get<ContFilter>(g);
    const double d = std::min(dist_to_interval(f.omega), dist_to_interval(std::conj(f.omega)));
    require(d > 0.0, "lipschitz_bound_real_interval: pole touches the spectral interval");
    double acc = 0.0;
    for (const auto& [exps, a] : f.coeffs) {
        const int order = exps.first + exps.second;
        if (order < 1) continue;
        acc += order * std::abs(a) * std::pow(d, -(order + 1.0));
    }
    return acc;
}

enum class PerturbationRoute { FrobeniusLipschitz, OperatorEntire, ResolventSeminorm };

// D_n = sqrt(sum_ij c_ij^2) with the per-filter constant chosen by route:
// Lipschitz constants (normal pairs, Frobenius defect), the entire-series
// K_g (operator defect), or the F^hol / F^cont semi-norms (resolvent defect).
inline double layer_constant_D(const Layer& a, const Layer& b, PerturbationRoute route,
                               std::optional<Complex> omega = std::nullopt) {
    double sq = 0.0;
    switch (route) {
        case PerturbationRoute::FrobeniusLipschitz: {
            require(is_normal(a.op) && is_normal(b.op),
                    "layer_constant_D: Frobenius route requires a normal operator pair");
            double lo = 1e300, hi = -1e300;
            for (const DenseOperator* t : {&a.op, &b.op})
                for (Index i = 0; i < t->dim(); ++i) {
                    const Complex ev = eigenvalues(*t)[i];
                    require(std::abs(ev.imag()) < 1e-8 * (1.0 + std::abs(ev.real())),
                            "layer_constant_D: Frobenius route implemented for real spectra");
                    lo = std::min(lo, ev.real());
                    hi = std::max(hi, ev.real());
                }
            for (const auto& row : a.filters)
                for (const auto& g : row) {
                    const double c = lipschitz_bound_real_interval(g, lo, hi);
                    sq += c * c;
                }
            break;
        }
        case PerturbationRoute::OperatorEntire: {
            const double C = std::max(operator_norm(a.op), operator_norm(b.op));
            for (const auto& row : a.filters)
                for (const auto& g : row) {
                    require(std::holds_alternative<EntireFilter>(g),
                            "layer_constant_D: operator route requires entire filters");
                    const double c = kg_entire(std::get<EntireFilter>(g), std::max(C, 1e-300));
                    sq += c * c;
                }
            break;
        }
        case PerturbationRoute::ResolventSeminorm: {
            require(omega.has_value(), "layer_constant_D: resolvent route needs omega");
            const double C = std::max(operator_norm(resolvent(a.op, *omega)),
                                      operator_norm(resolvent(b.op, *omega)));
            for (const auto& row : a.filters)
                for (const auto& g : row) {
                    double c = 0.0;
                    if (std::holds_alternative<HolFilter>(g)) {
                        require(std::get<HolFilter>(g).omega == *omega,
                                "layer_constant_D: filter pole must match the closeness point");
                        c = seminorm_hol(std::get<HolFilter>(g), C);
                    } else if (std::holds_alternative<ContFilter>(g)) {
                        require(is_normal(a.op) && is_normal(b.op),
                                "layer_constant_D: F^cont constants require normal operators");
                        c = seminorm_cont(std::get<ContFilter>(g), C);
                    } else {
                        throw ConfigError(
                            "layer_constant_D: resolvent route requires Laurent or continuous filters");
                    }
                    sq += c * c;
                }
            break;
        }
    }
    return std::sqrt(sq);
}

// ---------------------------------------------------------------------------
// Paired-network certification drivers
// ---------------------------------------------------------------------------

namespace detail {

inline void fill_pair_constants(const Network& net, const Network& net2, BoundReport& rep) {
    rep.layers = static_cast<int>(net.depth());
    double product = 1.0;
    for (Index n = 0; n < net.depth(); ++n) {
        const Layer& a = net.layers()[n];
        const Layer& b = net2.layers()[n];
        const double bn = std::max(layer_constant_B(a), layer_constant_B(b));
        const double rn = std::max(a.connect_lipschitz, b.connect_lipschitz);
        const double ln = a.rho.lipschitz;
        rep.B.push_back(bn);
        rep.R.push_back(rn);
        rep.L.push_back(ln);
        product *= bn * rn * ln;
    }
    rep.B_max = *std::max_element(rep.B.begin(), rep.B.end());
    rep.R_max = *std::max_element(rep.R.begin(), rep.R.end());
    rep.L_max = *std::max_element(rep.L.begin(), rep.L.end());
    rep.D_max = rep.D.empty() ? 0.0 : *std::max_element(rep.D.begin(), rep.D.end());
    rep.per_layer_product = product;
}

}  // namespace detail

// Edge-perturbation certificate for two networks with identical filters and
// identification operators J_0..J_N. Certifies through the Frobenius defect
// when both operators of every layer are normal and every filter carries an
// exact Lipschitz constant, through the operator defect and entire-series
// constants otherwise; both defect norms are recorded. When the measured
// commutation defects are nonzero the generalized formula is certified
// instead and the report is tagged accordingly.
inline BoundReport certify_edge_perturbation(const Network& net, const Network& net2,
                                             const std::vector<LinearMap>& js, double input_norm,
                                             int samples = 200, std::uint64_t seed = 0) {
    require(net.depth() == net2.depth(), "certify_edge_perturbation: depth mismatch");
    BoundReport rep;
    rep.formula = "edge";
    rep.input_norm = input_norm;
    rep.seed = seed;
    rep.samples = samples;

    bool frobenius_route = true;
    for (Index n = 0; n < net.depth() && frobenius_route; ++n) {
        const Layer& a = net.layers()[n];
        if (!is_normal(a.op) || !is_normal(net2.layers()[n].op)) frobenius_route = false;
        for (const auto& row : a.filters)
            for (const auto& g : row)
                if (std::holds_alternative<GenericFilter>(g) &&
                    !std::get<GenericFilter>(g).lipschitz_hint)
                    frobenius_route = false;
    }

    double delta_op = 0.0, delta_frob = 0.0;
    for (Index n = 0; n < net.depth(); ++n) {
        const Layer& a = net.layers()[n];
        const Layer& b = net2.layers()[n];
        const LinearMap& j = js[n + 1];
        delta_op = std::max(delta_op, commutator_norm(j, a.op, b.op, NormKind::Operator));
        delta_frob = std::max(delta_frob, commutator_norm(j, a.op, b.op, NormKind::Frobenius));
        rep.D.push_back(layer_constant_D(a, b,
                                         frobenius_route ? PerturbationRoute::FrobeniusLipschitz
                                                         : PerturbationRoute::OperatorEntire));
    }
    rep.delta = delta_op;
    rep.delta_frob = delta_frob;
    detail::fill_pair_constants(net, net2, rep);

    const IdentificationSet defects = measure_commutation_defects(net, net2, js, samples, seed);
    rep.delta1 = defects.max_delta1();
    rep.delta2 = defects.max_delta2();

    rep.defect_used = frobenius_route ? delta_frob : delta_op;
    BoundInputs in{rep.layers, rep.D_max, rep.R_max, rep.L_max, rep.B_max, input_norm,
                   rep.defect_used, 0.0, 0.0};
    if (rep.delta1 > 0 || rep.delta2 > 0) {
        rep.formula = "generalized";
        rep.value = generalized_bound(in, rep.delta1, rep.delta2);
    } else {
        rep.value = edge_bound(in);
    }
    return rep;
}

// Structural (resolvent-closeness) certificate; epsilon is measured per layer
// and the per-filter constants come from the closeness lemma's semi-norms.
inline BoundReport certify_structural(const Network& net, const Network& net2,
                                      const std::vector<LinearMap>& js, Complex omega,
                                      double input_norm, int samples = 200, std::uint64_t seed = 0) {
    require(net.depth() == net2.depth(), "certify_structural: depth mismatch");
    BoundReport rep;
    rep.formula = "structural";
    rep.input_norm = input_norm;
    rep.seed = seed;
    rep.samples = samples;

    bool doubly = false;
    for (const Layer& layer : net.layers())
        for (const auto& row : layer.filters)
            for (const auto& g : row)
                if (std::holds_alternative<ContFilter>(g)) doubly = true;

    double eps = 0.0;
    for (Index n = 0; n < net.depth(); ++n) {
        const Layer& a = net.layers()[n];
        const Layer& b = net2.layers()[n];
        const LinearMap& j = js[n + 1];
        eps = std::max(eps, resolvent_closeness(j, a.op, b.op, omega, doubly));
        rep.D.push_back(layer_constant_D(a, b, PerturbationRoute::ResolventSeminorm, omega));
    }
    rep.epsilon = eps;
    detail::fill_pair_constants(net, net2, rep);

    const IdentificationSet defects = measure_commutation_defects(net, net2, js, samples, seed);
    rep.delta1 = defects.max_delta1();
    rep.delta2 = defects.max_delta2();

    rep.defect_used = eps;
    BoundInputs in{rep.layers, rep.D_max, rep.R_max, rep.L_max, rep.B_max, input_norm, 0.0, eps, 0.0};
    if (rep.delta1 > 0 || rep.delta2 > 0) {
        rep.formula = "generalized";
        in.delta = eps;
        rep.value = generalized_bound(in, rep.delta1, rep.delta2);
    } else {
        rep.value = structural_bound(in);
    }
    return rep;
}

// Smallest K with | ||J f||_2 - ||f||_2 | <= delta K ||f||_2: the largest
// deviation of a weighted singular value of J from one, divided by delta.
inline double aggregation_constant_p2(const LinearMap& j, double delta) {
    require(delta > 0.0, "aggregation_constant_p2: delta must be positive");
    Eigen::BDCSVD<Matrix> svd(j.balanced());
    double worst = 0.0;
    const auto& sv = svd.singularValues();
    for (Index i = 0; i < sv.size(); ++i) worst = std::max(worst, std::abs(sv[i] - 1.0));
    // a rank-deficient direction realizes sigma = 0
    if (j.matrix.cols() > j.matrix.rows() || sv.size() < j.matrix.cols())
        worst = std::max(worst, 1.0);
    return worst / delta;
}

}  // namespace spectral_transfer
