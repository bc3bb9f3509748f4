#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "spectral_transfer/error.hpp"
#include "spectral_transfer/graph.hpp"
#include "spectral_transfer/operators.hpp"
#include "spectral_transfer/stability.hpp"

namespace spectral_transfer {

// Split of a fine graph's node set into regular (Latin) nodes, the
// exceptional node star, and the strongly coupled (Greek) sector that gets
// collapsed onto star. Coarse nodes are ordered [latin..., star].
struct Partition {
    std::vector<Index> latin;
    Index star = 0;
    std::vector<Index> greek;

    Index coarse_size() const { return static_cast<Index>(latin.size()) + 1; }

    // fine index of coarse node g
    Index fine_index(Index g) const {
        return g < static_cast<Index>(latin.size()) ? latin[g] : star;
    }
};

inline void validate_partition(const WeightedGraph& fine, const Partition& p) {
    require(!fine.directed(), "collapse: fine graph must be undirected");
    const Index n = fine.size();
    std::vector<int> seen(n, 0);
    const auto mark = [&](Index i, const char* who) {
        require(i >= 0 && i < n, std::string("partition: ") + who + " index out of range");
        require(seen[i] == 0, std::string("partition: index ") + std::to_string(i) + " listed twice");
        seen[i] = 1;
    };
    for (Index i : p.latin) mark(i, "latin");
    mark(p.star, "star");
    for (Index i : p.greek) mark(i, "greek");
    for (Index i = 0; i < n; ++i)
        require(seen[i] == 1, "partition: node " + std::to_string(i) + " not covered");

    // greek + star must induce a connected sub-graph (positive weights only)
    std::vector<Index> cluster = p.greek;
    cluster.push_back(p.star);
    std::vector<int> reached(cluster.size(), 0);
    std::vector<std::size_t> stack{0};
    reached[0] = 1;
    while (!stack.empty()) {
        const std::size_t c = stack.back();
        stack.pop_back();
        for (std::size_t d = 0; d < cluster.size(); ++d)
            if (!reached[d] && fine.adjacency()(cluster[c], cluster[d]) > 0.0) {
                reached[d] = 1;
                stack.push_back(d);
            }
    }
    for (std::size_t d = 0; d < cluster.size(); ++d)
        require(reached[d] == 1, "partition: greek sector plus star is not connected");
}

// Coarse adjacency: Latin-Latin entries are copied and the star row collects
// the whole coupling of each Latin node into the collapsed sector,
// W_{star,a} = W~_{a,star} + sum_beta W~_{a,beta}. Node weights are
// placeholders (1) until mu_from_psi supplies the collapsed weights.
inline WeightedGraph collapse_weights(const WeightedGraph& fine, const Partition& p) {
    validate_partition(fine, p);
    const Index nl = static_cast<Index>(p.latin.size());
    const Index nc = nl + 1;
    RealMatrix w = RealMatrix::Zero(nc, nc);
    for (Index a = 0; a < nl; ++a)
        for (Index b = 0; b < nl; ++b)
            if (a != b) w(a, b) = fine.adjacency()(p.latin[a], p.latin[b]);
    for (Index a = 0; a < nl; ++a) {
        double coupling = fine.adjacency()(p.latin[a], p.star);
        for (Index beta : p.greek) coupling += fine.adjacency()(p.latin[a], beta);
        w(nl, a) = coupling;
        w(a, nl) = coupling;
    }
    return WeightedGraph(std::move(w), RealVector::Ones(nc), false);
}

// Harmonic-extension signals psi_g: boundary values delta_{hg} on
// latin + {star}, Greek entries from the linear system
// [diag(d~_alpha) - W~|_Greek] eta_g = W~(g, Greek).
inline std::vector<RealVector> solve_psi(const WeightedGraph& fine, const Partition& p) {
    validate_partition(fine, p);
    const Index n = fine.size();
    const Index ng = static_cast<Index>(p.greek.size());
    const Index nc = p.coarse_size();
    const RealVector deg = fine.degrees();

    Eigen::LDLT<RealMatrix> solver;
    RealMatrix sys;
    if (ng > 0) {
        sys.setZero(ng, ng);
        for (Index a = 0; a < ng; ++a) {
            sys(a, a) = deg[p.greek[a]];
            for (Index b = 0; b < ng; ++b)
                if (a != b) sys(a, b) = -fine.adjacency()(p.greek[a], p.greek[b]);
        }
        solver.compute(sys);
        if (solver.info() != Eigen::Success)
            throw NumericalError("solve_psi: greek-restricted system is singular; "
                                 "is the greek sector connected to the rest of the graph?");
    }

    std::vector<RealVector> psi;
    psi.reserve(nc);
    for (Index g = 0; g < nc; ++g) {
        RealVector v = RealVector::Zero(n);
        v[p.fine_index(g)] = 1.0;
        if (ng > 0) {
            RealVector rhs(ng);
            for (Index a = 0; a < ng; ++a) rhs[a] = fine.adjacency()(p.fine_index(g), p.greek[a]);
            const RealVector eta = solver.solve(rhs);
            if ((sys * eta - rhs).norm() > 1e-8 * std::max(1.0, rhs.norm()))
                throw NumericalError("solve_psi: greek solve failed; "
                                     "is the greek sector connected to the rest of the graph?");
            for (Index a = 0; a < ng; ++a) {
                require(eta[a] >= -1e-10 && eta[a] <= 1.0 + 1e-10,
                        "solve_psi: harmonic extension left [0, 1] at greek node " +
                            std::to_string(p.greek[a]));
                v[p.greek[a]] = eta[a];
            }
        }
        psi.push_back(std::move(v));
    }
    return psi;
}

// Collapsed node weights mu_g = sum_h psi_g(h) mu~_h; the partition of unity
// makes these sum to the fine graph's total weight.
inline RealVector mu_from_psi(const WeightedGraph& fine, const std::vector<RealVector>& psi) {
    RealVector mu(static_cast<Index>(psi.size()));
    for (std::size_t g = 0; g < psi.size(); ++g) {
        require(psi[g].size() == fine.size(), "mu_from_psi: psi signal has wrong length");
        mu[static_cast<Index>(g)] = psi[g].dot(fine.node_weights());
    }
    return mu;
}

// J f = sum_g f(g) psi_g and (Jt u)(g) = <psi_g, u> / mu_g; Jt is the
// weighted adjoint of J by construction.
inline std::pair<LinearMap, LinearMap> identification_ops(const WeightedGraph& fine,
                                                          const std::vector<RealVector>& psi,
                                                          const RealVector& mu_coarse) {
    const Index n = fine.size();
    const Index nc = static_cast<Index>(psi.size());
    require(mu_coarse.size() == nc, "identification_ops: weight count mismatch");
    Matrix j(n, nc);
    for (Index g = 0; g < nc; ++g) j.col(g) = psi[g].cast<Complex>();
    Matrix jt(nc, n);
    for (Index g = 0; g < nc; ++g)
        jt.row(g) = (psi[g].cwiseProduct(fine.node_weights()) / mu_coarse[g]).cast<Complex>().transpose();
    return {LinearMap(std::move(j), mu_coarse, fine.node_weights()),
            LinearMap(std::move(jt), fine.node_weights(), mu_coarse)};
}

// The assembled edge-collapse data: coarse graph, harmonic signals, collapsed
// weights and both identification operators.
struct CollapsePair {
    GraphPtr fine;
    GraphPtr coarse;
    Partition partition;
    std::vector<RealVector> psi;
    RealVector mu_delta;
    LinearMap J;   // l2(coarse) -> l2(fine)
    LinearMap Jt;  // l2(fine) -> l2(coarse)
};

// `mu_override` substitutes explicit coarse node weights (the molecule
// experiment pins mu_star by hand); absent, weights come from mu_from_psi.
inline CollapsePair build_collapse(GraphPtr fine, Partition p,
                                   std::optional<RealVector> mu_override = std::nullopt) {
    require(fine != nullptr, "build_collapse: null graph");
    WeightedGraph coarse_w = collapse_weights(*fine, p);
    std::vector<RealVector> psi = solve_psi(*fine, p);

    // partition of unity; an exact structural identity of the construction
    RealVector total = RealVector::Zero(fine->size());
    for (const auto& v : psi) total += v;
    require((total.array() - 1.0).abs().maxCoeff() <= 1e-10,
            "build_collapse: harmonic signals do not form a partition of unity");

    RealVector mu = mu_override ? *mu_override : mu_from_psi(*fine, psi);
    require(mu.size() == p.coarse_size(), "build_collapse: coarse weight count mismatch");
    auto coarse = make_graph(RealMatrix(coarse_w.adjacency()), RealVector(mu), false);
    auto [j, jt] = identification_ops(*fine, psi, mu);
    return CollapsePair{std::move(fine), std::move(coarse), std::move(p),
                        std::move(psi),  std::move(mu),     std::move(j),
                        std::move(jt)};
}

// ---------------------------------------------------------------------------
// Quasi-unitarity and diagnostics
// ---------------------------------------------------------------------------

struct QuasiUnitarityReport {
    double eps = 0;          // max of the three defects below
    double eps_adjoint = 0;  // ||J - Jt*||_op
    double eps_coarse = 0;   // ||(Id - Jt J) R_omega||_op
    double eps_fine = 0;     // ||(Id - J Jt) R~_omega||_op
    double j_norm = 0;
    bool j_norm_ok = false;  // ||J||_op <= 2
};

// Measured epsilon of the quasi-unitarity conditions; exact operator-norm
// computations, no sampling. T acts on the domain of J, T2 on its codomain.
inline QuasiUnitarityReport quasi_unitarity_epsilon(const LinearMap& j, const LinearMap& jt,
                                                    const DenseOperator& t, const DenseOperator& t2,
                                                    Complex omega) {
    require(j.matrix.cols() == t.dim() && j.matrix.rows() == t2.dim(),
            "quasi_unitarity_epsilon: J incompatible with the operator pair");
    QuasiUnitarityReport rep;
    const LinearMap jt_star = adjoint(jt);
    rep.eps_adjoint = operator_norm(LinearMap(Matrix(j.matrix - jt_star.matrix), j.mu_dom, j.mu_cod));
    const Matrix r = resolvent(t, omega).matrix();
    const Matrix r2 = resolvent(t2, omega).matrix();
    const Index nc = t.dim(), nf = t2.dim();
    rep.eps_coarse = operator_norm(
        LinearMap(Matrix((Matrix::Identity(nc, nc) - jt.matrix * j.matrix) * r), t.weights(), t.weights()));
    rep.eps_fine = operator_norm(LinearMap(
        Matrix((Matrix::Identity(nf, nf) - j.matrix * jt.matrix) * r2), t2.weights(), t2.weights()));
    rep.eps = std::max({rep.eps_adjoint, rep.eps_coarse, rep.eps_fine});
    rep.j_norm = operator_norm(j);
    rep.j_norm_ok = rep.j_norm <= 2.0;
    return rep;
}

namespace detail {

// (Id + Delta)^(-1/2) for the self-adjoint, positive semi-definite Laplacian
// of an undirected graph; used by the energy-weighted closeness conditions.
inline Matrix inv_sqrt_id_plus_laplacian(const WeightedGraph& g) {
    const DenseOperator lap = characteristic_operator(g, OperatorKind::Laplacian);
    const SpectrumResult s = spectrum(lap);
    require(s.eigenvectors.has_value(), "inv_sqrt_id_plus_laplacian: Laplacian must be normal");
    Vector scaled(s.eigenvalues.size());
    for (Index i = 0; i < scaled.size(); ++i) {
        const double lam = std::max(s.eigenvalues[i].real(), 0.0);
        scaled[i] = 1.0 / std::sqrt(1.0 + lam);
    }
    Matrix out = *s.eigenvectors * scaled.asDiagonal() * s.eigenvectors->adjoint();
    for (Index c = 0; c < out.cols(); ++c) out.col(c) *= g.node_weights()[c];
    return out;
}

}  // namespace detail

// The four energy-weighted conditions the collapse theorem certifies
// through, each reported as the smallest constant making the inequality hold
// (computed exactly as weighted operator norms; the identities that vanish by
// construction are measured, not assumed).
struct EnergyConditionsReport {
    double eps11_norm = 0;     // ||J|| <= 1 + eps
    double eps11_adjoint = 0;  // |<Jf,u> - <f,Jt u>| <= eps ||f|| ||u||
    double eps22_coarse = 0;   // ||f - Jt J f|| <= eps (||f||^2 + E(f))^(1/2)
    double eps22_fine = 0;     // ||u - J Jt u|| <= eps (||u||^2 + E(u))^(1/2)
    double eps33 = 0;          // ||Jt u - u|_coarse|| <= eps (||u||^2 + E(u))^(1/2)
    double eps44 = 0;          // energy bilinear-form mismatch
    double max_eps = 0;
};

inline EnergyConditionsReport energy_conditions_report(const CollapsePair& cp) {
    EnergyConditionsReport rep;
    const Index nc = cp.coarse->size(), nf = cp.fine->size();
    rep.eps11_norm = std::max(0.0, operator_norm(cp.J) - 1.0);
    rep.eps11_adjoint =
        operator_norm(LinearMap(Matrix(cp.J.matrix - adjoint(cp.Jt).matrix), cp.J.mu_dom, cp.J.mu_cod));

    const Matrix a_coarse = detail::inv_sqrt_id_plus_laplacian(*cp.coarse);
    const Matrix a_fine = detail::inv_sqrt_id_plus_laplacian(*cp.fine);
    rep.eps22_coarse = operator_norm(LinearMap(
        Matrix((Matrix::Identity(nc, nc) - cp.Jt.matrix * cp.J.matrix) * a_coarse),
        cp.coarse->node_weights(), cp.coarse->node_weights()));
    rep.eps22_fine = operator_norm(LinearMap(
        Matrix((Matrix::Identity(nf, nf) - cp.J.matrix * cp.Jt.matrix) * a_fine),
        cp.fine->node_weights(), cp.fine->node_weights()));

    // restriction map u -> u|_(latin + star)
    Matrix restrict = Matrix::Zero(nc, nf);
    for (Index g = 0; g < nc; ++g) restrict(g, cp.partition.fine_index(g)) = 1.0;
    rep.eps33 = operator_norm(LinearMap(Matrix((cp.Jt.matrix - restrict) * a_fine),
                                        cp.fine->node_weights(), cp.coarse->node_weights()));

    // |E~(Jf, u) - E(f, u|_coarse)| through the operator
    // Q = J* Delta~ - Delta J1~ between the energy-weighted spaces.
    const Matrix lap_fine = characteristic_operator(*cp.fine, OperatorKind::Laplacian).matrix();
    const Matrix lap_coarse = characteristic_operator(*cp.coarse, OperatorKind::Laplacian).matrix();
    const Matrix q = cp.Jt.matrix * lap_fine - lap_coarse * restrict;
    rep.eps44 = operator_norm(LinearMap(Matrix(a_coarse * q * a_fine), cp.fine->node_weights(),
                                        cp.coarse->node_weights()));

    rep.max_eps = std::max({rep.eps11_norm, rep.eps11_adjoint, rep.eps22_coarse, rep.eps22_fine,
                            rep.eps33, rep.eps44});
    return rep;
}

// ---------------------------------------------------------------------------
// Delta sweeps
// ---------------------------------------------------------------------------

// The delta parameter is implicit in the fine weights: sweeps scale every
// edge inside greek + {star} by 1/delta, leaving Latin couplings untouched.
inline GraphPtr scale_greek_sector(const WeightedGraph& base, const Partition& p, double delta) {
    require(delta > 0.0, "scale_greek_sector: delta must be positive");
    const Index n = base.size();
    std::vector<char> strong(n, 0);
    strong[p.star] = 1;
    for (Index a : p.greek) strong[a] = 1;
    RealMatrix w = base.adjacency();
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            if (strong[i] && strong[j]) w(i, j) /= delta;
    return make_graph(std::move(w), RealVector(base.node_weights()), false);
}

struct SweepRow {
    double delta = 0;
    double eps_quasi = 0;
    double eps_close = 0;
    double j_norm = 0;
};

// Laplacian collapse sweep at omega = -1: quasi-unitarity and resolvent
// closeness per grid point.
inline std::vector<SweepRow> collapse_sweep(const WeightedGraph& base, const Partition& p,
                                            const std::vector<double>& delta_grid,
                                            Complex omega = Complex(-1, 0)) {
    std::vector<SweepRow> rows;
    rows.reserve(delta_grid.size());
    for (double delta : delta_grid) {
        auto fine = scale_greek_sector(base, p, delta);
        CollapsePair cp = build_collapse(fine, p);
        const DenseOperator lap_c = characteristic_operator(*cp.coarse, OperatorKind::Laplacian);
        const DenseOperator lap_f = characteristic_operator(*cp.fine, OperatorKind::Laplacian);
        const auto qu = quasi_unitarity_epsilon(cp.J, cp.Jt, lap_c, lap_f, omega);
        SweepRow row;
        row.delta = delta;
        row.eps_quasi = qu.eps;
        row.eps_close = resolvent_closeness(cp.J, lap_c, lap_f, omega);
        row.j_norm = qu.j_norm;
        rows.push_back(row);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Impossibility probe
// ---------------------------------------------------------------------------

// omega defaults: -1 for (normalized) Laplacians, i for self-adjoint
// indefinite operators, imaginary with |omega| = 1.5 max(||T||, 1) otherwise
// (off-spectrum is then guaranteed by |omega| >= ||T||).
inline Complex default_closeness_omega(OperatorKind kind, double norm_bound, bool self_adjoint) {
    if (kind == OperatorKind::Laplacian || kind == OperatorKind::NormalizedLaplacian)
        return Complex(-1, 0);
    if (self_adjoint) return Complex(0, 1);
    return Complex(0, 1.5 * std::max(norm_bound, 1.0));
}

struct NegativeProbeRow {
    double delta = 0;
    double eps_quasi = 0;
    double eps_close = 0;
};

// Measures the canonical collapse construction on the two-node strong-edge
// family for a GSO that the impossibility theorem covers (or the Laplacian,
// as the decaying control). The adjacency and normalized-Laplacian epsilons
// are expected to stay bounded away from zero.
inline std::vector<NegativeProbeRow> negative_result_probe(OperatorKind kind,
                                                           const std::vector<double>& delta_grid) {
    for (std::size_t i = 1; i < delta_grid.size(); ++i)
        require(delta_grid[i] < delta_grid[i - 1] && delta_grid[i] > 0.0,
                "negative_result_probe: delta grid must be positive decreasing");
    std::vector<NegativeProbeRow> rows;
    rows.reserve(delta_grid.size());
    const Partition p{{}, 0, {1}};
    for (double delta : delta_grid) {
        RealMatrix w(2, 2);
        w << 0, 1.0 / delta, 1.0 / delta, 0;
        auto fine = make_graph(std::move(w), RealVector::Ones(2), false);
        CollapsePair cp = build_collapse(fine, p);

        DenseOperator fine_op = characteristic_operator(*cp.fine, kind);
        // the collapsed singleton has no edges; every GSO of it is the 1x1
        // zero operator (the normalized Laplacian by the convention of the
        // two-node counterexample)
        DenseOperator coarse_op(Matrix::Zero(1, 1), cp.coarse->node_weights());
        const Complex omega = default_closeness_omega(kind, operator_norm(fine_op), true);

        NegativeProbeRow row;
        row.delta = delta;
        row.eps_quasi = quasi_unitarity_epsilon(cp.J, cp.Jt, coarse_op, fine_op, omega).eps;
        row.eps_close = resolvent_closeness(cp.J, coarse_op, fine_op, omega);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace spectral_transfer
