#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "spectral_transfer/coarsen.hpp"
#include "spectral_transfer/error.hpp"
#include "spectral_transfer/graph.hpp"
#include "spectral_transfer/operators.hpp"

namespace spectral_transfer {

// ---------------------------------------------------------------------------
// Cycle graphs discretizing the circle
// ---------------------------------------------------------------------------

struct CycleSpec {
    int n = 3;  // odd, >= 3
};

namespace detail {

// Cycle with the 1/h^2 weights and no parity restriction; the companion
// (N+1)-cycle of the identification pair is even.
inline GraphPtr cycle_graph_unchecked(Index n) {
    const double w = std::pow(n / (2.0 * M_PI), 2.0);
    RealMatrix adj = RealMatrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
        const Index j = (i + 1) % n;
        adj(i, j) = w;
        adj(j, i) = w;
    }
    return make_graph(std::move(adj), RealVector::Ones(n), false);
}

}  // namespace detail

// Closed path graph on N nodes embedded in the circle of circumference 2 pi:
// unit node weights, every edge weight 1/h^2 = (N / 2 pi)^2.
inline GraphPtr cycle_graph(const CycleSpec& spec) {
    require(spec.n >= 3, "cycle_graph: need at least three nodes");
    require(spec.n % 2 == 1, "cycle_graph: N must be odd (the circle theorem's hypothesis)");
    return detail::cycle_graph_unchecked(spec.n);
}

// Analytic eigenpairs of the cycle Laplacian:
// lambda_k = (N^2 / pi^2) sin^2(pi k / N), phi_k(x) = e^{i 2 pi k x / N} / sqrt(N).
inline SpectrumResult cycle_eigenpairs(int n) {
    require(n >= 3 && n % 2 == 1, "cycle_eigenpairs: N must be odd and >= 3");
    Vector vals(n);
    Matrix vecs(n, n);
    for (int k = 0; k < n; ++k) {
        const double s = std::sin(M_PI * k / n);
        vals[k] = Complex(n * n / (M_PI * M_PI) * s * s, 0.0);
        for (int x = 0; x < n; ++x) {
            const double theta = 2.0 * M_PI * k * x / n;
            vecs(x, k) = Complex(std::cos(theta), std::sin(theta)) / std::sqrt(double(n));
        }
    }
    return SpectrumResult{std::move(vals), std::move(vecs)};
}

// Identification operator between consecutive cycles, J: l2(G_N) -> l2(G_{N+1}),
// mapping phi^N_k onto phi^{N+1}_k below the missing mode and phi^{N+1}_{k+1}
// above it; materialized as the dense matrix Phi_{N+1} S Phi_N^* so the
// adjoint is exact. The eigenspace of phi^{N+1}_{(N+1)/2} misses range(J).
inline std::pair<LinearMap, LinearMap> circle_identification(int n) {
    require(n >= 3 && n % 2 == 1, "circle_identification: N must be odd and >= 3");
    const SpectrumResult low = cycle_eigenpairs(n);
    Vector vals_hi(n + 1);
    Matrix phi_hi(n + 1, n + 1);
    {
        Matrix vecs(n + 1, n + 1);
        for (int k = 0; k <= n; ++k)
            for (int x = 0; x <= n; ++x) {
                const double theta = 2.0 * M_PI * k * x / (n + 1);
                vecs(x, k) = Complex(std::cos(theta), std::sin(theta)) / std::sqrt(double(n + 1));
            }
        phi_hi = std::move(vecs);
    }
    Matrix sel = Matrix::Zero(n + 1, n);
    for (int k = 0; k < n; ++k) {
        if (2 * k < n)
            sel(k, k) = 1.0;
        else
            sel(k + 1, k) = 1.0;
    }
    Matrix j = phi_hi * sel * low.eigenvectors->adjoint();
    RealVector mu_lo = RealVector::Ones(n), mu_hi = RealVector::Ones(n + 1);
    LinearMap jm(std::move(j), mu_lo, mu_hi);
    LinearMap jt = adjoint(jm);
    return {std::move(jm), std::move(jt)};
}

// ---------------------------------------------------------------------------
// Molecular graphs (Coulomb couplings)
// ---------------------------------------------------------------------------

struct Molecule {
    RealVector Z;                         // positive atomic charges
    std::vector<Eigen::Vector3d> X;       // positions, consistent units
    std::vector<std::string> names;      // optional labels

    Index size() const { return Z.size(); }
};

inline void validate_molecule(const Molecule& m) {
    require(m.Z.size() == static_cast<Index>(m.X.size()), "molecule: Z and X must have equal length");
    for (Index i = 0; i < m.Z.size(); ++i)
        require(m.Z[i] > 0.0, "molecule: charges must be positive");
    for (Index i = 0; i < m.size(); ++i)
        for (Index j = i + 1; j < m.size(); ++j)
            require((m.X[i] - m.X[j]).norm() > 1e-12,
                    "molecule: atoms " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
}

// W_ij = Z_i Z_j / ||x_i - x_j||, node weights mu_i = Z_i.
inline GraphPtr molecular_graph(const Molecule& m) {
    validate_molecule(m);
    const Index n = m.size();
    RealMatrix w = RealMatrix::Zero(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j) {
            const double v = m.Z[i] * m.Z[j] / (m.X[i] - m.X[j]).norm();
            w(i, j) = v;
            w(j, i) = v;
        }
    return make_graph(std::move(w), RealVector(m.Z), false);
}

// Moves one atom along the straight line towards a target position:
// x_atom <- (1 - t) x_atom + t x_target, t in [0, 1).
inline Molecule deflect(const Molecule& m, Index atom, Index target, double t) {
    require(atom >= 0 && atom < m.size() && target >= 0 && target < m.size(),
            "deflect: atom index out of range");
    require(t >= 0.0 && t < 1.0, "deflect: t must lie in [0, 1); t = 1 would collide the atoms");
    Molecule out = m;
    out.X[atom] = (1.0 - t) * m.X[atom] + t * m.X[target];
    return out;
}

// Merges a set of atoms into a single effective atom placed at
// star_position's coordinates with the summed charge. Returns the effective
// molecule (atoms ordered [unmerged..., star]) and the partition that maps
// its graph onto the fine molecular graph.
inline std::pair<Molecule, Partition> effective_molecule(const Molecule& m,
                                                         const std::vector<Index>& merge,
                                                         Index star_position) {
    require(!merge.empty(), "effective_molecule: merge set must be nonempty");
    std::vector<char> merged(m.size(), 0);
    bool star_in_merge = false;
    for (Index i : merge) {
        require(i >= 0 && i < m.size(), "effective_molecule: merge index out of range");
        require(!merged[i], "effective_molecule: duplicate merge index");
        merged[i] = 1;
        if (i == star_position) star_in_merge = true;
    }
    require(star_in_merge, "effective_molecule: star_position must belong to the merge set");

    Molecule eff;
    Partition part;
    std::vector<double> charges;
    for (Index i = 0; i < m.size(); ++i)
        if (!merged[i]) {
            charges.push_back(m.Z[i]);
            eff.X.push_back(m.X[i]);
            eff.names.push_back(i < static_cast<Index>(m.names.size()) ? m.names[i] : "");
            part.latin.push_back(i);
        }
    double z_star = 0.0;
    for (Index i : merge) {
        z_star += m.Z[i];
        if (i != star_position) part.greek.push_back(i);
    }
    part.star = star_position;
    charges.push_back(z_star);
    eff.X.push_back(m.X[star_position]);
    eff.names.push_back("star");
    eff.Z = Eigen::Map<RealVector>(charges.data(), static_cast<Index>(charges.size()));
    return {std::move(eff), std::move(part)};
}

// Methane preset: carbon (Z = 6) at the origin, four hydrogens (Z = 1) on a
// regular tetrahedron at C-H distance 1.09. The distance unit is arbitrary
// but fixed; every claim about the deflection experiment is relative.
inline Molecule methane() {
    Molecule m;
    m.Z = (RealVector(5) << 6, 1, 1, 1, 1).finished();
    const double d = 1.09 / std::sqrt(3.0);
    m.X = {{0, 0, 0}, {d, d, d}, {d, -d, -d}, {-d, d, -d}, {-d, -d, d}};
    m.names = {"C", "H", "H", "H", "H"};
    return m;
}

// ---------------------------------------------------------------------------
// Printed experiment graphs
// ---------------------------------------------------------------------------

// The 5-node O(1) adjacency of the scaling experiment, scaled by 1/delta.
inline GraphPtr scaling_example_graph(double inv_delta) {
    require(inv_delta > 0.0, "scaling_example_graph: scale must be positive");
    RealMatrix a(5, 5);
    a << 0, 16, 7, 18, 19,
        16, 0, 6, 22, 3,
        7, 6, 0, 1, 90,
        18, 22, 1, 0, 23,
        19, 3, 90, 23, 0;
    return make_graph(RealMatrix(inv_delta * a), RealVector::Ones(5), false);
}

// The 8-node strong-edge graph at delta = 1; Latin {0,1,2}, star 3,
// Greek {4..7}. Apply scale_greek_sector for other deltas.
inline GraphPtr collapse_example_base() {
    RealMatrix w(8, 8);
    w << 0, 4, 2, 10, 4, 5, 6, 7,
        4, 0, 17, 9, 8, 9, 10, 11,
        2, 17, 0, 42, 12, 13, 14, 15,
        10, 9, 42, 0, 16, 7, 18, 19,
        4, 8, 12, 16, 0, 6, 22, 3,
        5, 9, 13, 7, 6, 0, 1, 90,
        6, 10, 14, 18, 22, 1, 0, 23,
        7, 11, 15, 19, 3, 90, 23, 0;
    return make_graph(std::move(w), RealVector::Ones(8), false);
}

inline Partition collapse_example_partition() { return Partition{{0, 1, 2}, 3, {4, 5, 6, 7}}; }

}  // namespace spectral_transfer
