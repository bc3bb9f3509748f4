#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "spectral_transfer/error.hpp"
#include "spectral_transfer/graph.hpp"

namespace spectral_transfer {

// Rectangular linear map between two weighted signal spaces,
// l2(dom) -> l2(cod). Norms are induced by the weighted l2 norms.
struct LinearMap {
    Matrix matrix;
    RealVector mu_dom;
    RealVector mu_cod;

    LinearMap(Matrix m, RealVector dom, RealVector cod)
        : matrix(std::move(m)), mu_dom(std::move(dom)), mu_cod(std::move(cod)) {
        require(matrix.rows() == mu_cod.size() && matrix.cols() == mu_dom.size(),
                "LinearMap: matrix shape must match weight vectors");
    }

    static LinearMap identity(const RealVector& mu) {
        return LinearMap(Matrix::Identity(mu.size(), mu.size()), mu, mu);
    }

    Vector apply(const Vector& f) const {
        require(f.size() == matrix.cols(), "LinearMap: dimension mismatch");
        return matrix * f;
    }

    // Representation in the orthonormal bases e_i / sqrt(mu_i) of both spaces.
    Matrix balanced() const {
        Matrix b = matrix;
        for (Index i = 0; i < b.rows(); ++i) b.row(i) *= std::sqrt(mu_cod[i]);
        for (Index j = 0; j < b.cols(); ++j) b.col(j) /= std::sqrt(mu_dom[j]);
        return b;
    }
};

// Weighted adjoint J*: l2(cod) -> l2(dom), J* = M_dom^-1 J^H M_cod.
inline LinearMap adjoint(const LinearMap& j) {
    Matrix a = j.matrix.adjoint();
    for (Index i = 0; i < a.rows(); ++i) a.row(i) /= j.mu_dom[i];
    for (Index k = 0; k < a.cols(); ++k) a.col(k) *= j.mu_cod[k];
    return LinearMap(std::move(a), j.mu_cod, j.mu_dom);
}

inline Matrix weighted_adjoint(const Matrix& t, const RealVector& mu) {
    Matrix a = t.adjoint();
    for (Index i = 0; i < a.rows(); ++i) a.row(i) /= mu[i];
    for (Index k = 0; k < a.cols(); ++k) a.col(k) *= mu[k];
    return a;
}

inline DenseOperator adjoint(const DenseOperator& t) {
    return DenseOperator(weighted_adjoint(t.matrix(), t.weights()), t.weights());
}

inline LinearMap as_map(const DenseOperator& t) { return LinearMap(t.matrix(), t.weights(), t.weights()); }

namespace detail {

inline double spectral_norm(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    if (m.rows() == 1 && m.cols() == 1) return std::abs(m(0, 0));
    Eigen::BDCSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

}  // namespace detail

// Largest singular value of M_cod^(1/2) A M_dom^(-1/2).
inline double operator_norm(const LinearMap& j) { return detail::spectral_norm(j.balanced()); }

inline double operator_norm(const DenseOperator& t) {
    auto& c = t.cache();
    std::call_once(c.norm_once, [&] { c.op_norm = detail::spectral_norm(t.balanced()); });
    return c.op_norm;
}

// Weighted Frobenius norm: the Frobenius norm of the balanced representation
// (matrix entries taken with respect to orthonormal bases of both spaces).
inline double frobenius_norm(const LinearMap& j) { return j.balanced().norm(); }

inline double frobenius_norm(const DenseOperator& t) { return t.balanced().norm(); }

// Trace (nuclear) norm of the balanced representation; the ||T||_1 entering
// the departure-from-normality resolvent profile.
inline double nuclear_norm(const DenseOperator& t) {
    auto& c = t.cache();
    std::call_once(c.nuclear_once, [&] {
        Eigen::BDCSVD<Matrix> svd(t.balanced());
        c.nuclear_norm = svd.singularValues().sum();
    });
    return c.nuclear_norm;
}

// True iff ||T*T - TT*||_op <= tol * ||T||_op^2 with the weighted adjoint.
// Zero operators are normal.
inline bool is_normal(const DenseOperator& t, double tol = 1e-10) {
    require(tol > 0.0, "is_normal: tolerance must be positive");
    auto& c = t.cache();
    std::call_once(c.normal_once, [&] {
        const Matrix s = t.balanced();
        const double ns = detail::spectral_norm(s);
        if (ns == 0.0) {
            c.normality_defect = 0.0;
            return;
        }
        const Matrix comm = s.adjoint() * s - s * s.adjoint();
        c.normality_defect = detail::spectral_norm(comm) / (ns * ns);
    });
    return c.normality_defect <= tol;
}

struct SpectrumResult {
    Vector eigenvalues;
    // Present iff the operator was judged normal; columns orthonormal in the
    // weighted inner product, T = Phi diag(lambda) Phi^* there.
    std::optional<Matrix> eigenvectors;
};

namespace detail {

// Eigendecomposition through the similarity S = M^(1/2) T M^(-1/2): a
// Hermitian solver when T is self-adjoint in l2(G), complex Schur otherwise.
inline void compute_spectrum(const DenseOperator& t) {
    auto& c = t.cache();
    std::call_once(c.eigen_once, [&] {
        const Index n = t.dim();
        if (n == 0) {
            c.eigenvalues = Vector();
            return;
        }
        const Matrix s = t.balanced();
        const double ns = spectral_norm(s);
        const double herm_defect = spectral_norm(Matrix(s - s.adjoint()));
        const auto unbalance = [&](Matrix u) {
            for (Index i = 0; i < u.rows(); ++i) u.row(i) /= std::sqrt(t.weights()[i]);
            return u;
        };
        if (herm_defect <= 1e-12 * std::max(1.0, ns)) {
            Eigen::SelfAdjointEigenSolver<Matrix> es(Matrix(0.5 * (s + s.adjoint())));
            if (es.info() != Eigen::Success)
                throw NumericalError("spectrum: Hermitian eigensolver failed to converge");
            c.eigenvalues = es.eigenvalues().cast<Complex>();
            c.eigenvectors = unbalance(es.eigenvectors());
            c.self_adjoint = true;
            return;
        }
        Eigen::ComplexSchur<Matrix> schur(s, /*computeU=*/true);
        if (schur.info() != Eigen::Success) {
            const double resid = herm_defect / std::max(1.0, ns);
            throw NumericalError("spectrum: Schur decomposition failed to converge (residual scale " +
                                 std::to_string(resid) + ")");
        }
        c.eigenvalues = schur.matrixT().diagonal();
        if (is_normal(t)) c.eigenvectors = unbalance(schur.matrixU());
    });
}

}  // namespace detail

inline SpectrumResult spectrum(const DenseOperator& t) {
    detail::compute_spectrum(t);
    auto& c = t.cache();
    return SpectrumResult{c.eigenvalues, c.eigenvectors};
}

inline const Vector& eigenvalues(const DenseOperator& t) {
    detail::compute_spectrum(t);
    return t.cache().eigenvalues;
}

inline double spectral_distance(const DenseOperator& t, Complex z) {
    const Vector& ev = eigenvalues(t);
    double d = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < ev.size(); ++i) d = std::min(d, std::abs(z - ev[i]));
    return d;
}

// R_z(T) = (z Id - T)^-1. Rejects z too close to the spectrum or solves whose
// conditioning makes the inverse meaningless.
inline DenseOperator resolvent(const DenseOperator& t, Complex z) {
    const Index n = t.dim();
    const double scale = 1.0 + operator_norm(t);
    const double dist = spectral_distance(t, z);
    if (dist < 1e-12 * scale)
        throw SingularityError("resolvent: z within 1e-12 of the spectrum (dist = " + std::to_string(dist) + ")");
    Matrix a = -t.matrix();
    a.diagonal().array() += z;
    Eigen::PartialPivLU<Matrix> lu(a);
    const double rcond = lu.rcond();
    if (rcond < 1e-14)
        throw SingularityError("resolvent: solve condition number exceeds 1e14 at z = (" +
                               std::to_string(z.real()) + ", " + std::to_string(z.imag()) + ")");
    Matrix r = lu.solve(Matrix::Identity(n, n));
    const double resid = (a * r - Matrix::Identity(n, n)).norm();
    if (!(resid <= 1e-10 / std::max(rcond, 1e-14)))
        throw NumericalError("resolvent: residual " + std::to_string(resid) + " too large for conditioning");
    return DenseOperator(std::move(r), t.weights());
}

enum class ProfileMode { NormalExact, GeneralBound };

// Pointwise upper bound gamma_T(z) on the resolvent norm. NormalExact returns
// 1/dist(z, sigma(T)) and is a valid bound only for normal T; GeneralBound is
// the departure-from-normality estimate exp(2 ||T||_1 / d) / d. Other profile
// constructions (Szehr, Gil) are possible extension points; only this closed
// form is implemented.
inline double resolvent_profile(const DenseOperator& t, Complex z, ProfileMode mode) {
    const double d = spectral_distance(t, z);
    if (d <= 0.0 || d < 1e-300) throw SingularityError("resolvent_profile: z lies on the spectrum");
    switch (mode) {
        case ProfileMode::NormalExact: return 1.0 / d;
        case ProfileMode::GeneralBound: return std::exp(2.0 * nuclear_norm(t) / d) / d;
    }
    throw ConfigError("resolvent_profile: unknown mode");
}

// gamma_T with the mode chosen by a normality test.
inline double resolvent_profile(const DenseOperator& t, Complex z) {
    return resolvent_profile(t, z, is_normal(t) ? ProfileMode::NormalExact : ProfileMode::GeneralBound);
}

}  // namespace spectral_transfer
