#pragma once

#include <complex>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "spectral_transfer/error.hpp"

namespace spectral_transfer {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

// Node-weighted, edge-weighted graph. W[i][j] is the weight of edge i -> j;
// undirected graphs keep W exactly symmetric. Immutable after construction.
//
// Only nonnegative real edge weights are supported. Whether complex or
// negative weights are meaningful for directed shift operators is left open
// here; constructing such a graph is rejected.
class WeightedGraph {
public:
    WeightedGraph(RealMatrix edge_weights, RealVector node_weights, bool directed = false)
        : W_(std::move(edge_weights)), mu_(std::move(node_weights)), directed_(directed) {
        require(W_.rows() == W_.cols(), "WeightedGraph: adjacency matrix must be square");
        require(mu_.size() == W_.rows(), "WeightedGraph: node-weight count must match node count");
        for (Index i = 0; i < mu_.size(); ++i)
            require(mu_[i] > 0.0, "WeightedGraph: node weight mu[" + std::to_string(i) + "] must be positive");
        for (Index i = 0; i < W_.rows(); ++i) {
            require(W_(i, i) == 0.0, "WeightedGraph: diagonal entry W[" + std::to_string(i) + "][" +
                                         std::to_string(i) + "] must be zero");
            for (Index j = 0; j < W_.cols(); ++j)
                require(W_(i, j) >= 0.0, "WeightedGraph: negative edge weight at (" + std::to_string(i) +
                                             ", " + std::to_string(j) + ")");
        }
        if (!directed_) require(W_ == W_.transpose().eval(), "WeightedGraph: undirected graph requires W == W^T");
    }

    Index size() const { return W_.rows(); }
    const RealMatrix& adjacency() const { return W_; }
    const RealVector& node_weights() const { return mu_; }
    bool directed() const { return directed_; }

    // Out-degrees: row sums of W.
    RealVector degrees() const { return W_.rowwise().sum(); }

private:
    RealMatrix W_;
    RealVector mu_;
    bool directed_;
};

using GraphPtr = std::shared_ptr<const WeightedGraph>;

inline GraphPtr make_graph(RealMatrix W, RealVector mu, bool directed = false) {
    return std::make_shared<const WeightedGraph>(std::move(W), std::move(mu), directed);
}

inline GraphPtr make_graph(RealMatrix W, double uniform_mu = 1.0, bool directed = false) {
    const Index n = W.rows();
    return make_graph(std::move(W), RealVector::Constant(n, uniform_mu), directed);
}

// A node-signal in l2(G), bound to the graph whose inner product it carries.
struct Signal {
    Vector values;
    GraphPtr graph;

    Signal(Vector v, GraphPtr g) : values(std::move(v)), graph(std::move(g)) {
        require(graph != nullptr, "Signal: null graph binding");
        require(values.size() == graph->size(), "Signal: length must equal the node count of its graph");
    }
};

// <f, g> = sum_i conj(f_i) g_i mu_i ; conjugate-linear in the first slot.
inline Complex weighted_inner_product(const Vector& f, const Vector& g, const RealVector& mu) {
    require(f.size() == g.size() && f.size() == mu.size(),
            "weighted_inner_product: dimension mismatch");
    Complex acc(0.0, 0.0);
    for (Index i = 0; i < f.size(); ++i) acc += std::conj(f[i]) * g[i] * mu[i];
    return acc;
}

inline double weighted_norm(const Vector& f, const RealVector& mu) {
    double acc = 0.0;
    for (Index i = 0; i < f.size(); ++i) acc += std::norm(f[i]) * mu[i];
    return std::sqrt(acc);
}

inline Complex inner_product(const Signal& f, const Signal& g) {
    require(f.graph == g.graph, "inner_product: signals bound to different graphs");
    return weighted_inner_product(f.values, g.values, f.graph->node_weights());
}

inline double norm(const Signal& f) { return weighted_norm(f.values, f.graph->node_weights()); }

namespace detail {

// Shared lazy cache for derived spectral data of an operator. Copies of a
// DenseOperator share the cache; fills are guarded by once-flags so that
// concurrent reads on shared operators stay safe.
struct OperatorCache {
    std::once_flag eigen_once;
    Vector eigenvalues;
    std::optional<Matrix> eigenvectors;  // weighted-orthonormal, present iff judged normal
    bool self_adjoint = false;

    std::once_flag norm_once;
    double op_norm = 0.0;

    std::once_flag nuclear_once;
    double nuclear_norm = 0.0;

    std::once_flag normal_once;
    double normality_defect = 0.0;  // ||T*T - TT*||_op / ||T||_op^2
};

}  // namespace detail

// Square complex matrix acting on l2(G); carries the mu-vector of the
// underlying graph so the weighted adjoint T* = M^-1 T^H M is well defined.
class DenseOperator {
public:
    DenseOperator(Matrix matrix, RealVector mu)
        : mat_(std::move(matrix)), mu_(std::move(mu)), cache_(std::make_shared<detail::OperatorCache>()) {
        require(mat_.rows() == mat_.cols(), "DenseOperator: matrix must be square");
        require(mu_.size() == mat_.rows(), "DenseOperator: weight vector must match matrix dimension");
        for (Index i = 0; i < mu_.size(); ++i)
            require(mu_[i] > 0.0, "DenseOperator: weights must be positive");
    }

    Index dim() const { return mat_.rows(); }
    const Matrix& matrix() const { return mat_; }
    const RealVector& weights() const { return mu_; }

    // M^(1/2) T M^(-1/2): the representation of T in the orthonormal basis
    // e_i / sqrt(mu_i) of l2(G). Unweighted spectral/Frobenius norms of this
    // matrix are the weighted norms of T.
    Matrix balanced() const {
        Matrix b = mat_;
        for (Index i = 0; i < dim(); ++i) {
            const double s = std::sqrt(mu_[i]);
            b.row(i) *= s;
            b.col(i) /= s;
        }
        return b;
    }

    detail::OperatorCache& cache() const { return *cache_; }

private:
    Matrix mat_;
    RealVector mu_;
    std::shared_ptr<detail::OperatorCache> cache_;
};

enum class OperatorKind { Adjacency, Laplacian, NormalizedLaplacian };

inline std::string to_string(OperatorKind k) {
    switch (k) {
        case OperatorKind::Adjacency: return "adjacency";
        case OperatorKind::Laplacian: return "laplacian";
        case OperatorKind::NormalizedLaplacian: return "normalized-laplacian";
    }
    return "?";
}

// Characteristic operators: M^-1 W, M^-1 (D - W), M^-1 D^-1/2 (D - W) D^-1/2.
// D is the diagonal of row sums (out-degrees for directed graphs), matching
// M^-1 (D - W) acting on out-neighborhoods.
inline DenseOperator characteristic_operator(const WeightedGraph& g, OperatorKind kind) {
    const Index n = g.size();
    const RealVector d = g.degrees();
    const RealVector& mu = g.node_weights();
    RealMatrix m(n, n);
    switch (kind) {
        case OperatorKind::Adjacency:
            m = g.adjacency();
            break;
        case OperatorKind::Laplacian:
            m = -g.adjacency();
            m.diagonal() += d;
            break;
        case OperatorKind::NormalizedLaplacian: {
            for (Index i = 0; i < n; ++i)
                if (d[i] <= 0.0)
                    throw ConfigError("characteristic_operator: normalized Laplacian undefined, node " +
                                      std::to_string(i) + " is isolated (zero degree)");
            RealMatrix lap = -g.adjacency();
            lap.diagonal() += d;
            const RealVector dis = d.cwiseSqrt().cwiseInverse();
            m = dis.asDiagonal() * lap * dis.asDiagonal();
            break;
        }
    }
    m = mu.cwiseInverse().asDiagonal() * m;
    return DenseOperator(Matrix(m.cast<Complex>()), mu);
}

inline DenseOperator characteristic_operator(const GraphPtr& g, OperatorKind kind) {
    return characteristic_operator(*g, kind);
}

// Graph Dirichlet energy E(u) = <u, Delta u>. The operator form is the
// definition adopted here; the ordered-pair sum over edges equals 2 E(u).
inline double energy_form(const WeightedGraph& g, const Vector& u) {
    require(!g.directed(), "energy_form: defined for undirected graphs only");
    require(u.size() == g.size(), "energy_form: signal length must match graph");
    // <u, M^-1 (D - W) u>_mu = u^H (D - W) u, real for symmetric D - W.
    RealMatrix dw = -g.adjacency();
    dw.diagonal() += g.degrees();
    const Complex val = u.dot(dw.cast<Complex>() * u);
    return val.real();
}

inline double energy_form(const Signal& u) { return energy_form(*u.graph, u.values); }

// Energy bilinear form E(u, v) = <u, Delta v>.
inline Complex energy_form_bilinear(const WeightedGraph& g, const Vector& u, const Vector& v) {
    require(!g.directed(), "energy_form: defined for undirected graphs only");
    RealMatrix dw = -g.adjacency();
    dw.diagonal() += g.degrees();
    return u.dot(dw.cast<Complex>() * v);
}

}  // namespace spectral_transfer
