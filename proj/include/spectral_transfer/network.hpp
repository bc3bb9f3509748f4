#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "spectral_transfer/error.hpp"
#include "spectral_transfer/filters.hpp"
#include "spectral_transfer/graph.hpp"
#include "spectral_transfer/operators.hpp"
#include "spectral_transfer/rng.hpp"

namespace spectral_transfer {

enum class NonlinKind { Identity, Modulus, ReLU, ShiftedSigmoid };

inline std::string to_string(NonlinKind k) {
    switch (k) {
        case NonlinKind::Identity: return "identity";
        case NonlinKind::Modulus: return "modulus";
        case NonlinKind::ReLU: return "relu";
        case NonlinKind::ShiftedSigmoid: return "shifted-sigmoid";
    }
    return "?";
}

// Pointwise nonlinearity rho: C -> C with rho(0) = 0. ReLU and the shifted
// sigmoid act separately on real and imaginary parts, which preserves zero
// and keeps the stated Lipschitz constants.
struct Nonlinearity {
    NonlinKind kind = NonlinKind::Identity;
    double lipschitz = 1.0;  // L_n

    static Nonlinearity make(NonlinKind k) {
        switch (k) {
            case NonlinKind::Identity: return {k, 1.0};
            case NonlinKind::Modulus: return {k, 1.0};
            case NonlinKind::ReLU: return {k, 1.0};
            case NonlinKind::ShiftedSigmoid: return {k, 0.25};
        }
        throw ConfigError("Nonlinearity: unknown kind");
    }

    Complex operator()(Complex z) const {
        switch (kind) {
            case NonlinKind::Identity: return z;
            case NonlinKind::Modulus: return {std::abs(z), 0.0};
            case NonlinKind::ReLU: return {std::max(z.real(), 0.0), std::max(z.imag(), 0.0)};
            case NonlinKind::ShiftedSigmoid: {
                const auto s = [](double x) { return 1.0 / (1.0 + std::exp(-x)) - 0.5; };
                return {s(z.real()), s(z.imag())};
            }
        }
        return z;
    }

    void apply_inplace(Matrix& m) const {
        if (kind == NonlinKind::Identity) return;
        for (Index j = 0; j < m.cols(); ++j)
            for (Index i = 0; i < m.rows(); ++i) m(i, j) = (*this)(m(i, j));
    }
};

// K signals on one graph, stored column-wise.
struct FeatureBundle {
    Matrix signals;  // n x K
    GraphPtr graph;

    FeatureBundle(Matrix s, GraphPtr g) : signals(std::move(s)), graph(std::move(g)) {
        require(graph != nullptr, "FeatureBundle: null graph");
        require(signals.rows() == graph->size(), "FeatureBundle: signal length must match graph");
        require(signals.cols() >= 1, "FeatureBundle: need at least one channel");
    }

    Index channels() const { return signals.cols(); }
};

inline double bundle_norm(const FeatureBundle& f) {
    double acc = 0.0;
    for (Index j = 0; j < f.signals.cols(); ++j) {
        const double v = weighted_norm(f.signals.col(j), f.graph->node_weights());
        acc += v * v;
    }
    return std::sqrt(acc);
}

inline double bundle_distance(const FeatureBundle& f, const FeatureBundle& h) {
    require(f.signals.rows() == h.signals.rows() && f.signals.cols() == h.signals.cols(),
            "bundle_distance: shape mismatch");
    double acc = 0.0;
    for (Index j = 0; j < f.signals.cols(); ++j) {
        const double v = weighted_norm(Vector(f.signals.col(j) - h.signals.col(j)), f.graph->node_weights());
        acc += v * v;
    }
    return std::sqrt(acc);
}

// Specification of one layer before assembly. `connect` maps the previous
// layer's signal space into this layer's; absent means the identity (the two
// spaces must then coincide).
struct LayerSpec {
    GraphPtr graph;
    OperatorKind op_kind = OperatorKind::Laplacian;
    std::vector<std::vector<Filter>> filters;  // [K_out][K_in]
    Nonlinearity rho = Nonlinearity::make(NonlinKind::Identity);
    std::optional<Matrix> connect;
};

struct Layer {
    GraphPtr graph;
    OperatorKind op_kind;
    DenseOperator op;
    std::vector<std::vector<Filter>> filters;
    Nonlinearity rho;
    std::optional<Matrix> connect;
    double connect_lipschitz;    // R_n (operator norm for linear maps, 1 for identity on the same space)
    std::vector<Matrix> bank;    // materialized g_ij(op), indexed i * k_in + j
    Index k_in = 0, k_out = 0;

    const Matrix& bank_at(Index i, Index j) const { return bank[i * k_in + j]; }
};

// Immutable layered GCN. Filter matrices g_ij(T_n) are materialized once at
// construction and reused across inputs; T_n is fixed per layer.
class Network {
public:
    explicit Network(std::vector<LayerSpec> specs, GraphPtr input_graph = nullptr) {
        require(!specs.empty(), "Network: need at least one layer");
        input_graph_ = input_graph ? std::move(input_graph) : specs.front().graph;
        require(input_graph_ != nullptr, "Network: null input graph");
        const WeightedGraph* prev = input_graph_.get();
        for (std::size_t n = 0; n < specs.size(); ++n) {
            LayerSpec& s = specs[n];
            require(s.graph != nullptr, "Network: layer " + std::to_string(n) + " has no graph");
            require(!s.filters.empty() && !s.filters.front().empty(),
                    "Network: layer " + std::to_string(n) + " has an empty filter grid");
            const Index k_out = static_cast<Index>(s.filters.size());
            const Index k_in = static_cast<Index>(s.filters.front().size());
            for (const auto& row : s.filters)
                require(static_cast<Index>(row.size()) == k_in,
                        "Network: ragged filter grid in layer " + std::to_string(n));
            if (n > 0)
                require(k_in == layers_[n - 1].k_out,
                        "Network: channel chain broken entering layer " + std::to_string(n));

            Layer layer{s.graph,
                        s.op_kind,
                        characteristic_operator(*s.graph, s.op_kind),
                        std::move(s.filters),
                        s.rho,
                        std::move(s.connect),
                        1.0,
                        {},
                        k_in,
                        k_out};
            if (layer.connect) {
                require(layer.connect->rows() == s.graph->size(),
                        "Network: connecting operator of layer " + std::to_string(n) +
                            " does not land in the layer's graph");
                require(layer.connect->cols() == prev->size(),
                        "Network: connecting operator of layer " + std::to_string(n) +
                            " does not accept the previous space");
                layer.connect_lipschitz = operator_norm(
                    LinearMap(*layer.connect, prev->node_weights(), s.graph->node_weights()));
            } else {
                require(s.graph->size() == prev->size(),
                        "Network: identity connection of layer " + std::to_string(n) +
                            " requires equal-sized spaces");
                layer.connect_lipschitz = operator_norm(
                    LinearMap(Matrix::Identity(prev->size(), prev->size()), prev->node_weights(),
                              s.graph->node_weights()));
            }
            layer.bank.reserve(k_out * k_in);
            for (Index i = 0; i < k_out; ++i)
                for (Index j = 0; j < k_in; ++j) layer.bank.push_back(apply_filter(layer.filters[i][j], layer.op));
            layers_.push_back(std::move(layer));
            prev = layers_.back().graph.get();
        }
    }

    const std::vector<Layer>& layers() const { return layers_; }
    const GraphPtr& input_graph() const { return input_graph_; }
    Index input_channels() const { return layers_.front().k_in; }
    Index output_channels() const { return layers_.back().k_out; }
    const GraphPtr& output_graph() const { return layers_.back().graph; }
    Index depth() const { return static_cast<Index>(layers_.size()); }

private:
    std::vector<Layer> layers_;
    GraphPtr input_graph_;
};

// The layer map with the nonlinearity stripped: out_i = sum_j g_ij(T) P(f_j).
inline Matrix layer_linear(const Layer& layer, const Matrix& in) {
    const Matrix staged = layer.connect ? Matrix(*layer.connect * in) : in;
    Matrix out = Matrix::Zero(layer.graph->size(), layer.k_out);
    for (Index i = 0; i < layer.k_out; ++i)
        for (Index j = 0; j < layer.k_in; ++j) out.col(i) += layer.bank_at(i, j) * staged.col(j);
    return out;
}

// f^{n+1}_i = rho(sum_j g_ij(T) P(f^n_j)), evaluated layer by layer.
inline FeatureBundle forward(const Network& net, const FeatureBundle& input) {
    require(input.channels() == net.input_channels(),
            "forward: input has " + std::to_string(input.channels()) + " channels, layer 0 expects " +
                std::to_string(net.input_channels()));
    require(input.graph->size() == net.input_graph()->size() &&
                input.graph->node_weights() == net.input_graph()->node_weights(),
            "forward: input bundle lives on the wrong space for layer 0");
    Matrix cur = input.signals;
    for (const Layer& layer : net.layers()) {
        cur = layer_linear(layer, cur);
        layer.rho.apply_inplace(cur);
    }
    return FeatureBundle(std::move(cur), net.output_graph());
}

// ---------------------------------------------------------------------------
// Per-layer stability constants B_n
// ---------------------------------------------------------------------------

namespace detail {

inline double bank_sq_sum_at(const Layer& layer, Complex z) {
    double acc = 0.0;
    for (const auto& row : layer.filters)
        for (const auto& g : row) acc += std::norm(evaluate(g, z));
    return acc;
}

}  // namespace detail

// B_n of the input-stability theorem. Normal T_n: the exact spectral supremum
// sqrt(sup_lambda sum_ij |g_ij(lambda)|^2). General T_n: the entire-series
// formula when the whole bank is entire, or the Laurent bound
// sqrt(sum_ij (sum_k |b_k| C^k)^2) with gamma_T(omega) <= C when the whole
// bank shares a pole. (The latter uses the quantity the norm bound's proof
// establishes; the plain semi-norm fails to dominate constant filters.)
inline double layer_constant_B(const Layer& layer) {
    if (is_normal(layer.op)) {
        const Vector& ev = eigenvalues(layer.op);
        double best = 0.0;
        for (Index a = 0; a < ev.size(); ++a)
            best = std::max(best, detail::bank_sq_sum_at(layer, ev[a]));
        return std::sqrt(best);
    }
    const bool all_entire = [&] {
        for (const auto& row : layer.filters)
            for (const auto& g : row)
                if (!std::holds_alternative<EntireFilter>(g)) return false;
        return true;
    }();
    if (all_entire) {
        std::size_t max_len = 0;
        for (const auto& row : layer.filters)
            for (const auto& g : row) max_len = std::max(max_len, std::get<EntireFilter>(g).coeffs.size());
        const double nt = operator_norm(layer.op);
        double acc = 0.0;
        double np = 1.0;
        for (std::size_t k = 0; k < max_len; ++k, np *= nt) {
            double sq = 0.0;
            for (const auto& row : layer.filters)
                for (const auto& g : row) {
                    const auto& coeffs = std::get<EntireFilter>(g).coeffs;
                    if (k < coeffs.size()) sq += std::norm(coeffs[k]);
                }
            acc += std::sqrt(sq) * np;
        }
        return acc;
    }
    const bool all_hol = [&] {
        for (const auto& row : layer.filters)
            for (const auto& g : row)
                if (!std::holds_alternative<HolFilter>(g)) return false;
        return true;
    }();
    if (all_hol) {
        const Complex omega = std::get<HolFilter>(layer.filters.front().front()).omega;
        for (const auto& row : layer.filters)
            for (const auto& g : row)
                require(std::get<HolFilter>(g).omega == omega,
                        "layer_constant_B: Laurent filters in one layer must share the pole");
        const double C = resolvent_profile(layer.op, omega, ProfileMode::GeneralBound);
        double sq = 0.0;
        for (const auto& row : layer.filters)
            for (const auto& g : row) {
                const double b = filter_norm_bound(std::get<HolFilter>(g), C);
                sq += b * b;
            }
        return std::sqrt(sq);
    }
    throw ConfigError("layer_constant_B: mixed filter families on a non-normal operator");
}

// The holomorphic-contour form of B_n:
// sqrt(sum_ij |g_ij(inf)|^2) + (1/2pi) oint gamma_T(z) sqrt(sum_ij |g_ij(z)|^2) d|z|.
inline double layer_constant_B_contour(const Layer& layer, const ContourSpec& c) {
    double inf_sq = 0.0;
    for (const auto& row : layer.filters)
        for (const auto& g : row) {
            require(std::holds_alternative<HolFilter>(g),
                    "layer_constant_B_contour: bank must consist of Laurent filters");
            require(std::abs(std::get<HolFilter>(g).omega - c.center) > c.radius,
                    "layer_constant_B_contour: filter poles must lie outside the contour");
            const auto& coeffs = std::get<HolFilter>(g).coeffs;
            if (!coeffs.empty()) inf_sq += std::norm(coeffs[0]);
        }
    const double integral = contour_line_integral(
        [&](Complex z) {
            return resolvent_profile(layer.op, z) * std::sqrt(detail::bank_sq_sum_at(layer, z));
        },
        c);
    return std::sqrt(inf_sq) + integral;
}

// ---------------------------------------------------------------------------
// Graph-level aggregation
// ---------------------------------------------------------------------------

// Psi^p readout: component i = (sum_g |f_i(g)|^p mu_g)^(1/p), p >= 2.
inline RealVector aggregate(const FeatureBundle& f, double p) {
    require(p >= 2.0, "aggregate: p must be >= 2");
    const RealVector& mu = f.graph->node_weights();
    RealVector out(f.channels());
    for (Index j = 0; j < f.channels(); ++j) {
        double acc = 0.0;
        for (Index i = 0; i < f.signals.rows(); ++i) acc += std::pow(std::abs(f.signals(i, j)), p) * mu[i];
        out[j] = std::pow(acc, 1.0 / p);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Random Laurent banks (the seeded construction used by experiment configs)
// ---------------------------------------------------------------------------

inline std::vector<std::vector<Filter>> random_laurent_bank(Index k_out, Index k_in, Complex omega,
                                                            int max_order, double coeff_lo,
                                                            double coeff_hi, Rng& rng) {
    require(max_order >= 0, "random_laurent_bank: order must be nonnegative");
    std::vector<std::vector<Filter>> grid(k_out);
    for (Index i = 0; i < k_out; ++i) {
        grid[i].reserve(k_in);
        for (Index j = 0; j < k_in; ++j) {
            HolFilter g{omega, {}};
            g.coeffs.reserve(max_order + 1);
            for (int k = 0; k <= max_order; ++k) g.coeffs.emplace_back(rng.uniform(coeff_lo, coeff_hi), 0.0);
            grid[i].push_back(std::move(g));
        }
    }
    return grid;
}

}  // namespace spectral_transfer
