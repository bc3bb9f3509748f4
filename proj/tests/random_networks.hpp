#pragma once

#include "spectral_transfer/network.hpp"
#include "spectral_transfer/operators.hpp"
#include "test_helpers.hpp"

namespace st_test {

using namespace spectral_transfer;

enum class FilterFamily { Generic, Entire, Hol, Cont };

inline Filter random_filter(FilterFamily fam, const DenseOperator& t, Rng& rng,
                            std::optional<Complex> shared_pole = std::nullopt) {
    switch (fam) {
        case FilterFamily::Generic: {
            // closed forms with exact Lipschitz constants
            const int pick = static_cast<int>(rng.integer(3));
            if (pick == 0) {
                const double c = rng.uniform(-1.5, 1.5);
                const double a = rng.uniform(0.2, 2.0);
                return GenericFilter{[c, a](Complex z) { return c * std::sin(a * z); },
                                     std::abs(c) * a};
            }
            if (pick == 1) return GenericFilter{[](Complex z) { return Complex(std::abs(z), 0.0); }, 1.0};
            const Complex alpha(rng.uniform(-1, 1), rng.uniform(-1, 1));
            const Complex beta(rng.uniform(-1, 1), rng.uniform(-1, 1));
            return GenericFilter{[alpha, beta](Complex z) { return alpha + beta * z; }, std::abs(beta)};
        }
        case FilterFamily::Entire: {
            EntireFilter g;
            const int deg = 1 + static_cast<int>(rng.integer(3));
            for (int k = 0; k <= deg; ++k)
                g.coeffs.emplace_back(rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8));
            return g;
        }
        case FilterFamily::Hol: {
            const Complex omega = shared_pole ? *shared_pole
                                              : Complex(-(operator_norm(t) + rng.uniform(0.5, 2.0)),
                                                        rng.uniform(-0.5, 0.5));
            HolFilter g{omega, {}};
            const int deg = 1 + static_cast<int>(rng.integer(4));
            for (int k = 0; k <= deg; ++k)
                g.coeffs.emplace_back(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
            return g;
        }
        case FilterFamily::Cont: {
            const Complex omega(rng.uniform(-0.5, 0.5), operator_norm(t) + rng.uniform(0.5, 1.5));
            ContFilter g{omega, {}};
            for (int mu = 0; mu <= 1; ++mu)
                for (int nu = 0; nu <= 1; ++nu)
                    if (rng.uniform() < 0.8)
                        g.coeffs[{mu, nu}] = Complex(rng.uniform(-1, 1), rng.uniform(-1, 1));
            return g;
        }
    }
    throw std::logic_error("unreachable");
}

// Seeded random GCN exercising all four filter families, pooling layers, and
// every nonlinearity. Layers <= 3, channels <= 4, nodes <= 12.
inline Network random_network(std::uint64_t seed) {
    Rng rng(seed);
    const int n_layers = 1 + static_cast<int>(rng.integer(3));
    const FilterFamily fam = static_cast<FilterFamily>(seed % 4);
    const bool needs_normal = fam == FilterFamily::Generic || fam == FilterFamily::Cont;

    std::vector<LayerSpec> specs;
    Index prev_channels = 1 + static_cast<Index>(rng.integer(4));
    GraphPtr prev_graph;
    for (int n = 0; n < n_layers; ++n) {
        const Index nodes = 2 + static_cast<Index>(rng.integer(11));
        const bool pool = n > 0 && rng.uniform() < 0.35;
        LayerSpec spec;
        spec.graph = (n == 0 || pool || prev_graph == nullptr)
                         ? (needs_normal ? random_undirected_graph(nodes, rng)
                                         : (rng.uniform() < 0.5 ? random_undirected_graph(nodes, rng)
                                                                : random_directed_graph(nodes, rng)))
                         : prev_graph;
        spec.op_kind = rng.uniform() < 0.5 ? OperatorKind::Laplacian : OperatorKind::Adjacency;
        if (pool && spec.graph != prev_graph) {
            Matrix p = rng.complex_gaussian_vector(spec.graph->size() * prev_graph->size())
                           .reshaped(spec.graph->size(), prev_graph->size());
            spec.connect = 0.5 * p;
        }
        const Index k_out = 1 + static_cast<Index>(rng.integer(4));
        const DenseOperator t = characteristic_operator(*spec.graph, spec.op_kind);
        // Laurent filters applied to one operator share the layer's pole.
        std::optional<Complex> pole;
        if (fam == FilterFamily::Hol)
            pole = Complex(-(operator_norm(t) + rng.uniform(0.5, 2.0)), rng.uniform(-0.5, 0.5));
        spec.filters.resize(k_out);
        for (Index i = 0; i < k_out; ++i)
            for (Index j = 0; j < prev_channels; ++j)
                spec.filters[i].push_back(random_filter(fam, t, rng, pole));
        const NonlinKind rhos[4] = {NonlinKind::Identity, NonlinKind::Modulus, NonlinKind::ReLU,
                                    NonlinKind::ShiftedSigmoid};
        spec.rho = Nonlinearity::make(rhos[rng.integer(4)]);
        specs.push_back(spec);
        prev_channels = k_out;
        prev_graph = spec.graph;
    }
    return Network(std::move(specs));
}

}  // namespace st_test
