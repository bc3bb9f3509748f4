#pragma once

#include <cstdio>
#include <fstream>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "spectral_transfer/coarsen.hpp"
#include "spectral_transfer/error.hpp"
#include "spectral_transfer/filters.hpp"
#include "spectral_transfer/graph.hpp"
#include "spectral_transfer/network.hpp"
#include "spectral_transfer/stability.hpp"
#include "spectral_transfer/transfer_cases.hpp"

namespace spectral_transfer {

using json = nlohmann::json;

namespace detail {

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("parse error in " + path + ": " + e.what());
    }
    return j;
}

inline Complex parse_complex(const json& j, const std::string& what) {
    if (j.is_number()) return Complex(j.get<double>(), 0.0);
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return Complex(j[0].get<double>(), j[1].get<double>());
    throw ConfigError(what + ": expected a number or [re, im] pair");
}

inline json dump_complex(Complex z) { return json::array({z.real(), z.imag()}); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Graph files: { "n": int, "mu": [...], "edges": [[i, j, w]...], "directed": bool }
// Undirected files list each edge once; the loader symmetrizes.
// ---------------------------------------------------------------------------

inline GraphPtr graph_from_json(const json& j) {
    require(j.contains("n") && j["n"].is_number_integer(), "graph: missing node count 'n'");
    const Index n = j["n"].get<Index>();
    require(n >= 1, "graph: need at least one node");
    RealVector mu = RealVector::Ones(n);
    if (j.contains("mu")) {
        require(j["mu"].is_array() && static_cast<Index>(j["mu"].size()) == n,
                "graph: 'mu' must list one weight per node");
        for (Index i = 0; i < n; ++i) mu[i] = j["mu"][i].get<double>();
    }
    const bool directed = j.value("directed", false);
    RealMatrix w = RealMatrix::Zero(n, n);
    if (j.contains("edges")) {
        for (const auto& e : j["edges"]) {
            require(e.is_array() && e.size() == 3, "graph: edges must be [i, j, w] triples");
            const Index a = e[0].get<Index>(), b = e[1].get<Index>();
            const double v = e[2].get<double>();
            require(a >= 0 && a < n && b >= 0 && b < n, "graph: edge endpoint out of range");
            w(a, b) = v;
            if (!directed) w(b, a) = v;
        }
    }
    return make_graph(std::move(w), std::move(mu), directed);
}

inline GraphPtr load_graph(const std::string& path) { return graph_from_json(detail::load_json_file(path)); }

inline json graph_to_json(const WeightedGraph& g) {
    json j;
    j["n"] = g.size();
    j["directed"] = g.directed();
    j["mu"] = json::array();
    for (Index i = 0; i < g.size(); ++i) j["mu"].push_back(g.node_weights()[i]);
    j["edges"] = json::array();
    for (Index i = 0; i < g.size(); ++i)
        for (Index k = g.directed() ? 0 : i + 1; k < g.size(); ++k)
            if (i != k && g.adjacency()(i, k) != 0.0) j["edges"].push_back({i, k, g.adjacency()(i, k)});
    return j;
}

inline void save_graph(const WeightedGraph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write file: " + path);
    out << graph_to_json(g).dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Filter files: { "kind": "entire"|"hol"|"cont"|"generic-table",
//                 "omega": [re, im]?, "coeffs": ... }
// ---------------------------------------------------------------------------

inline Filter filter_from_json(const json& j) {
    require(j.contains("kind") && j["kind"].is_string(), "filter: missing 'kind'");
    const std::string kind = j["kind"].get<std::string>();
    if (kind == "entire") {
        EntireFilter g;
        for (const auto& c : j.at("coeffs")) g.coeffs.push_back(detail::parse_complex(c, "filter coeff"));
        return g;
    }
    if (kind == "hol") {
        HolFilter g{detail::parse_complex(j.at("omega"), "filter omega"), {}};
        for (const auto& c : j.at("coeffs")) g.coeffs.push_back(detail::parse_complex(c, "filter coeff"));
        return g;
    }
    if (kind == "cont") {
        ContFilter g{detail::parse_complex(j.at("omega"), "filter omega"), {}};
        for (const auto& c : j.at("coeffs")) {
            require(c.is_array() && c.size() == 3, "cont filter coeffs are [mu, nu, value] triples");
            g.coeffs[{c[0].get<int>(), c[1].get<int>()}] = detail::parse_complex(c[2], "filter coeff");
        }
        return g;
    }
    if (kind == "generic-table") {
        // tabulated spectral map: exact lookup at the listed points
        auto table = std::make_shared<std::vector<std::pair<Complex, Complex>>>();
        for (const auto& row : j.at("coeffs")) {
            require(row.is_array() && row.size() == 2, "generic-table rows are [z, g(z)] pairs");
            table->emplace_back(detail::parse_complex(row[0], "table point"),
                                detail::parse_complex(row[1], "table value"));
        }
        GenericFilter g;
        g.rule = [table](Complex z) {
            for (const auto& [p, v] : *table)
                if (std::abs(p - z) <= 1e-9 * (1.0 + std::abs(p))) return v;
            throw ConfigError("generic-table filter evaluated off its tabulated points");
        };
        if (j.contains("lipschitz")) g.lipschitz_hint = j["lipschitz"].get<double>();
        return g;
    }
    throw ConfigError("filter: unknown kind '" + kind + "'");
}

inline json filter_to_json(const Filter& f) {
    json j;
    if (std::holds_alternative<EntireFilter>(f)) {
        j["kind"] = "entire";
        j["coeffs"] = json::array();
        for (Complex c : std::get<EntireFilter>(f).coeffs) j["coeffs"].push_back(detail::dump_complex(c));
    } else if (std::holds_alternative<HolFilter>(f)) {
        const auto& g = std::get<HolFilter>(f);
        j["kind"] = "hol";
        j["omega"] = detail::dump_complex(g.omega);
        j["coeffs"] = json::array();
        for (Complex c : g.coeffs) j["coeffs"].push_back(detail::dump_complex(c));
    } else if (std::holds_alternative<ContFilter>(f)) {
        const auto& g = std::get<ContFilter>(f);
        j["kind"] = "cont";
        j["omega"] = detail::dump_complex(g.omega);
        j["coeffs"] = json::array();
        for (const auto& [exps, c] : g.coeffs)
            j["coeffs"].push_back({exps.first, exps.second, detail::dump_complex(c)});
    } else {
        throw ConfigError("filter: closed-form generic filters have no file representation");
    }
    return j;
}

// ---------------------------------------------------------------------------
// Partition files: { "latin": [...], "star": i, "greek": [...] }, 0-based
// ---------------------------------------------------------------------------

inline Partition partition_from_json(const json& j) {
    Partition p;
    for (const auto& i : j.at("latin")) p.latin.push_back(i.get<Index>());
    p.star = j.at("star").get<Index>();
    for (const auto& i : j.at("greek")) p.greek.push_back(i.get<Index>());
    return p;
}

inline Partition load_partition(const std::string& path) {
    return partition_from_json(detail::load_json_file(path));
}

// ---------------------------------------------------------------------------
// Molecule files: { "Z": [...], "X": [[x,y,z]...], "names": [...] }
// ---------------------------------------------------------------------------

inline Molecule molecule_from_json(const json& j) {
    Molecule m;
    const auto& z = j.at("Z");
    m.Z = RealVector(static_cast<Index>(z.size()));
    for (Index i = 0; i < m.Z.size(); ++i) m.Z[i] = z[i].get<double>();
    for (const auto& row : j.at("X")) {
        require(row.is_array() && row.size() == 3, "molecule: positions are [x, y, z]");
        m.X.emplace_back(row[0].get<double>(), row[1].get<double>(), row[2].get<double>());
    }
    if (j.contains("names"))
        for (const auto& s : j["names"]) m.names.push_back(s.get<std::string>());
    validate_molecule(m);
    return m;
}

// Accepts a path or the built-in "methane" preset name.
inline Molecule load_molecule(const std::string& path_or_preset) {
    if (path_or_preset == "methane") return methane();
    return molecule_from_json(detail::load_json_file(path_or_preset));
}

inline json molecule_to_json(const Molecule& m) {
    json j;
    j["Z"] = json::array();
    for (Index i = 0; i < m.Z.size(); ++i) j["Z"].push_back(m.Z[i]);
    j["X"] = json::array();
    for (const auto& x : m.X) j["X"].push_back({x[0], x[1], x[2]});
    if (!m.names.empty()) j["names"] = m.names;
    return j;
}

// ---------------------------------------------------------------------------
// Network files
// ---------------------------------------------------------------------------
// { "layers": [ { "graph": "file.json" | {...inline...},
//                 "operator": "adjacency"|"laplacian"|"normalized-laplacian",
//                 "nonlinearity": "identity"|"modulus"|"relu"|"shifted-sigmoid",
//                 "connecting": "identity" | [[...rows of [re,im] or numbers...]],
//                 "filters": [[{...filter...}, ...], ...]
//                          | { "random": { "kind": "hol", "omega": ...,
//                              "max_order": k, "coeff_range": [lo, hi],
//                              "k_in": int, "k_out": int, "seed": s } } } ] }
// Graph paths resolve relative to the network file's directory.

inline OperatorKind operator_kind_from_string(const std::string& s) {
    if (s == "adjacency") return OperatorKind::Adjacency;
    if (s == "laplacian") return OperatorKind::Laplacian;
    if (s == "normalized-laplacian") return OperatorKind::NormalizedLaplacian;
    throw ConfigError("unknown operator kind '" + s + "'");
}

inline NonlinKind nonlin_kind_from_string(const std::string& s) {
    if (s == "identity") return NonlinKind::Identity;
    if (s == "modulus") return NonlinKind::Modulus;
    if (s == "relu") return NonlinKind::ReLU;
    if (s == "shifted-sigmoid") return NonlinKind::ShiftedSigmoid;
    throw ConfigError("unknown nonlinearity '" + s + "'");
}

inline Network network_from_json(const json& j, const std::string& base_dir = ".") {
    require(j.contains("layers") && j["layers"].is_array() && !j["layers"].empty(),
            "network: need a nonempty 'layers' array");
    std::vector<LayerSpec> specs;
    std::uint64_t bank_seed_counter = 0;
    for (const auto& layer : j["layers"]) {
        LayerSpec spec;
        const auto& g = layer.at("graph");
        spec.graph = g.is_string()
                         ? load_graph((std::filesystem::path(base_dir) / g.get<std::string>()).string())
                         : graph_from_json(g);
        spec.op_kind = operator_kind_from_string(layer.value("operator", std::string("laplacian")));
        spec.rho = Nonlinearity::make(nonlin_kind_from_string(layer.value("nonlinearity", std::string("identity"))));
        if (layer.contains("connecting") && !(layer["connecting"].is_string() &&
                                              layer["connecting"].get<std::string>() == "identity")) {
            const auto& rows = layer["connecting"];
            require(rows.is_array() && !rows.empty(), "network: connecting matrix must be a 2-D array");
            const Index r = static_cast<Index>(rows.size());
            const Index c = static_cast<Index>(rows[0].size());
            Matrix p(r, c);
            for (Index a = 0; a < r; ++a) {
                require(static_cast<Index>(rows[a].size()) == c, "network: ragged connecting matrix");
                for (Index b = 0; b < c; ++b) p(a, b) = detail::parse_complex(rows[a][b], "connecting entry");
            }
            spec.connect = std::move(p);
        }
        const auto& filters = layer.at("filters");
        if (filters.is_object() && filters.contains("random")) {
            const auto& r = filters["random"];
            require(r.value("kind", std::string("hol")) == "hol",
                    "network: random banks are Laurent ('hol') banks");
            const Complex omega = detail::parse_complex(r.at("omega"), "random bank omega");
            const auto& range = r.at("coeff_range");
            Rng rng(r.value("seed", bank_seed_counter));
            spec.filters = random_laurent_bank(r.at("k_out").get<Index>(), r.at("k_in").get<Index>(),
                                               omega, r.at("max_order").get<int>(),
                                               range[0].get<double>(), range[1].get<double>(), rng);
        } else {
            require(filters.is_array(), "network: 'filters' is a grid or a random-bank spec");
            for (const auto& row : filters) {
                std::vector<Filter> out_row;
                for (const auto& f : row) out_row.push_back(filter_from_json(f));
                spec.filters.push_back(std::move(out_row));
            }
        }
        specs.push_back(std::move(spec));
        ++bank_seed_counter;
    }
    return Network(std::move(specs));
}

inline Network load_network(const std::string& path) {
    return network_from_json(detail::load_json_file(path),
                             std::filesystem::path(path).parent_path().string());
}

// ---------------------------------------------------------------------------
// Collapse sweeps
// ---------------------------------------------------------------------------

inline void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
    out << "delta,eps_quasi,eps_close,j_norm\n";
    char buf[40];
    const auto fmt = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    for (const auto& r : rows)
        out << fmt(r.delta) << "," << fmt(r.eps_quasi) << "," << fmt(r.eps_close) << ","
            << fmt(r.j_norm) << "\n";
}

// ---------------------------------------------------------------------------
// Bound reports
// ---------------------------------------------------------------------------

inline json bound_report_to_json(const BoundReport& rep) {
    json j;
    j["formula"] = rep.formula;
    j["layers"] = rep.layers;
    j["per_layer"] = {{"B", rep.B}, {"L", rep.L}, {"R", rep.R}, {"D", rep.D}};
    j["constants"] = {{"B", rep.B_max}, {"L", rep.L_max}, {"R", rep.R_max}, {"D", rep.D_max}};
    j["input_norm"] = rep.input_norm;
    j["delta"] = rep.delta;
    j["delta_frobenius"] = rep.delta_frob;
    j["epsilon"] = rep.epsilon;
    j["K"] = rep.K;
    j["delta1"] = rep.delta1;
    j["delta2"] = rep.delta2;
    j["value"] = rep.value;
    // tighter per-layer product, not certified by the global-constant theorems
    j["per_layer_product"] = {{"value", rep.per_layer_product}, {"certified", false}};
    j["seed"] = rep.seed;
    j["samples"] = rep.samples;
    return j;
}

}  // namespace spectral_transfer
