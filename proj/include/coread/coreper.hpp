#pragma once

// Core-periphery layer inference. The model is a layered stochastic
// block model of the hub-and-spoke kind: every node carries a layer in
// 1..L (1 = innermost core), an unordered pair's edge probability
// depends only on the outermost (max) layer of its endpoints, and the
// per-layer probabilities are non-increasing from core to periphery.
// Probabilities get a uniform prior on the ordered simplex region and
// are resampled by Gibbs steps between seeded, annealed Metropolis
// sweeps of single-node layer reassignments. The retained samples give
// each node a distribution over layers; coreness is the expectation of
// (L - layer)/(L - 1), so a sure layer-1 node scores 1 and a sure
// layer-L node scores 0.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "coread/cograph.hpp"
#include "coread/corpus.hpp"
#include "coread/errors.hpp"
#include "coread/numeric.hpp"
#include "coread/stats.hpp"

namespace coread {

struct CorePeripheryParams {
    int layers = 5;
    std::uint64_t seed = 1;
    int sweeps = 20000;
    int samples = 500;
    double initial_temperature = 5.0;
};

struct LayerAssignment {
    int layers = 0;
    std::vector<std::string> nodes;         // sorted ids
    std::vector<std::vector<double>> dist;  // per node, over layers, sums to 1

    double coreness(std::size_t node_idx) const {
        const auto& d = dist[node_idx];
        double c = 0.0;
        for (int l = 0; l < layers; ++l)
            c += d[static_cast<std::size_t>(l)] * static_cast<double>(layers - 1 - l) /
                 static_cast<double>(layers - 1);
        return c;
    }
};

// Coreness of an explicit layer distribution (layer index 0 = innermost).
inline double coreness_of(const std::vector<double>& dist, int layers) {
    double c = 0.0;
    for (int l = 0; l < layers; ++l)
        c += dist[static_cast<std::size_t>(l)] * static_cast<double>(layers - 1 - l) /
             static_cast<double>(layers - 1);
    return c;
}

namespace detail {

inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>((static_cast<unsigned __int128>(rng()) * n) >> 64);
}

struct SbmState {
    int layers = 0;
    std::vector<int> z;              // node -> layer index, 0 = core
    std::vector<std::int64_t> occ;   // occupancy per layer
    std::vector<std::int64_t> edges; // edges per pair group (max layer)
    std::vector<double> p;           // ordered edge probabilities

    // pairs whose outermost endpoint sits in each layer
    std::vector<std::int64_t> pair_counts() const {
        std::vector<std::int64_t> n(static_cast<std::size_t>(layers), 0);
        std::int64_t prefix = 0;
        for (int l = 0; l < layers; ++l) {
            const std::int64_t c = occ[static_cast<std::size_t>(l)];
            n[static_cast<std::size_t>(l)] = c * prefix + c * (c - 1) / 2;
            prefix += c;
        }
        return n;
    }
};

inline double bernoulli_loglik(const std::vector<std::int64_t>& e,
                               const std::vector<std::int64_t>& n,
                               const std::vector<double>& p) {
    double ll = 0.0;
    for (std::size_t l = 0; l < p.size(); ++l) {
        const double pl = std::clamp(p[l], 1e-12, 1.0 - 1e-12);
        ll += static_cast<double>(e[l]) * std::log(pl) +
              static_cast<double>(n[l] - e[l]) * std::log1p(-pl);
    }
    return ll;
}

// Draw from Beta(a, b) truncated to [lo, hi] by inverse CDF.
inline double truncated_beta(std::mt19937_64& rng, double a, double b, double lo, double hi) {
    const double flo = ibeta(a, b, lo);
    const double fhi = ibeta(a, b, hi);
    if (fhi - flo < 1e-13) return 0.5 * (lo + hi);
    const double u = flo + uniform01(rng) * (fhi - flo);
    return std::clamp(ibeta_inv(a, b, u), lo, hi);
}

} // namespace detail

// Samples the layer posterior. Deterministic for a fixed seed. Graphs
// without edges are exchangeable, so every node receives the pooled
// layer distribution (their posteriors are identical by symmetry).
inline LayerAssignment infer_layers(const CoGraph& graph, const CorePeripheryParams& params) {
    if (graph.node_count() == 0) throw DataError("infer_layers: empty graph");
    if (params.layers < 2) throw ConfigError("infer_layers: need at least 2 layers");
    if (params.sweeps < 1 || params.samples < 1)
        throw ConfigError("infer_layers: sweeps and samples must be >= 1");

    const int L = params.layers;
    LayerAssignment out;
    out.layers = L;
    out.nodes = graph.nodes();
    const std::size_t n = out.nodes.size();
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < n; ++i) index[out.nodes[i]] = i;
    std::vector<std::vector<std::size_t>> adj(n);
    std::size_t edge_total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& [v, _] : graph.adj.at(out.nodes[i])) adj[i].push_back(index.at(v));
        edge_total += adj[i].size();
    }
    edge_total /= 2;

    std::mt19937_64 rng(params.seed);
    detail::SbmState st;
    st.layers = L;
    st.z.resize(n);
    st.occ.assign(static_cast<std::size_t>(L), 0);
    st.edges.assign(static_cast<std::size_t>(L), 0);
    for (std::size_t i = 0; i < n; ++i) {
        st.z[i] = static_cast<int>(detail::uniform_index(rng, static_cast<std::size_t>(L)));
        st.occ[static_cast<std::size_t>(st.z[i])] += 1;
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j : adj[i])
            if (i < j) st.edges[static_cast<std::size_t>(std::max(st.z[i], st.z[j]))] += 1;
    st.p.resize(static_cast<std::size_t>(L));
    for (int l = 0; l < L; ++l)
        st.p[static_cast<std::size_t>(l)] =
            static_cast<double>(L - l) / static_cast<double>(L + 1);

    std::vector<std::vector<std::int64_t>> counts(
        n, std::vector<std::int64_t>(static_cast<std::size_t>(L), 0));
    std::int64_t collected = 0;

    const int burn_in = std::max(1, params.sweeps / 2);
    const int post = std::max(1, params.sweeps - burn_in);
    const int thin = std::max(1, post / params.samples);

    double ll = detail::bernoulli_loglik(st.edges, st.pair_counts(), st.p);
    std::vector<std::int64_t> e2(static_cast<std::size_t>(L));

    for (int sweep = 0; sweep < params.sweeps; ++sweep) {
        const double temperature =
            sweep < burn_in
                ? std::pow(params.initial_temperature,
                           1.0 - static_cast<double>(sweep) / static_cast<double>(burn_in))
                : 1.0;

        // Gibbs refresh of the ordered edge probabilities
        auto pair_n = st.pair_counts();
        for (int l = 0; l < L; ++l) {
            const std::size_t li = static_cast<std::size_t>(l);
            const double hi = l == 0 ? 1.0 : st.p[li - 1];
            const double lo = l == L - 1 ? 0.0 : st.p[li + 1];
            const double a = static_cast<double>(st.edges[li]) + 1.0;
            const double b = static_cast<double>(pair_n[li] - st.edges[li]) + 1.0;
            st.p[li] = detail::truncated_beta(rng, a, b, lo, hi);
        }
        ll = detail::bernoulli_loglik(st.edges, pair_n, st.p);

        for (std::size_t step = 0; step < n; ++step) {
            const std::size_t i = detail::uniform_index(rng, n);
            const int a = st.z[i];
            int b = static_cast<int>(
                detail::uniform_index(rng, static_cast<std::size_t>(L - 1)));
            if (b >= a) ++b;
            e2 = st.edges;
            for (std::size_t j : adj[i]) {
                const int zb = st.z[j];
                const int g_old = std::max(a, zb);
                const int g_new = std::max(b, zb);
                if (g_old != g_new) {
                    e2[static_cast<std::size_t>(g_old)] -= 1;
                    e2[static_cast<std::size_t>(g_new)] += 1;
                }
            }
            st.occ[static_cast<std::size_t>(a)] -= 1;
            st.occ[static_cast<std::size_t>(b)] += 1;
            const double ll2 = detail::bernoulli_loglik(e2, st.pair_counts(), st.p);
            const double log_u = std::log(detail::uniform01(rng));
            if (log_u < (ll2 - ll) / temperature) {
                st.z[i] = b;
                st.edges = e2;
                ll = ll2;
            } else {
                st.occ[static_cast<std::size_t>(a)] += 1;
                st.occ[static_cast<std::size_t>(b)] -= 1;
            }
        }

        if (sweep >= burn_in && (sweep - burn_in) % thin == 0 &&
            collected < params.samples) {
            for (std::size_t i = 0; i < n; ++i)
                counts[i][static_cast<std::size_t>(st.z[i])] += 1;
            ++collected;
        }
    }
    if (collected == 0) {
        for (std::size_t i = 0; i < n; ++i)
            counts[i][static_cast<std::size_t>(st.z[i])] += 1;
        collected = 1;
    }

    out.dist.assign(n, std::vector<double>(static_cast<std::size_t>(L), 0.0));
    if (edge_total == 0) {
        std::vector<double> pooled(static_cast<std::size_t>(L), 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (int l = 0; l < L; ++l)
                pooled[static_cast<std::size_t>(l)] +=
                    static_cast<double>(counts[i][static_cast<std::size_t>(l)]);
        const double total = static_cast<double>(collected) * static_cast<double>(n);
        for (double& x : pooled) x /= total;
        for (std::size_t i = 0; i < n; ++i) out.dist[i] = pooled;
        return out;
    }
    for (std::size_t i = 0; i < n; ++i)
        for (int l = 0; l < L; ++l)
            out.dist[i][static_cast<std::size_t>(l)] =
                static_cast<double>(counts[i][static_cast<std::size_t>(l)]) /
                static_cast<double>(collected);
    return out;
}

// Per-node coreness, sorted descending (ties by node id) for reports.
inline std::vector<std::pair<std::string, double>>
coreness_scores(const LayerAssignment& assignment) {
    std::vector<std::pair<std::string, double>> out;
    out.reserve(assignment.nodes.size());
    for (std::size_t i = 0; i < assignment.nodes.size(); ++i)
        out.emplace_back(assignment.nodes[i], assignment.coreness(i));
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
        if (x.second != y.second) return x.second > y.second;
        return x.first < y.first;
    });
    return out;
}

// ---------------------------------------------------------------------------
// Correlation of structural scores with reader borrow indicators

enum class ComboMode { any_of, all_of }; // or / and across readers

struct ReaderCombo {
    std::string name;
    std::vector<std::string> readers;
    ComboMode mode = ComboMode::any_of;
};

struct ReaderCorrRow {
    std::string name;
    std::optional<Correlation> corr; // absent when the indicator is constant
    std::int64_t items_read = 0;
};

// Distinct items per reader, optionally restricted to a universe.
inline std::map<std::string, std::set<std::string>>
reader_item_sets(const Corpus& corpus,
                 const std::optional<std::set<std::string>>& universe = std::nullopt) {
    std::map<std::string, std::set<std::string>> out;
    for (const auto& e : corpus.events) {
        if (universe && !universe->count(e.item_id)) continue;
        out[e.reader_id].insert(e.item_id);
    }
    return out;
}

// Spearman rank correlation between a per-node score and the binary
// read-indicator of each reader combination.
inline std::vector<ReaderCorrRow>
reader_structure_correlation(const std::map<std::string, double>& scores,
                             const std::map<std::string, std::set<std::string>>& reader_sets,
                             const std::vector<ReaderCombo>& combos) {
    std::vector<ReaderCorrRow> rows;
    for (const auto& combo : combos) {
        ReaderCorrRow row;
        row.name = combo.name;
        std::vector<double> xs, ys;
        xs.reserve(scores.size());
        ys.reserve(scores.size());
        for (const auto& [item, score] : scores) {
            bool read = combo.mode == ComboMode::all_of;
            for (const auto& r : combo.readers) {
                auto it = reader_sets.find(r);
                const bool has = it != reader_sets.end() && it->second.count(item) > 0;
                if (combo.mode == ComboMode::any_of) {
                    if (has) { read = true; break; }
                } else if (!has) {
                    read = false;
                    break;
                }
            }
            xs.push_back(score);
            ys.push_back(read ? 1.0 : 0.0);
            if (read) ++row.items_read;
        }
        const bool constant = row.items_read == 0 ||
                              row.items_read == static_cast<std::int64_t>(ys.size());
        if (!constant && xs.size() >= 3) {
            try {
                row.corr = spearman_rho(xs, ys);
            } catch (const DataError&) {
                row.corr = std::nullopt; // zero score variance
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace coread
