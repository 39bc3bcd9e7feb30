#pragma once

// Co-interaction graphs: two items are linked when the same reader
// interacted with both, weighted by the number of distinct such readers.
// Per-item neighbor vectors over a shared universe are compared across
// corpora with smoothed Jensen-Shannon divergence (base-2 logarithm, so
// values lie in [0, 1]).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "coread/corpus.hpp"
#include "coread/csv.hpp"
#include "coread/errors.hpp"

namespace coread {

// Undirected weighted graph; adjacency stored in both directions.
// Nodes are the endpoints of at least one edge.
struct CoGraph {
    std::map<std::string, std::map<std::string, std::int64_t>> adj;

    bool has_node(const std::string& id) const { return adj.count(id) > 0; }
    std::size_t node_count() const { return adj.size(); }
    std::int64_t degree(const std::string& id) const {
        auto it = adj.find(id);
        return it == adj.end() ? 0 : static_cast<std::int64_t>(it->second.size());
    }
    std::vector<std::string> nodes() const {
        std::vector<std::string> out;
        out.reserve(adj.size());
        for (const auto& [id, _] : adj) out.push_back(id);
        return out;
    }
    void add_edge(const std::string& u, const std::string& v, std::int64_t w) {
        adj[u][v] = w;
        adj[v][u] = w;
    }
    void add_node(const std::string& u) { adj[u]; }
};

// Co-occurrence projection of per-reader item sets: edge weight is the
// number of distinct readers holding both endpoints.
inline CoGraph induce_from_sets(const std::map<std::string, std::set<std::string>>& reader_items) {
    std::map<std::pair<std::string, std::string>, std::int64_t> weights;
    for (const auto& [_, items] : reader_items) {
        for (auto i = items.begin(); i != items.end(); ++i) {
            auto j = i;
            for (++j; j != items.end(); ++j) weights[{*i, *j}] += 1;
        }
    }
    CoGraph g;
    for (const auto& [pair, w] : weights) g.add_edge(pair.first, pair.second, w);
    return g;
}

// Projects a corpus onto an item-item graph restricted to the given
// universe. Edge weight = number of distinct readers who interacted with
// both endpoints; no self-loops; zero-weight pairs are absent.
inline CoGraph induce_cograph(const Corpus& corpus, const std::set<std::string>& universe) {
    std::map<std::string, std::set<std::string>> reader_items;
    for (const auto& e : corpus.events)
        if (universe.count(e.item_id)) reader_items[e.reader_id].insert(e.item_id);
    return induce_from_sets(reader_items);
}

// Items with degree >= 1 in both graphs.
inline std::set<std::string> connected_in_both(const CoGraph& graph_a, const CoGraph& graph_b) {
    std::set<std::string> out;
    for (const auto& [id, nbrs] : graph_a.adj)
        if (!nbrs.empty() && graph_b.degree(id) > 0) out.insert(id);
    return out;
}

// Inclusive popularity thresholds: kept if interacted with at least
// min_a times in corpus A and at least min_b times in B.
inline std::set<std::string>
top_quartile_filter(const std::set<std::string>& items,
                    const std::map<std::string, std::int64_t>& counts_a,
                    const std::map<std::string, std::int64_t>& counts_b,
                    std::int64_t min_a = 4, std::int64_t min_b = 2600) {
    if (min_a < 0 || min_b < 0) throw ConfigError("top_quartile_filter: thresholds must be >= 0");
    std::set<std::string> out;
    for (const auto& id : items) {
        const auto a = counts_a.find(id);
        const auto b = counts_b.find(id);
        const std::int64_t ca = a == counts_a.end() ? 0 : a->second;
        const std::int64_t cb = b == counts_b.end() ? 0 : b->second;
        if (ca >= min_a && cb >= min_b) out.insert(id);
    }
    return out;
}

struct NeighborDistribution {
    std::string item_id;
    std::vector<double> probs; // over the universe order, self entry 0, sums to 1
};

// l1-normalized co-reader weight vector in the fixed universe order.
// Returns nullopt when the item has zero total weight (nothing to
// normalize), signaling the caller to exclude it.
inline std::optional<NeighborDistribution>
neighbor_distribution(const CoGraph& graph, const std::string& item,
                      const std::vector<std::string>& universe_order) {
    auto it = graph.adj.find(item);
    if (it == graph.adj.end() || it->second.empty()) return std::nullopt;
    double total = 0.0;
    for (const auto& [_, w] : it->second) total += static_cast<double>(w);
    if (total <= 0.0) return std::nullopt;
    NeighborDistribution d;
    d.item_id = item;
    d.probs.reserve(universe_order.size());
    for (const auto& u : universe_order) {
        if (u == item) {
            d.probs.push_back(0.0);
            continue;
        }
        auto w = it->second.find(u);
        d.probs.push_back(w == it->second.end() ? 0.0
                                                : static_cast<double>(w->second) / total);
    }
    return d;
}

namespace detail {

inline double xlog2x(double x) { return x > 0.0 ? x * std::log2(x) : 0.0; }

inline std::vector<double> smooth_normalize(const std::vector<double>& v, double smoothing) {
    std::vector<double> out(v.size());
    double total = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = v[i] + smoothing;
        total += out[i];
    }
    if (total <= 0.0) throw DataError("js_divergence: distribution has zero total mass");
    for (double& x : out) x /= total;
    return out;
}

} // namespace detail

// Jensen-Shannon divergence after adding `smoothing` to every entry of
// both vectors and re-normalizing. Base-2 logarithm; symmetric; in [0, 1].
inline double js_divergence(const NeighborDistribution& p, const NeighborDistribution& q,
                            double smoothing = 0.01) {
    if (p.probs.size() != q.probs.size())
        throw DataError("js_divergence: distributions have different universe sizes");
    if (smoothing < 0.0) throw ConfigError("js_divergence: smoothing must be >= 0");
    if (p.probs.empty()) throw DataError("js_divergence: empty distributions");
    const auto ps = detail::smooth_normalize(p.probs, smoothing);
    const auto qs = detail::smooth_normalize(q.probs, smoothing);
    // H(m) - (H(p) + H(q)) / 2, all base 2
    double hm = 0.0, hp = 0.0, hq = 0.0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        const double m = 0.5 * (ps[i] + qs[i]);
        hm -= detail::xlog2x(m);
        hp -= detail::xlog2x(ps[i]);
        hq -= detail::xlog2x(qs[i]);
    }
    const double jsd = hm - 0.5 * (hp + hq);
    return std::min(1.0, std::max(0.0, jsd));
}

struct DivergenceRow {
    std::string item_id;
    double divergence = 0.0;
    std::int64_t degree_a = 0;
    std::int64_t degree_b = 0;
};

// Shared vector universe: the sorted union of both graphs' node sets, so
// the two corpora's vectors are index-aligned.
inline std::vector<std::string> shared_universe(const CoGraph& graph_a, const CoGraph& graph_b) {
    std::set<std::string> ids;
    for (const auto& [id, _] : graph_a.adj) ids.insert(id);
    for (const auto& [id, _] : graph_b.adj) ids.insert(id);
    return {ids.begin(), ids.end()};
}

// Cross-corpus neighborhood similarity, ascending divergence (most
// similar first), ties broken by item id. Degrees report each item's
// neighbor count per graph.
inline std::vector<DivergenceRow>
divergence_ranking(const std::set<std::string>& items, const CoGraph& graph_a,
                   const CoGraph& graph_b, double smoothing = 0.01) {
    const auto universe = shared_universe(graph_a, graph_b);
    std::vector<DivergenceRow> rows;
    for (const auto& id : items) {
        const auto p = neighbor_distribution(graph_a, id, universe);
        const auto q = neighbor_distribution(graph_b, id, universe);
        if (!p || !q) continue;
        DivergenceRow r;
        r.item_id = id;
        r.divergence = js_divergence(*p, *q, smoothing);
        r.degree_a = graph_a.degree(id);
        r.degree_b = graph_b.degree(id);
        rows.push_back(std::move(r));
    }
    std::sort(rows.begin(), rows.end(), [](const DivergenceRow& x, const DivergenceRow& y) {
        if (x.divergence != y.divergence) return x.divergence < y.divergence;
        return x.item_id < y.item_id;
    });
    return rows;
}

// k highest-weight neighbors, descending weight, ties by id.
inline std::vector<std::pair<std::string, std::int64_t>>
top_neighbors(const CoGraph& graph, const std::string& item, std::int64_t k) {
    if (k < 1) throw ConfigError("top_neighbors: k must be >= 1");
    auto it = graph.adj.find(item);
    if (it == graph.adj.end()) throw DataError("top_neighbors: item not in graph: " + item);
    std::vector<std::pair<std::string, std::int64_t>> nbrs(it->second.begin(), it->second.end());
    std::sort(nbrs.begin(), nbrs.end(), [](const auto& x, const auto& y) {
        if (x.second != y.second) return x.second > y.second;
        return x.first < y.first;
    });
    if (static_cast<std::int64_t>(nbrs.size()) > k) nbrs.resize(static_cast<std::size_t>(k));
    return nbrs;
}

// ---------------------------------------------------------------------------
// Edge-list CSV (u,v,weight with u < v, sorted)

inline void write_cograph_csv(const CoGraph& graph, std::ostream& out) {
    write_csv_row(out, {"u", "v", "weight"});
    for (const auto& [u, nbrs] : graph.adj)
        for (const auto& [v, w] : nbrs)
            if (u < v) write_csv_row(out, {u, v, std::to_string(w)});
}

inline CoGraph read_cograph_csv(const std::string& path) {
    const auto rows = read_csv_file(path);
    detail::require_header(rows, {"u", "v", "weight"}, path);
    CoGraph g;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        detail::require_width(rows[i], 3, path, i);
        if (rows[i][0] == rows[i][1])
            throw DataError(path + ": row " + std::to_string(i) + ": self-loop on " + rows[i][0]);
        std::int64_t w = 0;
        try {
            w = std::stoll(rows[i][2]);
        } catch (const std::exception&) {
            throw DataError(path + ": row " + std::to_string(i) + ": invalid weight '" +
                            rows[i][2] + "'");
        }
        if (w < 1)
            throw DataError(path + ": row " + std::to_string(i) + ": weight must be >= 1");
        g.add_edge(rows[i][0], rows[i][1], w);
    }
    return g;
}

} // namespace coread
