#pragma once

// Classical centralities over a co-interaction graph. Degree and
// betweenness use the unweighted topology and are normalized to [0, 1];
// eigenvector centrality uses edge weights, is computed on the largest
// connected component only, and is scaled to unit maximum entry.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <string>
#include <vector>

#include "coread/cograph.hpp"
#include "coread/errors.hpp"

namespace coread {

inline std::map<std::string, double> degree_centrality(const CoGraph& graph) {
    const std::size_t n = graph.node_count();
    if (n < 2) throw DataError("degree_centrality: need at least 2 nodes");
    std::map<std::string, double> out;
    for (const auto& [id, nbrs] : graph.adj)
        out[id] = static_cast<double>(nbrs.size()) / static_cast<double>(n - 1);
    return out;
}

// Brandes' exact algorithm on the unweighted graph, normalized by
// (N-1)(N-2)/2. Disconnected pairs contribute nothing.
inline std::map<std::string, double> betweenness_centrality(const CoGraph& graph) {
    const auto ids = graph.nodes();
    const std::size_t n = ids.size();
    if (n < 3) throw DataError("betweenness_centrality: need at least 3 nodes");
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < n; ++i) index[ids[i]] = i;
    std::vector<std::vector<std::size_t>> adj(n);
    for (std::size_t i = 0; i < n; ++i)
        for (const auto& [v, _] : graph.adj.at(ids[i])) adj[i].push_back(index.at(v));

    std::vector<double> bc(n, 0.0);
    std::vector<std::size_t> stack;
    std::vector<std::vector<std::size_t>> preds(n);
    std::vector<std::int64_t> sigma(n);
    std::vector<std::int64_t> dist(n);
    std::vector<double> delta(n);
    for (std::size_t s = 0; s < n; ++s) {
        stack.clear();
        for (std::size_t i = 0; i < n; ++i) {
            preds[i].clear();
            sigma[i] = 0;
            dist[i] = -1;
            delta[i] = 0.0;
        }
        sigma[s] = 1;
        dist[s] = 0;
        std::deque<std::size_t> queue{s};
        while (!queue.empty()) {
            const std::size_t v = queue.front();
            queue.pop_front();
            stack.push_back(v);
            for (std::size_t w : adj[v]) {
                if (dist[w] < 0) {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if (dist[w] == dist[v] + 1) {
                    sigma[w] += sigma[v];
                    preds[w].push_back(v);
                }
            }
        }
        while (!stack.empty()) {
            const std::size_t w = stack.back();
            stack.pop_back();
            for (std::size_t v : preds[w])
                delta[v] += static_cast<double>(sigma[v]) / static_cast<double>(sigma[w]) *
                            (1.0 + delta[w]);
            if (w != s) bc[w] += delta[w];
        }
    }
    const double norm =
        static_cast<double>(n - 1) * static_cast<double>(n - 2) / 2.0;
    std::map<std::string, double> out;
    for (std::size_t i = 0; i < n; ++i)
        out[ids[i]] = bc[i] / 2.0 / norm; // each unordered pair was counted twice
    return out;
}

// Connected component with the most nodes; ties resolved toward the
// component containing the lexicographically smallest node.
inline std::vector<std::string> largest_component(const CoGraph& graph) {
    std::set<std::string> unseen;
    for (const auto& [id, _] : graph.adj) unseen.insert(id);
    std::vector<std::string> best;
    while (!unseen.empty()) {
        std::vector<std::string> comp;
        std::deque<std::string> queue{*unseen.begin()};
        unseen.erase(unseen.begin());
        while (!queue.empty()) {
            const std::string v = queue.front();
            queue.pop_front();
            comp.push_back(v);
            for (const auto& [w, _] : graph.adj.at(v)) {
                auto it = unseen.find(w);
                if (it != unseen.end()) {
                    unseen.erase(it);
                    queue.push_back(w);
                }
            }
        }
        if (comp.size() > best.size()) best = std::move(comp);
    }
    std::sort(best.begin(), best.end());
    return best;
}

// Power iteration on the weighted adjacency of the largest component,
// scaled each sweep to unit max entry; stops when the successive-iterate
// max-norm difference drops below tolerance. A unit diagonal shift keeps
// bipartite structures (e.g. stars) from oscillating. Nodes outside the
// largest component are absent from the result.
inline std::map<std::string, double>
eigenvector_centrality(const CoGraph& graph, double tolerance = 1e-10,
                       std::size_t max_iters = 10000) {
    bool any_edge = false;
    for (const auto& [_, nbrs] : graph.adj)
        if (!nbrs.empty()) { any_edge = true; break; }
    if (!any_edge) throw DataError("eigenvector_centrality: graph has no edges");
    const auto comp = largest_component(graph);
    const std::size_t n = comp.size();
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < n; ++i) index[comp[i]] = i;
    std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
    for (std::size_t i = 0; i < n; ++i)
        for (const auto& [v, w] : graph.adj.at(comp[i]))
            adj[i].emplace_back(index.at(v), static_cast<double>(w));

    std::vector<double> x(n, 1.0), next(n, 0.0);
    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            double acc = x[i];
            for (const auto& [j, w] : adj[i]) acc += w * x[j];
            next[i] = acc;
        }
        double mx = 0.0;
        for (double v : next) mx = std::max(mx, v);
        double diff = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            next[i] /= mx;
            diff = std::max(diff, std::fabs(next[i] - x[i]));
        }
        x.swap(next);
        if (diff < tolerance) {
            std::map<std::string, double> out;
            for (std::size_t i = 0; i < n; ++i) out[comp[i]] = x[i];
            return out;
        }
    }
    throw NumericError("eigenvector_centrality: no convergence within " +
                       std::to_string(max_iters) + " iterations");
}

} // namespace coread
