#include <catch2/catch.hpp>

#include <cmath>

#include "coread/centrality.hpp"

using namespace coread;

namespace {

CoGraph path3() {
    CoGraph g;
    g.add_edge("A", "B", 1);
    g.add_edge("B", "C", 1);
    return g;
}

CoGraph complete(int n) {
    CoGraph g;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            g.add_edge("k" + std::to_string(i), "k" + std::to_string(j), 1);
    return g;
}

CoGraph star(int leaves) {
    CoGraph g;
    for (int i = 0; i < leaves; ++i) g.add_edge("hub", "leaf" + std::to_string(i), 1);
    return g;
}

// two triangles joined through a bridge node
CoGraph barbell() {
    CoGraph g;
    g.add_edge("a", "b", 1);
    g.add_edge("a", "c", 1);
    g.add_edge("b", "c", 1);
    g.add_edge("c", "d", 1);
    g.add_edge("d", "e", 1);
    g.add_edge("e", "f", 1);
    g.add_edge("e", "g", 1);
    g.add_edge("f", "g", 1);
    return g;
}

// Independent betweenness oracle: all-pairs distances and path counts by
// BFS, then the pair-dependency identity sigma_st(v) = sigma_sv * sigma_vt
// when d(s,v) + d(v,t) = d(s,t).
std::map<std::string, double> betweenness_oracle(const CoGraph& g) {
    const auto ids = g.nodes();
    const std::size_t n = ids.size();
    std::map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i) idx[ids[i]] = i;
    std::vector<std::vector<std::int64_t>> dist(n, std::vector<std::int64_t>(n, -1));
    std::vector<std::vector<double>> sigma(n, std::vector<double>(n, 0.0));
    for (std::size_t s = 0; s < n; ++s) {
        dist[s][s] = 0;
        sigma[s][s] = 1.0;
        std::vector<std::size_t> frontier{s};
        while (!frontier.empty()) {
            std::vector<std::size_t> next;
            for (std::size_t v : frontier)
                for (const auto& [w_id, _] : g.adj.at(ids[v])) {
                    const std::size_t w = idx.at(w_id);
                    if (dist[s][w] < 0) {
                        dist[s][w] = dist[s][v] + 1;
                        next.push_back(w);
                    }
                    if (dist[s][w] == dist[s][v] + 1) sigma[s][w] += sigma[s][v];
                }
            std::sort(next.begin(), next.end());
            next.erase(std::unique(next.begin(), next.end()), next.end());
            frontier = std::move(next);
        }
    }
    std::map<std::string, double> out;
    const double norm = static_cast<double>(n - 1) * static_cast<double>(n - 2) / 2.0;
    for (std::size_t v = 0; v < n; ++v) {
        double acc = 0.0;
        for (std::size_t s = 0; s < n; ++s)
            for (std::size_t t = s + 1; t < n; ++t) {
                if (s == v || t == v || dist[s][t] < 0) continue;
                if (dist[s][v] >= 0 && dist[v][t] >= 0 &&
                    dist[s][v] + dist[v][t] == dist[s][t])
                    acc += sigma[s][v] * sigma[v][t] / sigma[s][t];
            }
        out[ids[v]] = acc / norm;
    }
    return out;
}

} // namespace

TEST_CASE("degree centrality closed forms") {
    const auto k4 = degree_centrality(complete(4));
    for (const auto& [_, v] : k4) CHECK(v == 1.0);

    const auto p = degree_centrality(path3());
    CHECK(p.at("B") == 1.0);
    CHECK(p.at("A") == 0.5);
    CHECK(p.at("C") == 0.5);

    CHECK_THROWS_AS(degree_centrality(CoGraph{}), DataError);
}

TEST_CASE("degree centrality matches brute-force adjacency counts") {
    const auto g = barbell();
    const auto deg = degree_centrality(g);
    for (const auto& [id, nbrs] : g.adj)
        CHECK(deg.at(id) ==
              Approx(static_cast<double>(nbrs.size()) / 6.0).margin(1e-12));
}

TEST_CASE("betweenness centrality of a path puts everything on the middle") {
    const auto b = betweenness_centrality(path3());
    CHECK(b.at("B") == Approx(1.0).margin(1e-9));
    CHECK(b.at("A") == Approx(0.0).margin(1e-9));
    CHECK(b.at("C") == Approx(0.0).margin(1e-9));
}

TEST_CASE("betweenness centrality of a complete graph is zero") {
    for (const auto& [_, v] : betweenness_centrality(complete(5)))
        CHECK(v == Approx(0.0).margin(1e-9));
}

TEST_CASE("betweenness centrality of the barbell matches the oracle") {
    const auto g = barbell();
    const auto got = betweenness_centrality(g);
    const auto oracle = betweenness_oracle(g);
    for (const auto& [id, v] : oracle) CHECK(got.at(id) == Approx(v).margin(1e-9));
    // the bridge mediates everything
    for (const auto& [id, v] : got)
        if (id != "d") CHECK(got.at("d") > v);
}

TEST_CASE("betweenness of leaves is zero and disconnected pairs contribute nothing") {
    CoGraph g = star(4);
    g.add_edge("x", "y", 1); // separate component
    const auto got = betweenness_centrality(g);
    const auto oracle = betweenness_oracle(g);
    for (const auto& [id, v] : oracle) CHECK(got.at(id) == Approx(v).margin(1e-9));
    CHECK(got.at("leaf0") == 0.0);
    CHECK(got.at("x") == 0.0);
}

TEST_CASE("centralities stay in the unit interval") {
    const auto g = barbell();
    for (const auto& [_, v] : degree_centrality(g)) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    for (const auto& [_, v] : betweenness_centrality(g)) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    for (const auto& [_, v] : eigenvector_centrality(g)) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("eigenvector centrality of a complete graph is flat") {
    for (const auto& [_, v] : eigenvector_centrality(complete(4)))
        CHECK(v == Approx(1.0).margin(1e-8));
}

TEST_CASE("eigenvector centrality of a star peaks at the hub") {
    const auto e = eigenvector_centrality(star(8));
    CHECK(e.at("hub") == Approx(1.0).margin(1e-9));
    const double expected_leaf = 1.0 / std::sqrt(8.0);
    for (int i = 0; i < 8; ++i)
        CHECK(e.at("leaf" + std::to_string(i)) == Approx(expected_leaf).margin(1e-6));
}

TEST_CASE("weighted triangle matches the characteristic-polynomial oracle") {
    CoGraph g;
    g.add_edge("a", "b", 3);
    g.add_edge("a", "c", 1);
    g.add_edge("b", "c", 1);
    // det(A - xI) = -(x^3 - (9 + 1 + 1) x - 2*3*1*1); largest root by bisection
    auto poly = [](double x) { return x * x * x - 11.0 * x - 6.0; };
    double lo = 2.0, hi = 5.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (poly(mid) < 0.0) lo = mid;
        else hi = mid;
    }
    const double lambda = 0.5 * (lo + hi);
    // (A - lambda) v = 0 implies v_a = v_b and v_c = 2 v_a / lambda
    const auto e = eigenvector_centrality(g, 1e-12, 100000);
    CHECK(e.at("a") == Approx(1.0).margin(1e-6));
    CHECK(e.at("b") == Approx(1.0).margin(1e-6));
    CHECK(e.at("c") == Approx(2.0 / lambda).margin(1e-6));
}

TEST_CASE("eigenvector centrality covers only the largest component") {
    CoGraph g = complete(4);
    g.add_edge("x", "y", 1);
    const auto e = eigenvector_centrality(g);
    CHECK(e.size() == 4);
    CHECK(e.count("x") == 0);
    CHECK(e.count("y") == 0);
}

TEST_CASE("eigenvector centrality error paths") {
    CoGraph empty;
    empty.add_node("solo");
    CHECK_THROWS_AS(eigenvector_centrality(empty), DataError);
    CHECK_THROWS_AS(eigenvector_centrality(star(4), 1e-30, 2), NumericError);
}

TEST_CASE("centralities are equivariant under relabeling") {
    const auto g = barbell();
    CoGraph renamed;
    auto rename = [](const std::string& id) { return "node_" + id + "_x"; };
    for (const auto& [u, nbrs] : g.adj)
        for (const auto& [v, w] : nbrs)
            if (u < v) renamed.add_edge(rename(u), rename(v), w);
    const auto deg = degree_centrality(g);
    const auto deg2 = degree_centrality(renamed);
    const auto btw = betweenness_centrality(g);
    const auto btw2 = betweenness_centrality(renamed);
    const auto eig = eigenvector_centrality(g);
    const auto eig2 = eigenvector_centrality(renamed);
    for (const auto& [id, v] : deg) CHECK(deg2.at(rename(id)) == Approx(v).margin(1e-12));
    for (const auto& [id, v] : btw) CHECK(btw2.at(rename(id)) == Approx(v).margin(1e-12));
    for (const auto& [id, v] : eig) CHECK(eig2.at(rename(id)) == Approx(v).margin(1e-9));
}
