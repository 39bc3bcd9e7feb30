#include <catch2/catch.hpp>

#include "coread/coreper.hpp"

using namespace coread;

namespace {

CoGraph star(int leaves) {
    CoGraph g;
    for (int i = 0; i < leaves; ++i) g.add_edge("hub", "leaf" + std::to_string(i), 1);
    return g;
}

// five-clique with one pendant hanging off each clique member
CoGraph clique_plus_pendants() {
    CoGraph g;
    for (int i = 0; i < 5; ++i)
        for (int j = i + 1; j < 5; ++j)
            g.add_edge("core" + std::to_string(i), "core" + std::to_string(j), 1);
    for (int i = 0; i < 5; ++i)
        g.add_edge("core" + std::to_string(i), "pend" + std::to_string(i), 1);
    return g;
}

CorePeripheryParams quick_params(int layers, std::uint64_t seed, int sweeps = 4000,
                                 int samples = 400) {
    CorePeripheryParams p;
    p.layers = layers;
    p.seed = seed;
    p.sweeps = sweeps;
    p.samples = samples;
    return p;
}

std::map<std::string, double> coreness_map(const LayerAssignment& a) {
    std::map<std::string, double> out;
    for (std::size_t i = 0; i < a.nodes.size(); ++i) out[a.nodes[i]] = a.coreness(i);
    return out;
}

} // namespace

TEST_CASE("coreness formula endpoints and the mixed fixture") {
    CHECK(coreness_of({1.0, 0.0, 0.0, 0.0, 0.0}, 5) == 1.0);
    CHECK(coreness_of({0.0, 0.0, 0.0, 0.0, 1.0}, 5) == 0.0);
    // P(layer1)=0.62, P(layer2)=0.38: 0.62*1 + 0.38*0.75
    CHECK(coreness_of({0.62, 0.38, 0.0, 0.0, 0.0}, 5) == Approx(0.905).margin(1e-12));
}

TEST_CASE("layer distributions sum to one") {
    const auto a = infer_layers(clique_plus_pendants(), quick_params(3, 11));
    for (const auto& d : a.dist) {
        double sum = 0.0;
        for (double x : d) sum += x;
        CHECK(sum == Approx(1.0).margin(1e-9));
    }
}

TEST_CASE("star hub gets the highest coreness") {
    const auto scores = coreness_map(infer_layers(star(8), quick_params(2, 3)));
    for (const auto& [id, v] : scores)
        if (id != "hub") CHECK(scores.at("hub") > v);
}

TEST_CASE("clique members outrank pendants in coreness") {
    const auto scores = coreness_map(infer_layers(clique_plus_pendants(), quick_params(2, 5)));
    double min_core = 1.0, max_pend = 0.0;
    for (const auto& [id, v] : scores) {
        if (id.rfind("core", 0) == 0) min_core = std::min(min_core, v);
        else max_pend = std::max(max_pend, v);
    }
    CHECK(min_core > max_pend);
}

TEST_CASE("the five-layer default separates clique from pendants as well") {
    const auto scores =
        coreness_map(infer_layers(clique_plus_pendants(), quick_params(5, 19, 8000)));
    double min_core = 1.0, max_pend = 0.0;
    for (const auto& [id, v] : scores) {
        if (id.rfind("core", 0) == 0) min_core = std::min(min_core, v);
        else max_pend = std::max(max_pend, v);
    }
    CHECK(min_core > max_pend);
}

TEST_CASE("an edgeless graph gives every node identical coreness") {
    CoGraph g;
    g.add_node("a");
    g.add_node("b");
    g.add_node("c");
    const auto scores = coreness_map(infer_layers(g, quick_params(3, 9)));
    CHECK(scores.at("a") == scores.at("b"));
    CHECK(scores.at("b") == scores.at("c"));
}

TEST_CASE("fixed seeds reproduce bit-identical posteriors") {
    const auto g = clique_plus_pendants();
    const auto a1 = infer_layers(g, quick_params(4, 42));
    const auto a2 = infer_layers(g, quick_params(4, 42));
    CHECK(a1.dist == a2.dist);
    const auto a3 = infer_layers(g, quick_params(4, 43));
    CHECK(a1.dist != a3.dist); // different chain, almost surely
}

TEST_CASE("order-preserving relabels shift labels but not values") {
    const auto g = clique_plus_pendants();
    CoGraph renamed;
    auto rename = [](const std::string& id) { return "x_" + id; }; // keeps sort order
    for (const auto& [u, nbrs] : g.adj)
        for (const auto& [v, w] : nbrs)
            if (u < v) renamed.add_edge(rename(u), rename(v), w);
    const auto a1 = coreness_map(infer_layers(g, quick_params(3, 17)));
    const auto a2 = coreness_map(infer_layers(renamed, quick_params(3, 17)));
    for (const auto& [id, v] : a1) CHECK(a2.at(rename(id)) == v);
}

TEST_CASE("infer_layers validates its inputs") {
    CHECK_THROWS_AS(infer_layers(CoGraph{}, quick_params(2, 1)), DataError);
    CHECK_THROWS_AS(infer_layers(star(3), quick_params(1, 1)), ConfigError);
}

TEST_CASE("coreness_scores sorts descending with id tie-breaks") {
    const auto scores = coreness_scores(infer_layers(star(5), quick_params(2, 21)));
    for (std::size_t i = 1; i < scores.size(); ++i) {
        const bool ordered = scores[i - 1].second > scores[i].second ||
                             (scores[i - 1].second == scores[i].second &&
                              scores[i - 1].first < scores[i].first);
        CHECK(ordered);
    }
    CHECK(scores.front().first == "hub");
}

TEST_CASE("reader_structure_correlation separates top-half readers") {
    std::map<std::string, double> scores;
    for (int i = 0; i < 6; ++i) scores["b" + std::to_string(i)] = static_cast<double>(i);
    std::map<std::string, std::set<std::string>> sets;
    sets["top_half"] = {"b3", "b4", "b5"};
    sets["nothing"] = {};
    const auto rows = reader_structure_correlation(
        scores, sets,
        {{"top_half", {"top_half"}, ComboMode::any_of},
         {"nothing", {"nothing"}, ComboMode::any_of}});
    REQUIRE(rows.size() == 2);
    REQUIRE(rows[0].corr.has_value());
    CHECK(rows[0].corr->r > 0.0);
    CHECK(rows[0].items_read == 3);
    CHECK_FALSE(rows[1].corr.has_value()); // constant indicator: undefined
    CHECK(rows[1].items_read == 0);
}

TEST_CASE("the or-combination indicator is the elementwise union") {
    std::map<std::string, double> scores;
    for (int i = 0; i < 8; ++i) scores["b" + std::to_string(i)] = static_cast<double>(i * i);
    std::map<std::string, std::set<std::string>> sets;
    sets["x_reader"] = {"b0", "b3", "b7"};
    sets["y_reader"] = {"b3", "b5"};
    const auto rows = reader_structure_correlation(
        scores, sets,
        {{"either", {"x_reader", "y_reader"}, ComboMode::any_of},
         {"union", {"union"}, ComboMode::any_of}});
    // build the explicit union reader and compare rho
    std::map<std::string, std::set<std::string>> union_sets = sets;
    union_sets["union"] = {"b0", "b3", "b5", "b7"};
    const auto union_rows = reader_structure_correlation(
        scores, union_sets, {{"union", {"union"}, ComboMode::any_of}});
    REQUIRE(rows[0].corr.has_value());
    REQUIRE(union_rows[0].corr.has_value());
    CHECK(rows[0].corr->r == union_rows[0].corr->r);
    CHECK(rows[0].items_read == 4);
}

TEST_CASE("the and-combination keeps only commonly read items") {
    std::map<std::string, double> scores;
    for (int i = 0; i < 6; ++i) scores["b" + std::to_string(i)] = static_cast<double>(i);
    std::map<std::string, std::set<std::string>> sets;
    sets["x"] = {"b4", "b5", "b1"};
    sets["y"] = {"b4", "b5", "b2"};
    const auto rows = reader_structure_correlation(
        scores, sets, {{"both", {"x", "y"}, ComboMode::all_of}});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].items_read == 2); // b4, b5
    REQUIRE(rows[0].corr.has_value());
    CHECK(rows[0].corr->r > 0.0);
}
