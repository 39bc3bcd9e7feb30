#include <catch2/catch.hpp>

#include "coread/collections.hpp"

using namespace coread;

namespace {

std::vector<CollectionAssignment> make_collection(const std::string& name, int items,
                                                  std::int64_t assigners,
                                                  CollectionKind kind = CollectionKind::list) {
    std::vector<CollectionAssignment> out;
    for (int i = 0; i < items; ++i)
        out.push_back({name, kind, name + "_item" + std::to_string(i), assigners});
    return out;
}

std::map<std::string, double> constant_changes(const std::vector<CollectionAssignment>& as,
                                               double value) {
    std::map<std::string, double> out;
    for (const auto& a : as) out[a.item_id] = value;
    return out;
}

} // namespace

TEST_CASE("collection_popularity counts matched items per collection") {
    std::vector<CollectionAssignment> assignments;
    std::set<std::string> matched;
    for (int i = 0; i < 465; ++i) {
        const std::string id = "book" + std::to_string(i);
        assignments.push_back({"Best Books Ever", CollectionKind::list, id, 1});
        matched.insert(id);
    }
    assignments.push_back({"Unmatched Only", CollectionKind::list, "stranger", 9});
    const auto pop = collection_popularity(assignments, matched);
    CHECK(pop.at({CollectionKind::list, "Best Books Ever"}) == 465);
    CHECK(pop.count({CollectionKind::list, "Unmatched Only"}) == 0);
}

TEST_CASE("an item in two collections counts once in each") {
    std::vector<CollectionAssignment> assignments = {
        {"L1", CollectionKind::list, "x", 1},
        {"L1", CollectionKind::list, "x", 1}, // duplicate assignment rows
        {"L2", CollectionKind::shelf, "x", 1},
    };
    const auto pop = collection_popularity(assignments, {"x"});
    CHECK(pop.at({CollectionKind::list, "L1"}) == 1);
    CHECK(pop.at({CollectionKind::shelf, "L2"}) == 1);
}

TEST_CASE("collection_rank_change averages member rank changes") {
    const auto as = make_collection("Proliferation of Classics", 10, 6);
    const auto drift = collection_rank_change(as, constant_changes(as, 0.8), 5, 10);
    CHECK(drift.at({CollectionKind::list, "Proliferation of Classics"}) ==
          Approx(0.8).margin(1e-12));
}

TEST_CASE("collections below the book threshold are discarded") {
    const auto nine = make_collection("Nine", 9, 6);
    const auto ten = make_collection("Ten", 10, 6);
    auto all = nine;
    all.insert(all.end(), ten.begin(), ten.end());
    auto changes = constant_changes(all, 0.1);
    const auto drift = collection_rank_change(all, changes, 5, 10);
    CHECK(drift.count({CollectionKind::list, "Nine"}) == 0);
    CHECK(drift.count({CollectionKind::list, "Ten"}) == 1);
}

TEST_CASE("items under the assigner threshold are excluded from the mean") {
    std::vector<CollectionAssignment> as;
    std::map<std::string, double> changes;
    // ten qualifying items at +0.2 and one under-assigned at -1.0
    for (int i = 0; i < 10; ++i) {
        as.push_back({"L", CollectionKind::shelf, "q" + std::to_string(i), 5});
        changes["q" + std::to_string(i)] = 0.2;
    }
    as.push_back({"L", CollectionKind::shelf, "under", 4});
    changes["under"] = -1.0;
    const auto drift = collection_rank_change(as, changes, 5, 10);
    // oracle: mean over the ten qualifying items only
    CHECK(drift.at({CollectionKind::shelf, "L"}) == Approx(0.2).margin(1e-12));
}

TEST_CASE("collection means stay within the rank-change range") {
    std::vector<CollectionAssignment> as;
    std::map<std::string, double> changes;
    std::mt19937_64 rng(3);
    for (int i = 0; i < 30; ++i) {
        const std::string id = "i" + std::to_string(i);
        as.push_back({"L", CollectionKind::list, id, 5});
        changes[id] = static_cast<double>(rng() % 2001) / 1000.0 - 1.0;
    }
    const auto drift = collection_rank_change(as, changes, 1, 1);
    for (const auto& [_, mean] : drift) {
        CHECK(mean >= -1.0);
        CHECK(mean <= 1.0);
    }
}

TEST_CASE("raising min_assigners never adds a collection") {
    std::vector<CollectionAssignment> as;
    std::map<std::string, double> changes;
    std::mt19937_64 rng(9);
    for (int c = 0; c < 5; ++c)
        for (int i = 0; i < 12; ++i) {
            const std::string id = "c" + std::to_string(c) + "_i" + std::to_string(i);
            as.push_back({"col" + std::to_string(c), CollectionKind::list, id,
                          static_cast<std::int64_t>(1 + rng() % 10)});
            changes[id] = 0.0;
        }
    std::set<CollectionId> previous;
    bool first = true;
    for (std::int64_t threshold = 1; threshold <= 10; ++threshold) {
        const auto drift = collection_rank_change(as, changes, threshold, 3);
        std::set<CollectionId> current;
        for (const auto& [id, _] : drift) current.insert(id);
        if (!first)
            for (const auto& id : current) CHECK(previous.count(id) == 1);
        previous = current;
        first = false;
    }
}

TEST_CASE("collection thresholds must be positive") {
    CHECK_THROWS_AS(collection_rank_change({}, {}, 0, 10), ConfigError);
    CHECK_THROWS_AS(collection_rank_change({}, {}, 5, 0), ConfigError);
}
