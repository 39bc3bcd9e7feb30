#pragma once

// Rank-change aggregation over user-curated collections. Ranked lists
// and free-text shelves share one code path; only the kind tag differs.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "coread/csv.hpp"
#include "coread/errors.hpp"

namespace coread {

enum class CollectionKind { list, shelf };

inline std::string to_string(CollectionKind k) {
    return k == CollectionKind::list ? "list" : "shelf";
}

inline std::optional<CollectionKind> parse_collection_kind(const std::string& s) {
    if (s == "list") return CollectionKind::list;
    if (s == "shelf") return CollectionKind::shelf;
    return std::nullopt;
}

struct CollectionAssignment {
    std::string collection_name;
    CollectionKind kind = CollectionKind::list;
    std::string item_id;
    std::int64_t assigner_count = 1; // users who assigned this item
};

using CollectionId = std::pair<CollectionKind, std::string>;

// Number of distinct matched items per collection; collections with no
// matched items are omitted.
inline std::map<CollectionId, std::int64_t>
collection_popularity(const std::vector<CollectionAssignment>& assignments,
                      const std::set<std::string>& matched_items) {
    std::map<CollectionId, std::set<std::string>> members;
    for (const auto& a : assignments)
        if (matched_items.count(a.item_id))
            members[{a.kind, a.collection_name}].insert(a.item_id);
    std::map<CollectionId, std::int64_t> out;
    for (const auto& [id, items] : members)
        out[id] = static_cast<std::int64_t>(items.size());
    return out;
}

// Mean rank change per collection over qualifying items: assigned by at
// least min_assigners users and present in the rank table. Collections
// with fewer than min_books qualifying items are discarded.
inline std::map<CollectionId, double>
collection_rank_change(const std::vector<CollectionAssignment>& assignments,
                       const std::map<std::string, double>& rank_changes,
                       std::int64_t min_assigners = 5, std::int64_t min_books = 10) {
    if (min_assigners < 1 || min_books < 1)
        throw ConfigError("collection thresholds must be >= 1");
    std::map<CollectionId, std::map<std::string, double>> qualifying;
    for (const auto& a : assignments) {
        if (a.assigner_count < min_assigners) continue;
        auto rc = rank_changes.find(a.item_id);
        if (rc == rank_changes.end()) continue;
        qualifying[{a.kind, a.collection_name}][a.item_id] = rc->second;
    }
    std::map<CollectionId, double> out;
    for (const auto& [id, items] : qualifying) {
        if (static_cast<std::int64_t>(items.size()) < min_books) continue;
        double sum = 0.0;
        for (const auto& [_, v] : items) sum += v;
        out[id] = sum / static_cast<double>(items.size());
    }
    return out;
}

inline std::vector<CollectionAssignment> read_assignments_csv(const std::string& path) {
    const auto rows = read_csv_file(path);
    detail::require_header(rows, {"collection_name", "kind", "item_id", "assigner_count"}, path);
    std::vector<CollectionAssignment> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        detail::require_width(rows[i], 4, path, i);
        CollectionAssignment a;
        a.collection_name = rows[i][0];
        const auto kind = parse_collection_kind(rows[i][1]);
        if (!kind)
            throw DataError(path + ": row " + std::to_string(i) + " column 'kind': '" +
                            rows[i][1] + "' is not 'list' or 'shelf'");
        a.kind = *kind;
        a.item_id = rows[i][2];
        try {
            a.assigner_count = std::stoll(rows[i][3]);
        } catch (const std::exception&) {
            throw DataError(path + ": row " + std::to_string(i) +
                            " column 'assigner_count': invalid integer '" + rows[i][3] + "'");
        }
        if (a.assigner_count < 1)
            throw DataError(path + ": row " + std::to_string(i) +
                            ": assigner_count must be >= 1");
        out.push_back(std::move(a));
    }
    return out;
}

} // namespace coread
