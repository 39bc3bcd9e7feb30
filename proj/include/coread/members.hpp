#pragma once

// Per-reader analysis: borrowing profiles with rank-drift attribution,
// cross-reader overlap, and temporal borrow-proximity detection.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "coread/corpus.hpp"
#include "coread/errors.hpp"
#include "coread/numeric.hpp"

namespace coread {

struct MemberProfile {
    std::string reader_id;
    std::int64_t event_count = 0;
    std::int64_t distinct_items = 0;         // over all corpus items
    std::int64_t distinct_matched_items = 0; // items present in the rank table
    std::optional<double> median_pub_year;   // over distinct matched items
    std::optional<double> mean_rank_change;  // over distinct matched items
};

// Profiles for readers with at least min_events events. Rank drift and
// publication years are computed over the reader's distinct matched
// items, so re-borrows do not double-count.
inline std::vector<MemberProfile>
member_profiles(const Corpus& corpus, const std::map<std::string, double>& rank_changes,
                std::int64_t min_events = 10) {
    if (min_events < 1) throw ConfigError("member_profiles: min_events must be >= 1");
    std::map<std::string, std::int64_t> event_counts;
    std::map<std::string, std::set<std::string>> items_of;
    for (const auto& e : corpus.events) {
        event_counts[e.reader_id] += 1;
        items_of[e.reader_id].insert(e.item_id);
    }
    std::vector<MemberProfile> out;
    for (const auto& [reader, n_events] : event_counts) {
        if (n_events < min_events) continue;
        MemberProfile p;
        p.reader_id = reader;
        p.event_count = n_events;
        const auto& items = items_of[reader];
        p.distinct_items = static_cast<std::int64_t>(items.size());
        std::vector<double> changes;
        std::vector<double> years;
        for (const auto& id : items) {
            auto rc = rank_changes.find(id);
            if (rc == rank_changes.end()) continue;
            ++p.distinct_matched_items;
            changes.push_back(rc->second);
            const auto& rec = corpus.item(id);
            if (rec.pub_year) years.push_back(static_cast<double>(*rec.pub_year));
        }
        if (!changes.empty()) p.mean_rank_change = mean_of(changes);
        if (!years.empty()) p.median_pub_year = median_of(std::move(years));
        out.push_back(std::move(p));
    }
    return out;
}

struct SharedItems {
    std::int64_t count_x = 0;
    std::int64_t count_y = 0;
    std::int64_t overlap = 0;
};

// Distinct items per reader and the intersection size, optionally
// restricted to a universe (e.g. the matched set).
inline SharedItems shared_items(const Corpus& corpus, const std::string& reader_x,
                                const std::string& reader_y,
                                const std::optional<std::set<std::string>>& universe =
                                    std::nullopt) {
    if (!corpus.has_reader(reader_x)) throw DataError("unknown reader id: " + reader_x);
    if (!corpus.has_reader(reader_y)) throw DataError("unknown reader id: " + reader_y);
    std::set<std::string> x, y;
    for (const auto& e : corpus.events) {
        if (universe && !universe->count(e.item_id)) continue;
        if (e.reader_id == reader_x) x.insert(e.item_id);
        if (e.reader_id == reader_y) y.insert(e.item_id);
    }
    SharedItems s;
    s.count_x = static_cast<std::int64_t>(x.size());
    s.count_y = static_cast<std::int64_t>(y.size());
    for (const auto& id : x)
        if (y.count(id)) ++s.overlap;
    return s;
}

struct ProximityHit {
    std::string item_id;
    std::string reader_1; // lexicographically smaller
    std::string reader_2;
    std::int64_t gap_days = 0; // smallest gap between the pair's borrows
};

// Reader pairs who borrowed the same item within window_days of each
// other (inclusive). Only dated borrow events qualify. Each unordered
// reader pair is reported once per item with its smallest day gap.
inline std::vector<ProximityHit>
borrow_proximity(const Corpus& corpus,
                 const std::optional<std::set<std::string>>& item_filter = std::nullopt,
                 std::int64_t window_days = 5) {
    if (window_days < 0) throw ConfigError("borrow_proximity: window_days must be >= 0");
    std::map<std::string, std::map<std::string, std::vector<std::int64_t>>> dated;
    for (const auto& e : corpus.events) {
        if (e.kind != EventKind::borrow || !e.timestamp) continue;
        if (item_filter && !item_filter->count(e.item_id)) continue;
        dated[e.item_id][e.reader_id].push_back(e.timestamp->serial());
    }
    std::vector<ProximityHit> out;
    for (const auto& [item, readers] : dated) {
        for (auto i = readers.begin(); i != readers.end(); ++i) {
            auto j = i;
            for (++j; j != readers.end(); ++j) {
                std::optional<std::int64_t> best;
                for (std::int64_t d1 : i->second)
                    for (std::int64_t d2 : j->second) {
                        const std::int64_t gap = d1 > d2 ? d1 - d2 : d2 - d1;
                        if (!best || gap < *best) best = gap;
                    }
                if (best && *best <= window_days)
                    out.push_back(ProximityHit{item, i->first, j->first, *best});
            }
        }
    }
    return out;
}

} // namespace coread
