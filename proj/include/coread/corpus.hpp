#pragma once

// Reader-item interaction corpora: CSV ingestion with validation,
// event filtering, summary statistics and a binary container format.
//
// CSV schemas (UTF-8, header row required):
//   events(reader_id,item_id,kind,timestamp,value)
//   items(item_id,title,author,pub_year,extra_json)
//   readers(reader_id,display_name,member_start,member_end)

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "coread/csv.hpp"
#include "coread/dates.hpp"
#include "coread/errors.hpp"
#include "coread/numeric.hpp"

namespace coread {

enum class EventKind : std::uint8_t { borrow = 0, review = 1, rating = 2 };

inline std::string to_string(EventKind k) {
    switch (k) {
    case EventKind::borrow: return "borrow";
    case EventKind::review: return "review";
    case EventKind::rating: return "rating";
    }
    return "?";
}

inline std::optional<EventKind> parse_event_kind(const std::string& s) {
    if (s == "borrow") return EventKind::borrow;
    if (s == "review") return EventKind::review;
    if (s == "rating") return EventKind::rating;
    return std::nullopt;
}

struct InteractionEvent {
    std::string reader_id;
    std::string item_id;
    EventKind kind = EventKind::borrow;
    std::optional<Date> timestamp;
    std::optional<double> value; // present iff kind == rating

    bool operator==(const InteractionEvent&) const = default;
};

struct ItemRecord {
    std::string item_id;
    std::string title;
    std::string author;
    std::optional<int> pub_year;
    std::map<std::string, std::string> extra;

    bool operator==(const ItemRecord&) const = default;
};

struct ReaderRecord {
    std::string reader_id;
    std::optional<std::string> display_name;
    std::optional<Date> member_start;
    std::optional<Date> member_end;

    bool operator==(const ReaderRecord&) const = default;
};

// Validated, immutable once built. Row order is preserved from the inputs.
struct Corpus {
    std::string label;
    std::vector<InteractionEvent> events;
    std::vector<ItemRecord> items;
    std::vector<ReaderRecord> readers;

    std::unordered_map<std::string, std::size_t> item_index;
    std::unordered_map<std::string, std::size_t> reader_index;

    const ItemRecord& item(const std::string& id) const {
        auto it = item_index.find(id);
        if (it == item_index.end()) throw DataError("unknown item id: " + id);
        return items[it->second];
    }
    const ReaderRecord& reader(const std::string& id) const {
        auto it = reader_index.find(id);
        if (it == reader_index.end()) throw DataError("unknown reader id: " + id);
        return readers[it->second];
    }
    bool has_item(const std::string& id) const { return item_index.count(id) > 0; }
    bool has_reader(const std::string& id) const { return reader_index.count(id) > 0; }
};

namespace detail {

inline void validate_corpus(Corpus& c) {
    if (c.label.empty()) throw DataError("corpus label must be non-empty");
    c.item_index.clear();
    c.reader_index.clear();
    for (std::size_t i = 0; i < c.items.size(); ++i) {
        const auto& it = c.items[i];
        if (it.item_id.empty()) throw DataError("item with empty item_id");
        if (it.pub_year && (*it.pub_year < 1000 || *it.pub_year > 2100))
            throw DataError("item " + it.item_id + ": pub_year " +
                            std::to_string(*it.pub_year) + " outside [1000, 2100]");
        if (!c.item_index.emplace(it.item_id, i).second)
            throw DataError("duplicate item id: " + it.item_id);
    }
    for (std::size_t i = 0; i < c.readers.size(); ++i) {
        const auto& r = c.readers[i];
        if (r.reader_id.empty()) throw DataError("reader with empty reader_id");
        if (r.member_start && r.member_end && *r.member_end < *r.member_start)
            throw DataError("reader " + r.reader_id + ": membership span end precedes start");
        if (!c.reader_index.emplace(r.reader_id, i).second)
            throw DataError("duplicate reader id: " + r.reader_id);
    }
    for (std::size_t i = 0; i < c.events.size(); ++i) {
        const auto& e = c.events[i];
        const std::string where = "event row " + std::to_string(i + 1);
        if (e.reader_id.empty() || e.item_id.empty())
            throw DataError(where + ": reader_id and item_id must be non-empty");
        if (!c.item_index.count(e.item_id))
            throw DataError(where + ": unresolvable item id '" + e.item_id + "'");
        if (!c.reader_index.count(e.reader_id))
            throw DataError(where + ": unresolvable reader id '" + e.reader_id + "'");
        if (e.kind == EventKind::rating && !e.value)
            throw DataError(where + ": rating event requires a value");
        if (e.kind != EventKind::rating && e.value)
            throw DataError(where + ": value present on non-rating event");
    }
}

inline std::optional<double> parse_optional_number(const std::string& s,
                                                   const std::string& context) {
    if (s.empty()) return std::nullopt;
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError(context + ": invalid number '" + s + "'");
    }
}

} // namespace detail

// Builds and validates a corpus from in-memory rows.
inline Corpus make_corpus(std::string label,
                          std::vector<InteractionEvent> events,
                          std::vector<ItemRecord> items,
                          std::vector<ReaderRecord> readers) {
    Corpus c;
    c.label = std::move(label);
    c.events = std::move(events);
    c.items = std::move(items);
    c.readers = std::move(readers);
    detail::validate_corpus(c);
    return c;
}

inline std::vector<InteractionEvent> load_events_csv(const std::string& path) {
    const auto rows = read_csv_file(path);
    detail::require_header(rows, {"reader_id", "item_id", "kind", "timestamp", "value"}, path);
    std::vector<InteractionEvent> out;
    out.reserve(rows.size() - 1);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        detail::require_width(rows[i], 5, path, i);
        InteractionEvent e;
        e.reader_id = rows[i][0];
        e.item_id = rows[i][1];
        const auto kind = parse_event_kind(rows[i][2]);
        if (!kind)
            throw DataError(path + ": row " + std::to_string(i) +
                            " column 'kind': unknown kind '" + rows[i][2] + "'");
        e.kind = *kind;
        if (!rows[i][3].empty())
            e.timestamp = parse_date(rows[i][3], path + ": row " + std::to_string(i) +
                                                     " column 'timestamp'");
        e.value = detail::parse_optional_number(
            rows[i][4], path + ": row " + std::to_string(i) + " column 'value'");
        out.push_back(std::move(e));
    }
    return out;
}

inline std::vector<ItemRecord> load_items_csv(const std::string& path) {
    const auto rows = read_csv_file(path);
    detail::require_header(rows, {"item_id", "title", "author", "pub_year", "extra_json"}, path);
    std::vector<ItemRecord> out;
    out.reserve(rows.size() - 1);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        detail::require_width(rows[i], 5, path, i);
        ItemRecord rec;
        rec.item_id = rows[i][0];
        rec.title = rows[i][1];
        rec.author = rows[i][2];
        const std::string where = path + ": row " + std::to_string(i);
        if (!rows[i][3].empty()) {
            auto y = detail::parse_optional_number(rows[i][3], where + " column 'pub_year'");
            if (*y != static_cast<int>(*y))
                throw DataError(where + " column 'pub_year': not an integer year");
            rec.pub_year = static_cast<int>(*y);
        }
        if (!rows[i][4].empty()) {
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(rows[i][4]);
            } catch (const nlohmann::json::exception& e) {
                throw DataError(where + " column 'extra_json': " + e.what());
            }
            if (!j.is_object())
                throw DataError(where + " column 'extra_json': expected a JSON object");
            for (auto& [k, v] : j.items()) {
                if (v.is_string()) rec.extra[k] = v.get<std::string>();
                else if (v.is_number_integer()) rec.extra[k] = std::to_string(v.get<std::int64_t>());
                else if (v.is_number()) rec.extra[k] = std::to_string(v.get<double>());
                else throw DataError(where + " column 'extra_json': key '" + k +
                                     "' must be a string or number");
            }
        }
        out.push_back(std::move(rec));
    }
    return out;
}

inline std::vector<ReaderRecord> load_readers_csv(const std::string& path) {
    const auto rows = read_csv_file(path);
    detail::require_header(rows, {"reader_id", "display_name", "member_start", "member_end"}, path);
    std::vector<ReaderRecord> out;
    out.reserve(rows.size() - 1);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        detail::require_width(rows[i], 4, path, i);
        ReaderRecord r;
        r.reader_id = rows[i][0];
        if (!rows[i][1].empty()) r.display_name = rows[i][1];
        const std::string where = path + ": row " + std::to_string(i);
        if (!rows[i][2].empty())
            r.member_start = parse_date(rows[i][2], where + " column 'member_start'");
        if (!rows[i][3].empty())
            r.member_end = parse_date(rows[i][3], where + " column 'member_end'");
        out.push_back(std::move(r));
    }
    return out;
}

inline Corpus load_corpus(const std::string& events_path, const std::string& items_path,
                          const std::string& readers_path, const std::string& label) {
    return make_corpus(label, load_events_csv(events_path), load_items_csv(items_path),
                       load_readers_csv(readers_path));
}

// ---------------------------------------------------------------------------
// Event filtering

struct DateInterval {
    Date start;
    Date end;
};

struct YearInterval {
    int start = 0;
    int end = 0;
};

// Keeps exactly the events matching every provided predicate. Item and
// reader metadata tables are retained in full. Events without a timestamp
// never match a date filter; events whose item lacks pub_year never match
// a publication-year filter. `dedup` collapses byte-identical event rows.
inline Corpus filter_events(const Corpus& corpus,
                            const std::optional<std::set<EventKind>>& kinds,
                            const std::optional<DateInterval>& date_range,
                            const std::optional<YearInterval>& pub_year_range,
                            bool dedup = false) {
    if (date_range && date_range->end < date_range->start)
        throw DataError("inverted date interval: start " + date_range->start.to_string() +
                        " > end " + date_range->end.to_string());
    if (pub_year_range && pub_year_range->end < pub_year_range->start)
        throw DataError("inverted year interval: start " + std::to_string(pub_year_range->start) +
                        " > end " + std::to_string(pub_year_range->end));
    Corpus out;
    out.label = corpus.label;
    out.items = corpus.items;
    out.readers = corpus.readers;
    std::set<std::tuple<std::string, std::string, EventKind, std::optional<Date>,
                        std::optional<double>>>
        seen;
    for (const auto& e : corpus.events) {
        if (kinds && !kinds->count(e.kind)) continue;
        if (date_range) {
            if (!e.timestamp) continue;
            if (*e.timestamp < date_range->start || date_range->end < *e.timestamp) continue;
        }
        if (pub_year_range) {
            const auto& item = corpus.item(e.item_id);
            if (!item.pub_year) continue;
            if (*item.pub_year < pub_year_range->start || *item.pub_year > pub_year_range->end)
                continue;
        }
        if (dedup &&
            !seen.emplace(e.reader_id, e.item_id, e.kind, e.timestamp, e.value).second)
            continue;
        out.events.push_back(e);
    }
    detail::validate_corpus(out);
    return out;
}

// ---------------------------------------------------------------------------
// Summary

struct CorpusSummary {
    std::int64_t distinct_items = 0;   // items appearing in events
    std::int64_t distinct_readers = 0; // readers appearing in events
    std::map<EventKind, std::int64_t> events_by_kind;
    std::optional<double> median_events_per_reader; // absent when no events
};

inline CorpusSummary corpus_summary(const Corpus& corpus) {
    CorpusSummary s;
    std::set<std::string> items;
    std::map<std::string, std::int64_t> per_reader;
    for (const auto& e : corpus.events) {
        items.insert(e.item_id);
        per_reader[e.reader_id] += 1;
        s.events_by_kind[e.kind] += 1;
    }
    s.distinct_items = static_cast<std::int64_t>(items.size());
    s.distinct_readers = static_cast<std::int64_t>(per_reader.size());
    if (!per_reader.empty()) {
        std::vector<double> counts;
        counts.reserve(per_reader.size());
        for (const auto& [_, n] : per_reader) counts.push_back(static_cast<double>(n));
        s.median_events_per_reader = median_of(std::move(counts));
    }
    return s;
}

// ---------------------------------------------------------------------------
// Binary container (the `.bin` files produced by `coread ingest`)

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw DataError("corpus file truncated");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void put_str(std::ostream& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_str(std::istream& in) {
    const auto n = get_u32(in);
    std::string s(n, '\0');
    if (n && !in.read(s.data(), n)) throw DataError("corpus file truncated");
    return s;
}

inline void put_opt_date(std::ostream& out, const std::optional<Date>& d) {
    out.put(d ? 1 : 0);
    if (d) put_str(out, d->to_string());
}

inline bool get_flag(std::istream& in) {
    const int flag = in.get();
    if (flag == 0) return false;
    if (flag == 1) return true;
    throw DataError("corpus file truncated or corrupt (presence flag)");
}

inline std::optional<Date> get_opt_date(std::istream& in) {
    if (!get_flag(in)) return std::nullopt;
    return parse_date(get_str(in), "corpus file");
}

} // namespace detail

inline void save_corpus(const Corpus& c, std::ostream& out) {
    out.write("COREADB1", 8);
    detail::put_str(out, c.label);
    detail::put_u32(out, static_cast<std::uint32_t>(c.items.size()));
    for (const auto& it : c.items) {
        detail::put_str(out, it.item_id);
        detail::put_str(out, it.title);
        detail::put_str(out, it.author);
        out.put(it.pub_year ? 1 : 0);
        if (it.pub_year) detail::put_u32(out, static_cast<std::uint32_t>(*it.pub_year));
        detail::put_u32(out, static_cast<std::uint32_t>(it.extra.size()));
        for (const auto& [k, v] : it.extra) {
            detail::put_str(out, k);
            detail::put_str(out, v);
        }
    }
    detail::put_u32(out, static_cast<std::uint32_t>(c.readers.size()));
    for (const auto& r : c.readers) {
        detail::put_str(out, r.reader_id);
        out.put(r.display_name ? 1 : 0);
        if (r.display_name) detail::put_str(out, *r.display_name);
        detail::put_opt_date(out, r.member_start);
        detail::put_opt_date(out, r.member_end);
    }
    detail::put_u32(out, static_cast<std::uint32_t>(c.events.size()));
    for (const auto& e : c.events) {
        detail::put_str(out, e.reader_id);
        detail::put_str(out, e.item_id);
        out.put(static_cast<char>(e.kind));
        detail::put_opt_date(out, e.timestamp);
        out.put(e.value ? 1 : 0);
        if (e.value) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.17g", *e.value);
            detail::put_str(out, buf);
        }
    }
}

inline void save_corpus_file(const Corpus& c, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    save_corpus(c, out);
}

inline Corpus load_corpus_bin(std::istream& in, const std::string& name) {
    char magic[8];
    if (!in.read(magic, 8) || std::string(magic, 8) != "COREADB1")
        throw DataError(name + ": not a coread corpus file");
    Corpus c;
    c.label = detail::get_str(in);
    const auto n_items = detail::get_u32(in);
    c.items.reserve(n_items);
    for (std::uint32_t i = 0; i < n_items; ++i) {
        ItemRecord it;
        it.item_id = detail::get_str(in);
        it.title = detail::get_str(in);
        it.author = detail::get_str(in);
        if (detail::get_flag(in)) it.pub_year = static_cast<int>(detail::get_u32(in));
        const auto n_extra = detail::get_u32(in);
        for (std::uint32_t k = 0; k < n_extra; ++k) {
            std::string key = detail::get_str(in);
            it.extra[key] = detail::get_str(in);
        }
        c.items.push_back(std::move(it));
    }
    const auto n_readers = detail::get_u32(in);
    c.readers.reserve(n_readers);
    for (std::uint32_t i = 0; i < n_readers; ++i) {
        ReaderRecord r;
        r.reader_id = detail::get_str(in);
        if (detail::get_flag(in)) r.display_name = detail::get_str(in);
        r.member_start = detail::get_opt_date(in);
        r.member_end = detail::get_opt_date(in);
        c.readers.push_back(std::move(r));
    }
    const auto n_events = detail::get_u32(in);
    c.events.reserve(n_events);
    for (std::uint32_t i = 0; i < n_events; ++i) {
        InteractionEvent e;
        e.reader_id = detail::get_str(in);
        e.item_id = detail::get_str(in);
        e.kind = static_cast<EventKind>(in.get());
        e.timestamp = detail::get_opt_date(in);
        if (detail::get_flag(in)) e.value = std::stod(detail::get_str(in));
        c.events.push_back(std::move(e));
    }
    detail::validate_corpus(c);
    return c;
}

inline Corpus load_corpus_bin_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    return load_corpus_bin(in, path);
}

} // namespace coread
