#include <catch2/catch.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "coread/corpus.hpp"

using namespace coread;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("coread_test_" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name, const std::string& content) const {
        const auto p = path / name;
        std::ofstream out(p, std::ios::binary);
        out << content;
        return p.string();
    }
};

const char* kItems =
    "item_id,title,author,pub_year,extra_json\n"
    "i1,Mrs. Dalloway,Virginia Woolf,1925,\n"
    "i2,Ulysses,James Joyce,1922,\"{\"\"ratings_count\"\": \"\"120\"\"}\"\n";

const char* kReaders =
    "reader_id,display_name,member_start,member_end\n"
    "r1,Alice,1922-01-01,1940-12-31\n"
    "r2,,,\n";

Corpus tiny_corpus() {
    std::vector<ItemRecord> items = {{"A", "Book A", "X", 1920, {}},
                                     {"B", "Book B", "Y", 1950, {}}};
    std::vector<ReaderRecord> readers = {{"r1", {}, {}, {}}, {"r2", {}, {}, {}}};
    std::vector<InteractionEvent> events = {
        {"r1", "A", EventKind::borrow, try_parse_date("1930-01-01"), {}},
        {"r1", "B", EventKind::borrow, try_parse_date("1930-06-01"), {}},
        {"r2", "A", EventKind::review, {}, {}},
    };
    return make_corpus("hist", events, items, readers);
}

} // namespace

TEST_CASE("load_corpus accepts a minimal well-formed triplet") {
    TempDir dir;
    const auto events = dir.file("events.csv",
                                 "reader_id,item_id,kind,timestamp,value\n"
                                 "r1,i1,borrow,1930-05-02,\n"
                                 "r1,i2,borrow,,\n"
                                 "r2,i1,rating,1931-01-01,4\n");
    const auto corpus = load_corpus(events, dir.file("items.csv", kItems),
                                    dir.file("readers.csv", kReaders), "hist");
    REQUIRE(corpus.events.size() == 3);
    CHECK(corpus.items.size() == 2);
    CHECK(corpus.readers.size() == 2);
    CHECK(corpus.events[0].timestamp.has_value());
    CHECK_FALSE(corpus.events[1].timestamp.has_value());
    CHECK(corpus.events[2].value == 4.0);
    CHECK(corpus.item("i2").extra.at("ratings_count") == "120");
    CHECK(corpus.item("i1").pub_year == 1925);
}

TEST_CASE("load_corpus names a dangling foreign key") {
    TempDir dir;
    const auto events = dir.file("events.csv",
                                 "reader_id,item_id,kind,timestamp,value\n"
                                 "r1,X9,borrow,,\n");
    try {
        load_corpus(events, dir.file("items.csv", kItems), dir.file("readers.csv", kReaders),
                    "hist");
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("X9") != std::string::npos);
    }
}

TEST_CASE("load_corpus accepts an empty events file with valid headers") {
    TempDir dir;
    const auto events = dir.file("events.csv", "reader_id,item_id,kind,timestamp,value\n");
    const auto corpus = load_corpus(events, dir.file("items.csv", kItems),
                                    dir.file("readers.csv", kReaders), "hist");
    CHECK(corpus.events.empty());
    CHECK(corpus.items.size() == 2);
}

TEST_CASE("load_corpus rejects schema violations with row positions") {
    TempDir dir;
    const auto items = dir.file("items.csv", kItems);
    const auto readers = dir.file("readers.csv", kReaders);

    SECTION("unknown kind") {
        const auto events = dir.file("e.csv",
                                     "reader_id,item_id,kind,timestamp,value\n"
                                     "r1,i1,purchase,,\n");
        try {
            load_corpus(events, items, readers, "hist");
            FAIL("expected DataError");
        } catch (const DataError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("row 1") != std::string::npos);
            CHECK(msg.find("kind") != std::string::npos);
        }
    }
    SECTION("rating without value") {
        const auto events = dir.file("e.csv",
                                     "reader_id,item_id,kind,timestamp,value\n"
                                     "r1,i1,rating,,\n");
        CHECK_THROWS_AS(load_corpus(events, items, readers, "hist"), DataError);
    }
    SECTION("value on a borrow") {
        const auto events = dir.file("e.csv",
                                     "reader_id,item_id,kind,timestamp,value\n"
                                     "r1,i1,borrow,,3\n");
        CHECK_THROWS_AS(load_corpus(events, items, readers, "hist"), DataError);
    }
    SECTION("bad header") {
        const auto events = dir.file("e.csv", "reader,item,kind,timestamp,value\n");
        CHECK_THROWS_AS(load_corpus(events, items, readers, "hist"), DataError);
    }
    SECTION("duplicate item id") {
        const auto dup = dir.file("items_dup.csv",
                                  "item_id,title,author,pub_year,extra_json\n"
                                  "i1,T,A,,\n"
                                  "i1,T2,A2,,\n");
        const auto events = dir.file("e.csv", "reader_id,item_id,kind,timestamp,value\n");
        try {
            load_corpus(events, dup, readers, "hist");
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("duplicate item id") != std::string::npos);
        }
    }
    SECTION("pub_year outside range") {
        const auto bad = dir.file("items_bad.csv",
                                  "item_id,title,author,pub_year,extra_json\n"
                                  "i1,T,A,999,\n");
        const auto events = dir.file("e.csv", "reader_id,item_id,kind,timestamp,value\n");
        CHECK_THROWS_AS(load_corpus(events, bad, readers, "hist"), DataError);
    }
}

TEST_CASE("binary round-trip is the identity on events, items and readers") {
    TempDir dir;
    const auto events = dir.file("events.csv",
                                 "reader_id,item_id,kind,timestamp,value\n"
                                 "r1,i1,borrow,1930-05-02,\n"
                                 "r2,i2,rating,,4.5\n"
                                 "r1,i1,borrow,1930-05-02,\n");
    const auto corpus = load_corpus(events, dir.file("items.csv", kItems),
                                    dir.file("readers.csv", kReaders), "hist");
    std::stringstream buf;
    save_corpus(corpus, buf);
    const auto loaded = load_corpus_bin(buf, "buf");
    CHECK(loaded.label == corpus.label);
    CHECK(loaded.events == corpus.events);
    CHECK(loaded.items == corpus.items);
    CHECK(loaded.readers == corpus.readers);

    std::stringstream buf2;
    save_corpus(loaded, buf2);
    CHECK(buf2.str() == buf.str());
}

TEST_CASE("truncated corpus containers are rejected") {
    TempDir dir;
    const auto events = dir.file("events.csv",
                                 "reader_id,item_id,kind,timestamp,value\n"
                                 "r1,i1,borrow,1930-05-02,\n"
                                 "r2,i2,rating,,4.5\n");
    const auto corpus = load_corpus(events, dir.file("items.csv", kItems),
                                    dir.file("readers.csv", kReaders), "hist");
    std::stringstream buf;
    save_corpus(corpus, buf);
    const std::string full = buf.str();
    for (std::size_t cut : {full.size() - 1, full.size() / 2, std::size_t{9}}) {
        std::stringstream part(full.substr(0, cut));
        CHECK_THROWS_AS(load_corpus_bin(part, "part"), DataError);
    }
}

TEST_CASE("filter_events selects by kind") {
    const auto filtered =
        filter_events(tiny_corpus(), std::set<EventKind>{EventKind::borrow}, {}, {});
    CHECK(filtered.events.size() == 2);
    for (const auto& e : filtered.events) CHECK(e.kind == EventKind::borrow);
    CHECK(filtered.items.size() == 2); // metadata retained in full
}

TEST_CASE("filter_events drops items outside the publication window") {
    const auto filtered = filter_events(tiny_corpus(), {}, {}, YearInterval{1800, 1940});
    // item B (1950) excluded
    CHECK(filtered.events.size() == 2);
    for (const auto& e : filtered.events) CHECK(e.item_id == "A");
}

TEST_CASE("filter_events rejects inverted intervals") {
    const auto corpus = tiny_corpus();
    CHECK_THROWS_AS(filter_events(corpus, {}, DateInterval{*try_parse_date("1935-01-01"),
                                                           *try_parse_date("1930-01-01")},
                                  {}),
                    DataError);
    CHECK_THROWS_AS(filter_events(corpus, {}, {}, YearInterval{1940, 1800}), DataError);
}

TEST_CASE("filter_events treats missing timestamps as non-matching") {
    const auto filtered = filter_events(
        tiny_corpus(), {}, DateInterval{*try_parse_date("1900-01-01"),
                                        *try_parse_date("1999-12-31")}, {});
    CHECK(filtered.events.size() == 2); // the undated review is dropped
}

TEST_CASE("filter_events dedup collapses identical rows only when asked") {
    auto corpus = tiny_corpus();
    auto events = corpus.events;
    events.push_back(events[0]); // duplicate borrow
    corpus = make_corpus("hist2", events, corpus.items, corpus.readers);
    CHECK(filter_events(corpus, {}, {}, {}).events.size() == 4);
    CHECK(filter_events(corpus, {}, {}, {}, true).events.size() == 3);
}

TEST_CASE("filter_events is idempotent and monotone") {
    const auto corpus = tiny_corpus();
    const std::optional<std::set<EventKind>> kinds{{EventKind::borrow}};
    const auto once = filter_events(corpus, kinds, {}, {});
    const auto twice = filter_events(once, kinds, {}, {});
    CHECK(once.events == twice.events);
    CHECK(once.events.size() <= corpus.events.size());
}

TEST_CASE("corpus_summary counts by kind and takes the median per reader") {
    const auto s = corpus_summary(tiny_corpus());
    CHECK(s.distinct_items == 2);
    CHECK(s.distinct_readers == 2);
    CHECK(s.events_by_kind.at(EventKind::borrow) == 2);
    CHECK(s.events_by_kind.at(EventKind::review) == 1);
    REQUIRE(s.median_events_per_reader.has_value());
    CHECK(*s.median_events_per_reader == 1.5); // counts {2, 1}
}

TEST_CASE("corpus_summary of an empty corpus reports absent median") {
    const auto corpus = make_corpus("empty", {}, {{"A", "T", "X", {}, {}}}, {});
    const auto s = corpus_summary(corpus);
    CHECK(s.distinct_items == 0);
    CHECK(s.distinct_readers == 0);
    CHECK(s.events_by_kind.empty());
    CHECK_FALSE(s.median_events_per_reader.has_value());
}

TEST_CASE("median of reader event counts matches the nine-event fixture") {
    // per-reader borrow totals {1, 9, 1480} -> median 9
    std::vector<ItemRecord> items = {{"A", "T", "X", {}, {}}};
    std::vector<ReaderRecord> readers = {{"r1", {}, {}, {}},
                                         {"r2", {}, {}, {}},
                                         {"r3", {}, {}, {}}};
    std::vector<InteractionEvent> events;
    auto add = [&](const std::string& r, int n) {
        for (int i = 0; i < n; ++i)
            events.push_back({r, "A", EventKind::borrow, {}, {}});
    };
    add("r1", 1);
    add("r2", 9);
    add("r3", 1480);
    const auto s = corpus_summary(make_corpus("hist", events, items, readers));
    REQUIRE(s.median_events_per_reader.has_value());
    CHECK(*s.median_events_per_reader == 9.0);
}

TEST_CASE("corpus_summary counts equal brute-force recounts on random corpora") {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<ItemRecord> items;
        std::vector<ReaderRecord> readers;
        const int n_items = 1 + static_cast<int>(rng() % 6);
        const int n_readers = 1 + static_cast<int>(rng() % 6);
        for (int i = 0; i < n_items; ++i)
            items.push_back({"i" + std::to_string(i), "T", "A", {}, {}});
        for (int r = 0; r < n_readers; ++r)
            readers.push_back({"r" + std::to_string(r), {}, {}, {}});
        std::vector<InteractionEvent> events;
        const int n_events = static_cast<int>(rng() % 40);
        for (int e = 0; e < n_events; ++e) {
            InteractionEvent ev;
            ev.reader_id = "r" + std::to_string(rng() % n_readers);
            ev.item_id = "i" + std::to_string(rng() % n_items);
            ev.kind = static_cast<EventKind>(rng() % 2); // borrow or review
            events.push_back(ev);
        }
        const auto corpus = make_corpus("x", events, items, readers);
        const auto s = corpus_summary(corpus);
        std::set<std::string> seen_items, seen_readers;
        std::int64_t borrows = 0, reviews = 0;
        for (const auto& e : corpus.events) {
            seen_items.insert(e.item_id);
            seen_readers.insert(e.reader_id);
            (e.kind == EventKind::borrow ? borrows : reviews) += 1;
        }
        CHECK(s.distinct_items == static_cast<std::int64_t>(seen_items.size()));
        CHECK(s.distinct_readers == static_cast<std::int64_t>(seen_readers.size()));
        std::int64_t total = 0;
        for (const auto& [_, n] : s.events_by_kind) total += n;
        CHECK(total == borrows + reviews);
    }
}
