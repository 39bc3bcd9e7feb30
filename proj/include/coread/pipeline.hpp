#pragma once

// End-to-end analysis run: ingest -> match -> popularity -> collections
// -> network -> divergence -> coreper -> members. Writes nine CSV tables
// plus a JSON manifest carrying the canonical configuration, its hash,
// per-stage outputs and the summary statistics / figure coordinates.
// Identical configuration and inputs yield byte-identical bundles; stage
// timings therefore go to the log stream, never into the bundle.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "coread/centrality.hpp"
#include "coread/cograph.hpp"
#include "coread/collections.hpp"
#include "coread/coreper.hpp"
#include "coread/corpus.hpp"
#include "coread/errors.hpp"
#include "coread/match.hpp"
#include "coread/members.hpp"
#include "coread/report.hpp"
#include "coread/stats.hpp"

namespace coread {

struct RunConfig {
    std::string events_a, items_a, readers_a;
    std::string label_a = "a";
    std::string events_b, items_b, readers_b;
    std::string label_b = "b";

    double match_min_score = 0.85;
    std::string overrides_path;   // optional manual pairs
    std::string match_table_path; // optional precomputed table; skips matching

    std::string assignments_path;   // optional collections input
    std::string external_list_path; // optional reference list (item_id,metric)
    std::int64_t external_threshold = 10000;

    std::string kind_a = "borrow";
    std::string kind_b = "review";

    std::int64_t min_assigners = 5;
    std::int64_t min_books = 10;
    std::int64_t quartile_min_a = 4;
    std::int64_t quartile_min_b = 2600;
    double smoothing = 0.01;
    std::int64_t window_days = 5; // used by the proximity subcommand
    std::int64_t min_events = 10;
    std::int64_t top_box = 100;
    std::int64_t top_overlap = 100;

    int layers = 5;
    std::optional<std::uint64_t> seed; // required: layer inference always runs
    int samples = 500;
    int sweeps = 20000;

    std::string out_dir = "bundle";
};

inline void validate_config(const RunConfig& c) {
    auto require = [](bool ok, const std::string& msg) {
        if (!ok) throw ConfigError(msg);
    };
    require(!c.events_a.empty() && !c.items_a.empty() && !c.readers_a.empty(),
            "corpus A paths must be set");
    require(!c.events_b.empty() && !c.items_b.empty() && !c.readers_b.empty(),
            "corpus B paths must be set");
    require(!c.label_a.empty() && !c.label_b.empty(), "corpus labels must be non-empty");
    require(c.label_a != c.label_b, "corpus labels must be distinct");
    require(c.match_min_score >= 0.0 && c.match_min_score <= 1.0,
            "match_min_score must lie in [0, 1]");
    require(parse_event_kind(c.kind_a).has_value(), "kind_a must be borrow, review or rating");
    require(parse_event_kind(c.kind_b).has_value(), "kind_b must be borrow, review or rating");
    require(c.min_assigners >= 1 && c.min_books >= 1, "collection thresholds must be >= 1");
    require(c.quartile_min_a >= 0 && c.quartile_min_b >= 0,
            "popularity filter thresholds must be >= 0");
    require(c.smoothing >= 0.0, "smoothing must be >= 0");
    require(c.window_days >= 0, "window_days must be >= 0");
    require(c.min_events >= 1, "min_events must be >= 1");
    require(c.top_box >= 1 && c.top_overlap >= 1, "report head sizes must be >= 1");
    require(c.external_threshold >= 0, "external_threshold must be >= 0");
    require(c.layers >= 2, "layers must be >= 2");
    require(c.seed.has_value(), "seed is required (layer inference must be reproducible)");
    require(c.samples >= 1 && c.sweeps >= 1, "samples and sweeps must be >= 1");
    require(!c.out_dir.empty(), "out_dir must be set");
}

// Sorted key=value lines covering every configuration field.
inline std::string canonical_config_string(const RunConfig& c) {
    std::map<std::string, std::string> kv;
    kv["events_a"] = c.events_a;
    kv["items_a"] = c.items_a;
    kv["readers_a"] = c.readers_a;
    kv["label_a"] = c.label_a;
    kv["events_b"] = c.events_b;
    kv["items_b"] = c.items_b;
    kv["readers_b"] = c.readers_b;
    kv["label_b"] = c.label_b;
    kv["match_min_score"] = format_fixed(c.match_min_score, 6);
    kv["overrides_path"] = c.overrides_path;
    kv["match_table_path"] = c.match_table_path;
    kv["assignments_path"] = c.assignments_path;
    kv["external_list_path"] = c.external_list_path;
    kv["external_threshold"] = std::to_string(c.external_threshold);
    kv["kind_a"] = c.kind_a;
    kv["kind_b"] = c.kind_b;
    kv["min_assigners"] = std::to_string(c.min_assigners);
    kv["min_books"] = std::to_string(c.min_books);
    kv["quartile_min_a"] = std::to_string(c.quartile_min_a);
    kv["quartile_min_b"] = std::to_string(c.quartile_min_b);
    kv["smoothing"] = format_fixed(c.smoothing, 6);
    kv["window_days"] = std::to_string(c.window_days);
    kv["min_events"] = std::to_string(c.min_events);
    kv["top_box"] = std::to_string(c.top_box);
    kv["top_overlap"] = std::to_string(c.top_overlap);
    kv["layers"] = std::to_string(c.layers);
    kv["seed"] = c.seed ? std::to_string(*c.seed) : std::string();
    kv["samples"] = std::to_string(c.samples);
    kv["sweeps"] = std::to_string(c.sweeps);
    kv["out_dir"] = c.out_dir;
    std::string out;
    for (const auto& [k, v] : kv) {
        out += k;
        out += '=';
        out += v;
        out += '\n';
    }
    return out;
}

inline std::string config_hash(const RunConfig& c) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical_config_string(c))));
    return buf;
}

struct PipelineResult {
    std::string out_dir;
    std::vector<std::string> files; // relative to out_dir, manifest last
    nlohmann::json manifest;
};

// Flat TOML-style run configuration: `key = value` lines, `#` comments,
// quoted strings, integers, floats. Keys are the canonical config names.
// Relative input/output paths resolve against the config file directory.
inline RunConfig parse_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    const auto base = std::filesystem::path(path).parent_path();
    auto resolve = [&base](const std::string& p) {
        if (p.empty()) return p;
        std::filesystem::path fp(p);
        if (fp.is_absolute()) return p;
        return (base / fp).string();
    };

    RunConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string stripped;
        bool in_quotes = false;
        for (char c : line) {
            if (c == '"') in_quotes = !in_quotes;
            if (c == '#' && !in_quotes) break;
            stripped.push_back(c);
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos) return std::string();
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        stripped = trim(stripped);
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ": line " + std::to_string(line_no) +
                              ": expected key = value");
        const std::string key = trim(stripped.substr(0, eq));
        std::string value = trim(stripped.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);

        auto as_int = [&](const std::string& v) {
            try {
                return std::stoll(v);
            } catch (const std::exception&) {
                throw ConfigError(path + ": line " + std::to_string(line_no) + ": '" + key +
                                  "' expects an integer, got '" + v + "'");
            }
        };
        auto as_double = [&](const std::string& v) {
            try {
                return std::stod(v);
            } catch (const std::exception&) {
                throw ConfigError(path + ": line " + std::to_string(line_no) + ": '" + key +
                                  "' expects a number, got '" + v + "'");
            }
        };

        if (key == "events_a") cfg.events_a = resolve(value);
        else if (key == "items_a") cfg.items_a = resolve(value);
        else if (key == "readers_a") cfg.readers_a = resolve(value);
        else if (key == "label_a") cfg.label_a = value;
        else if (key == "events_b") cfg.events_b = resolve(value);
        else if (key == "items_b") cfg.items_b = resolve(value);
        else if (key == "readers_b") cfg.readers_b = resolve(value);
        else if (key == "label_b") cfg.label_b = value;
        else if (key == "match_min_score") cfg.match_min_score = as_double(value);
        else if (key == "overrides_path") cfg.overrides_path = resolve(value);
        else if (key == "match_table_path") cfg.match_table_path = resolve(value);
        else if (key == "assignments_path") cfg.assignments_path = resolve(value);
        else if (key == "external_list_path") cfg.external_list_path = resolve(value);
        else if (key == "external_threshold") cfg.external_threshold = as_int(value);
        else if (key == "kind_a") cfg.kind_a = value;
        else if (key == "kind_b") cfg.kind_b = value;
        else if (key == "min_assigners") cfg.min_assigners = as_int(value);
        else if (key == "min_books") cfg.min_books = as_int(value);
        else if (key == "quartile_min_a") cfg.quartile_min_a = as_int(value);
        else if (key == "quartile_min_b") cfg.quartile_min_b = as_int(value);
        else if (key == "smoothing") cfg.smoothing = as_double(value);
        else if (key == "window_days") cfg.window_days = as_int(value);
        else if (key == "min_events") cfg.min_events = as_int(value);
        else if (key == "top_box") cfg.top_box = as_int(value);
        else if (key == "top_overlap") cfg.top_overlap = as_int(value);
        else if (key == "layers") cfg.layers = static_cast<int>(as_int(value));
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(as_int(value));
        else if (key == "samples") cfg.samples = static_cast<int>(as_int(value));
        else if (key == "sweeps") cfg.sweeps = static_cast<int>(as_int(value));
        else if (key == "out_dir") cfg.out_dir = resolve(value);
        else
            throw ConfigError(path + ": line " + std::to_string(line_no) +
                              ": unknown config key '" + key + "'");
    }
    return cfg;
}

namespace detail {

struct StageGuard {
    std::vector<std::filesystem::path> written;

    void cleanup() {
        std::error_code ec;
        for (const auto& p : written) std::filesystem::remove(p, ec);
    }
};

[[noreturn]] inline void rethrow_in_stage(const std::string& stage) {
    try {
        throw;
    } catch (const ConfigError& e) {
        throw ConfigError("stage " + stage + ": " + e.what());
    } catch (const NumericError& e) {
        throw NumericError("stage " + stage + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError("stage " + stage + ": " + e.what());
    } catch (const std::exception& e) {
        throw DataError("stage " + stage + ": " + e.what());
    }
}

inline std::map<std::string, std::int64_t>
read_external_list_csv(const std::string& path) {
    const auto rows = read_csv_file(path);
    require_header(rows, {"item_id", "metric"}, path);
    std::map<std::string, std::int64_t> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        require_width(rows[i], 2, path, i);
        try {
            out[rows[i][0]] = std::stoll(rows[i][1]);
        } catch (const std::exception&) {
            throw DataError(path + ": row " + std::to_string(i) + ": invalid metric '" +
                            rows[i][1] + "'");
        }
    }
    return out;
}

} // namespace detail

inline PipelineResult run_pipeline(const RunConfig& cfg, std::ostream& log = std::cerr) {
    validate_config(cfg);
    const std::filesystem::path out_dir(cfg.out_dir);
    std::filesystem::create_directories(out_dir);

    PipelineResult result;
    result.out_dir = cfg.out_dir;
    nlohmann::json stages = nlohmann::json::array();
    nlohmann::json stats;
    nlohmann::json figures;
    detail::StageGuard guard;

    auto emit = [&](const std::string& name, const Table& table) {
        const auto path = out_dir / name;
        guard.written.push_back(path);
        emit_table_file(table, path.string());
        result.files.push_back(name);
        return name;
    };

    struct StageClock {
        std::ostream& log;
        std::string name;
        std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
        ~StageClock() {
            const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                std::chrono::steady_clock::now() - start)
                                .count();
            log << "[coread] stage " << name << ": " << ms << " ms\n";
        }
    };

    // any failure inside a stage aborts the run naming that stage
    auto run_stage = [&log](const std::string& name, const std::function<void()>& body) {
        StageClock clock{log, name};
        try {
            body();
        } catch (...) {
            detail::rethrow_in_stage(name);
        }
    };

    try {
        Corpus corpus_a, corpus_b;
        run_stage("ingest_a", [&] {
            corpus_a = load_corpus(cfg.events_a, cfg.items_a, cfg.readers_a, cfg.label_a);
            stages.push_back({{"name", "ingest_a"},
                              {"events", corpus_a.events.size()},
                              {"items", corpus_a.items.size()},
                              {"readers", corpus_a.readers.size()}});
        });
        run_stage("ingest_b", [&] {
            corpus_b = load_corpus(cfg.events_b, cfg.items_b, cfg.readers_b, cfg.label_b);
            stages.push_back({{"name", "ingest_b"},
                              {"events", corpus_b.events.size()},
                              {"items", corpus_b.items.size()},
                              {"readers", corpus_b.readers.size()}});
        });

        MatchResult match;
        run_stage("match", [&] {
            if (!cfg.match_table_path.empty()) {
                match.table = read_match_csv(cfg.match_table_path);
                for (const auto& p : match.table.pairs) {
                    if (!corpus_a.has_item(p.a_item_id))
                        throw DataError("match table references unknown corpus-A item: " +
                                        p.a_item_id);
                    if (!corpus_b.has_item(p.b_item_id))
                        throw DataError("match table references unknown corpus-B item: " +
                                        p.b_item_id);
                }
            } else {
                std::vector<ManualOverride> overrides;
                if (!cfg.overrides_path.empty())
                    overrides = read_overrides_csv(cfg.overrides_path);
                match = build_match_table(corpus_a, corpus_b, cfg.match_min_score, overrides);
            }
            Table t;
            t.header = {"a_item_id", "b_item_id", "provenance", "score"};
            for (const auto& p : match.table.pairs)
                t.rows.push_back({p.a_item_id, p.b_item_id, to_string(p.provenance),
                                  cell_rank(p.score)});
            Table q;
            q.header = {"a_item_id", "reason", "candidates"};
            for (const auto& e : match.queue) {
                std::string cands;
                for (const auto& c : e.candidates) {
                    if (!cands.empty()) cands += ";";
                    cands += c.b_item_id + ":" + cell_rank(c.score) + ":" +
                             std::to_string(c.popularity);
                }
                q.rows.push_back({e.a_item_id, e.reason, cands});
            }
            stages.push_back({{"name", "match"},
                              {"outputs", {emit("match.csv", t), emit("review_queue.csv", q)}},
                              {"pairs", match.table.pairs.size()},
                              {"queued", match.queue.size()}});
        });

        std::map<std::string, std::string> a_to_b, b_to_a;
        std::set<std::string> matched_a;
        for (const auto& p : match.table.pairs) {
            a_to_b[p.a_item_id] = p.b_item_id;
            b_to_a[p.b_item_id] = p.a_item_id;
            matched_a.insert(p.a_item_id);
        }

        std::map<std::string, std::int64_t> counts_a, counts_b; // keyed by a-side id
        std::map<std::string, double> ranks_a, ranks_b;
        std::map<std::string, double> rank_changes;
        run_stage("popularity", [&] {
            const EventKind ka = *parse_event_kind(cfg.kind_a);
            const EventKind kb = *parse_event_kind(cfg.kind_b);
            for (const auto& [id, n] : interaction_counts(corpus_a, ka, CountKey::item))
                if (matched_a.count(id)) counts_a[id] = n;
            for (const auto& [id, n] : interaction_counts(corpus_b, kb, CountKey::item))
                if (auto it = b_to_a.find(id); it != b_to_a.end()) counts_b[it->second] = n;
            if (!counts_a.empty()) ranks_a = scaled_ranks(counts_a);
            if (!counts_b.empty()) ranks_b = scaled_ranks(counts_b);
            for (const auto& [id, ra] : ranks_a)
                if (auto rb = ranks_b.find(id); rb != ranks_b.end())
                    rank_changes[id] = rank_change(ra, rb->second);

            std::int64_t total_a = 0, total_b = 0;
            for (const auto& [_, n] : counts_a) total_a += n;
            for (const auto& [_, n] : counts_b) total_b += n;

            Table t;
            t.header = {"item_a", "item_b", "title", "author", "count_a", "count_b",
                        "rank_a", "rank_b", "rank_change", "rel_popularity"};
            for (const auto& p : match.table.pairs) {
                const auto& rec = corpus_a.item(p.a_item_id);
                const auto ca = counts_a.find(p.a_item_id);
                const auto cb = counts_b.find(p.a_item_id);
                std::optional<double> ra, rb, rc, rp;
                if (auto it = ranks_a.find(p.a_item_id); it != ranks_a.end()) ra = it->second;
                if (auto it = ranks_b.find(p.a_item_id); it != ranks_b.end()) rb = it->second;
                if (auto it = rank_changes.find(p.a_item_id); it != rank_changes.end())
                    rc = it->second;
                if (ca != counts_a.end() && cb != counts_b.end() && total_a > 0 && total_b > 0)
                    rp = relative_popularity(ca->second, total_a, cb->second, total_b);
                t.rows.push_back(
                    {p.a_item_id, p.b_item_id, rec.title, rec.author,
                     ca == counts_a.end() ? "0" : cell_int(ca->second),
                     cb == counts_b.end() ? "0" : cell_int(cb->second), cell_opt_rank(ra),
                     cell_opt_rank(rb), cell_opt_rank(rc), cell_opt_rank(rp)});
            }

            // author aggregates over the matched pairs, keyed by the
            // historical corpus' author strings
            std::map<std::string, std::int64_t> author_a, author_b;
            for (const auto& p : match.table.pairs) {
                const auto& author = corpus_a.item(p.a_item_id).author;
                if (auto it = counts_a.find(p.a_item_id); it != counts_a.end())
                    author_a[author] += it->second;
                if (auto it = counts_b.find(p.a_item_id); it != counts_b.end())
                    author_b[author] += it->second;
            }
            std::map<std::string, double> author_rank_a, author_rank_b;
            if (!author_a.empty()) author_rank_a = scaled_ranks(author_a);
            if (!author_b.empty()) author_rank_b = scaled_ranks(author_b);
            Table at;
            at.header = {"author", "count_a", "count_b", "rank_a", "rank_b", "rank_change"};
            {
                std::set<std::string> authors;
                for (const auto& [k, _] : author_a) authors.insert(k);
                for (const auto& [k, _] : author_b) authors.insert(k);
                for (const auto& author : authors) {
                    const auto ca = author_a.find(author);
                    const auto cb = author_b.find(author);
                    std::optional<double> ra, rb, rc;
                    if (auto it = author_rank_a.find(author); it != author_rank_a.end())
                        ra = it->second;
                    if (auto it = author_rank_b.find(author); it != author_rank_b.end())
                        rb = it->second;
                    if (ra && rb) rc = rank_change(*ra, *rb);
                    at.rows.push_back({author,
                                       ca == author_a.end() ? "0" : cell_int(ca->second),
                                       cb == author_b.end() ? "0" : cell_int(cb->second),
                                       cell_opt_rank(ra), cell_opt_rank(rb),
                                       cell_opt_rank(rc)});
                }
            }

            auto correlation_json = [](const std::map<std::string, double>& xs,
                                       const std::map<std::string, double>& ys) {
                std::vector<double> vx, vy;
                for (const auto& [k, x] : xs)
                    if (auto it = ys.find(k); it != ys.end()) {
                        vx.push_back(x);
                        vy.push_back(it->second);
                    }
                nlohmann::json j;
                j["n"] = vx.size();
                try {
                    const auto c = pearson_r(vx, vy);
                    j["r"] = c.r;
                    j["p"] = c.p;
                } catch (const DataError&) {
                    j["r"] = nullptr;
                    j["p"] = nullptr;
                }
                return j;
            };
            stats["item_rank_pearson"] = correlation_json(ranks_a, ranks_b);
            stats["author_rank_pearson"] = correlation_json(author_rank_a, author_rank_b);

            const auto k = std::min({cfg.top_overlap,
                                     static_cast<std::int64_t>(counts_a.size()),
                                     static_cast<std::int64_t>(counts_b.size())});
            if (k >= 1)
                stats["top_k_overlap"] = {{"k", k},
                                          {"overlap", top_k_overlap(counts_a, counts_b, k)}};

            auto box_json = [&](const std::map<std::string, std::int64_t>& counts) {
                std::vector<std::pair<std::int64_t, std::string>> order;
                for (const auto& [id, n] : counts) order.emplace_back(n, id);
                std::sort(order.begin(), order.end(), [](const auto& x, const auto& y) {
                    if (x.first != y.first) return x.first > y.first;
                    return x.second < y.second;
                });
                if (order.size() > static_cast<std::size_t>(cfg.top_box))
                    order.resize(static_cast<std::size_t>(cfg.top_box));
                std::vector<double> years;
                for (const auto& [_, id] : order)
                    if (auto y = corpus_a.item(id).pub_year) years.push_back(*y);
                nlohmann::json j;
                if (years.empty()) return j;
                const auto box = quantile_summary(years);
                j = {{"min", box.min}, {"q1", box.q1},       {"median", box.median},
                     {"q3", box.q3},   {"max", box.max},     {"outliers", box.outliers},
                     {"n", years.size()}};
                return j;
            };
            figures["pub_year_box"] = {{cfg.label_a, box_json(counts_a)},
                                       {cfg.label_b, box_json(counts_b)}};

            auto density_json = [](const std::map<std::string, std::int64_t>& counts) {
                nlohmann::json j;
                std::vector<double> values;
                for (const auto& [_, n] : counts) values.push_back(static_cast<double>(n));
                if (values.size() < 2) return j;
                bool distinct = false;
                for (double v : values)
                    if (v != values.front()) { distinct = true; break; }
                if (!distinct) return j;
                const auto grid = default_density_grid(values, 128);
                j["grid"] = grid;
                j["density"] = density_curve(values, grid);
                return j;
            };
            figures["count_density"] = {{cfg.label_a, density_json(counts_a)},
                                        {cfg.label_b, density_json(counts_b)}};

            if (!cfg.external_list_path.empty()) {
                const auto external = detail::read_external_list_csv(cfg.external_list_path);
                std::vector<std::pair<std::int64_t, std::string>> order;
                for (const auto& [id, n] : counts_a) order.emplace_back(n, id);
                std::sort(order.begin(), order.end(), [](const auto& x, const auto& y) {
                    if (x.first != y.first) return x.first > y.first;
                    return x.second < y.second;
                });
                if (order.size() > static_cast<std::size_t>(cfg.top_overlap))
                    order.resize(static_cast<std::size_t>(cfg.top_overlap));
                std::map<std::string, std::int64_t> internal;
                for (const auto& [_, id] : order)
                    if (auto it = counts_b.find(id); it != counts_b.end())
                        internal[id] = it->second;
                const auto lc = list_comparison(external, internal, cfg.external_threshold);
                stats["external_list"] = {
                    {"overlap", lc.overlap},
                    {"median_external", lc.median_external},
                    {"mean_external", lc.mean_external},
                    {"median_internal", lc.median_internal},
                    {"mean_internal", lc.mean_internal},
                    {"above_threshold_external", lc.above_threshold_external},
                    {"above_threshold_internal", lc.above_threshold_internal},
                    {"threshold", cfg.external_threshold}};
            }

            stages.push_back(
                {{"name", "popularity"},
                 {"outputs", {emit("ranks.csv", t), emit("author_ranks.csv", at)}},
                 {"ranked_items", rank_changes.size()}});
        });

        run_stage("collections", [&] {
            Table t;
            t.header = {"collection", "kind", "matched_books", "qualifying_books",
                        "mean_rank_change"};
            if (!cfg.assignments_path.empty()) {
                const auto assignments = read_assignments_csv(cfg.assignments_path);
                const auto popularity = collection_popularity(assignments, matched_a);
                const auto drift = collection_rank_change(assignments, rank_changes,
                                                          cfg.min_assigners, cfg.min_books);
                std::map<CollectionId, std::set<std::string>> qual_items;
                for (const auto& a : assignments)
                    if (a.assigner_count >= cfg.min_assigners && rank_changes.count(a.item_id))
                        qual_items[{a.kind, a.collection_name}].insert(a.item_id);
                std::vector<std::pair<CollectionId, double>> order(drift.begin(), drift.end());
                std::sort(order.begin(), order.end(), [](const auto& x, const auto& y) {
                    if (x.second != y.second) return x.second > y.second;
                    return x.first < y.first;
                });
                for (const auto& [id, mean] : order) {
                    const auto pop = popularity.find(id);
                    t.rows.push_back(
                        {id.second, to_string(id.first),
                         pop == popularity.end() ? "0" : cell_int(pop->second),
                         cell_int(static_cast<std::int64_t>(qual_items[id].size())),
                         cell_rank(mean)});
                }
            }
            stages.push_back({{"name", "collections"},
                              {"outputs", {emit("collection_drift.csv", t)}},
                              {"collections", t.rows.size()}});
        });

        CoGraph graph_a, graph_b;
        run_stage("network", [&] {
            const EventKind ka = *parse_event_kind(cfg.kind_a);
            const EventKind kb = *parse_event_kind(cfg.kind_b);
            graph_a = induce_cograph(
                filter_events(corpus_a, std::set<EventKind>{ka}, std::nullopt, std::nullopt),
                matched_a);
            // corpus B events mapped onto a-side ids so both graphs share
            // one node universe
            std::map<std::string, std::set<std::string>> reader_items;
            for (const auto& e : corpus_b.events) {
                if (e.kind != kb) continue;
                if (auto it = b_to_a.find(e.item_id); it != b_to_a.end())
                    reader_items[e.reader_id].insert(it->second);
            }
            graph_b = induce_from_sets(reader_items);

            Table t;
            t.header = {"corpus", "u", "v", "weight"};
            auto add_edges = [&t](const std::string& label, const CoGraph& g) {
                for (const auto& [u, nbrs] : g.adj)
                    for (const auto& [v, w] : nbrs)
                        if (u < v) t.rows.push_back({label, u, v, cell_int(w)});
            };
            if (cfg.label_a <= cfg.label_b) {
                add_edges(cfg.label_a, graph_a);
                add_edges(cfg.label_b, graph_b);
            } else {
                add_edges(cfg.label_b, graph_b);
                add_edges(cfg.label_a, graph_a);
            }
            stages.push_back({{"name", "network"},
                              {"outputs", {emit("edges.csv", t)}},
                              {"nodes_a", graph_a.node_count()},
                              {"nodes_b", graph_b.node_count()}});
        });

        run_stage("divergence", [&] {
            const auto connected = connected_in_both(graph_a, graph_b);
            const auto kept = top_quartile_filter(connected, counts_a, counts_b,
                                                  cfg.quartile_min_a, cfg.quartile_min_b);
            const auto rows = divergence_ranking(kept, graph_a, graph_b, cfg.smoothing);
            Table t;
            t.header = {"rank", "item_a", "item_b", "title", "author", "divergence",
                        "neighbors_a", "neighbors_b"};
            std::int64_t rank = 1;
            for (const auto& r : rows) {
                const auto& rec = corpus_a.item(r.item_id);
                t.rows.push_back({cell_int(rank++), r.item_id, a_to_b.at(r.item_id), rec.title,
                                  rec.author, cell_rank(r.divergence), cell_int(r.degree_a),
                                  cell_int(r.degree_b)});
            }
            stages.push_back({{"name", "divergence"},
                              {"outputs", {emit("divergence.csv", t)}},
                              {"compared_items", rows.size()}});
        });

        run_stage("coreper", [&] {
            Table t;
            t.header = {"item_a", "title", "coreness"};
            for (int l = 1; l <= cfg.layers; ++l) t.header.push_back("p" + std::to_string(l));
            t.header.insert(t.header.end(), {"degree", "betweenness", "eigenvector"});
            if (graph_a.node_count() > 0) {
                CorePeripheryParams params;
                params.layers = cfg.layers;
                params.seed = *cfg.seed;
                params.samples = cfg.samples;
                params.sweeps = cfg.sweeps;
                const auto assignment = infer_layers(graph_a, params);
                std::map<std::string, std::vector<double>> dist_of;
                for (std::size_t i = 0; i < assignment.nodes.size(); ++i)
                    dist_of[assignment.nodes[i]] = assignment.dist[i];
                std::map<std::string, double> degree, betweenness, eigen;
                if (graph_a.node_count() >= 2) degree = degree_centrality(graph_a);
                if (graph_a.node_count() >= 3) betweenness = betweenness_centrality(graph_a);
                eigen = eigenvector_centrality(graph_a);
                for (const auto& [id, score] : coreness_scores(assignment)) {
                    CsvRow row{id, corpus_a.item(id).title, cell_coreness(score)};
                    for (double p : dist_of[id]) row.push_back(cell_rank(p));
                    auto opt_cell = [](const std::map<std::string, double>& m,
                                       const std::string& key) {
                        auto it = m.find(key);
                        return it == m.end() ? std::string() : cell_centrality(it->second);
                    };
                    row.push_back(opt_cell(degree, id));
                    row.push_back(opt_cell(betweenness, id));
                    row.push_back(opt_cell(eigen, id));
                    t.rows.push_back(std::move(row));
                }
            }
            stages.push_back({{"name", "coreper"},
                              {"outputs", {emit("network_roles.csv", t)}},
                              {"nodes", t.rows.size()}});
        });

        run_stage("members", [&] {
            const auto profiles = member_profiles(corpus_a, rank_changes, cfg.min_events);
            Table t;
            t.header = {"reader_id", "events_total", "distinct_items",
                        "distinct_matched_items", "median_pub_year_matched",
                        "mean_rank_change_matched"};
            for (const auto& p : profiles)
                t.rows.push_back({p.reader_id, cell_int(p.event_count),
                                  cell_int(p.distinct_items),
                                  cell_int(p.distinct_matched_items),
                                  p.median_pub_year ? cell_year(*p.median_pub_year)
                                                    : std::string(),
                                  p.mean_rank_change ? cell_rank(*p.mean_rank_change)
                                                     : std::string()});
            stages.push_back({{"name", "members"},
                              {"outputs", {emit("members.csv", t)}},
                              {"profiled_readers", t.rows.size()}});
        });

        nlohmann::json manifest;
        manifest["config"] = nlohmann::json::object();
        {
            std::istringstream lines(canonical_config_string(cfg));
            std::string line;
            while (std::getline(lines, line)) {
                const auto eq = line.find('=');
                manifest["config"][line.substr(0, eq)] = line.substr(eq + 1);
            }
        }
        manifest["config_hash"] = config_hash(cfg);
        manifest["stages"] = stages;
        manifest["stats"] = stats;
        manifest["figures"] = figures;
        const auto manifest_path = out_dir / "manifest.json";
        guard.written.push_back(manifest_path);
        {
            std::ofstream out(manifest_path, std::ios::binary);
            if (!out) throw DataError("cannot write file: " + manifest_path.string());
            out << manifest.dump(2) << '\n';
        }
        result.files.push_back("manifest.json");
        result.manifest = std::move(manifest);
    } catch (...) {
        guard.cleanup();
        throw;
    }
    return result;
}

} // namespace coread
