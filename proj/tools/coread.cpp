// coread: compare two reader-item interaction corpora. Subcommands cover
// corpus ingestion, cross-corpus matching, popularity and rank-drift
// statistics, collection aggregation, co-reading networks, neighborhood
// divergence, core-periphery roles, member analysis and the full report
// pipeline.

#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coread/centrality.hpp"
#include "coread/cograph.hpp"
#include "coread/collections.hpp"
#include "coread/coreper.hpp"
#include "coread/corpus.hpp"
#include "coread/errors.hpp"
#include "coread/match.hpp"
#include "coread/members.hpp"
#include "coread/pipeline.hpp"
#include "coread/report.hpp"
#include "coread/stats.hpp"

namespace {

using namespace coread;

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    return out;
}

std::size_t find_column(const CsvRow& header, const std::vector<std::string>& names,
                        const std::string& path) {
    for (const auto& name : names)
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
    throw DataError(path + ": missing column '" + names.front() + "'");
}

// rank table cells needed by drift/members/divergence subcommands
struct RankRow {
    std::string item;
    std::string title;
    std::string author;
    std::optional<std::int64_t> count_a, count_b;
    std::optional<double> rank_change;
};

std::vector<RankRow> read_ranks_csv(const std::string& path) {
    const auto rows = read_csv_file(path);
    if (rows.empty()) throw DataError(path + ": empty file");
    const auto& h = rows.front();
    const auto item_col = find_column(h, {"item_a", "item"}, path);
    const auto title_col = find_column(h, {"title"}, path);
    const auto author_col = find_column(h, {"author"}, path);
    const auto ca_col = find_column(h, {"count_a"}, path);
    const auto cb_col = find_column(h, {"count_b"}, path);
    const auto rc_col = find_column(h, {"rank_change"}, path);
    std::vector<RankRow> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != h.size())
            throw DataError(path + ": row " + std::to_string(i) + " width mismatch");
        RankRow r;
        r.item = rows[i][item_col];
        r.title = rows[i][title_col];
        r.author = rows[i][author_col];
        if (!rows[i][ca_col].empty()) r.count_a = std::stoll(rows[i][ca_col]);
        if (!rows[i][cb_col].empty()) r.count_b = std::stoll(rows[i][cb_col]);
        if (!rows[i][rc_col].empty()) r.rank_change = std::stod(rows[i][rc_col]);
        out.push_back(std::move(r));
    }
    return out;
}

std::map<std::string, double> read_scores_csv(const std::string& path) {
    const auto rows = read_csv_file(path);
    if (rows.empty()) throw DataError(path + ": empty file");
    const auto& h = rows.front();
    const auto item_col = find_column(h, {"item", "item_a", "node"}, path);
    const auto score_col = find_column(h, {"coreness", "score"}, path);
    std::map<std::string, double> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i][score_col].empty()) continue;
        out[rows[i][item_col]] = std::stod(rows[i][score_col]);
    }
    return out;
}

int dispatch(int argc, char** argv) {
    CLI::App app{"coread: quantitative comparison of reader-item interaction corpora"};
    app.require_subcommand(1);

    // ------------------------------------------------------------- ingest
    auto* ingest = app.add_subcommand("ingest", "Validate CSV inputs and write a corpus container");
    std::string in_events, in_items, in_readers, in_label, in_out;
    ingest->add_option("--events", in_events, "events CSV")->required();
    ingest->add_option("--items", in_items, "items CSV")->required();
    ingest->add_option("--readers", in_readers, "readers CSV")->required();
    ingest->add_option("--label", in_label, "corpus label")->required();
    ingest->add_option("--out", in_out, "output corpus .bin")->required();
    ingest->callback([&] {
        const auto corpus = load_corpus(in_events, in_items, in_readers, in_label);
        save_corpus_file(corpus, in_out);
        const auto s = corpus_summary(corpus);
        std::cerr << "[coread] " << in_label << ": " << corpus.events.size() << " events, "
                  << s.distinct_items << " active items, " << s.distinct_readers
                  << " active readers\n";
    });

    // -------------------------------------------------------------- match
    auto* match_cmd = app.add_subcommand("match", "Link items across two corpora");
    std::string m_a, m_b, m_overrides, m_out, m_queue;
    double m_min_score = 0.85;
    match_cmd->add_option("--a", m_a, "corpus A .bin")->required();
    match_cmd->add_option("--b", m_b, "corpus B .bin")->required();
    match_cmd->add_option("--min-score", m_min_score, "fuzzy similarity floor (default 0.85)");
    match_cmd->add_option("--overrides", m_overrides, "manual override CSV (a_item_id,b_item_id)");
    match_cmd->add_option("--out", m_out, "match table CSV")->required();
    match_cmd->add_option("--queue", m_queue, "review queue CSV")->required();
    match_cmd->callback([&] {
        const auto a = load_corpus_bin_file(m_a);
        const auto b = load_corpus_bin_file(m_b);
        std::vector<ManualOverride> overrides;
        if (!m_overrides.empty()) overrides = read_overrides_csv(m_overrides);
        const auto result = build_match_table(a, b, m_min_score, overrides);
        auto out = open_out(m_out);
        write_match_csv(result.table, out);
        auto q = open_out(m_queue);
        write_queue_csv(result.queue, q);
        std::cerr << "[coread] matched " << result.table.pairs.size() << " of "
                  << a.items.size() << " items; " << result.queue.size()
                  << " review queue entries\n";
    });

    // --------------------------------------------------------- popularity
    auto* pop = app.add_subcommand("popularity", "Counts, scaled ranks and rank change");
    std::string p_a, p_b, p_match, p_out, p_out_authors, p_kind_a = "borrow",
                                                         p_kind_b = "review";
    pop->add_option("--a", p_a, "corpus A .bin")->required();
    pop->add_option("--b", p_b, "corpus B .bin")->required();
    pop->add_option("--match", p_match, "match table CSV")->required();
    pop->add_option("--out", p_out, "item rank table CSV")->required();
    pop->add_option("--out-authors", p_out_authors, "author rank table CSV");
    pop->add_option("--kind-a", p_kind_a, "counted event kind in A (default borrow)");
    pop->add_option("--kind-b", p_kind_b, "counted event kind in B (default review)");
    pop->callback([&] {
        const auto corpus_a = load_corpus_bin_file(p_a);
        const auto corpus_b = load_corpus_bin_file(p_b);
        const auto table = read_match_csv(p_match);
        const auto ka = parse_event_kind(p_kind_a);
        const auto kb = parse_event_kind(p_kind_b);
        if (!ka || !kb) throw ConfigError("event kind must be borrow, review or rating");

        std::map<std::string, std::string> b_to_a;
        std::set<std::string> matched_a;
        for (const auto& p : table.pairs) {
            b_to_a[p.b_item_id] = p.a_item_id;
            matched_a.insert(p.a_item_id);
        }
        std::map<std::string, std::int64_t> counts_a, counts_b;
        for (const auto& [id, n] : interaction_counts(corpus_a, *ka, CountKey::item))
            if (matched_a.count(id)) counts_a[id] = n;
        for (const auto& [id, n] : interaction_counts(corpus_b, *kb, CountKey::item))
            if (auto it = b_to_a.find(id); it != b_to_a.end()) counts_b[it->second] = n;
        std::map<std::string, double> ranks_a, ranks_b;
        if (!counts_a.empty()) ranks_a = scaled_ranks(counts_a);
        if (!counts_b.empty()) ranks_b = scaled_ranks(counts_b);
        std::int64_t total_a = 0, total_b = 0;
        for (const auto& [_, n] : counts_a) total_a += n;
        for (const auto& [_, n] : counts_b) total_b += n;

        Table t;
        t.header = {"item_a", "item_b", "title", "author", "count_a", "count_b",
                    "rank_a", "rank_b", "rank_change", "rel_popularity"};
        for (const auto& p : table.pairs) {
            const auto& rec = corpus_a.item(p.a_item_id);
            const auto ca = counts_a.find(p.a_item_id);
            const auto cb = counts_b.find(p.a_item_id);
            std::optional<double> ra, rb, rc, rp;
            if (auto it = ranks_a.find(p.a_item_id); it != ranks_a.end()) ra = it->second;
            if (auto it = ranks_b.find(p.a_item_id); it != ranks_b.end()) rb = it->second;
            if (ra && rb) rc = rank_change(*ra, *rb);
            if (ca != counts_a.end() && cb != counts_b.end() && total_a > 0 && total_b > 0)
                rp = relative_popularity(ca->second, total_a, cb->second, total_b);
            t.rows.push_back({p.a_item_id, p.b_item_id, rec.title, rec.author,
                              ca == counts_a.end() ? "0" : cell_int(ca->second),
                              cb == counts_b.end() ? "0" : cell_int(cb->second),
                              cell_opt_rank(ra), cell_opt_rank(rb), cell_opt_rank(rc),
                              cell_opt_rank(rp)});
        }
        emit_table_file(t, p_out);

        if (!p_out_authors.empty()) {
            std::map<std::string, std::int64_t> author_a, author_b;
            for (const auto& p : table.pairs) {
                const auto& author = corpus_a.item(p.a_item_id).author;
                if (auto it = counts_a.find(p.a_item_id); it != counts_a.end())
                    author_a[author] += it->second;
                if (auto it = counts_b.find(p.a_item_id); it != counts_b.end())
                    author_b[author] += it->second;
            }
            std::map<std::string, double> ar_a, ar_b;
            if (!author_a.empty()) ar_a = scaled_ranks(author_a);
            if (!author_b.empty()) ar_b = scaled_ranks(author_b);
            Table at;
            at.header = {"author", "count_a", "count_b", "rank_a", "rank_b", "rank_change"};
            std::set<std::string> authors;
            for (const auto& [k, _] : author_a) authors.insert(k);
            for (const auto& [k, _] : author_b) authors.insert(k);
            for (const auto& author : authors) {
                const auto ca = author_a.find(author);
                const auto cb = author_b.find(author);
                std::optional<double> ra, rb, rc;
                if (auto it = ar_a.find(author); it != ar_a.end()) ra = it->second;
                if (auto it = ar_b.find(author); it != ar_b.end()) rb = it->second;
                if (ra && rb) rc = rank_change(*ra, *rb);
                at.rows.push_back({author, ca == author_a.end() ? "0" : cell_int(ca->second),
                                   cb == author_b.end() ? "0" : cell_int(cb->second),
                                   cell_opt_rank(ra), cell_opt_rank(rb), cell_opt_rank(rc)});
            }
            emit_table_file(at, p_out_authors);
        }
    });

    // -------------------------------------------------------------- drift
    auto* drift = app.add_subcommand("drift", "Top risers and fallers by rank change");
    std::string d_ranks;
    std::int64_t d_top = 10;
    drift->add_option("--ranks", d_ranks, "rank table CSV")->required();
    drift->add_option("--top", d_top, "rows per table (default 10)");
    drift->callback([&] {
        if (d_top < 1) throw ConfigError("--top must be >= 1");
        auto rows = read_ranks_csv(d_ranks);
        std::erase_if(rows, [](const RankRow& r) { return !r.rank_change.has_value(); });
        std::sort(rows.begin(), rows.end(), [](const RankRow& x, const RankRow& y) {
            if (*x.rank_change != *y.rank_change) return *x.rank_change > *y.rank_change;
            return x.item < y.item;
        });
        const auto n = std::min<std::size_t>(rows.size(), static_cast<std::size_t>(d_top));
        std::cout << "# risers\n";
        write_csv_row(std::cout, {"rank_change", "title", "author"});
        for (std::size_t i = 0; i < n; ++i)
            write_csv_row(std::cout,
                          {cell_rank(*rows[i].rank_change), rows[i].title, rows[i].author});
        std::cout << "# fallers\n";
        write_csv_row(std::cout, {"rank_change", "title", "author"});
        for (std::size_t i = 0; i < n; ++i) {
            const auto& r = rows[rows.size() - 1 - i];
            write_csv_row(std::cout, {cell_rank(*r.rank_change), r.title, r.author});
        }
    });

    // -------------------------------------------------------- collections
    auto* coll = app.add_subcommand("collections", "Mean rank change per list/shelf");
    std::string c_assignments, c_ranks, c_out;
    std::int64_t c_min_assigners = 5, c_min_books = 10;
    coll->add_option("--assignments", c_assignments, "assignments CSV")->required();
    coll->add_option("--ranks", c_ranks, "rank table CSV")->required();
    coll->add_option("--min-assigners", c_min_assigners, "minimum assigners per item (default 5)");
    coll->add_option("--min-books", c_min_books, "minimum qualifying books (default 10)");
    coll->add_option("--out", c_out, "collection drift CSV")->required();
    coll->callback([&] {
        const auto assignments = read_assignments_csv(c_assignments);
        std::map<std::string, double> rank_changes;
        std::set<std::string> matched;
        for (const auto& r : read_ranks_csv(c_ranks)) {
            matched.insert(r.item);
            if (r.rank_change) rank_changes[r.item] = *r.rank_change;
        }
        const auto popularity = collection_popularity(assignments, matched);
        const auto drifts =
            collection_rank_change(assignments, rank_changes, c_min_assigners, c_min_books);
        std::map<CollectionId, std::set<std::string>> qual_items;
        for (const auto& a : assignments)
            if (a.assigner_count >= c_min_assigners && rank_changes.count(a.item_id))
                qual_items[{a.kind, a.collection_name}].insert(a.item_id);
        std::vector<std::pair<CollectionId, double>> order(drifts.begin(), drifts.end());
        std::sort(order.begin(), order.end(), [](const auto& x, const auto& y) {
            if (x.second != y.second) return x.second > y.second;
            return x.first < y.first;
        });
        Table t;
        t.header = {"collection", "kind", "matched_books", "qualifying_books",
                    "mean_rank_change"};
        for (const auto& [id, mean] : order) {
            const auto pop_it = popularity.find(id);
            t.rows.push_back({id.second, to_string(id.first),
                              pop_it == popularity.end() ? "0" : cell_int(pop_it->second),
                              cell_int(static_cast<std::int64_t>(qual_items[id].size())),
                              cell_rank(mean)});
        }
        emit_table_file(t, c_out);
    });

    // ------------------------------------------------------------ network
    auto* net = app.add_subcommand("network", "Induce a co-interaction graph");
    std::string n_corpus, n_match, n_out, n_side = "auto", n_kinds;
    net->add_option("--corpus", n_corpus, "corpus .bin")->required();
    net->add_option("--match", n_match, "match table CSV")->required();
    net->add_option("--out", n_out, "edge list CSV")->required();
    net->add_option("--side", n_side, "corpus side in the match table: a, b or auto");
    net->add_option("--kinds", n_kinds, "comma-separated event kinds to project (default all)");
    net->callback([&] {
        const auto corpus = load_corpus_bin_file(n_corpus);
        const auto table = read_match_csv(n_match);
        std::optional<std::set<EventKind>> kinds;
        if (!n_kinds.empty()) {
            std::set<EventKind> ks;
            std::stringstream ss(n_kinds);
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                const auto k = parse_event_kind(tok);
                if (!k) throw ConfigError("unknown event kind '" + tok + "'");
                ks.insert(*k);
            }
            kinds = std::move(ks);
        }
        std::string side = n_side;
        if (side == "auto") {
            std::size_t hits_a = 0, hits_b = 0;
            for (const auto& p : table.pairs) {
                if (corpus.has_item(p.a_item_id)) ++hits_a;
                if (corpus.has_item(p.b_item_id)) ++hits_b;
            }
            if (hits_a == hits_b)
                throw DataError("cannot infer corpus side from the match table; pass --side");
            side = hits_a > hits_b ? "a" : "b";
        }
        if (side != "a" && side != "b") throw ConfigError("--side must be a, b or auto");

        const auto filtered =
            kinds ? filter_events(corpus, kinds, std::nullopt, std::nullopt) : corpus;
        CoGraph graph;
        if (side == "a") {
            std::set<std::string> universe;
            for (const auto& p : table.pairs) universe.insert(p.a_item_id);
            graph = induce_cograph(filtered, universe);
        } else {
            // node ids are canonicalized to the corpus-A side of the table
            std::map<std::string, std::string> b_to_a;
            for (const auto& p : table.pairs) b_to_a[p.b_item_id] = p.a_item_id;
            std::map<std::string, std::set<std::string>> reader_items;
            for (const auto& e : filtered.events)
                if (auto it = b_to_a.find(e.item_id); it != b_to_a.end())
                    reader_items[e.reader_id].insert(it->second);
            graph = induce_from_sets(reader_items);
        }
        auto out = open_out(n_out);
        write_cograph_csv(graph, out);
        std::cerr << "[coread] side " << side << ": " << graph.node_count() << " nodes\n";
    });

    // --------------------------------------------------------- divergence
    auto* div = app.add_subcommand("divergence", "Cross-corpus neighborhood divergence");
    std::string v_ga, v_gb, v_out, v_ranks;
    double v_smoothing = 0.01;
    std::int64_t v_min_a = 4, v_min_b = 2600;
    div->add_option("--ga", v_ga, "corpus A edge list CSV")->required();
    div->add_option("--gb", v_gb, "corpus B edge list CSV")->required();
    div->add_option("--smoothing", v_smoothing, "additive smoothing constant (default 0.01)");
    div->add_option("--min-a", v_min_a, "minimum count in A (default 4)");
    div->add_option("--min-b", v_min_b, "minimum count in B (default 2600)");
    div->add_option("--ranks", v_ranks, "rank table CSV supplying counts for the filter");
    div->add_option("--out", v_out, "divergence table CSV")->required();
    div->callback([&] {
        const auto ga = read_cograph_csv(v_ga);
        const auto gb = read_cograph_csv(v_gb);
        auto items = connected_in_both(ga, gb);
        if (v_min_a > 0 || v_min_b > 0) {
            if (v_ranks.empty())
                throw ConfigError("--ranks is required when --min-a/--min-b are positive");
            std::map<std::string, std::int64_t> counts_a, counts_b;
            for (const auto& r : read_ranks_csv(v_ranks)) {
                if (r.count_a) counts_a[r.item] = *r.count_a;
                if (r.count_b) counts_b[r.item] = *r.count_b;
            }
            items = top_quartile_filter(items, counts_a, counts_b, v_min_a, v_min_b);
        }
        const auto rows = divergence_ranking(items, ga, gb, v_smoothing);
        Table t;
        t.header = {"rank", "item_a", "divergence", "neighbors_a", "neighbors_b"};
        std::int64_t rank = 1;
        for (const auto& r : rows)
            t.rows.push_back({cell_int(rank++), r.item_id, cell_rank(r.divergence),
                              cell_int(r.degree_a), cell_int(r.degree_b)});
        emit_table_file(t, v_out);
    });

    // ---------------------------------------------------------- neighbors
    auto* nb = app.add_subcommand("neighbors", "Highest-weight co-read neighbors of an item");
    std::string nb_graph, nb_item;
    std::int64_t nb_k = 5;
    nb->add_option("--graph", nb_graph, "edge list CSV")->required();
    nb->add_option("--item", nb_item, "item id")->required();
    nb->add_option("--k", nb_k, "neighbors to print (default 5)");
    nb->callback([&] {
        const auto g = read_cograph_csv(nb_graph);
        write_csv_row(std::cout, {"rank", "neighbor", "weight"});
        std::int64_t rank = 1;
        for (const auto& [id, w] : top_neighbors(g, nb_item, nb_k))
            write_csv_row(std::cout, {cell_int(rank++), id, cell_int(w)});
    });

    // ------------------------------------------------------------ coreper
    auto* cp = app.add_subcommand("coreper", "Core-periphery layer inference");
    std::string cp_graph, cp_out;
    CorePeripheryParams cp_params;
    cp->add_option("--graph", cp_graph, "edge list CSV")->required();
    cp->add_option("--layers", cp_params.layers, "number of nested layers (default 5)");
    cp->add_option("--seed", cp_params.seed, "RNG seed")->required();
    cp->add_option("--samples", cp_params.samples, "retained posterior samples (default 500)");
    cp->add_option("--sweeps", cp_params.sweeps, "Metropolis sweeps (default 20000)");
    cp->add_option("--out", cp_out, "layer assignment CSV")->required();
    cp->callback([&] {
        const auto g = read_cograph_csv(cp_graph);
        const auto assignment = infer_layers(g, cp_params);
        std::map<std::string, std::vector<double>> dist_of;
        for (std::size_t i = 0; i < assignment.nodes.size(); ++i)
            dist_of[assignment.nodes[i]] = assignment.dist[i];
        Table t;
        t.header = {"item", "coreness"};
        for (int l = 1; l <= assignment.layers; ++l) t.header.push_back("p" + std::to_string(l));
        for (const auto& [id, score] : coreness_scores(assignment)) {
            CsvRow row{id, cell_coreness(score)};
            for (double p : dist_of[id]) row.push_back(cell_rank(p));
            t.rows.push_back(std::move(row));
        }
        emit_table_file(t, cp_out);
    });

    // --------------------------------------------------------- centrality
    auto* ce = app.add_subcommand("centrality", "Degree, betweenness and eigenvector centrality");
    std::string ce_graph, ce_out;
    ce->add_option("--graph", ce_graph, "edge list CSV")->required();
    ce->add_option("--out", ce_out, "centrality table CSV")->required();
    ce->callback([&] {
        const auto g = read_cograph_csv(ce_graph);
        std::map<std::string, double> degree, betweenness, eigen;
        if (g.node_count() >= 2) degree = degree_centrality(g);
        if (g.node_count() >= 3) betweenness = betweenness_centrality(g);
        eigen = eigenvector_centrality(g);
        Table t;
        t.header = {"item", "degree", "betweenness", "eigenvector"};
        auto opt_cell = [](const std::map<std::string, double>& m, const std::string& key) {
            auto it = m.find(key);
            return it == m.end() ? std::string() : cell_centrality(it->second);
        };
        for (const auto& id : g.nodes())
            t.rows.push_back(
                {id, opt_cell(degree, id), opt_cell(betweenness, id), opt_cell(eigen, id)});
        emit_table_file(t, ce_out);
    });

    // -------------------------------------------------------- reader-corr
    auto* rc = app.add_subcommand("reader-corr",
                                  "Spearman correlation of scores with reader indicators");
    std::string rc_scores, rc_corpus, rc_readers, rc_mode = "or";
    rc->add_option("--scores", rc_scores, "per-item score CSV (item/coreness columns)")
        ->required();
    rc->add_option("--corpus", rc_corpus, "corpus .bin")->required();
    rc->add_option("--readers", rc_readers, "comma-separated reader ids")->required();
    rc->add_option("--mode", rc_mode, "combination mode: or / and (default or)");
    rc->callback([&] {
        const auto scores = read_scores_csv(rc_scores);
        const auto corpus = load_corpus_bin_file(rc_corpus);
        ComboMode mode;
        if (rc_mode == "or") mode = ComboMode::any_of;
        else if (rc_mode == "and") mode = ComboMode::all_of;
        else throw ConfigError("--mode must be 'or' or 'and'");
        std::vector<std::string> readers;
        std::stringstream ss(rc_readers);
        std::string tok;
        while (std::getline(ss, tok, ','))
            if (!tok.empty()) readers.push_back(tok);
        if (readers.empty()) throw ConfigError("--readers must name at least one reader");
        for (const auto& r : readers)
            if (!corpus.has_reader(r)) throw DataError("unknown reader id: " + r);
        std::set<std::string> universe;
        for (const auto& [id, _] : scores) universe.insert(id);
        const auto sets = reader_item_sets(corpus, universe);
        std::vector<ReaderCombo> combos;
        for (const auto& r : readers) combos.push_back({r, {r}, mode});
        if (readers.size() > 1) {
            std::string name;
            for (const auto& r : readers) {
                if (!name.empty()) name += rc_mode == "or" ? " or " : " and ";
                name += r;
            }
            combos.push_back({name, readers, mode});
        }
        write_csv_row(std::cout, {"combination", "rho", "p", "items_read", "n"});
        for (const auto& row : reader_structure_correlation(scores, sets, combos)) {
            if (row.corr)
                write_csv_row(std::cout, {row.name, cell_rank(row.corr->r),
                                          cell_rank(row.corr->p), cell_int(row.items_read),
                                          cell_int(static_cast<std::int64_t>(row.corr->n))});
            else
                write_csv_row(std::cout,
                              {row.name, "undefined", "", cell_int(row.items_read),
                               cell_int(static_cast<std::int64_t>(scores.size()))});
        }
    });

    // ------------------------------------------------------------ members
    auto* mem = app.add_subcommand("members", "Per-reader borrowing profiles");
    std::string mem_corpus, mem_ranks, mem_out;
    std::int64_t mem_min_events = 10;
    mem->add_option("--corpus", mem_corpus, "corpus .bin")->required();
    mem->add_option("--ranks", mem_ranks, "rank table CSV")->required();
    mem->add_option("--min-events", mem_min_events, "minimum events per reader (default 10)");
    mem->add_option("--out", mem_out, "member profile CSV")->required();
    mem->callback([&] {
        const auto corpus = load_corpus_bin_file(mem_corpus);
        std::map<std::string, double> rank_changes;
        for (const auto& r : read_ranks_csv(mem_ranks))
            if (r.rank_change) rank_changes[r.item] = *r.rank_change;
        Table t;
        t.header = {"reader_id", "events_total", "distinct_items", "distinct_matched_items",
                    "median_pub_year_matched", "mean_rank_change_matched"};
        for (const auto& p : member_profiles(corpus, rank_changes, mem_min_events))
            t.rows.push_back({p.reader_id, cell_int(p.event_count), cell_int(p.distinct_items),
                              cell_int(p.distinct_matched_items),
                              p.median_pub_year ? cell_year(*p.median_pub_year) : std::string(),
                              p.mean_rank_change ? cell_rank(*p.mean_rank_change)
                                                 : std::string()});
        emit_table_file(t, mem_out);
    });

    // ---------------------------------------------------------- proximity
    auto* prox = app.add_subcommand("proximity", "Reader pairs borrowing an item within a window");
    std::string px_corpus, px_items;
    std::int64_t px_window = 5;
    prox->add_option("--corpus", px_corpus, "corpus .bin")->required();
    prox->add_option("--window", px_window, "window in days, inclusive (default 5)");
    prox->add_option("--items", px_items, "file with one item id per line (default all items)");
    prox->callback([&] {
        const auto corpus = load_corpus_bin_file(px_corpus);
        std::optional<std::set<std::string>> filter;
        if (!px_items.empty()) {
            std::ifstream in(px_items);
            if (!in) throw DataError("cannot open file: " + px_items);
            std::set<std::string> ids;
            std::string line;
            while (std::getline(in, line)) {
                while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
                    line.pop_back();
                if (!line.empty()) ids.insert(line);
            }
            filter = std::move(ids);
        }
        write_csv_row(std::cout, {"item_id", "reader_1", "reader_2", "gap_days"});
        for (const auto& hit : borrow_proximity(corpus, filter, px_window))
            write_csv_row(std::cout,
                          {hit.item_id, hit.reader_1, hit.reader_2, cell_int(hit.gap_days)});
    });

    // ---------------------------------------------------------------- run
    auto* run = app.add_subcommand("run", "Full pipeline from a config file");
    std::string run_config, run_out;
    run->add_option("--config", run_config, "run configuration file (TOML-style key = value)")
        ->required();
    run->add_option("--out", run_out, "override the configured output directory");
    run->callback([&] {
        auto cfg = parse_run_config(run_config);
        if (!run_out.empty()) cfg.out_dir = run_out;
        const auto result = run_pipeline(cfg);
        std::cerr << "[coread] bundle written to " << result.out_dir << " ("
                  << result.files.size() << " files)\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2; // bad arguments are configuration errors
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const coread::ConfigError& e) {
        std::cerr << "coread: config error: " << e.what() << '\n';
        return 2;
    } catch (const coread::NumericError& e) {
        std::cerr << "coread: numerical failure: " << e.what() << '\n';
        return 4;
    } catch (const coread::DataError& e) {
        std::cerr << "coread: data error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "coread: error: " << e.what() << '\n';
        return 3;
    }
}
