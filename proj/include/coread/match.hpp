#pragma once

// Cross-corpus item linkage. Items are keyed by a normalized
// "title|author-last-token" string; exact key matches outrank fuzzy
// (token-set Jaccard) ones, and within a tier candidates are ordered by
// popularity (ratings count) with lexicographic item-id tie-breaks.
// Greedy 1:1 assignment; uncertain cases land in a review queue.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "coread/corpus.hpp"
#include "coread/csv.hpp"
#include "coread/errors.hpp"
#include "coread/numeric.hpp"

namespace coread {

namespace detail {

// ASCII transliteration for Latin-1 Supplement and Latin Extended-A
// codepoints; anything else non-ASCII is dropped.
inline const char* fold_codepoint(char32_t cp) {
    if (cp >= 0x00C0 && cp <= 0x00C5) return "a";
    if (cp == 0x00C6) return "ae";
    if (cp == 0x00C7) return "c";
    if (cp >= 0x00C8 && cp <= 0x00CB) return "e";
    if (cp >= 0x00CC && cp <= 0x00CF) return "i";
    if (cp == 0x00D0) return "d";
    if (cp == 0x00D1) return "n";
    if ((cp >= 0x00D2 && cp <= 0x00D6) || cp == 0x00D8) return "o";
    if (cp >= 0x00D9 && cp <= 0x00DC) return "u";
    if (cp == 0x00DD) return "y";
    if (cp == 0x00DE) return "th";
    if (cp == 0x00DF) return "ss";
    if (cp >= 0x00E0 && cp <= 0x00E5) return "a";
    if (cp == 0x00E6) return "ae";
    if (cp == 0x00E7) return "c";
    if (cp >= 0x00E8 && cp <= 0x00EB) return "e";
    if (cp >= 0x00EC && cp <= 0x00EF) return "i";
    if (cp == 0x00F0) return "d";
    if (cp == 0x00F1) return "n";
    if ((cp >= 0x00F2 && cp <= 0x00F6) || cp == 0x00F8) return "o";
    if (cp >= 0x00F9 && cp <= 0x00FC) return "u";
    if (cp == 0x00FD || cp == 0x00FF) return "y";
    if (cp == 0x00FE) return "th";
    if (cp >= 0x0100 && cp <= 0x0105) return "a";
    if (cp >= 0x0106 && cp <= 0x010D) return "c";
    if (cp >= 0x010E && cp <= 0x0111) return "d";
    if (cp >= 0x0112 && cp <= 0x011B) return "e";
    if (cp >= 0x011C && cp <= 0x0123) return "g";
    if (cp >= 0x0124 && cp <= 0x0127) return "h";
    if (cp >= 0x0128 && cp <= 0x0131) return "i";
    if (cp == 0x0132 || cp == 0x0133) return "ij";
    if (cp == 0x0134 || cp == 0x0135) return "j";
    if (cp >= 0x0136 && cp <= 0x0138) return "k";
    if (cp >= 0x0139 && cp <= 0x0142) return "l";
    if (cp >= 0x0143 && cp <= 0x014B) return "n";
    if (cp >= 0x014C && cp <= 0x0151) return "o";
    if (cp == 0x0152 || cp == 0x0153) return "oe";
    if (cp >= 0x0154 && cp <= 0x0159) return "r";
    if (cp >= 0x015A && cp <= 0x0161) return "s";
    if (cp >= 0x0162 && cp <= 0x0167) return "t";
    if (cp >= 0x0168 && cp <= 0x0173) return "u";
    if (cp == 0x0174 || cp == 0x0175) return "w";
    if (cp >= 0x0176 && cp <= 0x0178) return "y";
    if (cp >= 0x0179 && cp <= 0x017E) return "z";
    return "";
}

// Lowercased ASCII with diacritics folded and punctuation as spaces.
inline std::string fold_to_ascii(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        const unsigned char c = static_cast<unsigned char>(s[i]);
        if (c < 0x80) {
            if (std::isalnum(c))
                out.push_back(static_cast<char>(std::tolower(c)));
            else
                out.push_back(' ');
            ++i;
            continue;
        }
        char32_t cp = 0;
        std::size_t len = 0;
        if ((c & 0xE0) == 0xC0) { cp = c & 0x1F; len = 2; }
        else if ((c & 0xF0) == 0xE0) { cp = c & 0x0F; len = 3; }
        else if ((c & 0xF8) == 0xF0) { cp = c & 0x07; len = 4; }
        else { ++i; continue; }
        if (i + len > s.size()) break;
        bool valid = true;
        for (std::size_t k = 1; k < len; ++k) {
            const unsigned char cc = static_cast<unsigned char>(s[i + k]);
            if ((cc & 0xC0) != 0x80) { valid = false; break; }
            cp = (cp << 6) | (cc & 0x3F);
        }
        if (valid) out += fold_codepoint(cp);
        i += valid ? len : 1;
    }
    return out;
}

inline std::vector<std::string> split_tokens(const std::string& folded) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : folded) {
        if (c == ' ') {
            if (!cur.empty()) tokens.push_back(std::move(cur)), cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

inline std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) out.push_back(' ');
        out += t;
    }
    return out;
}

} // namespace detail

// Author surname token: the part before a comma when one is present
// ("Joyce, James" -> "joyce"), otherwise the last token.
inline std::string author_last_token(const std::string& author) {
    std::string head = author;
    if (const auto comma = author.find(','); comma != std::string::npos)
        head = author.substr(0, comma);
    const auto tokens = detail::split_tokens(detail::fold_to_ascii(head));
    return tokens.empty() ? std::string() : tokens.back();
}

// Deterministic normalized match key: lowercase, punctuation and
// diacritics stripped, whitespace collapsed, leading article dropped,
// composed as "title|author-last-token".
inline std::string normalize_key(const std::string& title, const std::string& author) {
    auto tokens = detail::split_tokens(detail::fold_to_ascii(title));
    if (!tokens.empty() && (tokens[0] == "a" || tokens[0] == "an" || tokens[0] == "the"))
        tokens.erase(tokens.begin());
    return detail::join_tokens(tokens) + "|" + author_last_token(author);
}

inline std::set<std::string> key_tokens(const std::string& normalized_key) {
    std::string spaced = normalized_key;
    std::replace(spaced.begin(), spaced.end(), '|', ' ');
    const auto v = detail::split_tokens(spaced);
    return {v.begin(), v.end()};
}

inline double token_set_jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 0.0;
    std::size_t inter = 0;
    for (const auto& t : a)
        if (b.count(t)) ++inter;
    const std::size_t uni = a.size() + b.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

enum class MatchTier : int { fuzzy = 0, exact = 1 };

struct MatchCandidate {
    std::string b_item_id;
    double score = 0.0; // 1.0 for exact key matches, token-set Jaccard otherwise
    std::int64_t popularity = 0;
    MatchTier tier = MatchTier::fuzzy;
};

// Ratings count per item: the items table's ratings_count field when
// present, otherwise the number of rating events.
inline std::map<std::string, std::int64_t> item_popularity(const Corpus& corpus) {
    std::map<std::string, std::int64_t> pop;
    for (const auto& e : corpus.events)
        if (e.kind == EventKind::rating) pop[e.item_id] += 1;
    for (const auto& it : corpus.items) {
        auto found = it.extra.find("ratings_count");
        if (found != it.extra.end()) {
            try {
                pop[it.item_id] = std::stoll(found->second);
            } catch (const std::exception&) {
                throw DataError("item " + it.item_id + ": ratings_count '" + found->second +
                                "' is not an integer");
            }
        }
    }
    return pop;
}

// Candidates for one left-side item, ordered: exact key matches first,
// then descending popularity, then lexicographic item id.
inline std::vector<MatchCandidate>
rank_candidates(const ItemRecord& a_item, const std::vector<ItemRecord>& b_items,
                const std::map<std::string, std::int64_t>& popularity) {
    const std::string a_key = normalize_key(a_item.title, a_item.author);
    const auto a_tokens = key_tokens(a_key);
    std::vector<MatchCandidate> out;
    for (const auto& b : b_items) {
        const std::string b_key = normalize_key(b.title, b.author);
        MatchCandidate c;
        c.b_item_id = b.item_id;
        auto pop = popularity.find(b.item_id);
        c.popularity = pop == popularity.end() ? 0 : pop->second;
        if (b_key == a_key) {
            c.tier = MatchTier::exact;
            c.score = 1.0;
        } else {
            c.tier = MatchTier::fuzzy;
            c.score = token_set_jaccard(a_tokens, key_tokens(b_key));
            if (c.score <= 0.0) continue;
        }
        out.push_back(std::move(c));
    }
    std::sort(out.begin(), out.end(), [](const MatchCandidate& x, const MatchCandidate& y) {
        if (x.tier != y.tier) return static_cast<int>(x.tier) > static_cast<int>(y.tier);
        if (x.popularity != y.popularity) return x.popularity > y.popularity;
        return x.b_item_id < y.b_item_id;
    });
    return out;
}

enum class MatchProvenance { exact, normalized, popularity_ranked, manual_override };

inline std::string to_string(MatchProvenance p) {
    switch (p) {
    case MatchProvenance::exact: return "exact";
    case MatchProvenance::normalized: return "normalized";
    case MatchProvenance::popularity_ranked: return "popularity-ranked";
    case MatchProvenance::manual_override: return "manual-override";
    }
    return "?";
}

inline std::optional<MatchProvenance> parse_match_provenance(const std::string& s) {
    if (s == "exact") return MatchProvenance::exact;
    if (s == "normalized") return MatchProvenance::normalized;
    if (s == "popularity-ranked") return MatchProvenance::popularity_ranked;
    if (s == "manual-override") return MatchProvenance::manual_override;
    return std::nullopt;
}

struct MatchPair {
    std::string a_item_id;
    std::string b_item_id;
    MatchProvenance provenance = MatchProvenance::exact;
    double score = 1.0;
};

// 1:1 by construction: each side id appears in at most one pair.
struct MatchTable {
    std::vector<MatchPair> pairs; // sorted by a_item_id
};

struct QueueEntry {
    std::string a_item_id;
    std::string reason;
    std::vector<MatchCandidate> candidates; // best first, at most 5 kept
};

struct MatchResult {
    MatchTable table;
    std::vector<QueueEntry> queue; // sorted by (a_item_id, reason)
};

struct ManualOverride {
    std::string a_item_id;
    std::string b_item_id;
};

// Greedy 1:1 assignment over all candidate pairs in descending
// (tier, popularity) order. Left items whose best candidates carry no
// usable signal (two fuzzy candidates tied on score and popularity), fall
// below min_score, or lose their targets to earlier assignments are
// queued for human review. Overrides always win; displaced pairs are
// queued as evicted.
inline MatchResult build_match_table(const Corpus& corpus_a, const Corpus& corpus_b,
                                     double min_score,
                                     const std::vector<ManualOverride>& overrides = {}) {
    if (min_score < 0.0 || min_score > 1.0)
        throw ConfigError("min_score must lie in [0, 1]");
    const auto popularity = item_popularity(corpus_b);

    struct PairCand {
        MatchCandidate cand;
        std::string a_id;
        std::size_t exact_count = 0; // exact-tier candidates of this a item
    };
    std::vector<PairCand> all;
    std::map<std::string, std::vector<MatchCandidate>> per_a;
    std::vector<QueueEntry> queue;
    auto queue_entry = [&queue](const std::string& a_id, const std::string& reason,
                                std::vector<MatchCandidate> cands) {
        if (cands.size() > 5) cands.resize(5);
        queue.push_back(QueueEntry{a_id, reason, std::move(cands)});
    };

    for (const auto& a : corpus_a.items) {
        auto cands = rank_candidates(a, corpus_b.items, popularity);
        if (cands.empty()) {
            queue_entry(a.item_id, "no_candidates", {});
            continue;
        }
        if (cands[0].tier == MatchTier::fuzzy && cands.size() > 1 &&
            cands[1].tier == MatchTier::fuzzy && cands[1].score == cands[0].score &&
            cands[1].popularity == cands[0].popularity) {
            queue_entry(a.item_id, "ambiguous", cands);
            continue;
        }
        std::size_t exact_count = 0;
        for (const auto& c : cands)
            if (c.tier == MatchTier::exact) ++exact_count;
        for (const auto& c : cands)
            all.push_back(PairCand{c, a.item_id, exact_count});
        per_a[a.item_id] = std::move(cands);
    }

    std::sort(all.begin(), all.end(), [](const PairCand& x, const PairCand& y) {
        if (x.cand.tier != y.cand.tier)
            return static_cast<int>(x.cand.tier) > static_cast<int>(y.cand.tier);
        if (x.cand.popularity != y.cand.popularity) return x.cand.popularity > y.cand.popularity;
        if (x.a_id != y.a_id) return x.a_id < y.a_id;
        return x.cand.b_item_id < y.cand.b_item_id;
    });

    std::map<std::string, MatchPair> by_a;
    std::map<std::string, std::string> b_taken; // b id -> a id
    for (const auto& pc : all) {
        if (pc.cand.score < min_score) continue;
        if (by_a.count(pc.a_id) || b_taken.count(pc.cand.b_item_id)) continue;
        MatchPair p;
        p.a_item_id = pc.a_id;
        p.b_item_id = pc.cand.b_item_id;
        p.score = pc.cand.score;
        if (pc.cand.tier == MatchTier::exact)
            p.provenance = pc.exact_count > 1 ? MatchProvenance::popularity_ranked
                                              : MatchProvenance::exact;
        else
            p.provenance = MatchProvenance::normalized;
        b_taken[p.b_item_id] = p.a_item_id;
        by_a[p.a_item_id] = std::move(p);
    }

    for (const auto& [a_id, cands] : per_a) {
        if (by_a.count(a_id)) continue;
        const bool any_above = std::any_of(cands.begin(), cands.end(), [&](const auto& c) {
            return c.score >= min_score;
        });
        queue_entry(a_id, any_above ? "lost_conflict" : "below_min_score", cands);
    }

    for (const auto& ov : overrides) {
        if (!corpus_a.has_item(ov.a_item_id))
            throw DataError("override references unknown corpus-A item: " + ov.a_item_id);
        if (!corpus_b.has_item(ov.b_item_id))
            throw DataError("override references unknown corpus-B item: " + ov.b_item_id);
        auto evict = [&](const MatchPair& old) {
            MatchCandidate c;
            c.b_item_id = old.b_item_id;
            c.score = old.score;
            auto pop = popularity.find(old.b_item_id);
            c.popularity = pop == popularity.end() ? 0 : pop->second;
            queue_entry(old.a_item_id, "evicted_by_override", {c});
        };
        if (auto it = by_a.find(ov.a_item_id); it != by_a.end()) {
            evict(it->second);
            b_taken.erase(it->second.b_item_id);
            by_a.erase(it);
        }
        if (auto bt = b_taken.find(ov.b_item_id); bt != b_taken.end()) {
            auto it = by_a.find(bt->second);
            evict(it->second);
            by_a.erase(it);
            b_taken.erase(bt);
        }
        const auto& a_rec = corpus_a.item(ov.a_item_id);
        const auto& b_rec = corpus_b.item(ov.b_item_id);
        MatchPair p;
        p.a_item_id = ov.a_item_id;
        p.b_item_id = ov.b_item_id;
        p.provenance = MatchProvenance::manual_override;
        const std::string ka = normalize_key(a_rec.title, a_rec.author);
        const std::string kb = normalize_key(b_rec.title, b_rec.author);
        p.score = ka == kb ? 1.0 : token_set_jaccard(key_tokens(ka), key_tokens(kb));
        b_taken[p.b_item_id] = p.a_item_id;
        by_a[p.a_item_id] = std::move(p);
    }

    MatchResult result;
    for (auto& [_, p] : by_a) result.table.pairs.push_back(std::move(p));
    std::sort(queue.begin(), queue.end(), [](const QueueEntry& x, const QueueEntry& y) {
        if (x.a_item_id != y.a_item_id) return x.a_item_id < y.a_item_id;
        return x.reason < y.reason;
    });
    result.queue = std::move(queue);
    return result;
}

// ---------------------------------------------------------------------------
// CSV round-trip

inline void write_match_csv(const MatchTable& table, std::ostream& out) {
    write_csv_row(out, {"a_item_id", "b_item_id", "provenance", "score"});
    for (const auto& p : table.pairs)
        write_csv_row(out, {p.a_item_id, p.b_item_id, to_string(p.provenance),
                            format_fixed(p.score, 4)});
}

inline void write_queue_csv(const std::vector<QueueEntry>& queue, std::ostream& out) {
    write_csv_row(out, {"a_item_id", "reason", "candidates"});
    for (const auto& q : queue) {
        std::string cands;
        for (const auto& c : q.candidates) {
            if (!cands.empty()) cands += ";";
            cands += c.b_item_id + ":" + format_fixed(c.score, 4) + ":" +
                     std::to_string(c.popularity);
        }
        write_csv_row(out, {q.a_item_id, q.reason, cands});
    }
}

inline MatchTable read_match_csv(const std::string& path) {
    const auto rows = read_csv_file(path);
    detail::require_header(rows, {"a_item_id", "b_item_id", "provenance", "score"}, path);
    MatchTable table;
    std::set<std::string> seen_a, seen_b;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        detail::require_width(rows[i], 4, path, i);
        MatchPair p;
        p.a_item_id = rows[i][0];
        p.b_item_id = rows[i][1];
        const auto prov = parse_match_provenance(rows[i][2]);
        if (!prov)
            throw DataError(path + ": row " + std::to_string(i) + ": unknown provenance '" +
                            rows[i][2] + "'");
        p.provenance = *prov;
        p.score = std::stod(rows[i][3]);
        if (!seen_a.insert(p.a_item_id).second)
            throw DataError(path + ": duplicate corpus-A id " + p.a_item_id);
        if (!seen_b.insert(p.b_item_id).second)
            throw DataError(path + ": duplicate corpus-B id " + p.b_item_id);
        table.pairs.push_back(std::move(p));
    }
    return table;
}

inline std::vector<ManualOverride> read_overrides_csv(const std::string& path) {
    const auto rows = read_csv_file(path);
    detail::require_header(rows, {"a_item_id", "b_item_id"}, path);
    std::vector<ManualOverride> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        detail::require_width(rows[i], 2, path, i);
        out.push_back(ManualOverride{rows[i][0], rows[i][1]});
    }
    return out;
}

} // namespace coread
