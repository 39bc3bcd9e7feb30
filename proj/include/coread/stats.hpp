#pragma once

// Popularity statistics over matched item sets: interaction counts,
// [0,1]-scaled fractional ranks (rank 0 = most popular), rank drift,
// Pearson/Spearman correlation, top-k overlap, relative popularity
// log-ratios, Tukey box statistics and Gaussian kernel density curves.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "coread/corpus.hpp"
#include "coread/errors.hpp"
#include "coread/numeric.hpp"

namespace coread {

enum class CountKey { item, author };

// Multiplicity counts of events of one kind, keyed by item id or by the
// item's author. Keys with zero events are omitted.
inline std::map<std::string, std::int64_t>
interaction_counts(const Corpus& corpus, EventKind kind, CountKey key) {
    std::map<std::string, std::int64_t> counts;
    for (const auto& e : corpus.events) {
        if (e.kind != kind) continue;
        if (key == CountKey::item) {
            counts[e.item_id] += 1;
        } else {
            counts[corpus.item(e.item_id).author] += 1;
        }
    }
    return counts;
}

// 1-based mean ordinal positions over ascending value order; callers
// wanting descending ranks negate their values first. Ties receive the
// mean of the positions they span.
inline std::vector<double> fractional_ranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double mean_rank = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
        i = j + 1;
    }
    return ranks;
}

// Scales popularity counts to ranks in [0, 1] where rank 0 is the most
// popular key. Ties share the mean of their ordinal positions.
inline std::map<std::string, double>
scaled_ranks(const std::map<std::string, std::int64_t>& counts) {
    if (counts.empty()) throw DataError("scaled_ranks: empty counts");
    std::vector<std::string> keys;
    std::vector<double> negated;
    keys.reserve(counts.size());
    for (const auto& [k, v] : counts) {
        keys.push_back(k);
        negated.push_back(-static_cast<double>(v)); // ascending rank = descending count
    }
    const auto ranks = fractional_ranks(negated);
    const double denom = counts.size() > 1 ? static_cast<double>(counts.size() - 1) : 1.0;
    std::map<std::string, double> out;
    for (std::size_t i = 0; i < keys.size(); ++i)
        out[keys[i]] = (ranks[i] - 1.0) / denom;
    return out;
}

// Historical rank minus modern rank; positive means the item rose in
// relative popularity between the corpora.
inline double rank_change(double rank_a, double rank_b) {
    return rank_a - rank_b;
}

struct Correlation {
    double r = 0.0;
    double p = 1.0;
    std::size_t n = 0;
};

// Product-moment correlation with a two-sided p-value from the
// t-distribution with n-2 degrees of freedom.
inline Correlation pearson_r(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size())
        throw DataError("pearson_r: length mismatch (" + std::to_string(xs.size()) + " vs " +
                        std::to_string(ys.size()) + ")");
    const std::size_t n = xs.size();
    if (n < 3) throw DataError("pearson_r: need at least 3 observations");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - mx, dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw DataError("pearson_r: zero variance");
    Correlation c;
    c.n = n;
    c.r = sxy / std::sqrt(sxx * syy);
    const double df = static_cast<double>(n - 2);
    const double r2 = std::min(c.r * c.r, 1.0);
    if (r2 >= 1.0) {
        c.p = 0.0;
    } else {
        const double t = c.r * std::sqrt(df / (1.0 - r2));
        c.p = student_t_two_sided_p(t, df);
    }
    return c;
}

// Pearson correlation of fractional ranks; ties take mean ranks.
inline Correlation spearman_rho(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw DataError("spearman_rho: length mismatch");
    if (xs.size() < 3) throw DataError("spearman_rho: need at least 3 observations");
    return pearson_r(fractional_ranks(xs), fractional_ranks(ys));
}

// |top-k(a) ∩ top-k(b)| under descending counts; boundary ties resolved
// by lexicographic key, so the truncation is deterministic.
inline std::int64_t top_k_overlap(const std::map<std::string, std::int64_t>& counts_a,
                                  const std::map<std::string, std::int64_t>& counts_b,
                                  std::int64_t k) {
    if (k < 1) throw DataError("top_k_overlap: k must be >= 1");
    if (k > static_cast<std::int64_t>(counts_a.size()) ||
        k > static_cast<std::int64_t>(counts_b.size()))
        throw DataError("top_k_overlap: k exceeds key count");
    auto top_k = [k](const std::map<std::string, std::int64_t>& counts) {
        std::vector<std::pair<std::string, std::int64_t>> v(counts.begin(), counts.end());
        std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        std::set<std::string> out;
        for (std::int64_t i = 0; i < k; ++i) out.insert(v[static_cast<std::size_t>(i)].first);
        return out;
    };
    const auto ta = top_k(counts_a);
    const auto tb = top_k(counts_b);
    std::int64_t overlap = 0;
    for (const auto& key : ta)
        if (tb.count(key)) ++overlap;
    return overlap;
}

// ln((count_a/total_a) / (count_b/total_b)); positive means relatively
// more popular in corpus A.
inline double relative_popularity(std::int64_t count_a, std::int64_t total_a,
                                  std::int64_t count_b, std::int64_t total_b) {
    if (count_a < 1 || total_a < 1 || count_b < 1 || total_b < 1)
        throw DataError("relative_popularity: counts and totals must be >= 1");
    return std::log((static_cast<double>(count_a) / static_cast<double>(total_a)) /
                    (static_cast<double>(count_b) / static_cast<double>(total_b)));
}

struct BoxStats {
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
    std::vector<double> outliers; // beyond 1.5 * IQR fences, ascending
};

namespace detail {

// Tukey hinge: median of the lower/upper half, halves including the
// overall median when the length is odd.
inline double tukey_hinge(const std::vector<double>& sorted, bool upper) {
    const std::size_t n = sorted.size();
    const std::size_t half = (n + 1) / 2;
    std::vector<double> part;
    part.reserve(half);
    if (!upper)
        part.assign(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(half));
    else
        part.assign(sorted.end() - static_cast<std::ptrdiff_t>(half), sorted.end());
    return median_of(std::move(part));
}

} // namespace detail

inline BoxStats quantile_summary(std::vector<double> values) {
    if (values.empty()) throw DataError("quantile_summary: empty input");
    std::sort(values.begin(), values.end());
    BoxStats s;
    s.min = values.front();
    s.max = values.back();
    s.median = median_of(values);
    s.q1 = detail::tukey_hinge(values, false);
    s.q3 = detail::tukey_hinge(values, true);
    const double iqr = s.q3 - s.q1;
    const double lo = s.q1 - 1.5 * iqr;
    const double hi = s.q3 + 1.5 * iqr;
    for (double v : values)
        if (v < lo || v > hi) s.outliers.push_back(v);
    return s;
}

struct ListComparison {
    std::int64_t overlap = 0; // shared keys
    double median_external = 0.0;
    double mean_external = 0.0;
    double median_internal = 0.0;
    double mean_internal = 0.0;
    std::int64_t above_threshold_external = 0; // strictly greater
    std::int64_t above_threshold_internal = 0;
};

// Compares an external reference list against an internal one on a shared
// metric (typically ratings counts), reporting key overlap, per-list
// medians and means, and how many entries exceed the threshold.
inline ListComparison list_comparison(const std::map<std::string, std::int64_t>& counts_external,
                                      const std::map<std::string, std::int64_t>& counts_internal,
                                      std::int64_t threshold) {
    if (threshold < 0) throw DataError("list_comparison: threshold must be >= 0");
    ListComparison out;
    for (const auto& [k, _] : counts_external)
        if (counts_internal.count(k)) ++out.overlap;
    auto summarize = [threshold](const std::map<std::string, std::int64_t>& counts,
                                 double& median, double& mean, std::int64_t& above) {
        if (counts.empty()) return;
        std::vector<double> v;
        v.reserve(counts.size());
        for (const auto& [_, c] : counts) {
            v.push_back(static_cast<double>(c));
            if (c > threshold) ++above;
        }
        mean = mean_of(v);
        median = median_of(std::move(v));
    };
    summarize(counts_external, out.median_external, out.mean_external,
              out.above_threshold_external);
    summarize(counts_internal, out.median_internal, out.mean_internal,
              out.above_threshold_internal);
    return out;
}

// Silverman's rule of thumb. Falls back to the standard deviation when the
// IQR collapses.
inline double silverman_bandwidth(const std::vector<double>& values) {
    const std::size_t n = values.size();
    double mean = mean_of(values);
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n - 1);
    const double sd = std::sqrt(var);
    const auto box = quantile_summary(values);
    const double iqr = box.q3 - box.q1;
    double spread = sd;
    if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
    return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

// Gaussian kernel density estimate evaluated over a grid.
inline std::vector<double> density_curve(const std::vector<double>& values,
                                         const std::vector<double>& grid) {
    if (values.size() < 2) throw DataError("density_curve: need at least 2 values");
    const double first = values.front();
    bool distinct = false;
    for (double v : values)
        if (v != first) { distinct = true; break; }
    if (!distinct) throw DataError("density_curve: degenerate input (all values equal)");
    const double h = silverman_bandwidth(values);
    const double norm = 1.0 / (static_cast<double>(values.size()) * h * std::sqrt(2.0 * M_PI));
    std::vector<double> out;
    out.reserve(grid.size());
    for (double g : grid) {
        double acc = 0.0;
        for (double v : values) {
            const double z = (g - v) / h;
            acc += std::exp(-0.5 * z * z);
        }
        out.push_back(acc * norm);
    }
    return out;
}

// Evenly spaced grid spanning the data range widened by 4 bandwidths, so
// the trapezoidal integral of the KDE is within 1% of one.
inline std::vector<double> default_density_grid(const std::vector<double>& values,
                                                std::size_t points = 256) {
    const double h = silverman_bandwidth(values);
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    const double lo = *mn - 4.0 * h;
    const double hi = *mx + 4.0 * h;
    std::vector<double> grid;
    grid.reserve(points);
    for (std::size_t i = 0; i < points; ++i)
        grid.push_back(lo + (hi - lo) * static_cast<double>(i) /
                                static_cast<double>(points - 1));
    return grid;
}

} // namespace coread
