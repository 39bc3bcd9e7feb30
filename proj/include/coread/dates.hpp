#pragma once

#include <charconv>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "coread/errors.hpp"

namespace coread {

// Calendar date, ISO-8601 (YYYY-MM-DD) on the wire.
struct Date {
    int year = 0;
    int month = 1;
    int day = 1;

    auto operator<=>(const Date&) const = default;

    // Days since 1970-01-01, valid for all proleptic Gregorian dates.
    std::int64_t serial() const {
        std::int64_t y = year;
        if (month <= 2) y -= 1;
        const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
        const unsigned yoe = static_cast<unsigned>(y - era * 400);
        const unsigned doy =
            (153u * static_cast<unsigned>(month + (month > 2 ? -3 : 9)) + 2u) / 5u +
            static_cast<unsigned>(day) - 1u;
        const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
        return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
    }

    std::string to_string() const {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
        return buf;
    }
};

inline bool is_leap_year(int y) {
    return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

inline int days_in_month(int y, int m) {
    static constexpr int k[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap_year(y)) return 29;
    return k[m - 1];
}

// Parses strict YYYY-MM-DD. Returns nullopt for anything else.
inline std::optional<Date> try_parse_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    auto digits = [](std::string_view t) {
        for (char c : t)
            if (c < '0' || c > '9') return false;
        return true;
    };
    if (!digits(s.substr(0, 4)) || !digits(s.substr(5, 2)) || !digits(s.substr(8, 2)))
        return std::nullopt;
    Date d;
    std::from_chars(s.data(), s.data() + 4, d.year);
    std::from_chars(s.data() + 5, s.data() + 7, d.month);
    std::from_chars(s.data() + 8, s.data() + 10, d.day);
    if (d.month < 1 || d.month > 12) return std::nullopt;
    if (d.day < 1 || d.day > days_in_month(d.year, d.month)) return std::nullopt;
    return d;
}

inline Date parse_date(std::string_view s, const std::string& context) {
    auto d = try_parse_date(s);
    if (!d) throw DataError(context + ": invalid date '" + std::string(s) + "' (expected YYYY-MM-DD)");
    return *d;
}

} // namespace coread
