#pragma once

#include <chrono>
#include <compare>
#include <cstdio>
#include <string>

#include "quotasim/types.hpp"

namespace quotasim {

/// Calendar date (proleptic Gregorian). Thin wrapper over std::chrono
/// with ISO-8601 parsing and day arithmetic.
struct Date {
    std::chrono::year_month_day ymd{};

    Date() = default;
    Date(int y, unsigned m, unsigned d)
        : ymd(std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}) {}

    int year() const { return static_cast<int>(ymd.year()); }
    bool ok() const { return ymd.ok(); }

    std::chrono::sys_days serial() const { return std::chrono::sys_days(ymd); }

    auto operator<=>(const Date& other) const { return serial() <=> other.serial(); }
    bool operator==(const Date& other) const { return ymd == other.ymd; }

    std::string iso() const {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year(),
                      static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
        return buf;
    }
};

/// Parses "YYYY-MM-DD". Throws parse_error with the given line number on
/// malformed or non-existent dates.
inline Date parse_date(const std::string& text, std::size_t line = 0) {
    int y = 0;
    unsigned m = 0, d = 0;
    char tail = 0;
    if (std::sscanf(text.c_str(), "%d-%u-%u%c", &y, &m, &d, &tail) != 3)
        throw parse_error("bad date '" + text + "', expected YYYY-MM-DD", line);
    Date date(y, m, d);
    if (!date.ok())
        throw parse_error("nonexistent calendar date '" + text + "'", line);
    return date;
}

/// Calendar days from `from` to `to` (negative when `to` precedes `from`).
inline long days_between(const Date& from, const Date& to) {
    return (to.serial() - from.serial()).count();
}

}  // namespace quotasim
