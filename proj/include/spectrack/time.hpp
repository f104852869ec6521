#pragma once

#include <cstdint>
#include <cstdio>
#include <compare>
#include <optional>
#include <string>

#include "spectrack/errors.hpp"

namespace spectrack {

/// Calendar timestamp with second resolution, always treated as UTC.
/// Stored as civil fields plus a cached epoch-second value so ordering
/// and arithmetic never touch the C locale or the process time zone.
struct UtcTime {
    int year = 1970;
    int month = 1; // 1..12
    int day = 1;   // 1..31
    int hour = 0;
    int minute = 0;
    int second = 0;

    // Days since 1970-01-01 for a civil date (Howard Hinnant's algorithm).
    static std::int64_t days_from_civil(int y, int m, int d) {
        y -= m <= 2;
        const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
        const unsigned yoe = static_cast<unsigned>(y - era * 400);
        const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                             static_cast<unsigned>(d) - 1u;
        const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
        return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
    }

    std::int64_t epoch_seconds() const {
        return days_from_civil(year, month, day) * 86400 + hour * 3600 + minute * 60 + second;
    }

    static UtcTime from_epoch_seconds(std::int64_t t) {
        std::int64_t days = t / 86400;
        std::int64_t rem = t % 86400;
        if (rem < 0) {
            rem += 86400;
            days -= 1;
        }
        // civil_from_days, inverse of the above
        days += 719468;
        const std::int64_t era = (days >= 0 ? days : days - 146096) / 146097;
        const unsigned doe = static_cast<unsigned>(days - era * 146097);
        const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
        const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
        const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
        const unsigned mp = (5 * doy + 2) / 153;
        const unsigned d = doy - (153 * mp + 2) / 5 + 1;
        const unsigned m = mp + (mp < 10 ? 3 : -9);
        UtcTime out;
        out.year = static_cast<int>(y + (m <= 2));
        out.month = static_cast<int>(m);
        out.day = static_cast<int>(d);
        out.hour = static_cast<int>(rem / 3600);
        out.minute = static_cast<int>((rem / 60) % 60);
        out.second = static_cast<int>(rem % 60);
        return out;
    }

    bool valid() const {
        if (month < 1 || month > 12 || day < 1 || day > 31) return false;
        if (hour < 0 || hour > 23 || minute < 0 || minute > 59 || second < 0 || second > 59)
            return false;
        static const int days_in[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
        int dmax = days_in[month - 1];
        bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
        if (month == 2 && leap) dmax = 29;
        return day <= dmax;
    }

    /// Parse the dotted IMS file-name pattern "yyyy.MM.dd.HH.mm.ss".
    static std::optional<UtcTime> parse_dotted(const std::string& name) {
        UtcTime t;
        int n = 0;
        if (std::sscanf(name.c_str(), "%4d.%2d.%2d.%2d.%2d.%2d%n", &t.year, &t.month, &t.day,
                        &t.hour, &t.minute, &t.second, &n) != 6)
            return std::nullopt;
        if (static_cast<std::size_t>(n) != name.size() || name.size() != 19) return std::nullopt;
        if (!t.valid()) return std::nullopt;
        return t;
    }

    std::string to_iso() const {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d", year, month, day, hour,
                      minute, second);
        return buf;
    }

    std::string to_dotted() const {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%04d.%02d.%02d.%02d.%02d.%02d", year, month, day, hour,
                      minute, second);
        return buf;
    }

    static std::optional<UtcTime> parse_iso(const std::string& s) {
        UtcTime t;
        int n = 0;
        if (std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &t.year, &t.month, &t.day, &t.hour,
                        &t.minute, &t.second, &n) != 6)
            return std::nullopt;
        if (static_cast<std::size_t>(n) != s.size() || !t.valid()) return std::nullopt;
        return t;
    }

    UtcTime plus_seconds(std::int64_t s) const { return from_epoch_seconds(epoch_seconds() + s); }

    friend bool operator==(const UtcTime& a, const UtcTime& b) {
        return a.epoch_seconds() == b.epoch_seconds();
    }
    friend std::strong_ordering operator<=>(const UtcTime& a, const UtcTime& b) {
        return a.epoch_seconds() <=> b.epoch_seconds();
    }
};

} // namespace spectrack
