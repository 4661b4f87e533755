#pragma once

#include <cstdint>
#include <string>

namespace epf {

// Seconds since the Unix epoch. The whole pipeline keeps its spine in UTC;
// Europe/Oslo is derived per hour where calendar features need it.
using UtcSeconds = std::int64_t;

inline constexpr std::int64_t kSecondsPerHour = 3600;
inline constexpr std::int64_t kSecondsPerDay = 86400;
inline constexpr std::int64_t kHoursPerWeek = 168;

struct CivilDate {
    int year = 1970;
    int month = 1;  // 1..12
    int day = 1;    // 1..31
};

struct CivilTime {
    CivilDate date;
    int hour = 0;
    int minute = 0;
    int second = 0;
};

// Proleptic-Gregorian day count from 1970-01-01 (Hinnant's algorithm).
std::int64_t days_from_civil(int year, int month, int day);
CivilDate civil_from_days(std::int64_t days);

UtcSeconds utc_from_civil(int year, int month, int day, int hour = 0,
                          int minute = 0, int second = 0);
CivilTime civil_from_utc(UtcSeconds t);

// 0 = Monday .. 6 = Sunday.
int weekday_from_days(std::int64_t days);

// 1-based ordinal day within the year (1..366).
int day_of_year(const CivilDate& d);

bool is_leap_year(int year);

// ISO-8601 week number (1..53) of the given date.
int iso_week(const CivilDate& d);

// Parses "YYYY-MM-DD[{T| }HH:MM[:SS]][Z|+00:00]". Naive timestamps are UTC.
// Throws std::invalid_argument on malformed input.
UtcSeconds parse_utc_timestamp(const std::string& s);

// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_utc_timestamp(UtcSeconds t);

// UTC offset of Europe/Oslo at a UTC instant: CET (+1h) or CEST (+2h) under
// the fixed EU rule (last Sunday of March 01:00 UTC to last Sunday of
// October 01:00 UTC).
std::int64_t oslo_offset_seconds(UtcSeconds t);

CivilTime oslo_civil_from_utc(UtcSeconds t);

}  // namespace epf
