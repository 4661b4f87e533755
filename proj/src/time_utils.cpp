#include "epf/time_utils.hpp"

#include <array>
#include <cstdio>
#include <stdexcept>

namespace epf {

std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);             // [0, 399]
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;  // [0, 365]
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;            // [0, 146096]
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

CivilDate civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return CivilDate{static_cast<int>(y + (m <= 2)), static_cast<int>(m),
                     static_cast<int>(d)};
}

UtcSeconds utc_from_civil(int year, int month, int day, int hour, int minute,
                          int second) {
    return days_from_civil(year, month, day) * kSecondsPerDay +
           hour * 3600LL + minute * 60LL + second;
}

CivilTime civil_from_utc(UtcSeconds t) {
    std::int64_t days = t / kSecondsPerDay;
    std::int64_t sod = t % kSecondsPerDay;
    if (sod < 0) {
        sod += kSecondsPerDay;
        days -= 1;
    }
    CivilTime out;
    out.date = civil_from_days(days);
    out.hour = static_cast<int>(sod / 3600);
    out.minute = static_cast<int>((sod % 3600) / 60);
    out.second = static_cast<int>(sod % 60);
    return out;
}

int weekday_from_days(std::int64_t days) {
    // 1970-01-01 was a Thursday (index 3 with Monday = 0).
    std::int64_t wd = (days + 3) % 7;
    if (wd < 0) wd += 7;
    return static_cast<int>(wd);
}

bool is_leap_year(int year) {
    return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
}

int day_of_year(const CivilDate& d) {
    static constexpr std::array<int, 12> cum = {0,   31,  59,  90,  120, 151,
                                                181, 212, 243, 273, 304, 334};
    int doy = cum[d.month - 1] + d.day;
    if (d.month > 2 && is_leap_year(d.year)) ++doy;
    return doy;
}

int iso_week(const CivilDate& d) {
    const int wd = weekday_from_days(days_from_civil(d.year, d.month, d.day)) + 1;  // 1..7
    int week = (day_of_year(d) - wd + 10) / 7;
    if (week < 1) {
        // Belongs to the last week of the previous year.
        CivilDate prev{d.year - 1, 12, 31};
        return iso_week(prev);
    }
    if (week == 53) {
        // Valid only if the year actually has 53 ISO weeks.
        const int jan1_wd = weekday_from_days(days_from_civil(d.year, 1, 1)) + 1;
        const bool long_year = jan1_wd == 4 || (jan1_wd == 3 && is_leap_year(d.year));
        if (!long_year) return 1;
    }
    return week;
}

namespace {

int parse_int(const std::string& s, std::size_t pos, std::size_t len) {
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
        if (i >= s.size() || s[i] < '0' || s[i] > '9')
            throw std::invalid_argument("malformed timestamp: '" + s + "'");
        v = v * 10 + (s[i] - '0');
    }
    return v;
}

}  // namespace

UtcSeconds parse_utc_timestamp(const std::string& s) {
    if (s.size() < 10 || s[4] != '-' || s[7] != '-')
        throw std::invalid_argument("malformed timestamp: '" + s + "'");
    const int year = parse_int(s, 0, 4);
    const int month = parse_int(s, 5, 2);
    const int day = parse_int(s, 8, 2);
    if (month < 1 || month > 12 || day < 1 || day > 31)
        throw std::invalid_argument("timestamp out of range: '" + s + "'");
    int hour = 0, minute = 0, second = 0;
    std::size_t pos = 10;
    if (pos < s.size() && (s[pos] == 'T' || s[pos] == ' ')) {
        ++pos;
        hour = parse_int(s, pos, 2);
        if (pos + 2 >= s.size() || s[pos + 2] != ':')
            throw std::invalid_argument("malformed timestamp: '" + s + "'");
        minute = parse_int(s, pos + 3, 2);
        pos += 5;
        if (pos < s.size() && s[pos] == ':') {
            second = parse_int(s, pos + 1, 2);
            pos += 3;
        }
    }
    if (pos < s.size()) {
        const std::string tail = s.substr(pos);
        if (tail != "Z" && tail != "+00:00" && tail != "+0000")
            throw std::invalid_argument("non-UTC timestamp suffix: '" + s + "'");
    }
    if (hour > 23 || minute > 59 || second > 60)
        throw std::invalid_argument("timestamp out of range: '" + s + "'");
    return utc_from_civil(year, month, day, hour, minute, second);
}

std::string format_utc_timestamp(UtcSeconds t) {
    const CivilTime c = civil_from_utc(t);
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ",
                  c.date.year, c.date.month, c.date.day, c.hour, c.minute,
                  c.second);
    return std::string(buf);
}

namespace {

// UTC instant of the last Sunday of `month` at 01:00.
UtcSeconds last_sunday_0100_utc(int year, int month) {
    static constexpr std::array<int, 12> mdays = {31, 28, 31, 30, 31, 30,
                                                  31, 31, 30, 31, 30, 31};
    int day = mdays[month - 1];
    if (month == 2 && is_leap_year(year)) day = 29;
    std::int64_t d = days_from_civil(year, month, day);
    const int wd = weekday_from_days(d);  // Monday = 0 .. Sunday = 6
    d -= (wd + 1) % 7;
    return d * kSecondsPerDay + 1 * 3600;
}

}  // namespace

std::int64_t oslo_offset_seconds(UtcSeconds t) {
    const int year = civil_from_utc(t).date.year;
    const UtcSeconds dst_begin = last_sunday_0100_utc(year, 3);
    const UtcSeconds dst_end = last_sunday_0100_utc(year, 10);
    return (t >= dst_begin && t < dst_end) ? 2 * 3600 : 1 * 3600;
}

CivilTime oslo_civil_from_utc(UtcSeconds t) {
    return civil_from_utc(t + oslo_offset_seconds(t));
}

}  // namespace epf
