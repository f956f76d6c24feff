#include "loadcast/timestamp.hpp"

#include "loadcast/error.hpp"

#include <cstdio>

namespace loadcast {

namespace civil {

std::int64_t days_from_date(int year, int month, int day) {
    // Howard Hinnant's days_from_civil algorithm.
    year -= month <= 2;
    const int era = (year >= 0 ? year : year - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(year - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(month + (month > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(day) - 1u;
    const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
    return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void date_from_days(std::int64_t days, int& year, int& month, int& day) {
    days += 719468;
    const std::int64_t era = (days >= 0 ? days : days - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(days - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    day = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    month = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
    year = static_cast<int>(y + (month <= 2));
}

} // namespace civil

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) {
        --q;
    }
    return q;
}

std::int64_t floor_mod(std::int64_t a, std::int64_t b) {
    return a - floor_div(a, b) * b;
}

} // namespace

Timestamp Timestamp::from_civil(int year, int month, int day, int hour) {
    require(month >= 1 && month <= 12, "Timestamp: month out of range: ", month);
    require(day >= 1 && day <= 31, "Timestamp: day out of range: ", day);
    require(hour >= 0 && hour <= 23, "Timestamp: hour out of range: ", hour);
    return Timestamp(civil::days_from_date(year, month, day) * 24 + hour);
}

Timestamp Timestamp::parse(const std::string& text) {
    int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
    char tail = '\0';
    const int n = std::sscanf(text.c_str(), "%d-%d-%dT%d:%d:%d%c", &year, &month, &day, &hour,
                              &minute, &second, &tail);
    require(n == 6, "Timestamp: malformed ISO-8601 timestamp '", text, "'");
    require(minute == 0 && second == 0, "Timestamp: sub-hourly timestamp '", text,
            "' (minutes and seconds must be zero)");
    return from_civil(year, month, day, hour);
}

std::string Timestamp::to_string() const {
    int year = 0, month = 0, day = 0;
    civil::date_from_days(floor_div(hours_, 24), year, month, day);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:00:00", year, month, day, hour_of_day());
    return buf;
}

int Timestamp::hour_of_day() const {
    return static_cast<int>(floor_mod(hours_, 24));
}

int Timestamp::day_of_week() const {
    // 1970-01-01 is a Thursday; +4 aligns Sunday with 0.
    return static_cast<int>(floor_mod(floor_div(hours_, 24) + 4, 7));
}

int Timestamp::month() const {
    int year = 0, month = 0, day = 0;
    civil::date_from_days(floor_div(hours_, 24), year, month, day);
    return month;
}

int Timestamp::day_of_month() const {
    int year = 0, month = 0, day = 0;
    civil::date_from_days(floor_div(hours_, 24), year, month, day);
    return day;
}

int Timestamp::year() const {
    int year = 0, month = 0, day = 0;
    civil::date_from_days(floor_div(hours_, 24), year, month, day);
    return year;
}

} // namespace loadcast
