#pragma once

#include <cstdint>
#include <string>

namespace loadcast {

/// Hour-resolution calendar timestamp stored as hours since 1970-01-01T00:00:00.
/// Day-of-week uses the Sunday=0 .. Saturday=6 convention throughout the project.
class Timestamp {
public:
    Timestamp() = default;
    explicit Timestamp(std::int64_t hours_since_epoch) : hours_(hours_since_epoch) {}

    static Timestamp from_civil(int year, int month, int day, int hour);

    /// Parses "YYYY-MM-DDTHH:00:00" (ISO-8601, hour resolution).
    /// Throws on malformed input or nonzero minutes/seconds.
    static Timestamp parse(const std::string& text);

    std::string to_string() const;

    std::int64_t hours() const { return hours_; }
    int hour_of_day() const;
    int day_of_week() const; // Sunday = 0
    bool is_weekend() const {
        const int d = day_of_week();
        return d == 0 || d == 6;
    }
    int month() const;
    int day_of_month() const;
    int year() const;

    Timestamp operator+(std::int64_t h) const { return Timestamp(hours_ + h); }
    std::int64_t operator-(Timestamp other) const { return hours_ - other.hours_; }
    auto operator<=>(const Timestamp&) const = default;

private:
    std::int64_t hours_ = 0;
};

namespace civil {

/// Days since 1970-01-01 for a proleptic Gregorian date.
std::int64_t days_from_date(int year, int month, int day);

/// Inverse of days_from_date.
void date_from_days(std::int64_t days, int& year, int& month, int& day);

} // namespace civil

} // namespace loadcast
