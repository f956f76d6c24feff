#pragma once

#include "loadcast/timestamp.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace loadcast {

struct MeterReading {
    Timestamp timestamp;
    double load_kw = 0.0;      // strictly positive
    double temp_c = 0.0;
    double humidity_pct = 0.0; // [0, 100]
    bool is_holiday = false;
};

enum class SeriesOrigin { csv, synthetic };

/// Hourly load stream. Timestamps are strictly increasing and spaced exactly
/// one hour; loads are strictly positive. Construction paths (CSV loader,
/// synthetic generator) enforce both.
struct LoadSeries {
    std::vector<MeterReading> readings;
    SeriesOrigin origin = SeriesOrigin::csv;

    std::size_t size() const { return readings.size(); }
};

struct SyntheticProfileConfig {
    std::size_t n_hours = 8760;
    double base_load = 0.9;             // kW
    double weekday_evening_peak = 1.1;  // kW amplitude of the 19:00 hump
    double weekend_flatten_factor = 0.55; // (0, 1]; 1.0 = weekends shaped like weekdays
    double noise_std = 0.06;            // kW
    double temperature_mean = 26.5;     // deg C
    double temperature_amplitude = 3.5; // deg C seasonal swing
    std::uint64_t seed = 42;
    int start_year = 2015; // series starts at Jan 1, 00:00 of this year
};

struct Violation {
    enum class Kind { gap, duplicate, non_positive_load, bad_weather, bad_humidity };
    Kind kind;
    std::size_t index = 0; // reading index the violation was detected at
    Timestamp timestamp;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool clean() const { return violations.empty(); }
};

struct CsvOptions {
    /// When true, a single missing hour is filled by linear interpolation of
    /// its neighbours. Gaps of two or more hours are always an error.
    bool interpolate_single_gaps = false;
};

/// Loads and validates `timestamp,load_kw,temp_c,humidity_pct,is_holiday` CSV.
/// Errors carry 1-based line numbers.
LoadSeries load_csv(const std::filesystem::path& path, const CsvOptions& options = {});

/// Writes the exact schema load_csv reads; numeric fields use the shortest
/// representation that round-trips the double, so write -> load -> write is
/// byte-stable.
void write_csv(const LoadSeries& series, const std::filesystem::path& path);

/// Deterministic year-long household profile: weekday double-hump diurnal
/// cycle with a 19:00 maximum, flattened weekends/holidays, seasonal
/// temperature sinusoid, Gaussian noise. Loads never fall below
/// 0.05 * base_load.
LoadSeries generate_synthetic(const SyntheticProfileConfig& cfg);

/// Report-only check: gaps, duplicates, non-positive loads, NaN weather,
/// humidity outside [0, 100]. The series is not modified.
ValidationReport validate_series(const LoadSeries& series);

/// Re-marks is_holiday from a list of "YYYY-MM-DD" dates (whole days).
void apply_holiday_calendar(LoadSeries& series, const std::vector<std::string>& dates);

/// The fixed month/day pairs the synthetic generator marks as holidays.
const std::vector<std::pair<int, int>>& synthetic_holidays();

} // namespace loadcast
