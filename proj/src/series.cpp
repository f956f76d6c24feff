#include "loadcast/series.hpp"

#include "loadcast/error.hpp"
#include "loadcast/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace loadcast {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kClampFraction = 0.05;

// Diurnal shape constants, frozen after checking the generated year against
// the weekday/weekend mean-ratio and evening-peak checks in the test suite.
constexpr double kMorningPeakHour = 7.0;
constexpr double kEveningPeakHour = 19.0;
constexpr double kMorningSigma = 2.2;
constexpr double kEveningSigma = 2.8;
constexpr double kMorningShare = 0.55;    // morning amplitude relative to evening
constexpr double kTempCoupling = 0.03;    // load gain per deg C above seasonal mean
constexpr double kTempDiurnalSwing = 2.2; // deg C within-day swing
constexpr double kTempNoiseStd = 0.8;
constexpr double kHumidityBase = 78.0;
constexpr double kHumidityTempSlope = -0.9;
constexpr double kHumidityNoiseStd = 3.0;

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& field, std::size_t line, const char* column) {
    double v = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) {
        raise("load_csv: line ", line, ": malformed ", column, " value '", field, "'");
    }
    return v;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (const char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

MeterReading interpolate_gap(const MeterReading& before, const MeterReading& after) {
    MeterReading mid;
    mid.timestamp = before.timestamp + 1;
    mid.load_kw = (before.load_kw + after.load_kw) / 2.0;
    mid.temp_c = (before.temp_c + after.temp_c) / 2.0;
    mid.humidity_pct = (before.humidity_pct + after.humidity_pct) / 2.0;
    mid.is_holiday = before.is_holiday;
    return mid;
}

} // namespace

const std::vector<std::pair<int, int>>& synthetic_holidays() {
    static const std::vector<std::pair<int, int>> days = {
        {1, 1}, {2, 16}, {3, 30}, {4, 3}, {5, 30},
        {6, 19}, {8, 1}, {8, 31}, {9, 24}, {12, 25},
    };
    return days;
}

LoadSeries load_csv(const std::filesystem::path& path, const CsvOptions& options) {
    std::ifstream in(path);
    require(in.good(), "load_csv: cannot open '", path.string(), "'");

    std::string line;
    require(static_cast<bool>(std::getline(in, line)), "load_csv: '", path.string(), "' is empty");
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    require(line == "timestamp,load_kw,temp_c,humidity_pct,is_holiday",
            "load_csv: line 1: unexpected header '", line, "'");

    LoadSeries series;
    series.origin = SeriesOrigin::csv;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const std::vector<std::string> fields = split_fields(line);
        require(fields.size() == 5, "load_csv: line ", line_no, ": expected 5 fields, found ",
                fields.size());

        MeterReading r;
        try {
            r.timestamp = Timestamp::parse(fields[0]);
        } catch (const Error& e) {
            raise("load_csv: line ", line_no, ": ", e.what());
        }
        r.load_kw = parse_double(fields[1], line_no, "load_kw");
        r.temp_c = parse_double(fields[2], line_no, "temp_c");
        r.humidity_pct = parse_double(fields[3], line_no, "humidity_pct");
        if (fields[4] == "0") {
            r.is_holiday = false;
        } else if (fields[4] == "1") {
            r.is_holiday = true;
        } else {
            raise("load_csv: line ", line_no, ": is_holiday must be 0 or 1, found '", fields[4],
                  "'");
        }

        require(r.load_kw > 0.0, "load_csv: line ", line_no, ": non-positive load ", r.load_kw);
        require(r.humidity_pct >= 0.0 && r.humidity_pct <= 100.0, "load_csv: line ", line_no,
                ": humidity ", r.humidity_pct, " outside [0, 100]");

        if (!series.readings.empty()) {
            const std::int64_t dt = r.timestamp - series.readings.back().timestamp;
            if (dt <= 0) {
                raise("load_csv: line ", line_no, ": duplicate or out-of-order timestamp ",
                      r.timestamp.to_string());
            }
            if (dt == 2 && options.interpolate_single_gaps) {
                series.readings.push_back(interpolate_gap(series.readings.back(), r));
            } else if (dt > 1) {
                raise("load_csv: line ", line_no, ": gap before ", r.timestamp.to_string(),
                      ", missing hour ", (series.readings.back().timestamp + 1).to_string());
            }
        }
        series.readings.push_back(r);
    }
    return series;
}

void write_csv(const LoadSeries& series, const std::filesystem::path& path) {
    std::ofstream out(path);
    require(out.good(), "write_csv: cannot open '", path.string(), "' for writing");
    out << "timestamp,load_kw,temp_c,humidity_pct,is_holiday\n";
    for (const MeterReading& r : series.readings) {
        out << r.timestamp.to_string() << ',' << format_double(r.load_kw) << ','
            << format_double(r.temp_c) << ',' << format_double(r.humidity_pct) << ','
            << (r.is_holiday ? '1' : '0') << '\n';
    }
    require(out.good(), "write_csv: write to '", path.string(), "' failed");
}

LoadSeries generate_synthetic(const SyntheticProfileConfig& cfg) {
    require(cfg.base_load > 0.0, "generate_synthetic: base_load must be positive");
    require(cfg.weekend_flatten_factor > 0.0 && cfg.weekend_flatten_factor <= 1.0,
            "generate_synthetic: weekend_flatten_factor must be in (0, 1]");
    require(cfg.n_hours >= 1, "generate_synthetic: n_hours must be >= 1");

    Rng rng(cfg.seed);
    const Timestamp start = Timestamp::from_civil(cfg.start_year, 1, 1, 0);

    LoadSeries series;
    series.origin = SeriesOrigin::synthetic;
    series.readings.reserve(cfg.n_hours);

    const double evening_amp = cfg.weekday_evening_peak;
    const double morning_amp = kMorningShare * evening_amp;

    for (std::size_t h = 0; h < cfg.n_hours; ++h) {
        MeterReading r;
        r.timestamp = start + static_cast<std::int64_t>(h);
        const int hod = r.timestamp.hour_of_day();

        for (const auto& [month, day] : synthetic_holidays()) {
            if (r.timestamp.month() == month && r.timestamp.day_of_month() == day) {
                r.is_holiday = true;
                break;
            }
        }

        const double season =
            std::sin(2.0 * kPi * (static_cast<double>(h) - 1416.0) / 8760.0);
        const double diurnal_temp =
            std::sin(2.0 * kPi * (static_cast<double>(hod) - 9.0) / 24.0);
        r.temp_c = cfg.temperature_mean + cfg.temperature_amplitude * season +
                   kTempDiurnalSwing * diurnal_temp + rng.gaussian(0.0, kTempNoiseStd);

        const double dm = static_cast<double>(hod) - kMorningPeakHour;
        const double de = static_cast<double>(hod) - kEveningPeakHour;
        const double hump = morning_amp * std::exp(-dm * dm / (2.0 * kMorningSigma * kMorningSigma)) +
                            evening_amp * std::exp(-de * de / (2.0 * kEveningSigma * kEveningSigma));
        const bool flattened = r.timestamp.is_weekend() || r.is_holiday;
        const double shape = flattened ? cfg.weekend_flatten_factor : 1.0;
        const double temp_gain = 1.0 + kTempCoupling * (r.temp_c - cfg.temperature_mean);

        double load = cfg.base_load + shape * hump * temp_gain + rng.gaussian(0.0, cfg.noise_std);
        load = std::max(load, kClampFraction * cfg.base_load);
        r.load_kw = load;

        double humidity = kHumidityBase + kHumidityTempSlope * (r.temp_c - cfg.temperature_mean) +
                          rng.gaussian(0.0, kHumidityNoiseStd);
        r.humidity_pct = std::min(100.0, std::max(0.0, humidity));

        series.readings.push_back(r);
    }
    return series;
}

ValidationReport validate_series(const LoadSeries& series) {
    ValidationReport report;
    const auto& rs = series.readings;
    for (std::size_t i = 0; i < rs.size(); ++i) {
        const MeterReading& r = rs[i];
        if (i > 0) {
            const std::int64_t dt = r.timestamp - rs[i - 1].timestamp;
            if (dt <= 0) {
                report.violations.push_back({Violation::Kind::duplicate, i, r.timestamp,
                                             detail::concat("duplicate or out-of-order timestamp ",
                                                            r.timestamp.to_string())});
            } else if (dt > 1) {
                report.violations.push_back(
                    {Violation::Kind::gap, i, r.timestamp,
                     detail::concat("gap of ", dt, " hours, missing hour ",
                                    (rs[i - 1].timestamp + 1).to_string())});
            }
        }
        if (!std::isfinite(r.load_kw) || r.load_kw <= 0.0) {
            report.violations.push_back({Violation::Kind::non_positive_load, i, r.timestamp,
                                         detail::concat("load ", r.load_kw, " at ",
                                                        r.timestamp.to_string())});
        }
        if (!std::isfinite(r.temp_c)) {
            report.violations.push_back({Violation::Kind::bad_weather, i, r.timestamp,
                                         detail::concat("temperature not finite at ",
                                                        r.timestamp.to_string())});
        }
        if (!std::isfinite(r.humidity_pct) || r.humidity_pct < 0.0 || r.humidity_pct > 100.0) {
            report.violations.push_back({Violation::Kind::bad_humidity, i, r.timestamp,
                                         detail::concat("humidity ", r.humidity_pct, " at ",
                                                        r.timestamp.to_string())});
        }
    }
    return report;
}

void apply_holiday_calendar(LoadSeries& series, const std::vector<std::string>& dates) {
    std::vector<std::int64_t> days;
    days.reserve(dates.size());
    for (const std::string& d : dates) {
        int year = 0, month = 0, day = 0;
        const int n = std::sscanf(d.c_str(), "%d-%d-%d", &year, &month, &day);
        require(n == 3, "apply_holiday_calendar: malformed date '", d, "' (expected YYYY-MM-DD)");
        days.push_back(civil::days_from_date(year, month, day));
    }
    for (MeterReading& r : series.readings) {
        const std::int64_t day = r.timestamp.hours() >= 0
                                     ? r.timestamp.hours() / 24
                                     : (r.timestamp.hours() - 23) / 24;
        r.is_holiday = std::find(days.begin(), days.end(), day) != days.end();
    }
}

} // namespace loadcast
