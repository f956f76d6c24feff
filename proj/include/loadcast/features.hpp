#pragma once

#include "loadcast/series.hpp"
#include "loadcast/timestamp.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace loadcast {

/// Column layout of the 18-feature rows. The first twelve are load-derived
/// (kW), the last six exogenous.
enum FeatureIndex : std::size_t {
    kLag1h = 0,
    kLag2h,
    kLag3h,
    kLag1d0h,
    kLag1d1h,
    kLag1d2h,
    kLag2d0h,
    kLag2d1h,
    kLag2d2h,
    kLag7d0h,
    kAvg24h,
    kAvg7d,
    kDayOfWeek,
    kHourOfDay,
    kIsWeekend,
    kIsHoliday,
    kTemperature,
    kHumidity,
    kFeatureCount
};

const std::array<std::string, kFeatureCount>& feature_names();

/// Hours of history a target row consumes before it becomes usable.
inline constexpr std::size_t kBurnInHours = 168;

/// Rows of the 18 features aligned with targets and timestamps; row-major.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    FeatureMatrix(std::vector<double> values, std::vector<double> targets,
                  std::vector<Timestamp> timestamps);

    std::size_t rows() const { return targets_.size(); }
    std::size_t cols() const { return kFeatureCount; }

    std::span<const double> row(std::size_t r) const {
        return {values_.data() + r * kFeatureCount, kFeatureCount};
    }
    double at(std::size_t r, std::size_t c) const { return values_[r * kFeatureCount + c]; }
    const std::vector<double>& values() const { return values_; }
    std::span<const double> targets() const { return targets_; }
    std::span<const Timestamp> timestamps() const { return timestamps_; }

    /// Contiguous row range [begin, end).
    FeatureMatrix slice(std::size_t begin, std::size_t end) const;

    /// Chronological tail of at most n rows.
    FeatureMatrix tail(std::size_t n) const;

private:
    std::vector<double> values_;
    std::vector<double> targets_;
    std::vector<Timestamp> timestamps_;

    friend class Scaler;
};

/// Builds the feature matrix from a validated series. Row for target hour t
/// carries loads at t-1,-2,-3,-24,-25,-26,-48,-49,-50,-168, the exact means
/// of the previous 24 and 168 loads, and the calendar/weather exogenous
/// columns. First usable target is hour index 168.
FeatureMatrix extract_features(const LoadSeries& series);

/// Per-column standardization statistics fitted on training rows only.
/// Constant binary/categorical columns are passed through unscaled; constant
/// numeric columns are an error.
class Scaler {
public:
    static Scaler fit(const FeatureMatrix& train, bool scale_target);

    FeatureMatrix apply(const FeatureMatrix& m) const;
    double invert_target(double scaled) const;
    double scale_target_value(double raw) const;
    bool has_target_stats() const { return has_target_stats_; }

    double mean(std::size_t col) const { return means_[col]; }
    double std(std::size_t col) const { return stds_[col]; }
    bool passthrough(std::size_t col) const { return passthrough_[col]; }
    double target_mean() const;
    double target_std() const;

    nlohmann::json to_json() const;
    static Scaler from_json(const nlohmann::json& j);

private:
    std::array<double, kFeatureCount> means_{};
    std::array<double, kFeatureCount> stds_{};
    std::array<bool, kFeatureCount> passthrough_{};
    bool has_target_stats_ = false;
    double target_mean_ = 0.0;
    double target_std_ = 1.0;
};

struct DatasetSplit {
    FeatureMatrix train;
    FeatureMatrix validation;
    FeatureMatrix test;

    static constexpr double kTrainFraction = 0.65;
    static constexpr double kValidationFraction = 0.15;
    static constexpr double kTestFraction = 0.20;
};

/// First 65% train, next 15% validation, final 20% test; floor rounding with
/// the remainder assigned to test. Requires at least 20 rows.
DatasetSplit split_chronological(const FeatureMatrix& m);

/// Feature-matrix dump: timestamp, the 18 canonical columns, target.
void write_feature_csv(const FeatureMatrix& m, const std::filesystem::path& path);

} // namespace loadcast
