#pragma once

#include "loadcast/timestamp.hpp"

#include <array>
#include <chrono>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace loadcast::metrics {

/// Mean absolute percentage error, in percent: (100/n) * sum |y - yhat| / y.
/// Requires equal non-empty lengths and strictly positive actuals.
double mape(std::span<const double> actual, std::span<const double> predicted);

/// Mean percentage error, in percent: (100/n) * sum (y - yhat) / y.
/// Positive means net under-prediction.
double mpe(std::span<const double> actual, std::span<const double> predicted);

/// MAPE pooled separately over the points falling on each weekday,
/// index 0 = Sunday .. 6 = Saturday. A weekday with no points is reported
/// absent rather than zero.
std::array<std::optional<double>, 7> daily_mape(std::span<const double> actual,
                                                std::span<const double> predicted,
                                                std::span<const Timestamp> timestamps);

/// Wall-clock seconds around `action` only (monotonic clock).
template <typename F>
auto time_block(F&& action) {
    using Clock = std::chrono::steady_clock;
    const auto start = Clock::now();
    if constexpr (std::is_void_v<std::invoke_result_t<F>>) {
        std::forward<F>(action)();
        const double secs = std::chrono::duration<double>(Clock::now() - start).count();
        return secs;
    } else {
        auto result = std::forward<F>(action)();
        const double secs = std::chrono::duration<double>(Clock::now() - start).count();
        return std::make_pair(std::move(result), secs);
    }
}

struct MetricsReport {
    std::string model;
    double mape = 0.0;
    double mpe = 0.0;
    std::array<std::optional<double>, 7> daily_mape{}; // Sunday first
    double train_seconds = 0.0;
    std::size_t n_test = 0;

    /// One CSV row: model,mape,mpe,sun,...,sat,train_s,n_test. Absent daily
    /// buckets serialize as empty cells.
    std::string to_csv_row() const;
    static std::string csv_header();

    nlohmann::json to_json() const;
    static MetricsReport from_json(const nlohmann::json& j);
};

MetricsReport evaluate(const std::string& model, std::span<const double> actual,
                       std::span<const double> predicted, std::span<const Timestamp> timestamps,
                       double train_seconds);

} // namespace loadcast::metrics
