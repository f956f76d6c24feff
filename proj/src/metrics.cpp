#include "loadcast/metrics.hpp"

#include "loadcast/error.hpp"

#include <cmath>
#include <sstream>

namespace loadcast::metrics {

namespace {

void check_inputs(std::span<const double> actual, std::span<const double> predicted,
                  const char* op) {
    require(actual.size() == predicted.size(), op, ": length mismatch (", actual.size(), " vs ",
            predicted.size(), ")");
    require(!actual.empty(), op, ": empty input");
    for (std::size_t i = 0; i < actual.size(); ++i) {
        if (!(actual[i] > 0.0)) {
            raise(op, ": non-positive actual value ", actual[i], " at index ", i);
        }
    }
}

} // namespace

double mape(std::span<const double> actual, std::span<const double> predicted) {
    check_inputs(actual, predicted, "mape");
    double sum = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        sum += std::abs(actual[i] - predicted[i]) / actual[i];
    }
    return 100.0 * sum / static_cast<double>(actual.size());
}

double mpe(std::span<const double> actual, std::span<const double> predicted) {
    check_inputs(actual, predicted, "mpe");
    double sum = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        sum += (actual[i] - predicted[i]) / actual[i];
    }
    return 100.0 * sum / static_cast<double>(actual.size());
}

std::array<std::optional<double>, 7> daily_mape(std::span<const double> actual,
                                                std::span<const double> predicted,
                                                std::span<const Timestamp> timestamps) {
    check_inputs(actual, predicted, "daily_mape");
    require(timestamps.size() == actual.size(), "daily_mape: timestamp length mismatch");
    std::array<double, 7> sums{};
    std::array<std::size_t, 7> counts{};
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const int d = timestamps[i].day_of_week();
        sums[static_cast<std::size_t>(d)] += std::abs(actual[i] - predicted[i]) / actual[i];
        counts[static_cast<std::size_t>(d)] += 1;
    }
    std::array<std::optional<double>, 7> out{};
    for (std::size_t d = 0; d < 7; ++d) {
        if (counts[d] > 0) {
            out[d] = 100.0 * sums[d] / static_cast<double>(counts[d]);
        }
    }
    return out;
}

std::string MetricsReport::csv_header() {
    return "model,mape,mpe,sun,mon,tue,wed,thu,fri,sat,train_s,n_test";
}

std::string MetricsReport::to_csv_row() const {
    std::ostringstream os;
    os.precision(17);
    os << model << ',' << mape << ',' << mpe;
    for (const auto& d : daily_mape) {
        os << ',';
        if (d.has_value()) {
            os << *d;
        }
    }
    os << ',' << train_seconds << ',' << n_test;
    return os.str();
}

nlohmann::json MetricsReport::to_json() const {
    nlohmann::json daily = nlohmann::json::array();
    for (const auto& d : daily_mape) {
        if (d.has_value()) {
            daily.push_back(*d);
        } else {
            daily.push_back(nullptr);
        }
    }
    return nlohmann::json{{"model", model},
                          {"mape", mape},
                          {"mpe", mpe},
                          {"daily_mape", daily},
                          {"train_seconds", train_seconds},
                          {"n_test", n_test}};
}

MetricsReport MetricsReport::from_json(const nlohmann::json& j) {
    MetricsReport r;
    r.model = j.at("model").get<std::string>();
    r.mape = j.at("mape").get<double>();
    r.mpe = j.at("mpe").get<double>();
    const auto& daily = j.at("daily_mape");
    require(daily.size() == 7, "MetricsReport: daily_mape must have 7 entries");
    for (std::size_t d = 0; d < 7; ++d) {
        if (!daily[d].is_null()) {
            r.daily_mape[d] = daily[d].get<double>();
        }
    }
    r.train_seconds = j.at("train_seconds").get<double>();
    r.n_test = j.at("n_test").get<std::size_t>();
    return r;
}

MetricsReport evaluate(const std::string& model, std::span<const double> actual,
                       std::span<const double> predicted, std::span<const Timestamp> timestamps,
                       double train_seconds) {
    MetricsReport r;
    r.model = model;
    r.mape = mape(actual, predicted);
    r.mpe = mpe(actual, predicted);
    r.daily_mape = daily_mape(actual, predicted, timestamps);
    r.train_seconds = train_seconds;
    r.n_test = actual.size();
    return r;
}

} // namespace loadcast::metrics
