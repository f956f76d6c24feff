#include "loadcast/features.hpp"

#include "loadcast/error.hpp"
#include "loadcast/kernels.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

namespace loadcast {

const std::array<std::string, kFeatureCount>& feature_names() {
    static const std::array<std::string, kFeatureCount> names = {
        "lag_1h",      "lag_2h",      "lag_3h",     "lag_1d_0h",  "lag_1d_1h",  "lag_1d_2h",
        "lag_2d_0h",   "lag_2d_1h",   "lag_2d_2h",  "lag_7d_0h",  "avg_24h",    "avg_7d",
        "day_of_week", "hour_of_day", "is_weekend", "is_holiday", "temperature", "humidity"};
    return names;
}

FeatureMatrix::FeatureMatrix(std::vector<double> values, std::vector<double> targets,
                             std::vector<Timestamp> timestamps)
    : values_(std::move(values)), targets_(std::move(targets)),
      timestamps_(std::move(timestamps)) {
    require(values_.size() == targets_.size() * kFeatureCount,
            "FeatureMatrix: value buffer does not match row count");
    require(targets_.size() == timestamps_.size(), "FeatureMatrix: timestamp count mismatch");
}

FeatureMatrix FeatureMatrix::slice(std::size_t begin, std::size_t end) const {
    require(begin <= end && end <= rows(), "FeatureMatrix::slice: range out of bounds");
    return FeatureMatrix(
        std::vector<double>(values_.begin() + static_cast<std::ptrdiff_t>(begin * kFeatureCount),
                            values_.begin() + static_cast<std::ptrdiff_t>(end * kFeatureCount)),
        std::vector<double>(targets_.begin() + static_cast<std::ptrdiff_t>(begin),
                            targets_.begin() + static_cast<std::ptrdiff_t>(end)),
        std::vector<Timestamp>(timestamps_.begin() + static_cast<std::ptrdiff_t>(begin),
                               timestamps_.begin() + static_cast<std::ptrdiff_t>(end)));
}

FeatureMatrix FeatureMatrix::tail(std::size_t n) const {
    const std::size_t begin = rows() > n ? rows() - n : 0;
    return slice(begin, rows());
}

FeatureMatrix extract_features(const LoadSeries& series) {
    const std::size_t n = series.size();
    require(n >= kBurnInHours + 1, "extract_features: series too short (", n,
            " readings, need at least ", kBurnInHours + 1, ")");

    const std::size_t n_rows = n - kBurnInHours;
    std::vector<double> values(n_rows * kFeatureCount);
    std::vector<double> targets(n_rows);
    std::vector<Timestamp> timestamps(n_rows);

    const auto& rs = series.readings;
    const auto load = [&](std::size_t i) { return rs[i].load_kw; };

    for (std::size_t t = kBurnInHours; t < n; ++t) {
        const std::size_t r = t - kBurnInHours;
        double* row = values.data() + r * kFeatureCount;

        row[kLag1h] = load(t - 1);
        row[kLag2h] = load(t - 2);
        row[kLag3h] = load(t - 3);
        row[kLag1d0h] = load(t - 24);
        row[kLag1d1h] = load(t - 25);
        row[kLag1d2h] = load(t - 26);
        row[kLag2d0h] = load(t - 48);
        row[kLag2d1h] = load(t - 49);
        row[kLag2d2h] = load(t - 50);
        row[kLag7d0h] = load(t - 168);

        double sum24 = 0.0;
        for (std::size_t i = t - 24; i < t; ++i) {
            sum24 += load(i);
        }
        row[kAvg24h] = sum24 / 24.0;

        double sum168 = 0.0;
        for (std::size_t i = t - 168; i < t; ++i) {
            sum168 += load(i);
        }
        row[kAvg7d] = sum168 / 168.0;

        const Timestamp ts = rs[t].timestamp;
        row[kDayOfWeek] = static_cast<double>(ts.day_of_week());
        row[kHourOfDay] = static_cast<double>(ts.hour_of_day());
        row[kIsWeekend] = ts.is_weekend() ? 1.0 : 0.0;
        row[kIsHoliday] = rs[t].is_holiday ? 1.0 : 0.0;
        row[kTemperature] = rs[t].temp_c;
        row[kHumidity] = rs[t].humidity_pct;

        targets[r] = load(t);
        timestamps[r] = ts;
    }
    return FeatureMatrix(std::move(values), std::move(targets), std::move(timestamps));
}

namespace {

bool is_categorical_column(std::size_t col) {
    return col == kDayOfWeek || col == kHourOfDay || col == kIsWeekend || col == kIsHoliday;
}

} // namespace

Scaler Scaler::fit(const FeatureMatrix& train, bool scale_target) {
    require(train.rows() >= 2, "Scaler::fit: need at least 2 rows, got ", train.rows());

    Scaler sc;
    std::array<double, kFeatureCount> vars{};
    kernels::column_stats(train.values().data(), train.rows(), kFeatureCount, sc.means_.data(),
                          vars.data());

    for (std::size_t c = 0; c < kFeatureCount; ++c) {
        double lo = train.at(0, c), hi = lo;
        for (std::size_t r = 1; r < train.rows(); ++r) {
            lo = std::min(lo, train.at(r, c));
            hi = std::max(hi, train.at(r, c));
        }
        if (lo == hi) {
            if (is_categorical_column(c)) {
                sc.passthrough_[c] = true;
                sc.stds_[c] = 1.0;
            } else {
                raise("Scaler::fit: constant column '", feature_names()[c],
                      "' has zero variance");
            }
        } else {
            sc.stds_[c] = std::sqrt(vars[c]);
        }
    }

    if (scale_target) {
        double mean = 0.0;
        for (const double y : train.targets()) {
            mean += y;
        }
        mean /= static_cast<double>(train.rows());
        double var = 0.0;
        for (const double y : train.targets()) {
            var += (y - mean) * (y - mean);
        }
        var /= static_cast<double>(train.rows());
        require(var > 0.0, "Scaler::fit: constant target column has zero variance");
        sc.has_target_stats_ = true;
        sc.target_mean_ = mean;
        sc.target_std_ = std::sqrt(var);
    }
    return sc;
}

FeatureMatrix Scaler::apply(const FeatureMatrix& m) const {
    require(m.cols() == kFeatureCount, "Scaler::apply: feature arity mismatch");
    FeatureMatrix out = m;
    for (std::size_t r = 0; r < out.rows(); ++r) {
        double* row = out.values_.data() + r * kFeatureCount;
        for (std::size_t c = 0; c < kFeatureCount; ++c) {
            if (!passthrough_[c]) {
                row[c] = (row[c] - means_[c]) / stds_[c];
            }
        }
    }
    if (has_target_stats_) {
        for (double& y : out.targets_) {
            y = (y - target_mean_) / target_std_;
        }
    }
    return out;
}

double Scaler::invert_target(double scaled) const {
    require(has_target_stats_, "Scaler::invert_target: scaler lacks target statistics");
    return scaled * target_std_ + target_mean_;
}

double Scaler::scale_target_value(double raw) const {
    require(has_target_stats_, "Scaler::scale_target_value: scaler lacks target statistics");
    return (raw - target_mean_) / target_std_;
}

double Scaler::target_mean() const {
    require(has_target_stats_, "Scaler::target_mean: scaler lacks target statistics");
    return target_mean_;
}

double Scaler::target_std() const {
    require(has_target_stats_, "Scaler::target_std: scaler lacks target statistics");
    return target_std_;
}

nlohmann::json Scaler::to_json() const {
    nlohmann::json j;
    j["means"] = means_;
    j["stds"] = stds_;
    j["passthrough"] = passthrough_;
    j["has_target_stats"] = has_target_stats_;
    if (has_target_stats_) {
        j["target_mean"] = target_mean_;
        j["target_std"] = target_std_;
    }
    return j;
}

Scaler Scaler::from_json(const nlohmann::json& j) {
    Scaler sc;
    const auto means = j.at("means").get<std::vector<double>>();
    const auto stds = j.at("stds").get<std::vector<double>>();
    const auto pass = j.at("passthrough").get<std::vector<bool>>();
    require(means.size() == kFeatureCount && stds.size() == kFeatureCount &&
                pass.size() == kFeatureCount,
            "Scaler::from_json: arity mismatch");
    std::copy(means.begin(), means.end(), sc.means_.begin());
    std::copy(stds.begin(), stds.end(), sc.stds_.begin());
    std::copy(pass.begin(), pass.end(), sc.passthrough_.begin());
    sc.has_target_stats_ = j.at("has_target_stats").get<bool>();
    if (sc.has_target_stats_) {
        sc.target_mean_ = j.at("target_mean").get<double>();
        sc.target_std_ = j.at("target_std").get<double>();
    }
    return sc;
}

DatasetSplit split_chronological(const FeatureMatrix& m) {
    const std::size_t n = m.rows();
    require(n >= 20, "split_chronological: need at least 20 rows, got ", n);

    const std::size_t n_train = static_cast<std::size_t>(
        std::floor(DatasetSplit::kTrainFraction * static_cast<double>(n)));
    const std::size_t n_val = static_cast<std::size_t>(
        std::floor(DatasetSplit::kValidationFraction * static_cast<double>(n)));

    DatasetSplit split;
    split.train = m.slice(0, n_train);
    split.validation = m.slice(n_train, n_train + n_val);
    split.test = m.slice(n_train + n_val, n);
    return split;
}

void write_feature_csv(const FeatureMatrix& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    require(out.good(), "write_feature_csv: cannot open '", path.string(), "'");
    out << "timestamp";
    for (const std::string& name : feature_names()) {
        out << ',' << name;
    }
    out << ",target\n";
    char buf[32];
    const auto fmt = [&](double v) {
        const auto res = std::to_chars(buf, buf + sizeof(buf), v);
        out.write(buf, res.ptr - buf);
    };
    for (std::size_t r = 0; r < m.rows(); ++r) {
        out << m.timestamps()[r].to_string();
        for (std::size_t c = 0; c < m.cols(); ++c) {
            out << ',';
            fmt(m.at(r, c));
        }
        out << ',';
        fmt(m.targets()[r]);
        out << '\n';
    }
    require(out.good(), "write_feature_csv: write to '", path.string(), "' failed");
}

} // namespace loadcast
