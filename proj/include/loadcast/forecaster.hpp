#pragma once

#include "loadcast/features.hpp"
#include "loadcast/metrics.hpp"

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

namespace loadcast {

/// Uniform train/predict contract shared by all models. train() wraps the
/// concrete fit with wall-clock timing and sets the trained flag; predict()
/// before train() is an error. A trained model is immutable, so concurrent
/// predict calls are safe.
class Forecaster {
public:
    virtual ~Forecaster() = default;

    virtual std::string name() const = 0;

    void train(const DatasetSplit& split) {
        train_seconds_ = metrics::time_block([&] { do_train(split); });
        trained_ = true;
    }

    /// Predictions in kW, one per input row, aligned with the rows.
    std::vector<double> predict(const FeatureMatrix& rows) const {
        require(trained_, name(), ": predict called before train");
        return do_predict(rows);
    }

    bool is_trained() const { return trained_; }
    double train_seconds() const { return train_seconds_; }

    /// Versioned JSON document with everything needed for predict-only runs.
    virtual nlohmann::json to_json() const = 0;

protected:
    virtual void do_train(const DatasetSplit& split) = 0;
    virtual std::vector<double> do_predict(const FeatureMatrix& rows) const = 0;

    void mark_trained(double seconds) {
        trained_ = true;
        train_seconds_ = seconds;
    }

private:
    bool trained_ = false;
    double train_seconds_ = 0.0;
};

inline constexpr int kModelFormatVersion = 1;

} // namespace loadcast
