#pragma once

#include "loadcast/forecaster.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace loadcast {

// ---------------------------------------------------------------------------
// Weighted moving average
// ---------------------------------------------------------------------------

struct WmaCoefficients {
    double alpha = 0.05; // weight on previous-hour load
    double beta = 0.95;  // weight on previous-week-same-hour load

    void validate() const;
};

/// alpha * lag_1h + beta * lag_7d_0h, exact arithmetic.
double wma_predict(double lag_1h, double lag_7d_0h, const WmaCoefficients& c);

struct WmaSweepResult {
    WmaCoefficients best;
    double best_validation_mape = 0.0;
    std::vector<std::pair<double, double>> trials; // (alpha, validation MAPE)
};

/// Sweeps alpha over {0, 0.05, ..., 1.0} with beta = 1 - alpha and returns
/// the pair minimizing validation MAPE; ties break toward larger beta.
WmaSweepResult wma_cross_validate(const FeatureMatrix& validation);

class WmaForecaster : public Forecaster {
public:
    /// Sweeps coefficients on the validation split during train().
    WmaForecaster() = default;
    /// Uses fixed coefficients; train() is then trivial.
    explicit WmaForecaster(WmaCoefficients c) : coefficients_(c), fixed_(true) {}

    std::string name() const override { return "WMA"; }
    const WmaCoefficients& coefficients() const { return coefficients_; }
    double sweep_seconds() const { return sweep_seconds_; }

    nlohmann::json to_json() const override;
    static WmaForecaster from_json(const nlohmann::json& j);

protected:
    void do_train(const DatasetSplit& split) override;
    std::vector<double> do_predict(const FeatureMatrix& rows) const override;

private:
    WmaCoefficients coefficients_;
    bool fixed_ = false;
    double sweep_seconds_ = 0.0;
};

// ---------------------------------------------------------------------------
// Multiple linear / quadratic regression
// ---------------------------------------------------------------------------

enum class RegressionDesign { linear, quadratic };

struct LeastSquaresSolution {
    std::vector<double> weights;
    double intercept = 0.0;
    bool ridge_fallback_used = false;
};

/// Ordinary least squares of y on (x, 1) via the normal equations. On rank
/// deficiency, falls back to ridge with lambda = 1e-8 when allowed, otherwise
/// throws.
LeastSquaresSolution solve_least_squares(std::span<const double> x, std::size_t rows,
                                         std::size_t cols, std::span<const double> y,
                                         bool allow_ridge_fallback);

struct LinearModel {
    std::vector<double> weights; // one per design column
    double intercept = 0.0;
    RegressionDesign design = RegressionDesign::linear;
    bool ridge_fallback_used = false;
};

/// MLR: least squares on the 18 raw columns. MQR: on the 18 raw columns plus
/// their squares (no cross terms).
LinearModel fit_linear_model(const FeatureMatrix& train, RegressionDesign design,
                             bool allow_ridge_fallback = true);

double linear_model_predict(const LinearModel& model, std::span<const double> features);

class LinearRegressionForecaster : public Forecaster {
public:
    explicit LinearRegressionForecaster(RegressionDesign design) : design_(design) {}

    std::string name() const override {
        return design_ == RegressionDesign::linear ? "MLR" : "MQR";
    }
    const LinearModel& model() const { return model_; }

    nlohmann::json to_json() const override;
    static LinearRegressionForecaster from_json(const nlohmann::json& j);

protected:
    void do_train(const DatasetSplit& split) override;
    std::vector<double> do_predict(const FeatureMatrix& rows) const override;

private:
    RegressionDesign design_;
    LinearModel model_;
};

// ---------------------------------------------------------------------------
// Regression tree (CART, variance-reduction splits)
// ---------------------------------------------------------------------------

class RegressionTree {
public:
    struct Node {
        int feature = -1; // -1: leaf
        double threshold = 0.0;
        double value = 0.0; // leaf prediction: exact mean of its training targets
        std::size_t count = 0;
        std::uint32_t left = 0;
        std::uint32_t right = 0;

        bool is_leaf() const { return feature < 0; }
    };

    /// Greedy CART: each node takes the (feature, threshold) pair minimizing
    /// child SSE, splitting only when both children hold >= min_leaf rows and
    /// the SSE strictly decreases. Deterministic tie-break: lowest feature
    /// index, then lowest threshold.
    static RegressionTree fit(const FeatureMatrix& train, std::size_t min_leaf = 8);

    double predict(std::span<const double> row) const;

    const std::vector<Node>& nodes() const { return nodes_; }
    std::size_t leaf_count() const;
    std::size_t min_leaf() const { return min_leaf_; }

    nlohmann::json to_json() const;
    static RegressionTree from_json(const nlohmann::json& j);

private:
    std::uint32_t build(const FeatureMatrix& train, std::vector<std::size_t>& rows);

    std::vector<Node> nodes_;
    std::size_t min_leaf_ = 8;
};

class RegressionTreeForecaster : public Forecaster {
public:
    explicit RegressionTreeForecaster(std::size_t min_leaf = 8) : min_leaf_(min_leaf) {}

    std::string name() const override { return "RT"; }
    const RegressionTree& tree() const { return tree_; }

    nlohmann::json to_json() const override;
    static RegressionTreeForecaster from_json(const nlohmann::json& j);

protected:
    void do_train(const DatasetSplit& split) override;
    std::vector<double> do_predict(const FeatureMatrix& rows) const override;

private:
    std::size_t min_leaf_;
    RegressionTree tree_;
};

// ---------------------------------------------------------------------------
// Linear support-vector regression (primal subgradient descent)
// ---------------------------------------------------------------------------

struct SvrConfig {
    double epsilon = 0.1;       // insensitivity tube half-width
    double C = 1.0;             // hinge-loss weight
    double learning_rate = 0.1; // initial step size, decayed as 1/sqrt(epoch)
    std::size_t epochs = 200;

    void validate() const;
};

struct SvrModel {
    std::vector<double> weights;
    double bias = 0.0;
    SvrConfig config;
    std::vector<double> objective_trace; // objective after each epoch
};

/// Minimizes C * sum max(0, |y - (w.x + b)| - eps) + 0.5 ||w||^2 by
/// deterministic full-batch subgradient descent with a 1/sqrt(epoch) step
/// schedule; keeps the best iterate seen. Inputs are expected standardized.
SvrModel fit_svr(std::span<const double> x, std::size_t rows, std::size_t cols,
                 std::span<const double> y, const SvrConfig& cfg);

/// The objective fit_svr minimizes, for oracle comparisons.
double svr_objective(std::span<const double> x, std::size_t rows, std::size_t cols,
                     std::span<const double> y, std::span<const double> w, double bias,
                     const SvrConfig& cfg);

class SvrForecaster : public Forecaster {
public:
    explicit SvrForecaster(SvrConfig cfg = {}) : config_(cfg) {}

    std::string name() const override { return "SVR"; }
    const SvrModel& model() const { return model_; }

    nlohmann::json to_json() const override;
    static SvrForecaster from_json(const nlohmann::json& j);

protected:
    void do_train(const DatasetSplit& split) override;
    std::vector<double> do_predict(const FeatureMatrix& rows) const override;

private:
    SvrConfig config_;
    SvrModel model_;
    Scaler scaler_; // fitted on the training partition only
    bool has_scaler_ = false;
};

} // namespace loadcast
