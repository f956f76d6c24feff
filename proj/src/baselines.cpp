#include "loadcast/baselines.hpp"

#include "loadcast/error.hpp"
#include "loadcast/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace loadcast {

// ---------------------------------------------------------------------------
// WMA
// ---------------------------------------------------------------------------

void WmaCoefficients::validate() const {
    require(alpha >= 0.0 && beta >= 0.0, "WmaCoefficients: weights must be nonnegative");
    require(std::abs(alpha + beta - 1.0) < 1e-9, "WmaCoefficients: alpha + beta must equal 1, got ",
            alpha + beta);
}

double wma_predict(double lag_1h, double lag_7d_0h, const WmaCoefficients& c) {
    c.validate();
    return c.alpha * lag_1h + c.beta * lag_7d_0h;
}

WmaSweepResult wma_cross_validate(const FeatureMatrix& validation) {
    require(validation.rows() > 0, "wma_cross_validate: empty validation set");

    WmaSweepResult result;
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> predicted(validation.rows());
    for (int step = 0; step <= 20; ++step) {
        const double alpha = static_cast<double>(step) * 0.05;
        const WmaCoefficients c{alpha, 1.0 - alpha};
        for (std::size_t r = 0; r < validation.rows(); ++r) {
            predicted[r] = c.alpha * validation.at(r, kLag1h) + c.beta * validation.at(r, kLag7d0h);
        }
        const double score = metrics::mape(validation.targets(), predicted);
        result.trials.emplace_back(alpha, score);
        if (score < best) { // strict: ties keep the earlier (larger beta) pair
            best = score;
            result.best = c;
            result.best_validation_mape = score;
        }
    }
    return result;
}

void WmaForecaster::do_train(const DatasetSplit& split) {
    if (!fixed_) {
        WmaSweepResult sweep;
        sweep_seconds_ =
            metrics::time_block([&] { sweep = wma_cross_validate(split.validation); });
        coefficients_ = sweep.best;
    }
    coefficients_.validate();
}

std::vector<double> WmaForecaster::do_predict(const FeatureMatrix& rows) const {
    std::vector<double> out(rows.rows());
    for (std::size_t r = 0; r < rows.rows(); ++r) {
        out[r] = coefficients_.alpha * rows.at(r, kLag1h) +
                 coefficients_.beta * rows.at(r, kLag7d0h);
    }
    return out;
}

nlohmann::json WmaForecaster::to_json() const {
    return {{"format_version", kModelFormatVersion},
            {"kind", "wma"},
            {"alpha", coefficients_.alpha},
            {"beta", coefficients_.beta}};
}

WmaForecaster WmaForecaster::from_json(const nlohmann::json& j) {
    require(j.at("kind") == "wma", "WmaForecaster::from_json: wrong kind");
    WmaForecaster f(WmaCoefficients{j.at("alpha").get<double>(), j.at("beta").get<double>()});
    f.mark_trained(0.0);
    return f;
}

// ---------------------------------------------------------------------------
// Least squares / MLR / MQR
// ---------------------------------------------------------------------------

namespace {

// Gaussian elimination with partial pivoting on the (d x d) system a*w = b.
// Returns false when a pivot falls below the singularity threshold.
bool gaussian_solve(std::vector<double> a, std::vector<double> b, std::size_t d,
                    std::vector<double>& out) {
    double max_diag = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        max_diag = std::max(max_diag, std::abs(a[i * d + i]));
    }
    const double tol = std::max(max_diag, 1.0) * 1e-13;

    for (std::size_t col = 0; col < d; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < d; ++r) {
            if (std::abs(a[r * d + col]) > std::abs(a[pivot * d + col])) {
                pivot = r;
            }
        }
        if (std::abs(a[pivot * d + col]) < tol) {
            return false;
        }
        if (pivot != col) {
            for (std::size_t c = 0; c < d; ++c) {
                std::swap(a[pivot * d + c], a[col * d + c]);
            }
            std::swap(b[pivot], b[col]);
        }
        const double inv = 1.0 / a[col * d + col];
        for (std::size_t r = col + 1; r < d; ++r) {
            const double f = a[r * d + col] * inv;
            if (f == 0.0) {
                continue;
            }
            for (std::size_t c = col; c < d; ++c) {
                a[r * d + c] -= f * a[col * d + c];
            }
            b[r] -= f * b[col];
        }
    }
    out.assign(d, 0.0);
    for (std::size_t i = d; i-- > 0;) {
        double s = b[i];
        for (std::size_t c = i + 1; c < d; ++c) {
            s -= a[i * d + c] * out[c];
        }
        out[i] = s / a[i * d + i];
    }
    return true;
}

} // namespace

LeastSquaresSolution solve_least_squares(std::span<const double> x, std::size_t rows,
                                         std::size_t cols, std::span<const double> y,
                                         bool allow_ridge_fallback) {
    require(x.size() == rows * cols, "solve_least_squares: x size mismatch");
    require(y.size() == rows, "solve_least_squares: y size mismatch");
    const std::size_t d = cols + 1; // trailing intercept column
    require(rows > d - 1, "solve_least_squares: need more rows (", rows, ") than columns (", cols,
            ")");

    std::vector<double> design(rows * d);
    for (std::size_t r = 0; r < rows; ++r) {
        std::copy(x.begin() + static_cast<std::ptrdiff_t>(r * cols),
                  x.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols),
                  design.begin() + static_cast<std::ptrdiff_t>(r * d));
        design[r * d + cols] = 1.0;
    }

    std::vector<double> gram(d * d);
    kernels::matmul_tn(design.data(), design.data(), gram.data(), d, rows, d);
    std::vector<double> rhs(d);
    kernels::matmul_tn(design.data(), y.data(), rhs.data(), d, rows, 1);

    LeastSquaresSolution sol;
    std::vector<double> beta;
    if (!gaussian_solve(gram, rhs, d, beta)) {
        require(allow_ridge_fallback,
                "solve_least_squares: design matrix is rank deficient and ridge fallback is "
                "disabled");
        for (std::size_t i = 0; i < d; ++i) {
            gram[i * d + i] += 1e-8;
        }
        require(gaussian_solve(gram, rhs, d, beta),
                "solve_least_squares: system singular even with ridge fallback");
        sol.ridge_fallback_used = true;
    }
    sol.weights.assign(beta.begin(), beta.begin() + static_cast<std::ptrdiff_t>(cols));
    sol.intercept = beta[cols];
    return sol;
}

namespace {

std::vector<double> quadratic_design(const FeatureMatrix& m) {
    const std::size_t n = m.rows();
    std::vector<double> design(n * kFeatureCount * 2);
    for (std::size_t r = 0; r < n; ++r) {
        double* row = design.data() + r * kFeatureCount * 2;
        for (std::size_t c = 0; c < kFeatureCount; ++c) {
            row[c] = m.at(r, c);
            row[kFeatureCount + c] = m.at(r, c) * m.at(r, c);
        }
    }
    return design;
}

} // namespace

LinearModel fit_linear_model(const FeatureMatrix& train, RegressionDesign design,
                             bool allow_ridge_fallback) {
    LinearModel model;
    model.design = design;
    LeastSquaresSolution sol;
    if (design == RegressionDesign::linear) {
        sol = solve_least_squares(train.values(), train.rows(), kFeatureCount, train.targets(),
                                  allow_ridge_fallback);
    } else {
        const std::vector<double> expanded = quadratic_design(train);
        sol = solve_least_squares(expanded, train.rows(), kFeatureCount * 2, train.targets(),
                                  allow_ridge_fallback);
    }
    model.weights = std::move(sol.weights);
    model.intercept = sol.intercept;
    model.ridge_fallback_used = sol.ridge_fallback_used;
    return model;
}

double linear_model_predict(const LinearModel& model, std::span<const double> features) {
    require(features.size() == kFeatureCount, "linear_model_predict: feature arity mismatch");
    double s = model.intercept;
    if (model.design == RegressionDesign::linear) {
        for (std::size_t c = 0; c < kFeatureCount; ++c) {
            s += model.weights[c] * features[c];
        }
    } else {
        for (std::size_t c = 0; c < kFeatureCount; ++c) {
            s += model.weights[c] * features[c];
            s += model.weights[kFeatureCount + c] * features[c] * features[c];
        }
    }
    return s;
}

void LinearRegressionForecaster::do_train(const DatasetSplit& split) {
    model_ = fit_linear_model(split.train, design_);
}

std::vector<double> LinearRegressionForecaster::do_predict(const FeatureMatrix& rows) const {
    std::vector<double> out(rows.rows());
    for (std::size_t r = 0; r < rows.rows(); ++r) {
        out[r] = linear_model_predict(model_, rows.row(r));
    }
    return out;
}

nlohmann::json LinearRegressionForecaster::to_json() const {
    return {{"format_version", kModelFormatVersion},
            {"kind", design_ == RegressionDesign::linear ? "mlr" : "mqr"},
            {"weights", model_.weights},
            {"intercept", model_.intercept},
            {"ridge_fallback_used", model_.ridge_fallback_used}};
}

LinearRegressionForecaster LinearRegressionForecaster::from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    require(kind == "mlr" || kind == "mqr", "LinearRegressionForecaster::from_json: wrong kind");
    LinearRegressionForecaster f(kind == "mlr" ? RegressionDesign::linear
                                               : RegressionDesign::quadratic);
    f.model_.design = f.design_;
    f.model_.weights = j.at("weights").get<std::vector<double>>();
    f.model_.intercept = j.at("intercept").get<double>();
    f.model_.ridge_fallback_used = j.at("ridge_fallback_used").get<bool>();
    f.mark_trained(0.0);
    return f;
}

// ---------------------------------------------------------------------------
// Regression tree
// ---------------------------------------------------------------------------

namespace {

struct NodeStats {
    double mean = 0.0;
    double sse = 0.0;
};

NodeStats node_stats(const FeatureMatrix& m, std::span<const std::size_t> rows) {
    double sum = 0.0;
    for (const std::size_t r : rows) {
        sum += m.targets()[r];
    }
    NodeStats s;
    s.mean = sum / static_cast<double>(rows.size());
    for (const std::size_t r : rows) {
        const double d = m.targets()[r] - s.mean;
        s.sse += d * d;
    }
    return s;
}

} // namespace

std::uint32_t RegressionTree::build(const FeatureMatrix& train, std::vector<std::size_t>& rows) {
    const NodeStats stats = node_stats(train, rows);

    Node node;
    node.value = stats.mean;
    node.count = rows.size();

    // A node whose SSE is at rounding-noise level is pure; splitting it would
    // only chase floating-point dust.
    const double purity_floor =
        1e-12 * static_cast<double>(rows.size()) * (1.0 + stats.mean * stats.mean);
    if (rows.size() >= 2 * min_leaf_ && stats.sse > purity_floor) {
        const kernels::SplitCandidate cand = kernels::best_split(
            train.values().data(), kFeatureCount, train.targets().data(), rows, min_leaf_);
        if (cand.valid && cand.children_sse < stats.sse) {
            std::vector<std::size_t> left_rows, right_rows;
            left_rows.reserve(rows.size());
            for (const std::size_t r : rows) {
                if (train.at(r, cand.feature) <= cand.threshold) {
                    left_rows.push_back(r);
                } else {
                    right_rows.push_back(r);
                }
            }
            rows.clear();
            rows.shrink_to_fit();

            node.feature = static_cast<int>(cand.feature);
            node.threshold = cand.threshold;
            const std::uint32_t index = static_cast<std::uint32_t>(nodes_.size());
            nodes_.push_back(node);
            nodes_[index].left = build(train, left_rows);
            nodes_[index].right = build(train, right_rows);
            return index;
        }
    }

    const std::uint32_t index = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back(node);
    return index;
}

RegressionTree RegressionTree::fit(const FeatureMatrix& train, std::size_t min_leaf) {
    require(train.rows() > 0, "RegressionTree::fit: empty training set");
    require(min_leaf >= 1, "RegressionTree::fit: min_leaf must be >= 1");
    RegressionTree tree;
    tree.min_leaf_ = min_leaf;
    std::vector<std::size_t> rows(train.rows());
    std::iota(rows.begin(), rows.end(), 0);
    tree.build(train, rows);
    return tree;
}

double RegressionTree::predict(std::span<const double> row) const {
    require(!nodes_.empty(), "RegressionTree::predict: tree not fitted");
    std::uint32_t at = 0;
    while (!nodes_[at].is_leaf()) {
        const Node& n = nodes_[at];
        at = row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes_[at].value;
}

std::size_t RegressionTree::leaf_count() const {
    std::size_t count = 0;
    for (const Node& n : nodes_) {
        count += n.is_leaf() ? 1 : 0;
    }
    return count;
}

nlohmann::json RegressionTree::to_json() const {
    nlohmann::json nodes = nlohmann::json::array();
    for (const Node& n : nodes_) {
        nodes.push_back({{"feature", n.feature},
                         {"threshold", n.threshold},
                         {"value", n.value},
                         {"count", n.count},
                         {"left", n.left},
                         {"right", n.right}});
    }
    return {{"min_leaf", min_leaf_}, {"nodes", nodes}};
}

RegressionTree RegressionTree::from_json(const nlohmann::json& j) {
    RegressionTree tree;
    tree.min_leaf_ = j.at("min_leaf").get<std::size_t>();
    for (const auto& n : j.at("nodes")) {
        Node node;
        node.feature = n.at("feature").get<int>();
        node.threshold = n.at("threshold").get<double>();
        node.value = n.at("value").get<double>();
        node.count = n.at("count").get<std::size_t>();
        node.left = n.at("left").get<std::uint32_t>();
        node.right = n.at("right").get<std::uint32_t>();
        tree.nodes_.push_back(node);
    }
    return tree;
}

void RegressionTreeForecaster::do_train(const DatasetSplit& split) {
    tree_ = RegressionTree::fit(split.train, min_leaf_);
}

std::vector<double> RegressionTreeForecaster::do_predict(const FeatureMatrix& rows) const {
    std::vector<double> out(rows.rows());
    for (std::size_t r = 0; r < rows.rows(); ++r) {
        out[r] = tree_.predict(rows.row(r));
    }
    return out;
}

nlohmann::json RegressionTreeForecaster::to_json() const {
    return {{"format_version", kModelFormatVersion}, {"kind", "rt"}, {"tree", tree_.to_json()}};
}

RegressionTreeForecaster RegressionTreeForecaster::from_json(const nlohmann::json& j) {
    require(j.at("kind") == "rt", "RegressionTreeForecaster::from_json: wrong kind");
    RegressionTreeForecaster f;
    f.tree_ = RegressionTree::from_json(j.at("tree"));
    f.min_leaf_ = f.tree_.min_leaf();
    f.mark_trained(0.0);
    return f;
}

// ---------------------------------------------------------------------------
// SVR
// ---------------------------------------------------------------------------

void SvrConfig::validate() const {
    require(epsilon >= 0.0, "SvrConfig: epsilon must be >= 0");
    require(C > 0.0, "SvrConfig: C must be > 0");
    require(learning_rate > 0.0, "SvrConfig: learning_rate must be > 0");
    require(epochs >= 1, "SvrConfig: epochs must be >= 1");
}

double svr_objective(std::span<const double> x, std::size_t rows, std::size_t cols,
                     std::span<const double> y, std::span<const double> w, double bias,
                     const SvrConfig& cfg) {
    double hinge = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        double pred = bias;
        for (std::size_t c = 0; c < cols; ++c) {
            pred += w[c] * x[r * cols + c];
        }
        hinge += std::max(0.0, std::abs(y[r] - pred) - cfg.epsilon);
    }
    double reg = 0.0;
    for (const double wi : w) {
        reg += wi * wi;
    }
    return cfg.C * hinge + 0.5 * reg;
}

SvrModel fit_svr(std::span<const double> x, std::size_t rows, std::size_t cols,
                 std::span<const double> y, const SvrConfig& cfg) {
    cfg.validate();
    require(x.size() == rows * cols, "fit_svr: x size mismatch");
    require(y.size() == rows, "fit_svr: y size mismatch");
    require(rows > 0, "fit_svr: empty training set");

    const double n = static_cast<double>(rows);
    std::vector<double> w(cols, 0.0);
    double bias = 0.0;
    std::vector<double> grad(cols);

    SvrModel model;
    model.config = cfg;
    model.objective_trace.reserve(cfg.epochs);

    std::vector<double> best_w = w;
    double best_bias = bias;
    double best_obj = svr_objective(x, rows, cols, y, w, bias, cfg);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Subgradient of the per-sample-mean objective; same minimizer, step
        // sizes independent of the training-set size.
        for (std::size_t c = 0; c < cols; ++c) {
            grad[c] = w[c] / n;
        }
        double grad_bias = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
            double pred = bias;
            const double* row = x.data() + r * cols;
            for (std::size_t c = 0; c < cols; ++c) {
                pred += w[c] * row[c];
            }
            const double resid = y[r] - pred;
            if (std::abs(resid) > cfg.epsilon) {
                const double sign = resid > 0.0 ? 1.0 : -1.0;
                const double scale = -sign * cfg.C / n;
                for (std::size_t c = 0; c < cols; ++c) {
                    grad[c] += scale * row[c];
                }
                grad_bias += scale;
            }
        }

        const double step = cfg.learning_rate / std::sqrt(1.0 + static_cast<double>(epoch));
        for (std::size_t c = 0; c < cols; ++c) {
            w[c] -= step * grad[c];
        }
        bias -= step * grad_bias;

        const double obj = svr_objective(x, rows, cols, y, w, bias, cfg);
        if (!std::isfinite(obj) || obj > 1e12) {
            raise("fit_svr: objective diverged to ", obj, " at epoch ", epoch);
        }
        model.objective_trace.push_back(obj);
        if (obj < best_obj) {
            best_obj = obj;
            best_w = w;
            best_bias = bias;
        }
    }

    model.weights = std::move(best_w);
    model.bias = best_bias;
    return model;
}

void SvrForecaster::do_train(const DatasetSplit& split) {
    scaler_ = Scaler::fit(split.train, /*scale_target=*/true);
    has_scaler_ = true;
    const FeatureMatrix scaled = scaler_.apply(split.train);
    model_ = fit_svr(scaled.values(), scaled.rows(), kFeatureCount, scaled.targets(), config_);
}

std::vector<double> SvrForecaster::do_predict(const FeatureMatrix& rows) const {
    require(has_scaler_, "SvrForecaster: missing scaler");
    const FeatureMatrix scaled = scaler_.apply(rows);
    std::vector<double> out(scaled.rows());
    for (std::size_t r = 0; r < scaled.rows(); ++r) {
        double pred = model_.bias;
        for (std::size_t c = 0; c < kFeatureCount; ++c) {
            pred += model_.weights[c] * scaled.at(r, c);
        }
        out[r] = scaler_.invert_target(pred);
    }
    return out;
}

nlohmann::json SvrForecaster::to_json() const {
    return {{"format_version", kModelFormatVersion},
            {"kind", "svr"},
            {"weights", model_.weights},
            {"bias", model_.bias},
            {"epsilon", config_.epsilon},
            {"C", config_.C},
            {"scaler", scaler_.to_json()}};
}

SvrForecaster SvrForecaster::from_json(const nlohmann::json& j) {
    require(j.at("kind") == "svr", "SvrForecaster::from_json: wrong kind");
    SvrConfig cfg;
    cfg.epsilon = j.at("epsilon").get<double>();
    cfg.C = j.at("C").get<double>();
    SvrForecaster f(cfg);
    f.model_.weights = j.at("weights").get<std::vector<double>>();
    f.model_.bias = j.at("bias").get<double>();
    f.model_.config = cfg;
    f.scaler_ = Scaler::from_json(j.at("scaler"));
    f.has_scaler_ = true;
    f.mark_trained(0.0);
    return f;
}

} // namespace loadcast
