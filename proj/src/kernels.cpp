#include "loadcast/kernels.hpp"

#include <algorithm>
#include <cstring>
#include <limits>
#include <utility>
#include <vector>

namespace loadcast::kernels {

void matmul_nn_serial(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                      std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) {
                s += a[i * k + p] * b[p * n + j];
            }
            c[i * n + j] = s;
        }
    }
}

void matmul_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t n) {
    const std::int64_t rows = static_cast<std::int64_t>(m);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < rows; ++i) {
        double* crow = c + static_cast<std::size_t>(i) * n;
        std::memset(crow, 0, n * sizeof(double));
        const double* arow = a + static_cast<std::size_t>(i) * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) {
                crow[j] += av * brow[j];
            }
        }
    }
}

void matmul_tn_serial(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                      std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) {
                s += a[p * m + i] * b[p * n + j];
            }
            c[i * n + j] = s;
        }
    }
}

void matmul_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t n) {
    const std::int64_t rows = static_cast<std::int64_t>(m);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < rows; ++i) {
        double* crow = c + static_cast<std::size_t>(i) * n;
        std::memset(crow, 0, n * sizeof(double));
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a[p * m + static_cast<std::size_t>(i)];
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) {
                crow[j] += av * brow[j];
            }
        }
    }
}

void matmul_nt_serial(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                      std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) {
                s += a[i * k + p] * b[j * k + p];
            }
            c[i * n + j] = s;
        }
    }
}

void matmul_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t n) {
    const std::int64_t rows = static_cast<std::int64_t>(m);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < rows; ++i) {
        const double* arow = a + static_cast<std::size_t>(i) * k;
        double* crow = c + static_cast<std::size_t>(i) * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = b + j * k;
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) {
                s += arow[p] * brow[p];
            }
            crow[j] = s;
        }
    }
}

void column_stats_serial(const double* x, std::size_t rows, std::size_t cols, double* mean,
                         double* var) {
    for (std::size_t j = 0; j < cols; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < rows; ++i) {
            s += x[i * cols + j];
        }
        const double mu = s / static_cast<double>(rows);
        double sq = 0.0;
        for (std::size_t i = 0; i < rows; ++i) {
            const double d = x[i * cols + j] - mu;
            sq += d * d;
        }
        mean[j] = mu;
        var[j] = sq / static_cast<double>(rows);
    }
}

void column_stats(const double* x, std::size_t rows, std::size_t cols, double* mean, double* var) {
    const std::int64_t nc = static_cast<std::int64_t>(cols);
#pragma omp parallel for schedule(static)
    for (std::int64_t j = 0; j < nc; ++j) {
        const std::size_t col = static_cast<std::size_t>(j);
        double s = 0.0;
        for (std::size_t i = 0; i < rows; ++i) {
            s += x[i * cols + col];
        }
        const double mu = s / static_cast<double>(rows);
        double sq = 0.0;
        for (std::size_t i = 0; i < rows; ++i) {
            const double d = x[i * cols + col] - mu;
            sq += d * d;
        }
        mean[col] = mu;
        var[col] = sq / static_cast<double>(rows);
    }
}

namespace {

inline void conv1d_one_sequence(const double* seq, std::size_t len, std::size_t cin,
                                const double* kern, std::size_t cout, std::size_t klen,
                                std::size_t stride, const double* bias, double* out,
                                std::size_t olen) {
    for (std::size_t ot = 0; ot < olen; ++ot) {
        const double* window = seq + ot * stride * cin;
        for (std::size_t oc = 0; oc < cout; ++oc) {
            const double* kc = kern + oc * klen * cin;
            double s = bias[oc];
            for (std::size_t kt = 0; kt < klen; ++kt) {
                const double* in_t = window + kt * cin;
                const double* k_t = kc + kt * cin;
                for (std::size_t ch = 0; ch < cin; ++ch) {
                    s += in_t[ch] * k_t[ch];
                }
            }
            out[ot * cout + oc] = s;
        }
    }
}

} // namespace

void conv1d_batch_serial(const double* in, std::size_t batch, std::size_t len, std::size_t cin,
                         const double* kern, std::size_t cout, std::size_t klen,
                         std::size_t stride, const double* bias, double* out) {
    const std::size_t olen = (len - klen) / stride + 1;
    for (std::size_t bi = 0; bi < batch; ++bi) {
        conv1d_one_sequence(in + bi * len * cin, len, cin, kern, cout, klen, stride, bias,
                            out + bi * olen * cout, olen);
    }
}

void conv1d_batch(const double* in, std::size_t batch, std::size_t len, std::size_t cin,
                  const double* kern, std::size_t cout, std::size_t klen, std::size_t stride,
                  const double* bias, double* out) {
    const std::size_t olen = (len - klen) / stride + 1;
    const std::int64_t nb = static_cast<std::int64_t>(batch);
#pragma omp parallel for schedule(static)
    for (std::int64_t bi = 0; bi < nb; ++bi) {
        const std::size_t b = static_cast<std::size_t>(bi);
        conv1d_one_sequence(in + b * len * cin, len, cin, kern, cout, klen, stride, bias,
                            out + b * olen * cout, olen);
    }
}

namespace {

// Best split of one feature. Targets arrive centered on the node mean so the
// running sums stay small; SSE is translation invariant.
SplitCandidate scan_feature(const double* x, std::size_t n_features, std::size_t feature,
                            const double* y_centered, std::span<const std::size_t> rows,
                            std::size_t min_leaf) {
    const std::size_t n = rows.size();
    std::vector<std::pair<double, double>> vals(n);
    for (std::size_t i = 0; i < n; ++i) {
        vals[i] = {x[rows[i] * n_features + feature], y_centered[i]};
    }
    std::sort(vals.begin(), vals.end(),
              [](const auto& l, const auto& r) { return l.first < r.first; });

    double total_sum = 0.0, total_sumsq = 0.0;
    for (const auto& [v, t] : vals) {
        total_sum += t;
        total_sumsq += t * t;
    }

    SplitCandidate best;
    best.feature = feature;
    best.children_sse = std::numeric_limits<double>::infinity();
    double left_sum = 0.0, left_sumsq = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        left_sum += vals[i].second;
        left_sumsq += vals[i].second * vals[i].second;
        if (vals[i].first == vals[i + 1].first) {
            continue; // threshold must separate distinct values
        }
        const std::size_t n_left = i + 1;
        const std::size_t n_right = n - n_left;
        if (n_left < min_leaf || n_right < min_leaf) {
            continue;
        }
        const double right_sum = total_sum - left_sum;
        const double right_sumsq = total_sumsq - left_sumsq;
        const double sse = (left_sumsq - left_sum * left_sum / static_cast<double>(n_left)) +
                           (right_sumsq - right_sum * right_sum / static_cast<double>(n_right));
        if (sse < best.children_sse) {
            best.valid = true;
            best.threshold = vals[i].first + (vals[i + 1].first - vals[i].first) / 2.0;
            best.children_sse = sse;
        }
    }
    return best;
}

std::vector<double> centered_targets(const double* y, std::span<const std::size_t> rows) {
    double sum = 0.0;
    for (const std::size_t r : rows) {
        sum += y[r];
    }
    const double mean = sum / static_cast<double>(rows.size());
    std::vector<double> centered(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        centered[i] = y[rows[i]] - mean;
    }
    return centered;
}

SplitCandidate reduce_candidates(const std::vector<SplitCandidate>& per_feature) {
    SplitCandidate best;
    best.children_sse = std::numeric_limits<double>::infinity();
    for (const SplitCandidate& cand : per_feature) {
        if (cand.valid && cand.children_sse < best.children_sse) {
            best = cand;
        }
    }
    return best;
}

} // namespace

SplitCandidate best_split_serial(const double* x, std::size_t n_features, const double* y,
                                 std::span<const std::size_t> rows, std::size_t min_leaf) {
    if (rows.size() < 2 * min_leaf) {
        return {};
    }
    const std::vector<double> yc = centered_targets(y, rows);
    std::vector<SplitCandidate> per_feature(n_features);
    for (std::size_t f = 0; f < n_features; ++f) {
        per_feature[f] = scan_feature(x, n_features, f, yc.data(), rows, min_leaf);
    }
    return reduce_candidates(per_feature);
}

SplitCandidate best_split(const double* x, std::size_t n_features, const double* y,
                          std::span<const std::size_t> rows, std::size_t min_leaf) {
    if (rows.size() < 2 * min_leaf) {
        return {};
    }
    const std::vector<double> yc = centered_targets(y, rows);
    std::vector<SplitCandidate> per_feature(n_features);
    const std::int64_t nf = static_cast<std::int64_t>(n_features);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t f = 0; f < nf; ++f) {
        per_feature[static_cast<std::size_t>(f)] =
            scan_feature(x, n_features, static_cast<std::size_t>(f), yc.data(), rows, min_leaf);
    }
    return reduce_candidates(per_feature);
}

} // namespace loadcast::kernels
