#pragma once

#include <cstddef>
#include <span>

namespace loadcast::kernels {

// Dense numeric kernels used by the model-fitting code. Each kernel comes in
// two variants: the OpenMP-parallel one used in production and a plain serial
// reference kept for testing and benchmarking. Parallel variants partition
// work so that every output element is computed by exactly one thread with
// the same accumulation order as the serial reference; the two variants are
// therefore required to agree bit-for-bit, which the kernel tests assert.

/// C (m x n) = A (m x k) * B (k x n), all row-major. C is overwritten.
void matmul_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t n);
void matmul_nn_serial(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                      std::size_t n);

/// C (m x n) = A^T * B where A is (k x m) and B is (k x n), row-major.
void matmul_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t n);
void matmul_tn_serial(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                      std::size_t n);

/// C (m x n) = A * B^T where A is (m x k) and B is (n x k), row-major.
void matmul_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t n);
void matmul_nt_serial(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                      std::size_t n);

/// Per-column mean and population variance of a row-major (rows x cols) matrix.
void column_stats(const double* x, std::size_t rows, std::size_t cols, double* mean, double* var);
void column_stats_serial(const double* x, std::size_t rows, std::size_t cols, double* mean,
                         double* var);

/// Valid (no padding) 1-D cross-correlation over a batch of multi-channel
/// sequences. in: (batch x len x cin), kern: (cout x klen x cin),
/// bias: (cout), out: (batch x olen x cout) with olen = (len - klen)/stride + 1.
/// Accumulation order per output element: tap-major, then channel.
void conv1d_batch(const double* in, std::size_t batch, std::size_t len, std::size_t cin,
                  const double* kern, std::size_t cout, std::size_t klen, std::size_t stride,
                  const double* bias, double* out);
void conv1d_batch_serial(const double* in, std::size_t batch, std::size_t len, std::size_t cin,
                         const double* kern, std::size_t cout, std::size_t klen,
                         std::size_t stride, const double* bias, double* out);

/// Best axis-aligned split of a regression-tree node by summed squared error.
struct SplitCandidate {
    bool valid = false;       // false: no admissible split
    std::size_t feature = 0;  // column index in the row-major feature matrix
    double threshold = 0.0;   // go left when value <= threshold
    double children_sse = 0.0; // SSE(left) + SSE(right) at the best split
};

/// Scans every (feature, threshold) pair over the node's rows and returns the
/// candidate minimizing child SSE, requiring both children to hold at least
/// min_leaf rows. Ties break toward the lowest feature index, then the lowest
/// threshold. x is the full row-major (n_total x n_features) matrix; rows
/// indexes the node's subset. Parallel variant splits work per feature and
/// reduces in feature order, so results match the serial reference exactly.
SplitCandidate best_split(const double* x, std::size_t n_features, const double* y,
                          std::span<const std::size_t> rows, std::size_t min_leaf);
SplitCandidate best_split_serial(const double* x, std::size_t n_features, const double* y,
                                 std::span<const std::size_t> rows, std::size_t min_leaf);

} // namespace loadcast::kernels
