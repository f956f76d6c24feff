#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace loadcast {

/// Dense N-dimensional array of 64-bit floats, row-major contiguous storage.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);

    static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0) {
        return Tensor({rows, cols}, fill);
    }
    static Tensor vector(std::size_t n, double fill = 0.0) { return Tensor({n}, fill); }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_[i]; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at2(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    double at2(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }
    double& at3(std::size_t i, std::size_t j, std::size_t k) {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }
    double at3(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }

    /// Same data, new shape; element count must match.
    Tensor reshaped(std::vector<std::size_t> shape) const;

    void fill(double v);
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    /// Throws Error naming `context` and the first offending index if any
    /// element is NaN or infinite.
    void ensure_finite(const char* context) const;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

} // namespace loadcast
