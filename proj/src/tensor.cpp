#include "loadcast/tensor.hpp"

#include "loadcast/error.hpp"

#include <algorithm>
#include <cmath>

namespace loadcast {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (const std::size_t d : shape) {
        n *= d;
    }
    return n;
}

} // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(shape_product(shape_), fill) {}

Tensor Tensor::reshaped(std::vector<std::size_t> shape) const {
    require(shape_product(shape) == data_.size(), "Tensor::reshaped: element count mismatch");
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = data_;
    return t;
}

void Tensor::fill(double v) {
    std::fill(data_.begin(), data_.end(), v);
}

void Tensor::ensure_finite(const char* context) const {
    for (std::size_t i = 0; i < data_.size(); ++i) {
        if (!std::isfinite(data_[i])) {
            raise(context, ": non-finite value at flat index ", i);
        }
    }
}

} // namespace loadcast
