#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "eo2sar/errors.hpp"

namespace eo2sar {

// List of extents, e.g. {N, C, H, W} for image batches.
using Shape = std::vector<int>;

std::string shape_str(const Shape& shape);

// Product of extents. Throws ConfigError if any extent is < 1.
int64_t shape_numel(const Shape& shape);

// Dense n-dimensional array, flat row-major storage. T is float for
// training and double for gradient-check mode.
template <typename T>
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(Shape shape)
        : shape_(std::move(shape)), data_(static_cast<size_t>(shape_numel(shape_))) {}

    Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
        if (shape_numel(shape_) != static_cast<int64_t>(data_.size())) {
            throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                                 " does not match shape " + shape_str(shape_));
        }
    }

    static Tensor full(Shape shape, T value) {
        Tensor t(std::move(shape));
        for (auto& x : t.data_) x = value;
        return t;
    }

    const Shape& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    int64_t size() const { return static_cast<int64_t>(data_.size()); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    T& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    const T& operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

    // NCHW addressing.
    T& at4(int n, int c, int h, int w) { return data_[static_cast<size_t>(index4(n, c, h, w))]; }
    const T& at4(int n, int c, int h, int w) const {
        return data_[static_cast<size_t>(index4(n, c, h, w))];
    }
    int64_t index4(int n, int c, int h, int w) const {
        return ((static_cast<int64_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w;
    }

    T& at2(int r, int c) { return data_[static_cast<size_t>(r) * shape_[1] + c]; }
    const T& at2(int r, int c) const { return data_[static_cast<size_t>(r) * shape_[1] + c]; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    bool all_finite() const {
        for (const T& x : data_) {
            if (!std::isfinite(x)) return false;
        }
        return true;
    }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out(shape_);
        for (int64_t i = 0; i < size(); ++i) out[i] = static_cast<U>(data_[static_cast<size_t>(i)]);
        return out;
    }

    auto begin() { return data_.begin(); }
    auto end() { return data_.end(); }
    auto begin() const { return data_.begin(); }
    auto end() const { return data_.end(); }

private:
    Shape shape_;
    std::vector<T> data_;
};

// Throws DimensionError naming both shapes unless they match.
template <typename T>
void require_shape(const Tensor<T>& t, const Shape& expected, const char* what) {
    if (t.shape() != expected) {
        throw DimensionError(std::string(what) + ": expected shape " + shape_str(expected) +
                             ", got " + shape_str(t.shape()));
    }
}

}  // namespace eo2sar
