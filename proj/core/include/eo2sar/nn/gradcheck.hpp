#pragma once

#include <functional>

#include "eo2sar/tensor.hpp"

namespace eo2sar::nn {

// Central-difference gradient of a scalar function at x. Run with T = double;
// float loses too many digits to the subtraction.
template <typename T>
Tensor<T> finite_difference_gradient(const std::function<T(const Tensor<T>&)>& f,
                                     const Tensor<T>& x, T h) {
    Tensor<T> grad(x.shape());
    Tensor<T> probe = x;
    for (int64_t i = 0; i < x.size(); ++i) {
        const T orig = probe[i];
        probe[i] = orig + h;
        const T above = f(probe);
        probe[i] = orig - h;
        const T below = f(probe);
        probe[i] = orig;
        grad[i] = (above - below) / (2 * h);
    }
    return grad;
}

}  // namespace eo2sar::nn
