#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "eo2sar/rng.hpp"
#include "eo2sar/tensor.hpp"

namespace eo2sar::nn {

// Each forward op returns the cache its backward pass needs. A cache is
// valid for exactly one backward call matching the forward call that
// produced it; backward validates grad_out against the recorded shapes.

template <typename T>
struct ConvCache {
    Tensor<T> input;  // [N,Cin,H,W] as passed to forward
    Shape kernel_shape;
    Shape out_shape;
    int stride = 1;
    int padding = 0;
};

template <typename T>
struct ConvGrads {
    Tensor<T> input;    // dL/dinput
    Tensor<T> kernels;  // dL/dkernels
    Tensor<T> bias;     // dL/dbias, rank 1 [Cout]
};

// input [N,Cin,H,W], kernels [Cout,Cin,kh,kw], bias [Cout].
// Output spatial extents: (H + 2*padding - kh)/stride + 1, likewise W.
template <typename T>
std::pair<Tensor<T>, ConvCache<T>> conv2d_forward(const Tensor<T>& input, const Tensor<T>& kernels,
                                                  const Tensor<T>& bias, int stride, int padding);

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& grad_out, const ConvCache<T>& cache,
                             const Tensor<T>& kernels);

template <typename T>
struct PoolCache {
    Shape in_shape;
    Shape out_shape;
    std::vector<int32_t> argmax;  // flat h*W+w index within the input plane, per output element
    int window = 2;
    int stride = 2;
};

// Ties break to the first index in row-major scan order.
template <typename T>
std::pair<Tensor<T>, PoolCache<T>> maxpool2d(const Tensor<T>& input, int window = 2, int stride = 2);

template <typename T>
Tensor<T> maxpool2d_backward(const Tensor<T>& grad_out, const PoolCache<T>& cache);

template <typename T>
struct ReluCache {
    std::vector<uint8_t> positive;  // input > 0 per element
    Shape shape;
};

// Subgradient at 0 is 0: backward passes gradient only where input > 0.
template <typename T>
std::pair<Tensor<T>, ReluCache<T>> relu(const Tensor<T>& input);

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& grad_out, const ReluCache<T>& cache);

template <typename T>
struct DropoutCache {
    std::vector<T> scale;  // per-element 0 or 1/(1-p); empty means identity
    Shape shape;
};

// Inverted dropout: training zeroes with probability p and scales
// survivors by 1/(1-p); inference is the identity. Requires 0 <= p < 1.
template <typename T>
std::pair<Tensor<T>, DropoutCache<T>> dropout(const Tensor<T>& input, double p, Rng& rng,
                                              bool training);

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& grad_out, const DropoutCache<T>& cache);

template <typename T>
struct GapCache {
    Shape in_shape;
};

// [N,C,H,W] -> [N,C] per-channel spatial mean.
template <typename T>
std::pair<Tensor<T>, GapCache<T>> global_avg_pool(const Tensor<T>& input);

template <typename T>
Tensor<T> global_avg_pool_backward(const Tensor<T>& grad_out, const GapCache<T>& cache);

template <typename T>
struct DenseCache {
    Tensor<T> input;  // [N,C]
    Shape weight_shape;
};

template <typename T>
struct DenseGrads {
    Tensor<T> input;
    Tensor<T> weights;
    Tensor<T> bias;
};

// input [N,C], weights [C,K], bias [K] -> logits [N,K].
template <typename T>
std::pair<Tensor<T>, DenseCache<T>> dense(const Tensor<T>& input, const Tensor<T>& weights,
                                          const Tensor<T>& bias);

template <typename T>
DenseGrads<T> dense_backward(const Tensor<T>& grad_out, const DenseCache<T>& cache,
                             const Tensor<T>& weights);

template <typename T>
struct LossAndGrad {
    T loss;                 // mean over the batch
    Tensor<T> grad_logits;  // (softmax - onehot) / N
};

// Numerically stabilized via per-row max subtraction. Labels are class
// indices in [0, K).
template <typename T>
LossAndGrad<T> softmax_cross_entropy(const Tensor<T>& logits, const std::vector<int>& labels);

}  // namespace eo2sar::nn
