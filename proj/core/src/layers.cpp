#include "eo2sar/nn/layers.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>

#include "eo2sar/errors.hpp"
#include "eo2sar/threading.hpp"

namespace eo2sar::nn {

namespace {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapM = Eigen::Map<MatRM<T>>;
template <typename T>
using MapCM = Eigen::Map<const MatRM<T>>;

int conv_extent(int in, int k, int stride, int padding) {
    return (in + 2 * padding - k) / stride + 1;
}

// Unpacks one sample's receptive fields into col [Cin*kh*kw, outH*outW],
// row-major, zero-filled where the window overlaps padding.
template <typename T>
void im2col(const T* src, int channels, int height, int width, int kh, int kw, int stride,
            int padding, int out_h, int out_w, T* col) {
    const int64_t plane = static_cast<int64_t>(height) * width;
    const int64_t out_plane = static_cast<int64_t>(out_h) * out_w;
    T* dst = col;
    for (int c = 0; c < channels; ++c) {
        const T* chan = src + c * plane;
        for (int u = 0; u < kh; ++u) {
            for (int v = 0; v < kw; ++v) {
                for (int oh = 0; oh < out_h; ++oh) {
                    int h = oh * stride + u - padding;
                    if (h < 0 || h >= height) {
                        for (int ow = 0; ow < out_w; ++ow) *dst++ = T(0);
                        continue;
                    }
                    const T* row = chan + static_cast<int64_t>(h) * width;
                    for (int ow = 0; ow < out_w; ++ow) {
                        int w = ow * stride + v - padding;
                        *dst++ = (w >= 0 && w < width) ? row[w] : T(0);
                    }
                }
            }
        }
    }
    (void)out_plane;
}

// Scatter-add inverse of im2col.
template <typename T>
void col2im(const T* col, int channels, int height, int width, int kh, int kw, int stride,
            int padding, int out_h, int out_w, T* dst) {
    const int64_t plane = static_cast<int64_t>(height) * width;
    const T* src = col;
    for (int c = 0; c < channels; ++c) {
        T* chan = dst + c * plane;
        for (int u = 0; u < kh; ++u) {
            for (int v = 0; v < kw; ++v) {
                for (int oh = 0; oh < out_h; ++oh) {
                    int h = oh * stride + u - padding;
                    if (h < 0 || h >= height) {
                        src += out_w;
                        continue;
                    }
                    T* row = chan + static_cast<int64_t>(h) * width;
                    for (int ow = 0; ow < out_w; ++ow) {
                        int w = ow * stride + v - padding;
                        if (w >= 0 && w < width) row[w] += *src;
                        ++src;
                    }
                }
            }
        }
    }
}

void check_spatial(const Shape& in, int kh, int kw, int stride, int padding) {
    if (stride < 1) throw ConfigError("conv2d: stride must be >= 1, got " + std::to_string(stride));
    if (padding < 0) {
        throw ConfigError("conv2d: padding must be >= 0, got " + std::to_string(padding));
    }
    int h = in[2], w = in[3];
    if (kh > h + 2 * padding || kw > w + 2 * padding) {
        throw DimensionError("conv2d: kernel " + std::to_string(kh) + "x" + std::to_string(kw) +
                             " larger than padded input " + shape_str(in) + " with padding " +
                             std::to_string(padding));
    }
}

}  // namespace

template <typename T>
std::pair<Tensor<T>, ConvCache<T>> conv2d_forward(const Tensor<T>& input, const Tensor<T>& kernels,
                                                  const Tensor<T>& bias, int stride, int padding) {
    if (input.rank() != 4 || kernels.rank() != 4) {
        throw DimensionError("conv2d: expected rank-4 input and kernels, got input " +
                             shape_str(input.shape()) + ", kernels " + shape_str(kernels.shape()));
    }
    const int n = input.dim(0), cin = input.dim(1), h = input.dim(2), w = input.dim(3);
    const int cout = kernels.dim(0), kh = kernels.dim(2), kw = kernels.dim(3);
    if (kernels.dim(1) != cin) {
        throw DimensionError("conv2d: input channels disagree, input " + shape_str(input.shape()) +
                             " vs kernels " + shape_str(kernels.shape()));
    }
    if (bias.rank() != 1 || bias.dim(0) != cout) {
        throw DimensionError("conv2d: bias shape " + shape_str(bias.shape()) + " does not match " +
                             std::to_string(cout) + " output channels");
    }
    check_spatial(input.shape(), kh, kw, stride, padding);

    const int out_h = conv_extent(h, kh, stride, padding);
    const int out_w = conv_extent(w, kw, stride, padding);
    const int64_t k = static_cast<int64_t>(cin) * kh * kw;
    const int64_t m = static_cast<int64_t>(out_h) * out_w;

    Tensor<T> out(Shape{n, cout, out_h, out_w});
    MapCM<T> kmat(kernels.data(), cout, k);

    parallel_for(n, [&](int64_t i) {
        std::vector<T> col(static_cast<size_t>(k * m));
        im2col(input.data() + i * cin * h * w, cin, h, w, kh, kw, stride, padding, out_h, out_w,
               col.data());
        MapCM<T> cmat(col.data(), k, m);
        MapM<T> omat(out.data() + i * cout * m, cout, m);
        omat.noalias() = kmat * cmat;
        for (int o = 0; o < cout; ++o) omat.row(o).array() += bias[o];
    });

    ConvCache<T> cache{input, kernels.shape(), out.shape(), stride, padding};
    return {std::move(out), std::move(cache)};
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& grad_out, const ConvCache<T>& cache,
                             const Tensor<T>& kernels) {
    if (kernels.shape() != cache.kernel_shape) {
        throw DimensionError("conv2d_backward: kernels " + shape_str(kernels.shape()) +
                             " do not match cached forward kernels " +
                             shape_str(cache.kernel_shape));
    }
    require_shape(grad_out, cache.out_shape, "conv2d_backward: grad_out");

    const auto& input = cache.input;
    const int n = input.dim(0), cin = input.dim(1), h = input.dim(2), w = input.dim(3);
    const int cout = kernels.dim(0), kh = kernels.dim(2), kw = kernels.dim(3);
    const int out_h = cache.out_shape[2], out_w = cache.out_shape[3];
    const int64_t k = static_cast<int64_t>(cin) * kh * kw;
    const int64_t m = static_cast<int64_t>(out_h) * out_w;
    const int stride = cache.stride, padding = cache.padding;

    ConvGrads<T> grads{Tensor<T>(input.shape()), Tensor<T>(kernels.shape()),
                       Tensor<T>(Shape{cout})};

    // Per-sample kernel/bias partials, reduced below in fixed n order so
    // the summed gradient does not depend on the thread count.
    std::vector<T> kernel_partial(static_cast<size_t>(n) * cout * k);
    std::vector<T> bias_partial(static_cast<size_t>(n) * cout);

    MapCM<T> kmat(kernels.data(), cout, k);

    parallel_for(n, [&](int64_t i) {
        std::vector<T> col(static_cast<size_t>(k * m));
        im2col(input.data() + i * cin * h * w, cin, h, w, kh, kw, stride, padding, out_h, out_w,
               col.data());
        MapCM<T> cmat(col.data(), k, m);
        MapCM<T> gmat(grad_out.data() + i * cout * m, cout, m);

        MapM<T> kpart(kernel_partial.data() + i * cout * k, cout, k);
        kpart.noalias() = gmat * cmat.transpose();
        // Scalar accumulation: Eigen's vectorized sum associates terms by
        // buffer alignment, which would make results depend on heap layout.
        for (int o = 0; o < cout; ++o) {
            const T* row = grad_out.data() + (i * cout + o) * m;
            T acc = T(0);
            for (int64_t j = 0; j < m; ++j) acc += row[j];
            bias_partial[static_cast<size_t>(i) * cout + o] = acc;
        }

        std::vector<T> colgrad(static_cast<size_t>(k * m));
        MapM<T> cgmat(colgrad.data(), k, m);
        cgmat.noalias() = kmat.transpose() * gmat;
        col2im(colgrad.data(), cin, h, w, kh, kw, stride, padding, out_h, out_w,
               grads.input.data() + i * cin * h * w);
    });

    MapM<T> gk(grads.kernels.data(), cout, k);
    for (int64_t i = 0; i < n; ++i) {
        gk += MapCM<T>(kernel_partial.data() + i * cout * k, cout, k);
        for (int o = 0; o < cout; ++o) grads.bias[o] += bias_partial[static_cast<size_t>(i) * cout + o];
    }
    return grads;
}

template <typename T>
std::pair<Tensor<T>, PoolCache<T>> maxpool2d(const Tensor<T>& input, int window, int stride) {
    if (input.rank() != 4) {
        throw DimensionError("maxpool2d: expected rank-4 input, got " + shape_str(input.shape()));
    }
    if (window < 1 || stride < 1) {
        throw ConfigError("maxpool2d: window and stride must be >= 1");
    }
    const int n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
    if (h < window || w < window) {
        throw DimensionError("maxpool2d: window " + std::to_string(window) +
                             " exceeds spatial extent of input " + shape_str(input.shape()));
    }
    const int out_h = (h - window) / stride + 1;
    const int out_w = (w - window) / stride + 1;

    Tensor<T> out(Shape{n, c, out_h, out_w});
    PoolCache<T> cache;
    cache.in_shape = input.shape();
    cache.out_shape = out.shape();
    cache.window = window;
    cache.stride = stride;
    cache.argmax.resize(static_cast<size_t>(out.size()));

    const int64_t planes = static_cast<int64_t>(n) * c;
    parallel_for(planes, [&](int64_t p) {
        const T* src = input.data() + p * h * w;
        T* dst = out.data() + p * out_h * out_w;
        int32_t* amax = cache.argmax.data() + p * out_h * out_w;
        for (int oh = 0; oh < out_h; ++oh) {
            for (int ow = 0; ow < out_w; ++ow) {
                int h0 = oh * stride, w0 = ow * stride;
                T best = src[h0 * w + w0];
                int32_t best_idx = h0 * w + w0;
                for (int u = 0; u < window; ++u) {
                    for (int v = 0; v < window; ++v) {
                        int32_t idx = (h0 + u) * w + (w0 + v);
                        if (src[idx] > best) {  // strict: ties keep the first index
                            best = src[idx];
                            best_idx = idx;
                        }
                    }
                }
                dst[oh * out_w + ow] = best;
                amax[oh * out_w + ow] = best_idx;
            }
        }
    });
    return {std::move(out), std::move(cache)};
}

template <typename T>
Tensor<T> maxpool2d_backward(const Tensor<T>& grad_out, const PoolCache<T>& cache) {
    require_shape(grad_out, cache.out_shape, "maxpool2d_backward: grad_out");
    Tensor<T> grad_in(cache.in_shape);
    const int64_t out_plane = static_cast<int64_t>(cache.out_shape[2]) * cache.out_shape[3];
    const int64_t in_plane = static_cast<int64_t>(cache.in_shape[2]) * cache.in_shape[3];
    const int64_t planes = static_cast<int64_t>(cache.in_shape[0]) * cache.in_shape[1];
    parallel_for(planes, [&](int64_t p) {
        const T* g = grad_out.data() + p * out_plane;
        const int32_t* amax = cache.argmax.data() + p * out_plane;
        T* dst = grad_in.data() + p * in_plane;
        for (int64_t i = 0; i < out_plane; ++i) dst[amax[i]] += g[i];
    });
    return grad_in;
}

template <typename T>
std::pair<Tensor<T>, ReluCache<T>> relu(const Tensor<T>& input) {
    Tensor<T> out(input.shape());
    ReluCache<T> cache;
    cache.shape = input.shape();
    cache.positive.resize(static_cast<size_t>(input.size()));
    for (int64_t i = 0; i < input.size(); ++i) {
        bool pos = input[i] > T(0);
        cache.positive[static_cast<size_t>(i)] = pos;
        out[i] = pos ? input[i] : T(0);
    }
    return {std::move(out), std::move(cache)};
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& grad_out, const ReluCache<T>& cache) {
    require_shape(grad_out, cache.shape, "relu_backward: grad_out");
    Tensor<T> grad_in(cache.shape);
    for (int64_t i = 0; i < grad_out.size(); ++i) {
        grad_in[i] = cache.positive[static_cast<size_t>(i)] ? grad_out[i] : T(0);
    }
    return grad_in;
}

template <typename T>
std::pair<Tensor<T>, DropoutCache<T>> dropout(const Tensor<T>& input, double p, Rng& rng,
                                              bool training) {
    if (p < 0.0 || p >= 1.0) {
        throw ConfigError("dropout: probability must satisfy 0 <= p < 1, got " + std::to_string(p));
    }
    DropoutCache<T> cache;
    cache.shape = input.shape();
    if (!training || p == 0.0) {
        return {input, std::move(cache)};
    }
    Tensor<T> out(input.shape());
    cache.scale.resize(static_cast<size_t>(input.size()));
    const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
    for (int64_t i = 0; i < input.size(); ++i) {
        T s = rng.uniform() < p ? T(0) : keep_scale;
        cache.scale[static_cast<size_t>(i)] = s;
        out[i] = input[i] * s;
    }
    return {std::move(out), std::move(cache)};
}

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& grad_out, const DropoutCache<T>& cache) {
    require_shape(grad_out, cache.shape, "dropout_backward: grad_out");
    if (cache.scale.empty()) return grad_out;  // identity forward
    Tensor<T> grad_in(cache.shape);
    for (int64_t i = 0; i < grad_out.size(); ++i) {
        grad_in[i] = grad_out[i] * cache.scale[static_cast<size_t>(i)];
    }
    return grad_in;
}

template <typename T>
std::pair<Tensor<T>, GapCache<T>> global_avg_pool(const Tensor<T>& input) {
    if (input.rank() != 4) {
        throw DimensionError("global_avg_pool: expected rank-4 input, got " +
                             shape_str(input.shape()));
    }
    const int n = input.dim(0), c = input.dim(1);
    const int64_t plane = static_cast<int64_t>(input.dim(2)) * input.dim(3);
    Tensor<T> out(Shape{n, c});
    for (int64_t p = 0; p < static_cast<int64_t>(n) * c; ++p) {
        const T* src = input.data() + p * plane;
        T sum = T(0);
        for (int64_t i = 0; i < plane; ++i) sum += src[i];
        out[p] = sum / static_cast<T>(plane);
    }
    return {std::move(out), GapCache<T>{input.shape()}};
}

template <typename T>
Tensor<T> global_avg_pool_backward(const Tensor<T>& grad_out, const GapCache<T>& cache) {
    require_shape(grad_out, Shape{cache.in_shape[0], cache.in_shape[1]},
                  "global_avg_pool_backward: grad_out");
    Tensor<T> grad_in(cache.in_shape);
    const int64_t plane = static_cast<int64_t>(cache.in_shape[2]) * cache.in_shape[3];
    for (int64_t p = 0; p < grad_out.size(); ++p) {
        T g = grad_out[p] / static_cast<T>(plane);
        T* dst = grad_in.data() + p * plane;
        for (int64_t i = 0; i < plane; ++i) dst[i] = g;
    }
    return grad_in;
}

template <typename T>
std::pair<Tensor<T>, DenseCache<T>> dense(const Tensor<T>& input, const Tensor<T>& weights,
                                          const Tensor<T>& bias) {
    if (input.rank() != 2 || weights.rank() != 2 || input.dim(1) != weights.dim(0)) {
        throw DimensionError("dense: inner dimensions disagree, input " +
                             shape_str(input.shape()) + " vs weights " +
                             shape_str(weights.shape()));
    }
    const int n = input.dim(0), c = input.dim(1), k = weights.dim(1);
    if (bias.rank() != 1 || bias.dim(0) != k) {
        throw DimensionError("dense: bias shape " + shape_str(bias.shape()) +
                             " does not match output width " + std::to_string(k));
    }
    Tensor<T> out(Shape{n, k});
    MapCM<T> x(input.data(), n, c);
    MapCM<T> wmat(weights.data(), c, k);
    MapM<T> y(out.data(), n, k);
    y.noalias() = x * wmat;
    for (int r = 0; r < n; ++r) {
        for (int j = 0; j < k; ++j) y(r, j) += bias[j];
    }
    return {std::move(out), DenseCache<T>{input, weights.shape()}};
}

template <typename T>
DenseGrads<T> dense_backward(const Tensor<T>& grad_out, const DenseCache<T>& cache,
                             const Tensor<T>& weights) {
    if (weights.shape() != cache.weight_shape) {
        throw DimensionError("dense_backward: weights " + shape_str(weights.shape()) +
                             " do not match cached forward weights " +
                             shape_str(cache.weight_shape));
    }
    const int n = cache.input.dim(0), c = cache.input.dim(1), k = weights.dim(1);
    require_shape(grad_out, Shape{n, k}, "dense_backward: grad_out");

    DenseGrads<T> grads{Tensor<T>(Shape{n, c}), Tensor<T>(Shape{c, k}), Tensor<T>(Shape{k})};
    MapCM<T> g(grad_out.data(), n, k);
    MapCM<T> x(cache.input.data(), n, c);
    MapCM<T> wmat(weights.data(), c, k);

    MapM<T>(grads.input.data(), n, c).noalias() = g * wmat.transpose();
    MapM<T>(grads.weights.data(), c, k).noalias() = x.transpose() * g;
    // Scalar accumulation in sample order; see conv2d_backward.
    for (int j = 0; j < k; ++j) {
        T acc = T(0);
        for (int i = 0; i < n; ++i) acc += grad_out.data()[static_cast<int64_t>(i) * k + j];
        grads.bias[j] = acc;
    }
    return grads;
}

template <typename T>
LossAndGrad<T> softmax_cross_entropy(const Tensor<T>& logits, const std::vector<int>& labels) {
    if (logits.rank() != 2) {
        throw DimensionError("softmax_cross_entropy: expected [N,K] logits, got " +
                             shape_str(logits.shape()));
    }
    const int n = logits.dim(0), k = logits.dim(1);
    if (static_cast<int>(labels.size()) != n) {
        throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                             " labels for batch of " + std::to_string(n));
    }
    LossAndGrad<T> result{T(0), Tensor<T>(logits.shape())};
    for (int i = 0; i < n; ++i) {
        int label = labels[static_cast<size_t>(i)];
        if (label < 0 || label >= k) {
            throw DataError("softmax_cross_entropy: label " + std::to_string(label) +
                            " out of range [0," + std::to_string(k) + ") at row " +
                            std::to_string(i));
        }
        const T* row = logits.data() + static_cast<int64_t>(i) * k;
        T* grow = result.grad_logits.data() + static_cast<int64_t>(i) * k;
        T mx = row[0];
        for (int j = 1; j < k; ++j) mx = std::max(mx, row[j]);
        T denom = T(0);
        for (int j = 0; j < k; ++j) {
            grow[j] = std::exp(row[j] - mx);
            denom += grow[j];
        }
        result.loss -= (row[label] - mx - std::log(denom));
        for (int j = 0; j < k; ++j) {
            T p = grow[j] / denom;
            grow[j] = (p - (j == label ? T(1) : T(0))) / static_cast<T>(n);
        }
    }
    result.loss /= static_cast<T>(n);
    return result;
}

#define EO2SAR_INSTANTIATE_LAYERS(T)                                                              \
    template std::pair<Tensor<T>, ConvCache<T>> conv2d_forward<T>(                                \
        const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int, int);                          \
    template ConvGrads<T> conv2d_backward<T>(const Tensor<T>&, const ConvCache<T>&,               \
                                             const Tensor<T>&);                                   \
    template std::pair<Tensor<T>, PoolCache<T>> maxpool2d<T>(const Tensor<T>&, int, int);         \
    template Tensor<T> maxpool2d_backward<T>(const Tensor<T>&, const PoolCache<T>&);              \
    template std::pair<Tensor<T>, ReluCache<T>> relu<T>(const Tensor<T>&);                        \
    template Tensor<T> relu_backward<T>(const Tensor<T>&, const ReluCache<T>&);                   \
    template std::pair<Tensor<T>, DropoutCache<T>> dropout<T>(const Tensor<T>&, double, Rng&,     \
                                                              bool);                              \
    template Tensor<T> dropout_backward<T>(const Tensor<T>&, const DropoutCache<T>&);             \
    template std::pair<Tensor<T>, GapCache<T>> global_avg_pool<T>(const Tensor<T>&);              \
    template Tensor<T> global_avg_pool_backward<T>(const Tensor<T>&, const GapCache<T>&);         \
    template std::pair<Tensor<T>, DenseCache<T>> dense<T>(const Tensor<T>&, const Tensor<T>&,     \
                                                          const Tensor<T>&);                      \
    template DenseGrads<T> dense_backward<T>(const Tensor<T>&, const DenseCache<T>&,              \
                                             const Tensor<T>&);                                   \
    template LossAndGrad<T> softmax_cross_entropy<T>(const Tensor<T>&, const std::vector<int>&);

EO2SAR_INSTANTIATE_LAYERS(float)
EO2SAR_INSTANTIATE_LAYERS(double)

#undef EO2SAR_INSTANTIATE_LAYERS

}  // namespace eo2sar::nn
