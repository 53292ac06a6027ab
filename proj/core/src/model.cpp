#include "eo2sar/nn/model.hpp"

#include <cmath>

#include "eo2sar/errors.hpp"

namespace eo2sar::nn {

namespace {

int conv_extent(int in, int k, int stride, int padding, const char* stage) {
    int out = (in + 2 * padding - k) / stride + 1;
    if (out < 1) {
        throw ConfigError(std::string("network config: ") + stage + " output collapses to " +
                          std::to_string(out) + " pixels");
    }
    return out;
}

int pool_extent(int in, const char* stage) {
    if (in < 2) {
        throw ConfigError(std::string("network config: ") + stage +
                          " input too small for 2x2 pooling (" + std::to_string(in) + " px)");
    }
    return (in - 2) / 2 + 1;
}

}  // namespace

NetworkConfig::SpatialFlow NetworkConfig::spatial_flow() const {
    SpatialFlow f;
    f.conv1 = conv_extent(input_size, kernel_sizes[0], strides[0], paddings[0], "conv1");
    f.pool1 = pool_extent(f.conv1, "pool1");
    f.conv2 = conv_extent(f.pool1, kernel_sizes[1], strides[1], paddings[1], "conv2");
    f.pool2 = pool_extent(f.conv2, "pool2");
    f.conv3 = conv_extent(f.pool2, kernel_sizes[2], strides[2], paddings[2], "conv3");
    return f;
}

int NetworkConfig::receptive_field() const {
    int rf = 1;
    int jump = 1;
    const std::array<std::pair<int, int>, 5> stages{{{kernel_sizes[0], strides[0]},
                                                     {2, 2},
                                                     {kernel_sizes[1], strides[1]},
                                                     {2, 2},
                                                     {kernel_sizes[2], strides[2]}}};
    for (auto [k, s] : stages) {
        rf += (k - 1) * jump;
        jump *= s;
    }
    return rf;
}

void NetworkConfig::validate() const {
    if (input_channels < 1) throw ConfigError("network config: input_channels must be >= 1");
    if (input_size < 1) throw ConfigError("network config: input_size must be >= 1");
    for (int i = 0; i < 3; ++i) {
        if (conv_channels[static_cast<size_t>(i)] < 1) {
            throw ConfigError("network config: conv_channels must be >= 1");
        }
        if (kernel_sizes[static_cast<size_t>(i)] < 1) {
            throw ConfigError("network config: kernel_sizes must be >= 1");
        }
        if (strides[static_cast<size_t>(i)] < 1) {
            throw ConfigError("network config: strides must be >= 1");
        }
        if (paddings[static_cast<size_t>(i)] < 0) {
            throw ConfigError("network config: paddings must be >= 0");
        }
    }
    if (dropout_p < 0.0 || dropout_p >= 1.0) {
        throw ConfigError("network config: dropout_p must satisfy 0 <= p < 1, got " +
                          std::to_string(dropout_p));
    }
    spatial_flow();
}

namespace {

template <typename T>
Tensor<T> he_normal(const Shape& shape, int fan_in, uint64_t seed, const char* stream) {
    Tensor<T> t(shape);
    Rng rng(Rng::derive(seed, stream));
    const double stddev = std::sqrt(2.0 / fan_in);
    for (int64_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(rng.normal(0.0, stddev));
    return t;
}

}  // namespace

template <typename T>
ModelParams<T> build_model(const NetworkConfig& config, uint64_t seed) {
    config.validate();
    const int in = config.input_channels;
    const auto& ch = config.conv_channels;
    const auto& ks = config.kernel_sizes;

    ModelParams<T> p;
    p.conv1_k = he_normal<T>(Shape{ch[0], in, ks[0], ks[0]}, in * ks[0] * ks[0], seed, "conv1_k");
    p.conv1_b = Tensor<T>(Shape{ch[0]});
    p.conv2_k =
        he_normal<T>(Shape{ch[1], ch[0], ks[1], ks[1]}, ch[0] * ks[1] * ks[1], seed, "conv2_k");
    p.conv2_b = Tensor<T>(Shape{ch[1]});
    p.conv3_k =
        he_normal<T>(Shape{ch[2], ch[1], ks[2], ks[2]}, ch[1] * ks[2] * ks[2], seed, "conv3_k");
    p.conv3_b = Tensor<T>(Shape{ch[2]});
    p.fc_w = he_normal<T>(Shape{ch[2], NetworkConfig::num_classes}, ch[2], seed, "fc_w");
    p.fc_b = Tensor<T>(Shape{NetworkConfig::num_classes});
    return p;
}

template <typename T>
ModelGrads<T> zero_grads(const ModelParams<T>& params) {
    ModelGrads<T> g;
    auto src = params.named();
    auto dst = g.named();
    for (size_t i = 0; i < src.size(); ++i) *dst[i].second = Tensor<T>(src[i].second->shape());
    return g;
}

template <typename T>
ForwardTrace<T> forward(const ModelParams<T>& params, const NetworkConfig& config,
                        const Tensor<T>& batch, Mode mode, Rng* dropout_rng) {
    if (batch.rank() != 4 || batch.dim(1) != config.input_channels ||
        batch.dim(2) != config.input_size || batch.dim(3) != config.input_size) {
        throw DimensionError("forward: batch " + shape_str(batch.shape()) +
                             " does not match configured input [N," +
                             std::to_string(config.input_channels) + "," +
                             std::to_string(config.input_size) + "," +
                             std::to_string(config.input_size) + "]");
    }
    const bool training = mode == Mode::train;
    if (training && config.dropout_p > 0.0 && dropout_rng == nullptr) {
        throw ConfigError("forward: train mode with dropout_p > 0 requires an rng");
    }

    ForwardTrace<T> trace;
    trace.mode = mode;

    auto [x1, c1] = conv2d_forward(batch, params.conv1_k, params.conv1_b, config.strides[0],
                                   config.paddings[0]);
    trace.conv1_cache = std::move(c1);
    auto [p1, pc1] = maxpool2d(x1, 2, 2);
    trace.pool1_cache = std::move(pc1);
    auto [r1, rc1] = relu(p1);
    trace.relu1_cache = std::move(rc1);

    auto [x2, c2] =
        conv2d_forward(r1, params.conv2_k, params.conv2_b, config.strides[1], config.paddings[1]);
    trace.conv2_cache = std::move(c2);
    Rng unused(0);
    auto [d2, dc] = dropout(x2, config.dropout_p, dropout_rng ? *dropout_rng : unused, training);
    trace.dropout_cache = std::move(dc);
    auto [p2, pc2] = maxpool2d(d2, 2, 2);
    trace.pool2_cache = std::move(pc2);
    auto [r2, rc2] = relu(p2);
    trace.relu2_cache = std::move(rc2);

    auto [x3, c3] =
        conv2d_forward(r2, params.conv3_k, params.conv3_b, config.strides[2], config.paddings[2]);
    trace.conv3_cache = std::move(c3);
    auto [r3, rc3] = relu(x3);
    trace.relu3_cache = std::move(rc3);
    trace.conv3_relu = r3;

    auto [g, gc] = global_avg_pool(r3);
    trace.gap_cache = std::move(gc);
    auto [logits, fc] = dense(g, params.fc_w, params.fc_b);
    trace.dense_cache = std::move(fc);
    trace.logits = std::move(logits);
    return trace;
}

template <typename T>
BackwardResult<T> backward(const ModelParams<T>& params, const NetworkConfig& config,
                           const ForwardTrace<T>& trace, const Tensor<T>& grad_logits) {
    require_shape(grad_logits, trace.logits.shape(), "backward: grad_logits");
    (void)config;

    BackwardResult<T> result;

    auto fc_grads = dense_backward(grad_logits, trace.dense_cache, params.fc_w);
    result.grads.fc_w = std::move(fc_grads.weights);
    result.grads.fc_b = std::move(fc_grads.bias);

    Tensor<T> d = global_avg_pool_backward(fc_grads.input, trace.gap_cache);
    d = relu_backward(d, trace.relu3_cache);

    auto c3_grads = conv2d_backward(d, trace.conv3_cache, params.conv3_k);
    result.grads.conv3_k = std::move(c3_grads.kernels);
    result.grads.conv3_b = std::move(c3_grads.bias);

    d = relu_backward(c3_grads.input, trace.relu2_cache);
    d = maxpool2d_backward(d, trace.pool2_cache);
    d = dropout_backward(d, trace.dropout_cache);

    auto c2_grads = conv2d_backward(d, trace.conv2_cache, params.conv2_k);
    result.grads.conv2_k = std::move(c2_grads.kernels);
    result.grads.conv2_b = std::move(c2_grads.bias);

    d = relu_backward(c2_grads.input, trace.relu1_cache);
    d = maxpool2d_backward(d, trace.pool1_cache);

    auto c1_grads = conv2d_backward(d, trace.conv1_cache, params.conv1_k);
    result.grads.conv1_k = std::move(c1_grads.kernels);
    result.grads.conv1_b = std::move(c1_grads.bias);
    result.grad_input = std::move(c1_grads.input);
    return result;
}

#define EO2SAR_INSTANTIATE_MODEL(T)                                                              \
    template ModelParams<T> build_model<T>(const NetworkConfig&, uint64_t);                      \
    template ModelGrads<T> zero_grads<T>(const ModelParams<T>&);                                 \
    template ForwardTrace<T> forward<T>(const ModelParams<T>&, const NetworkConfig&,             \
                                        const Tensor<T>&, Mode, Rng*);                           \
    template BackwardResult<T> backward<T>(const ModelParams<T>&, const NetworkConfig&,          \
                                           const ForwardTrace<T>&, const Tensor<T>&);

EO2SAR_INSTANTIATE_MODEL(float)
EO2SAR_INSTANTIATE_MODEL(double)

#undef EO2SAR_INSTANTIATE_MODEL

}  // namespace eo2sar::nn
