#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "eo2sar/nn/layers.hpp"
#include "eo2sar/rng.hpp"
#include "eo2sar/tensor.hpp"

namespace eo2sar::nn {

// Architecture hyperparameters. The layer order is fixed:
//   conv1 -> maxpool -> relu -> conv2 -> dropout -> maxpool -> relu
//   -> conv3 -> relu -> global avg pool -> fc
struct NetworkConfig {
    int input_channels = 3;
    int input_size = 80;
    std::array<int, 3> conv_channels{16, 32, 64};
    std::array<int, 3> kernel_sizes{5, 3, 3};
    std::array<int, 3> strides{1, 1, 1};
    std::array<int, 3> paddings{2, 1, 1};
    double dropout_p = 0.5;
    static constexpr int num_classes = 2;

    // Spatial extent at each stage for the configured input size.
    struct SpatialFlow {
        int conv1, pool1, conv2, pool2, conv3;
    };

    // Throws ConfigError if any extent collapses below 1 along the way.
    SpatialFlow spatial_flow() const;

    // Side length of the conv3 activation maps (the heatmap source).
    int conv3_size() const { return spatial_flow().conv3; }

    // Receptive field of one conv3 output pixel, in input pixels.
    int receptive_field() const;

    void validate() const;

    bool operator==(const NetworkConfig&) const = default;
};

// The eight trainable tensors. Shapes for config c:
//   conv1_k [c1, in, k1, k1]   conv1_b [c1]
//   conv2_k [c2, c1, k2, k2]   conv2_b [c2]
//   conv3_k [c3, c2, k3, k3]   conv3_b [c3]
//   fc_w    [c3, 2]            fc_b    [2]
template <typename T>
struct ModelParams {
    Tensor<T> conv1_k, conv1_b;
    Tensor<T> conv2_k, conv2_b;
    Tensor<T> conv3_k, conv3_b;
    Tensor<T> fc_w, fc_b;

    // Fixed iteration order; name strings double as checkpoint keys and
    // freeze-list prefixes.
    std::vector<std::pair<std::string, Tensor<T>*>> named() {
        return {{"conv1_k", &conv1_k}, {"conv1_b", &conv1_b}, {"conv2_k", &conv2_k},
                {"conv2_b", &conv2_b}, {"conv3_k", &conv3_k}, {"conv3_b", &conv3_b},
                {"fc_w", &fc_w},       {"fc_b", &fc_b}};
    }
    std::vector<std::pair<std::string, const Tensor<T>*>> named() const {
        return {{"conv1_k", &conv1_k}, {"conv1_b", &conv1_b}, {"conv2_k", &conv2_k},
                {"conv2_b", &conv2_b}, {"conv3_k", &conv3_k}, {"conv3_b", &conv3_b},
                {"fc_w", &fc_w},       {"fc_b", &fc_b}};
    }

    template <typename U>
    ModelParams<U> cast() const {
        return {conv1_k.template cast<U>(), conv1_b.template cast<U>(),
                conv2_k.template cast<U>(), conv2_b.template cast<U>(),
                conv3_k.template cast<U>(), conv3_b.template cast<U>(),
                fc_w.template cast<U>(),    fc_b.template cast<U>()};
    }
};

// Gradients mirror the parameter tensors one-to-one.
template <typename T>
using ModelGrads = ModelParams<T>;

enum class Mode { train, infer };

// Everything forward() saves for backward() and for heatmap extraction.
template <typename T>
struct ForwardTrace {
    Tensor<T> logits;      // [N, 2]
    Tensor<T> conv3_relu;  // [N, C3, S, S], the heatmap source maps

    ConvCache<T> conv1_cache;
    PoolCache<T> pool1_cache;
    ReluCache<T> relu1_cache;
    ConvCache<T> conv2_cache;
    DropoutCache<T> dropout_cache;
    PoolCache<T> pool2_cache;
    ReluCache<T> relu2_cache;
    ConvCache<T> conv3_cache;
    ReluCache<T> relu3_cache;
    GapCache<T> gap_cache;
    DenseCache<T> dense_cache;

    Mode mode = Mode::infer;
};

// He-initialized parameters: weights ~ N(0, 2/fan_in), biases zero. Each
// tensor draws from its own stream derived from seed, so adding layers
// elsewhere cannot shift another layer's draws.
template <typename T>
ModelParams<T> build_model(const NetworkConfig& config, uint64_t seed);

// Zero-filled gradients shaped like the given parameters.
template <typename T>
ModelGrads<T> zero_grads(const ModelParams<T>& params);

// Runs the network on batch [N, in, S, S]. In train mode dropout_rng must be
// non-null; in infer mode dropout is the identity and the rng is unused.
template <typename T>
ForwardTrace<T> forward(const ModelParams<T>& params, const NetworkConfig& config,
                        const Tensor<T>& batch, Mode mode, Rng* dropout_rng = nullptr);

// Reverse pass from d(loss)/d(logits). grad_input is the gradient with
// respect to the input batch (needed for heatmaps and gradient checks).
template <typename T>
struct BackwardResult {
    ModelGrads<T> grads;
    Tensor<T> grad_input;
};

template <typename T>
BackwardResult<T> backward(const ModelParams<T>& params, const NetworkConfig& config,
                           const ForwardTrace<T>& trace, const Tensor<T>& grad_logits);

}  // namespace eo2sar::nn
