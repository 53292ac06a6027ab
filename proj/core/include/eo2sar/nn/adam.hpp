#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eo2sar/nn/model.hpp"

namespace eo2sar::nn {

struct AdamConfig {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Moment estimates live outside the parameters so a fine-tune can start
// from saved weights with fresh optimizer state.
template <typename T>
struct AdamState {
    AdamConfig config;
    ModelParams<T> m;
    ModelParams<T> v;
    int64_t t = 0;  // completed steps
};

template <typename T>
AdamState<T> init_adam(const ModelParams<T>& params, const AdamConfig& config);

// One bias-corrected update: theta -= lr * m_hat / (sqrt(v_hat) + eps).
// Entries of frozen are name prefixes; "conv1" skips conv1_k and conv1_b,
// leaving both the weights and their moments untouched. Throws NumericError
// if any gradient entry is not finite.
template <typename T>
void adam_step(ModelParams<T>& params, const ModelGrads<T>& grads, AdamState<T>& state,
               const std::vector<std::string>& frozen = {});

}  // namespace eo2sar::nn
