#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "eo2sar/nn/adam.hpp"
#include "eo2sar/nn/checkpoint.hpp"
#include "eo2sar/nn/model.hpp"

namespace eo2sar::nn {

struct TrainConfig {
    int epochs = 100;
    int batch_size = 32;
    AdamConfig adam;
    std::vector<std::string> frozen;  // parameter name prefixes excluded from updates
    uint64_t seed = 0;
};

struct Example {
    Tensor<float> image;  // [C, S, S], values in [0, 1]
    int label = 0;        // 0 = no ship, 1 = ship
};

// mean_loss averages the per-sample training loss (dropout active);
// train_accuracy is a separate inference-mode pass at the end of the epoch.
struct EpochStats {
    int epoch = 0;  // 1-based
    double mean_loss = 0.0;
    double train_accuracy = 0.0;
};

struct TrainLog {
    std::vector<EpochStats> epochs;
};

// Columns: epoch,mean_loss,train_accuracy.
void write_train_log_csv(const std::filesystem::path& path, const TrainLog& log);

struct TrainResult {
    ModelParams<float> params;
    AdamState<float> adam;
    TrainLog log;
};

// Shuffles each epoch, trains every batch including a short final one, and
// consumes shuffle and dropout randomness from streams derived from
// config.seed so results do not depend on the thread count. Requires both
// classes present; epochs == 0 returns the parameters unchanged.
TrainResult train(ModelParams<float> params, const NetworkConfig& net,
                  const std::vector<Example>& examples, const TrainConfig& config);

// Transfer step: start from saved weights, fresh optimizer state, first
// conv stage frozen (added to config.frozen if absent).
TrainResult finetune(const Checkpoint& start, const std::vector<Example>& examples,
                     TrainConfig config);

// Inference-mode argmax labels, batched.
std::vector<int> predict(const ModelParams<float>& params, const NetworkConfig& net,
                         const std::vector<Example>& examples, int batch_size = 32);

double accuracy(const ModelParams<float>& params, const NetworkConfig& net,
                const std::vector<Example>& examples, int batch_size = 32);

}  // namespace eo2sar::nn
