#include "eo2sar/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "eo2sar/errors.hpp"
#include "eo2sar/strings.hpp"

namespace eo2sar::nn {

namespace {

void check_examples(const std::vector<Example>& examples, const NetworkConfig& net,
                    bool require_both_classes) {
    if (examples.empty()) throw DataError("training set is empty");
    const Shape want{net.input_channels, net.input_size, net.input_size};
    bool saw[2] = {false, false};
    for (size_t i = 0; i < examples.size(); ++i) {
        const Example& ex = examples[i];
        if (ex.image.shape() != want) {
            throw DataError("example " + std::to_string(i) + " has image shape " +
                            shape_str(ex.image.shape()) + ", expected " + shape_str(want));
        }
        if (ex.label != 0 && ex.label != 1) {
            throw DataError("example " + std::to_string(i) + " has label " +
                            std::to_string(ex.label) + ", expected 0 or 1");
        }
        saw[ex.label] = true;
    }
    if (require_both_classes && (!saw[0] || !saw[1])) {
        throw DataError("training set contains only one class");
    }
}

// Stacks examples[indices[first..last)] into one [B, C, S, S] batch.
std::pair<Tensor<float>, std::vector<int>> make_batch(const std::vector<Example>& examples,
                                                      const std::vector<int64_t>& indices,
                                                      size_t first, size_t last) {
    const Shape& img = examples[static_cast<size_t>(indices[first])].image.shape();
    const int b = static_cast<int>(last - first);
    Tensor<float> batch(Shape{b, img[0], img[1], img[2]});
    std::vector<int> labels(static_cast<size_t>(b));
    const int64_t stride = examples[static_cast<size_t>(indices[first])].image.size();
    for (size_t i = first; i < last; ++i) {
        const Example& ex = examples[static_cast<size_t>(indices[i])];
        std::copy(ex.image.data(), ex.image.data() + stride,
                  batch.data() + static_cast<int64_t>(i - first) * stride);
        labels[i - first] = ex.label;
    }
    return {std::move(batch), std::move(labels)};
}

}  // namespace

TrainResult train(ModelParams<float> params, const NetworkConfig& net,
                  const std::vector<Example>& examples, const TrainConfig& config) {
    net.validate();
    if (config.epochs < 0) throw ConfigError("train: epochs must be >= 0");
    if (config.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    check_examples(examples, net, config.epochs > 0);

    TrainResult result;
    result.adam = init_adam(params, config.adam);
    result.params = std::move(params);

    Rng shuffle_rng(Rng::derive(config.seed, "shuffle"));
    Rng dropout_rng(Rng::derive(config.seed, "dropout"));

    const size_t n = examples.size();
    std::vector<int64_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        for (size_t first = 0; first < n; first += static_cast<size_t>(config.batch_size)) {
            const size_t last = std::min(n, first + static_cast<size_t>(config.batch_size));
            auto [batch, labels] = make_batch(examples, order, first, last);
            ForwardTrace<float> trace =
                forward(result.params, net, batch, Mode::train, &dropout_rng);
            LossAndGrad<float> loss = softmax_cross_entropy(trace.logits, labels);
            if (!std::isfinite(loss.loss)) {
                throw NumericError("train: loss became non-finite at epoch " +
                                   std::to_string(epoch));
            }
            loss_sum += static_cast<double>(loss.loss) * static_cast<double>(last - first);
            BackwardResult<float> back = backward(result.params, net, trace, loss.grad_logits);
            adam_step(result.params, back.grads, result.adam, config.frozen);
        }
        EpochStats stats;
        stats.epoch = epoch;
        stats.mean_loss = loss_sum / static_cast<double>(n);
        stats.train_accuracy = accuracy(result.params, net, examples, config.batch_size);
        result.log.epochs.push_back(stats);
    }
    return result;
}

TrainResult finetune(const Checkpoint& start, const std::vector<Example>& examples,
                     TrainConfig config) {
    bool has_conv1 = false;
    for (const auto& prefix : config.frozen) {
        if (prefix == "conv1") has_conv1 = true;
    }
    if (!has_conv1) config.frozen.push_back("conv1");
    return train(start.params, start.config, examples, config);
}

std::vector<int> predict(const ModelParams<float>& params, const NetworkConfig& net,
                         const std::vector<Example>& examples, int batch_size) {
    if (batch_size < 1) throw ConfigError("predict: batch_size must be >= 1");
    std::vector<int> labels;
    labels.reserve(examples.size());
    std::vector<int64_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);
    for (size_t first = 0; first < examples.size();
         first += static_cast<size_t>(batch_size)) {
        const size_t last = std::min(examples.size(), first + static_cast<size_t>(batch_size));
        auto [batch, unused] = make_batch(examples, order, first, last);
        ForwardTrace<float> trace = forward(params, net, batch, Mode::infer);
        for (int i = 0; i < trace.logits.dim(0); ++i) {
            int best = 0;
            for (int k = 1; k < trace.logits.dim(1); ++k) {
                if (trace.logits.at2(i, k) > trace.logits.at2(i, best)) best = k;
            }
            labels.push_back(best);
        }
    }
    return labels;
}

double accuracy(const ModelParams<float>& params, const NetworkConfig& net,
                const std::vector<Example>& examples, int batch_size) {
    if (examples.empty()) throw DataError("accuracy: no examples");
    std::vector<int> predicted = predict(params, net, examples, batch_size);
    int64_t hits = 0;
    for (size_t i = 0; i < examples.size(); ++i) {
        if (predicted[i] == examples[i].label) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(examples.size());
}

void write_train_log_csv(const std::filesystem::path& path, const TrainLog& log) {
    std::ofstream file(path, std::ios::trunc);
    if (!file) throw DataError("cannot open train log for writing: " + path.string());
    file << "epoch,mean_loss,train_accuracy\n";
    for (const EpochStats& e : log.epochs) {
        file << e.epoch << ',' << format_double(e.mean_loss) << ','
             << format_double(e.train_accuracy) << '\n';
    }
    if (!file) throw DataError("failed writing train log: " + path.string());
}

}  // namespace eo2sar::nn
