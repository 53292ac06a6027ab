#include <benchmark/benchmark.h>

#include "eo2sar/nn/adam.hpp"
#include "eo2sar/nn/model.hpp"
#include "eo2sar/rng.hpp"

using namespace eo2sar;

namespace {

Tensor<float> random_tensor(const Shape& shape, Rng& rng) {
    Tensor<float> t(shape);
    for (auto& v : t) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    return t;
}

// Second conv stage at default geometry: the hottest op in training.
void BM_ConvForward(benchmark::State& state) {
    Rng rng(1);
    auto input = random_tensor({static_cast<int>(state.range(0)), 16, 40, 40}, rng);
    auto kernels = random_tensor({32, 16, 3, 3}, rng);
    auto bias = random_tensor({32}, rng);
    for (auto _ : state) {
        auto out = nn::conv2d_forward(input, kernels, bias, 1, 1);
        benchmark::DoNotOptimize(out.first.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ConvForward)->Arg(1)->Arg(8)->Arg(32);

void BM_ConvBackward(benchmark::State& state) {
    Rng rng(2);
    auto input = random_tensor({static_cast<int>(state.range(0)), 16, 40, 40}, rng);
    auto kernels = random_tensor({32, 16, 3, 3}, rng);
    auto bias = random_tensor({32}, rng);
    auto [out, cache] = nn::conv2d_forward(input, kernels, bias, 1, 1);
    auto grad_out = random_tensor(out.shape(), rng);
    for (auto _ : state) {
        auto grads = nn::conv2d_backward(grad_out, cache, kernels);
        benchmark::DoNotOptimize(grads.input.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ConvBackward)->Arg(1)->Arg(8)->Arg(32);

void BM_ModelForward(benchmark::State& state) {
    nn::NetworkConfig config;
    config.input_size = 48;
    auto params = nn::build_model<float>(config, 3);
    Rng rng(4);
    auto batch = random_tensor({static_cast<int>(state.range(0)), 3, 48, 48}, rng);
    for (auto _ : state) {
        auto trace = nn::forward(params, config, batch, nn::Mode::infer);
        benchmark::DoNotOptimize(trace.logits.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ModelForward)->Arg(1)->Arg(32);

void BM_TrainStep(benchmark::State& state) {
    nn::NetworkConfig config;
    config.input_size = 48;
    auto params = nn::build_model<float>(config, 5);
    Rng rng(6);
    auto batch = random_tensor({32, 3, 48, 48}, rng);
    std::vector<int> labels(32);
    for (size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 2);
    auto state_adam = nn::init_adam(params, nn::AdamConfig{});
    Rng dropout_rng(7);
    for (auto _ : state) {
        auto trace = nn::forward(params, config, batch, nn::Mode::train, &dropout_rng);
        auto lg = nn::softmax_cross_entropy(trace.logits, labels);
        auto back = nn::backward(params, config, trace, lg.grad_logits);
        nn::adam_step(params, back.grads, state_adam);
        benchmark::DoNotOptimize(params.fc_b.data());
    }
    state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_TrainStep);

void BM_AdamStep(benchmark::State& state) {
    nn::NetworkConfig config;
    auto params = nn::build_model<float>(config, 8);
    auto grads = nn::zero_grads(params);
    Rng rng(9);
    for (auto& [name, t] : grads.named())
        for (auto& v : *t) v = static_cast<float>(rng.uniform(-0.1, 0.1));
    auto adam = nn::init_adam(params, nn::AdamConfig{});
    for (auto _ : state) {
        nn::adam_step(params, grads, adam);
        benchmark::DoNotOptimize(params.conv1_k.data());
    }
}
BENCHMARK(BM_AdamStep);

}  // namespace

BENCHMARK_MAIN();
