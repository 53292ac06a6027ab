#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "eo2sar/errors.hpp"
#include "eo2sar/nn/adam.hpp"
#include "test_util.hpp"

using namespace eo2sar;
using namespace eo2sar::nn;

namespace {

// Smallest parameter set the optimizer will accept; every tensor is tiny so
// hand-computed expectations stay readable.
template <typename T>
ModelParams<T> tiny_params() {
    ModelParams<T> p;
    p.conv1_k = Tensor<T>(Shape{1, 1, 1, 1});
    p.conv1_b = Tensor<T>(Shape{1});
    p.conv2_k = Tensor<T>(Shape{1, 1, 1, 1});
    p.conv2_b = Tensor<T>(Shape{1});
    p.conv3_k = Tensor<T>(Shape{1, 1, 1, 1});
    p.conv3_b = Tensor<T>(Shape{1});
    p.fc_w = Tensor<T>(Shape{1, 2});
    p.fc_b = Tensor<T>(Shape{2});
    return p;
}

}  // namespace

TEST_CASE("zero gradients leave parameters alone but advance the clock") {
    auto p = tiny_params<float>();
    p.conv1_k[0] = 0.5f;
    auto g = zero_grads(p);
    auto state = init_adam(p, AdamConfig{});
    CHECK(state.t == 0);
    adam_step(p, g, state);
    CHECK(state.t == 1);
    CHECK(p.conv1_k[0] == 0.5f);
    adam_step(p, g, state);
    CHECK(state.t == 2);
}

TEST_CASE("first step moves a unit-gradient weight by about the learning rate") {
    auto p = tiny_params<double>();
    auto g = zero_grads(p);
    g.conv1_k[0] = 1.0;
    auto state = init_adam(p, AdamConfig{});
    adam_step(p, g, state);
    // Bias correction makes m_hat = 1 and v_hat = 1 on the first step, so
    // the update is -lr / (1 + eps).
    CHECK(std::abs(p.conv1_k[0] + 1e-4) <= 1e-9);
    // Only the touched tensor moved.
    CHECK(p.conv2_k[0] == 0.0);
    CHECK(p.fc_b[0] == 0.0);
}

TEST_CASE("descends a quadratic") {
    auto p = tiny_params<double>();
    p.fc_w.at2(0, 0) = 1.0;
    AdamConfig cfg;
    cfg.learning_rate = 0.01;
    auto state = init_adam(p, cfg);
    double prev = 1.0;
    for (int window = 0; window < 4; ++window) {
        for (int i = 0; i < 50; ++i) {
            auto g = zero_grads(p);
            g.fc_w.at2(0, 0) = 2.0 * p.fc_w.at2(0, 0);  // d/dx of x^2
            adam_step(p, g, state);
        }
        const double now = std::abs(p.fc_w.at2(0, 0));
        CHECK(now < prev);
        prev = now;
    }
    CHECK(prev < 0.2);
    CHECK(state.t == 200);
}

TEST_CASE("frozen prefixes pin weights and moments bitwise") {
    Rng rng(50);
    auto p = tiny_params<float>();
    for (auto& [name, t] : p.named())
        for (auto& v : *t) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    auto before = p;
    auto state = init_adam(p, AdamConfig{});

    auto g = zero_grads(p);
    for (auto& [name, t] : g.named())
        for (auto& v : *t) v = 1.0f;

    adam_step(p, g, state, {"conv1"});

    CHECK(tensors_equal(p.conv1_k, before.conv1_k));
    CHECK(tensors_equal(p.conv1_b, before.conv1_b));
    for (float v : state.m.conv1_k) CHECK(v == 0.0f);
    for (float v : state.v.conv1_k) CHECK(v == 0.0f);
    for (float v : state.m.conv1_b) CHECK(v == 0.0f);

    CHECK_FALSE(tensors_equal(p.conv2_k, before.conv2_k));
    CHECK_FALSE(tensors_equal(p.fc_b, before.fc_b));
    CHECK(state.m.conv2_k[0] != 0.0f);
}

TEST_CASE("second moments never go negative") {
    Rng rng(51);
    auto p = tiny_params<float>();
    auto state = init_adam(p, AdamConfig{});
    for (int step = 0; step < 100; ++step) {
        auto g = zero_grads(p);
        for (auto& [name, t] : g.named())
            for (auto& v : *t) v = static_cast<float>(rng.normal(0.0, 3.0));
        adam_step(p, g, state);
        for (auto& [name, t] : state.v.named())
            for (float v : *t) CHECK(v >= 0.0f);
    }
}

TEST_CASE("non-finite gradients are refused by name") {
    auto p = tiny_params<float>();
    auto state = init_adam(p, AdamConfig{});
    auto g = zero_grads(p);
    g.conv2_k[0] = std::numeric_limits<float>::quiet_NaN();
    try {
        adam_step(p, g, state);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("conv2_k") != std::string::npos);
    }
    // A frozen tensor's gradient is allowed to be garbage.
    auto g2 = zero_grads(p);
    g2.conv1_k[0] = std::numeric_limits<float>::infinity();
    CHECK_NOTHROW(adam_step(p, g2, state, {"conv1"}));
}

TEST_CASE("gradient shape mismatch is rejected") {
    auto p = tiny_params<float>();
    auto state = init_adam(p, AdamConfig{});
    auto g = zero_grads(p);
    g.fc_b = Tensor<float>(Shape{3});
    CHECK_THROWS_AS(adam_step(p, g, state), DimensionError);
}
