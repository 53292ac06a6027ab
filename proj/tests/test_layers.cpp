#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstddef>

#include "eo2sar/errors.hpp"
#include "eo2sar/nn/gradcheck.hpp"
#include "eo2sar/nn/layers.hpp"
#include "test_util.hpp"

using namespace eo2sar;
using namespace eo2sar::nn;

TEST_CASE("finite differences recover known derivatives") {
    // Oracle self-check before it judges anything else.
    Tensor<double> x(Shape{3}, {1.0, 2.0, 3.0});
    auto grad_sum = finite_difference_gradient<double>(
        [](const Tensor<double>& t) {
            double s = 0;
            for (double v : t) s += v;
            return s;
        },
        x, 1e-4);
    for (double g : grad_sum) CHECK(g == doctest::Approx(1.0).epsilon(1e-6));

    Tensor<double> three(Shape{1}, {3.0});
    auto grad_sq = finite_difference_gradient<double>(
        [](const Tensor<double>& t) { return t[0] * t[0]; }, three, 1e-4);
    CHECK(std::abs(grad_sq[0] - 6.0) <= 1e-6);
}

TEST_CASE("maxpool takes window maxima") {
    Tensor<float> input(Shape{1, 1, 2, 2}, {1.f, 2.f, 3.f, 4.f});
    auto [out, cache] = maxpool2d(input);
    CHECK(out.shape() == Shape{1, 1, 1, 1});
    CHECK(out[0] == 4.0f);

    auto grad = maxpool2d_backward(Tensor<float>(Shape{1, 1, 1, 1}, {1.f}), cache);
    CHECK(grad[0] == 0.0f);
    CHECK(grad[1] == 0.0f);
    CHECK(grad[2] == 0.0f);
    CHECK(grad[3] == 1.0f);
}

TEST_CASE("maxpool ties route gradient to the first element") {
    auto input = Tensor<float>::full(Shape{1, 1, 4, 4}, 2.5f);
    auto [out, cache] = maxpool2d(input);
    for (float v : out) CHECK(v == 2.5f);
    auto grad = maxpool2d_backward(Tensor<float>::full(out.shape(), 1.0f), cache);
    // Each 2x2 window sends its whole gradient to the top-left corner.
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            CHECK(grad.at4(0, 0, i, j) == ((i % 2 == 0 && j % 2 == 0) ? 1.0f : 0.0f));
}

TEST_CASE("maxpool drops trailing pixels that do not fill a window") {
    Tensor<float> input(Shape{1, 1, 5, 5});
    auto [out, cache] = maxpool2d(input);
    CHECK(out.shape() == Shape{1, 1, 2, 2});
}

TEST_CASE("maxpool backward agrees with finite differences off ties") {
    Rng rng(20);
    Tensor<double> input(Shape{1, 2, 6, 6});
    // Distinct values guarantee no near-ties anywhere, so the subgradient
    // is the actual gradient at every probe point.
    for (std::size_t i = 0; i < input.size(); ++i)
        input[i] = static_cast<double>(i) * 0.01 + rng.uniform(0.0, 0.001);
    auto [out, cache] = maxpool2d(input);
    auto cot = random_tensor<double>(out.shape(), rng);
    auto grad = maxpool2d_backward(cot, cache);
    auto num = finite_difference_gradient<double>(
        [&](const Tensor<double>& x) {
            auto [o, c] = maxpool2d(x);
            double s = 0;
            for (std::size_t i = 0; i < o.size(); ++i) s += o[i] * cot[i];
            return s;
        },
        input, 1e-5);
    CHECK(relative_error(grad, num) <= 1e-5);
}

TEST_CASE("relu clamps negatives and kills their gradient") {
    Tensor<float> input(Shape{3}, {-1.f, 0.f, 2.f});
    auto [out, cache] = relu(input);
    CHECK(out[0] == 0.0f);
    CHECK(out[1] == 0.0f);
    CHECK(out[2] == 2.0f);
    auto grad = relu_backward(Tensor<float>::full(Shape{3}, 1.0f), cache);
    CHECK(grad[0] == 0.0f);
    CHECK(grad[1] == 0.0f);  // subgradient at 0 is 0
    CHECK(grad[2] == 1.0f);
}

TEST_CASE("relu backward agrees with finite differences away from zero") {
    Rng rng(21);
    auto input = random_tensor<double>({40}, rng);
    auto [out, cache] = relu(input);
    auto cot = random_tensor<double>(out.shape(), rng);
    auto grad = relu_backward(cot, cache);
    auto num = finite_difference_gradient<double>(
        [&](const Tensor<double>& x) {
            auto [o, c] = relu(x);
            double s = 0;
            for (std::size_t i = 0; i < o.size(); ++i) s += o[i] * cot[i];
            return s;
        },
        input, 1e-5);
    for (std::size_t i = 0; i < input.size(); ++i) {
        if (std::abs(input[i]) < 1e-4) continue;  // kink straddles the probe
        CHECK(std::abs(grad[i] - num[i]) <= 1e-6);
    }
}

TEST_CASE("dropout is the identity outside training") {
    Rng rng(22);
    auto input = random_tensor<float>({100}, rng);
    auto [out, cache] = dropout(input, 0.5, rng, false);
    CHECK(tensors_equal(out, input));
    CHECK(cache.scale.empty());
    auto grad = dropout_backward(Tensor<float>::full(Shape{100}, 2.0f), cache);
    for (float g : grad) CHECK(g == 2.0f);

    auto [out0, cache0] = dropout(input, 0.0, rng, true);
    CHECK(tensors_equal(out0, input));
}

TEST_CASE("dropout keeps roughly the survivor fraction and rescales") {
    Rng rng(Rng::derive(99, "dropout-test"));
    const int n = 10000;
    auto input = Tensor<float>::full(Shape{n}, 1.0f);
    auto [out, cache] = dropout(input, 0.5, rng, true);
    int kept = 0;
    double sum = 0.0;
    for (float v : out) {
        if (v != 0.0f) {
            ++kept;
            CHECK(v == doctest::Approx(2.0f));  // survivors scaled by 1/(1-p)
        }
        sum += v;
    }
    const double frac = static_cast<double>(kept) / n;
    CHECK(frac > 0.48);
    CHECK(frac < 0.52);
    // Mean of the output estimates the input mean; binomial sd of the
    // scaled sum is 2*sqrt(n*p*(1-p))/n = 0.01 here, test within 3 sd.
    CHECK(std::abs(sum / n - 1.0) < 0.03);
}

TEST_CASE("dropout backward reuses the forward mask") {
    Rng rng(23);
    auto input = random_tensor<float>({500}, rng);
    auto [out, cache] = dropout(input, 0.3, rng, true);
    auto grad = dropout_backward(Tensor<float>::full(Shape{500}, 1.0f), cache);
    for (std::size_t i = 0; i < input.size(); ++i) {
        if (out[i] == 0.0f && input[i] != 0.0f) {
            CHECK(grad[i] == 0.0f);
        } else if (input[i] != 0.0f) {
            CHECK(grad[i] == doctest::Approx(out[i] / input[i]));
        }
    }
}

TEST_CASE("dropout validates its probability") {
    Rng rng(24);
    Tensor<float> input(Shape{4});
    CHECK_THROWS_AS(dropout(input, 1.0, rng, true), ConfigError);
    CHECK_THROWS_AS(dropout(input, -0.1, rng, true), ConfigError);
    CHECK_NOTHROW(dropout(input, 0.999, rng, true));
}

TEST_CASE("global average pool reduces to per-channel means") {
    auto input = Tensor<float>::full(Shape{2, 3, 4, 4}, 0.75f);
    auto [out, cache] = global_avg_pool(input);
    CHECK(out.shape() == Shape{2, 3});
    for (float v : out) CHECK(v == doctest::Approx(0.75f));

    Tensor<float> one(Shape{1, 2, 1, 1}, {3.f, -1.f});
    auto [out1, cache1] = global_avg_pool(one);
    CHECK(out1[0] == 3.0f);
    CHECK(out1[1] == -1.0f);
}

TEST_CASE("global average pool conserves gradient mass") {
    Rng rng(25);
    auto input = random_tensor<double>({2, 3, 5, 5}, rng);
    auto [out, cache] = global_avg_pool(input);
    auto cot = random_tensor<double>(out.shape(), rng);
    auto grad = global_avg_pool_backward(cot, cache);
    double in_sum = 0, out_sum = 0;
    for (double v : grad) in_sum += v;
    for (double v : cot) out_sum += v;
    CHECK(std::abs(in_sum - out_sum) <= 1e-6);

    auto num = finite_difference_gradient<double>(
        [&](const Tensor<double>& x) {
            auto [o, c] = global_avg_pool(x);
            double s = 0;
            for (std::size_t i = 0; i < o.size(); ++i) s += o[i] * cot[i];
            return s;
        },
        input, 1e-5);
    CHECK(relative_error(grad, num) <= 1e-6);
}

TEST_CASE("dense applies weights then bias") {
    Tensor<float> x(Shape{2, 3}, {1.f, 2.f, 3.f, 4.f, 5.f, 6.f});
    Tensor<float> eye(Shape{3, 3});
    for (int i = 0; i < 3; ++i) eye.at2(i, i) = 1.0f;
    Tensor<float> zero_b(Shape{3});
    auto [same, c1] = dense(x, eye, zero_b);
    CHECK(tensors_equal(same, x));

    Tensor<float> zero_w(Shape{3, 2});
    Tensor<float> b(Shape{2}, {0.25f, -0.5f});
    auto [only_bias, c2] = dense(x, zero_w, b);
    CHECK(only_bias.shape() == Shape{2, 2});
    CHECK(only_bias.at2(0, 0) == 0.25f);
    CHECK(only_bias.at2(1, 1) == -0.5f);
}

TEST_CASE("dense backward agrees with finite differences") {
    Rng rng(26);
    auto x = random_tensor<double>({3, 4}, rng);
    auto w = random_tensor<double>({4, 2}, rng);
    auto b = random_tensor<double>({2}, rng);
    auto [out, cache] = dense(x, w, b);
    auto cot = random_tensor<double>(out.shape(), rng);
    auto grads = dense_backward(cot, cache, w);

    auto score = [&](const Tensor<double>& xi, const Tensor<double>& wi,
                     const Tensor<double>& bi) {
        auto [o, c] = dense(xi, wi, bi);
        double s = 0;
        for (std::size_t i = 0; i < o.size(); ++i) s += o[i] * cot[i];
        return s;
    };
    auto num_x = finite_difference_gradient<double>(
        [&](const Tensor<double>& t) { return score(t, w, b); }, x, 1e-5);
    auto num_w = finite_difference_gradient<double>(
        [&](const Tensor<double>& t) { return score(x, t, b); }, w, 1e-5);
    auto num_b = finite_difference_gradient<double>(
        [&](const Tensor<double>& t) { return score(x, w, t); }, b, 1e-5);
    CHECK(relative_error(grads.input, num_x) <= 1e-6);
    CHECK(relative_error(grads.weights, num_w) <= 1e-6);
    CHECK(relative_error(grads.bias, num_b) <= 1e-6);
}

TEST_CASE("uniform logits cost ln 2 per two-way decision") {
    Tensor<float> logits(Shape{1, 2});
    auto res = softmax_cross_entropy(logits, {0});
    CHECK(res.loss == doctest::Approx(std::log(2.0)).epsilon(1e-6));
    CHECK(res.grad_logits.at2(0, 0) == doctest::Approx(-0.5f));
    CHECK(res.grad_logits.at2(0, 1) == doctest::Approx(0.5f));
}

TEST_CASE("confident correct logits cost almost nothing") {
    Tensor<float> logits(Shape{1, 2}, {30.f, -30.f});
    auto res = softmax_cross_entropy(logits, {0});
    CHECK(res.loss >= 0.0f);
    CHECK(res.loss < 1e-6f);
    for (float g : res.grad_logits) CHECK(std::abs(g) < 1e-6f);
}

TEST_CASE("softmax gradient rows sum to zero") {
    Rng rng(27);
    auto logits = random_tensor<float>({5, 2}, rng, -4.f, 4.f);
    auto res = softmax_cross_entropy(logits, {0, 1, 1, 0, 1});
    for (int i = 0; i < 5; ++i) {
        float row = res.grad_logits.at2(i, 0) + res.grad_logits.at2(i, 1);
        CHECK(std::abs(row) <= 1e-6f);
    }
}

TEST_CASE("softmax survives extreme logits") {
    Tensor<float> logits(Shape{1, 2}, {1000.f, -1000.f});
    auto res = softmax_cross_entropy(logits, {1});
    CHECK(std::isfinite(res.loss));
    CHECK(res.grad_logits.all_finite());
}

TEST_CASE("softmax loss gradient agrees with finite differences") {
    Rng rng(28);
    auto logits = random_tensor<double>({4, 2}, rng, -3.0, 3.0);
    const std::vector<int> labels{0, 1, 0, 1};
    auto res = softmax_cross_entropy(logits, labels);
    auto num = finite_difference_gradient<double>(
        [&](const Tensor<double>& t) { return softmax_cross_entropy(t, labels).loss; }, logits,
        1e-5);
    CHECK(relative_error(res.grad_logits, num) <= 1e-5);
}

TEST_CASE("softmax rejects out-of-range labels") {
    Tensor<float> logits(Shape{2, 2});
    CHECK_THROWS_AS(softmax_cross_entropy(logits, {0, 2}), DataError);
    CHECK_THROWS_AS(softmax_cross_entropy(logits, {-1, 0}), DataError);
    CHECK_THROWS_AS(softmax_cross_entropy(logits, {0}), DimensionError);
}
