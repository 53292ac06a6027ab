#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "eo2sar/errors.hpp"
#include "eo2sar/tensor.hpp"

using namespace eo2sar;

TEST_CASE("shape_numel multiplies extents") {
    CHECK(shape_numel({2, 3, 4}) == 24);
    CHECK(shape_numel({7}) == 7);
    CHECK(shape_numel({}) == 1);
}

TEST_CASE("shape_numel rejects non-positive extents") {
    CHECK_THROWS_AS(shape_numel({2, 0, 4}), ConfigError);
    CHECK_THROWS_AS(shape_numel({-1}), ConfigError);
}

TEST_CASE("shape_str formats extents") {
    CHECK(shape_str({1, 16, 80, 80}) == "[1,16,80,80]");
    CHECK(shape_str({5}) == "[5]");
}

TEST_CASE("construction zero-fills and records shape") {
    Tensor<float> t(Shape{2, 3});
    CHECK(t.rank() == 2);
    CHECK(t.dim(0) == 2);
    CHECK(t.dim(1) == 3);
    CHECK(t.size() == 6);
    for (float v : t) CHECK(v == 0.0f);
}

TEST_CASE("construction from data validates length") {
    CHECK_NOTHROW(Tensor<float>(Shape{2, 2}, {1.f, 2.f, 3.f, 4.f}));
    CHECK_THROWS_AS(Tensor<float>(Shape{2, 2}, {1.f, 2.f, 3.f}), DimensionError);
}

TEST_CASE("four-index accessor is row-major") {
    Tensor<float> t(Shape{2, 3, 4, 5});
    t.at4(1, 2, 3, 4) = 9.0f;
    // Row-major: last axis fastest.
    CHECK(t[1 * 3 * 4 * 5 + 2 * 4 * 5 + 3 * 5 + 4] == 9.0f);
    t.at4(0, 0, 0, 1) = 5.0f;
    CHECK(t[1] == 5.0f);
}

TEST_CASE("two-index accessor is row-major") {
    Tensor<double> t(Shape{3, 4});
    t.at2(2, 1) = 7.0;
    CHECK(t[2 * 4 + 1] == 7.0);
}

TEST_CASE("full fills with a constant") {
    auto t = Tensor<float>::full(Shape{2, 2}, 3.5f);
    for (float v : t) CHECK(v == 3.5f);
}

TEST_CASE("cast converts element type and keeps shape") {
    Tensor<float> t(Shape{2, 2}, {1.f, 2.f, 3.f, 4.f});
    auto d = t.cast<double>();
    CHECK(d.shape() == t.shape());
    CHECK(d[3] == 4.0);
    auto back = d.cast<float>();
    CHECK(back[0] == 1.0f);
}

TEST_CASE("require_shape names both shapes on mismatch") {
    Tensor<float> t(Shape{2, 3});
    CHECK_NOTHROW(require_shape(t, Shape{2, 3}, "x"));
    try {
        require_shape(t, Shape{4, 3}, "logits");
        FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
        std::string msg = e.what();
        CHECK(msg.find("[2,3]") != std::string::npos);
        CHECK(msg.find("[4,3]") != std::string::npos);
        CHECK(msg.find("logits") != std::string::npos);
    }
}

TEST_CASE("all_finite detects poisoned values") {
    Tensor<float> t(Shape{3}, {1.f, 2.f, 3.f});
    CHECK(t.all_finite());
    t[1] = std::numeric_limits<float>::quiet_NaN();
    CHECK_FALSE(t.all_finite());
    t[1] = std::numeric_limits<float>::infinity();
    CHECK_FALSE(t.all_finite());
}
