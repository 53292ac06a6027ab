#include "eo2sar/cam/cam.hpp"

#include <algorithm>
#include <cmath>

#include "eo2sar/errors.hpp"

namespace eo2sar::cam {

namespace {

// Weighted channel sum over the post-ReLU conv3 maps, rectified, then
// upsampled to input size and scaled so the final maximum is 1.
Heatmap assemble(const Tensor<float>& conv3_relu, const std::vector<float>& alpha, int input_size,
                 int target_class, CamMethod method) {
    const int k = conv3_relu.dim(1);
    const int h = conv3_relu.dim(2);
    const int w = conv3_relu.dim(3);

    Heatmap heatmap;
    heatmap.target_class = target_class;
    heatmap.method = method;
    heatmap.raw = Tensor<float>(Shape{h, w});
    for (int c = 0; c < k; ++c) {
        const float* plane = conv3_relu.data() + static_cast<int64_t>(c) * h * w;
        for (int64_t i = 0; i < static_cast<int64_t>(h) * w; ++i) {
            heatmap.raw[i] += alpha[static_cast<size_t>(c)] * plane[i];
        }
    }
    for (int64_t i = 0; i < heatmap.raw.size(); ++i) {
        heatmap.raw[i] = std::max(heatmap.raw[i], 0.0f);
    }

    Tensor<float> wrapped(Shape{1, h, w}, std::vector<float>(
                                              heatmap.raw.data(),
                                              heatmap.raw.data() + heatmap.raw.size()));
    Tensor<float> up = data::resize_bilinear(wrapped, input_size, input_size);
    heatmap.normalized = Tensor<float>(Shape{input_size, input_size});
    float max_value = 0.0f;
    for (int64_t i = 0; i < up.size(); ++i) max_value = std::max(max_value, up[i]);
    if (max_value > 0.0f) {
        for (int64_t i = 0; i < up.size(); ++i) heatmap.normalized[i] = up[i] / max_value;
    }
    return heatmap;
}

nn::ForwardTrace<float> run(const nn::ModelParams<float>& params,
                            const nn::NetworkConfig& config, const Tensor<float>& chip,
                            int target_class) {
    if (target_class < 0 || target_class >= nn::NetworkConfig::num_classes) {
        throw ConfigError("cam: target class " + std::to_string(target_class) +
                          " out of range [0," + std::to_string(nn::NetworkConfig::num_classes) +
                          ")");
    }
    if (chip.rank() != 3) {
        throw DimensionError("cam: expected one [C,S,S] chip, got " + shape_str(chip.shape()));
    }
    Tensor<float> batch(Shape{1, chip.dim(0), chip.dim(1), chip.dim(2)},
                        std::vector<float>(chip.data(), chip.data() + chip.size()));
    return nn::forward(params, config, batch, nn::Mode::infer);
}

}  // namespace

Heatmap grad_cam(const nn::ModelParams<float>& params, const nn::NetworkConfig& config,
                 const Tensor<float>& chip, int target_class) {
    nn::ForwardTrace<float> trace = run(params, config, chip, target_class);

    // d(logit_c)/d(conv3_relu) via the engine's head backward passes.
    Tensor<float> grad_logits(trace.logits.shape());
    grad_logits.at2(0, target_class) = 1.0f;
    nn::DenseGrads<float> head = nn::dense_backward(grad_logits, trace.dense_cache, params.fc_w);
    Tensor<float> grad_maps = nn::global_avg_pool_backward(head.input, trace.gap_cache);

    const int k = trace.conv3_relu.dim(1);
    const int64_t plane =
        static_cast<int64_t>(trace.conv3_relu.dim(2)) * trace.conv3_relu.dim(3);
    std::vector<float> alpha(static_cast<size_t>(k));
    for (int c = 0; c < k; ++c) {
        const float* g = grad_maps.data() + static_cast<int64_t>(c) * plane;
        float sum = 0.0f;
        for (int64_t i = 0; i < plane; ++i) sum += g[i];
        alpha[static_cast<size_t>(c)] = sum / static_cast<float>(plane);
    }
    return assemble(trace.conv3_relu, alpha, config.input_size, target_class,
                    CamMethod::grad_cam);
}

Heatmap gap_cam(const nn::ModelParams<float>& params, const nn::NetworkConfig& config,
                const Tensor<float>& chip, int target_class) {
    nn::ForwardTrace<float> trace = run(params, config, chip, target_class);
    const int k = trace.conv3_relu.dim(1);
    std::vector<float> alpha(static_cast<size_t>(k));
    for (int c = 0; c < k; ++c) alpha[static_cast<size_t>(c)] = params.fc_w.at2(c, target_class);
    return assemble(trace.conv3_relu, alpha, config.input_size, target_class, CamMethod::gap_cam);
}

CamMask threshold_mask(const Heatmap& heatmap, double tau) {
    if (tau < 0.0 || tau > 1.0) {
        throw ConfigError("threshold_mask: tau must lie in [0, 1], got " + std::to_string(tau));
    }
    CamMask mask;
    mask.tau = tau;
    mask.mask = Tensor<uint8_t>(heatmap.normalized.shape());
    for (int64_t i = 0; i < heatmap.normalized.size(); ++i) {
        mask.mask[i] = heatmap.normalized[i] >= static_cast<float>(tau) ? 1 : 0;
    }
    return mask;
}

std::pair<int, int> heatmap_argmax(const Heatmap& heatmap) {
    const int h = heatmap.normalized.dim(0);
    const int w = heatmap.normalized.dim(1);
    int best = 0;
    for (int64_t i = 1; i < heatmap.normalized.size(); ++i) {
        if (heatmap.normalized[i] > heatmap.normalized[best]) best = static_cast<int>(i);
    }
    (void)h;
    return {best / w, best % w};  // (row, col)
}

namespace {

// Low = cold blue, high = warm red.
void colormap(float t, float rgb[3]) {
    rgb[0] = std::clamp(1.5f - std::abs(4.0f * t - 3.0f), 0.0f, 1.0f);
    rgb[1] = std::clamp(1.5f - std::abs(4.0f * t - 2.0f), 0.0f, 1.0f);
    rgb[2] = std::clamp(1.5f - std::abs(4.0f * t - 1.0f), 0.0f, 1.0f);
}

float luminance(const Tensor<float>& chip, int64_t pixel) {
    const int64_t plane = static_cast<int64_t>(chip.dim(1)) * chip.dim(2);
    float sum = 0.0f;
    for (int c = 0; c < chip.dim(0); ++c) sum += chip[c * plane + pixel];
    return sum / static_cast<float>(chip.dim(0));
}

void paint_chip(data::Image& out, int x_offset, const Tensor<float>& chip) {
    const int size = chip.dim(1);
    const int64_t plane = static_cast<int64_t>(size) * size;
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            for (int c = 0; c < 3; ++c) {
                const int src = chip.dim(0) == 3 ? c : 0;
                const float v =
                    std::clamp(chip[src * plane + static_cast<int64_t>(y) * size + x], 0.0f, 1.0f);
                out.at(x_offset + x, y, c) = static_cast<uint8_t>(std::lround(v * 255.0f));
            }
        }
    }
}

void paint_blend(data::Image& out, int x_offset, const Tensor<float>& chip,
                 const Heatmap& heatmap) {
    const int size = chip.dim(1);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const int64_t pixel = static_cast<int64_t>(y) * size + x;
            const float gray = std::clamp(luminance(chip, pixel), 0.0f, 1.0f);
            float rgb[3];
            colormap(heatmap.normalized[pixel], rgb);
            for (int c = 0; c < 3; ++c) {
                const float v = 0.5f * rgb[c] + 0.5f * gray;
                out.at(x_offset + x, y, c) = static_cast<uint8_t>(std::lround(v * 255.0f));
            }
        }
    }
}

void require_same_size(const Tensor<float>& chip, const Heatmap& heatmap) {
    if (chip.rank() != 3 || heatmap.normalized.rank() != 2 ||
        chip.dim(1) != heatmap.normalized.dim(0) || chip.dim(2) != heatmap.normalized.dim(1) ||
        chip.dim(1) != chip.dim(2)) {
        throw DimensionError("render: chip " + shape_str(chip.shape()) +
                             " does not match heatmap " + shape_str(heatmap.normalized.shape()));
    }
}

}  // namespace

data::Image render_overlay(const Tensor<float>& chip, const Heatmap& heatmap) {
    require_same_size(chip, heatmap);
    const int size = chip.dim(1);
    data::Image out;
    out.width = 2 * size;
    out.height = size;
    out.channels = 3;
    out.pixels.assign(static_cast<size_t>(out.width) * out.height * 3, 0);
    paint_chip(out, 0, chip);
    paint_blend(out, size, chip, heatmap);
    return out;
}

data::Image render_panels(const Tensor<float>& chip, const Heatmap& before,
                          const Heatmap& after) {
    require_same_size(chip, before);
    require_same_size(chip, after);
    const int size = chip.dim(1);
    data::Image out;
    out.width = 3 * size;
    out.height = size;
    out.channels = 3;
    out.pixels.assign(static_cast<size_t>(out.width) * out.height * 3, 0);
    paint_chip(out, 0, chip);
    paint_blend(out, size, chip, before);
    paint_blend(out, 2 * size, chip, after);
    return out;
}

}  // namespace eo2sar::cam
