#pragma once

#include <filesystem>
#include <vector>

#include "eo2sar/data/image.hpp"
#include "eo2sar/nn/model.hpp"

namespace eo2sar::cam {

enum class CamMethod { grad_cam, gap_cam };

// Saliency for one chip and class. raw is at conv3 resolution and
// non-negative; normalized is the bilinear upsample to input resolution
// scaled so its maximum is 1 (all zero when the raw map is identically 0).
struct Heatmap {
    Tensor<float> raw;         // [h, w]
    Tensor<float> normalized;  // [S, S], values in [0, 1]
    int target_class = 0;
    CamMethod method = CamMethod::grad_cam;
};

// Channel weights are spatial means of d(logit)/d(conv3 activation),
// obtained from the engine's backward pass; map = relu(sum_k alpha_k A_k).
// chip is one [C, S, S] image; inference mode, no dropout.
Heatmap grad_cam(const nn::ModelParams<float>& params, const nn::NetworkConfig& config,
                 const Tensor<float>& chip, int target_class);

// Classic CAM through the GAP head: map = relu(sum_k fc_w[k,c] A_k).
Heatmap gap_cam(const nn::ModelParams<float>& params, const nn::NetworkConfig& config,
                const Tensor<float>& chip, int target_class);

struct CamMask {
    Tensor<uint8_t> mask;  // [S, S], 0 or 1
    double tau = 0.5;
};

// mask = normalized >= tau. Throws ConfigError for tau outside [0, 1].
CamMask threshold_mask(const Heatmap& heatmap, double tau = 0.5);

// Row-major argmax over the normalized map; first maximum wins.
std::pair<int, int> heatmap_argmax(const Heatmap& heatmap);

// Side-by-side panel: original chip | heatmap colorized (low = cold,
// high = warm) alpha-blended at 0.5 over the grayscale chip.
data::Image render_overlay(const Tensor<float>& chip, const Heatmap& heatmap);

// Three-column layout: chip | first heatmap | second heatmap.
data::Image render_panels(const Tensor<float>& chip, const Heatmap& before,
                          const Heatmap& after);

}  // namespace eo2sar::cam
