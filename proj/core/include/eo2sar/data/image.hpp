#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "eo2sar/tensor.hpp"

namespace eo2sar::data {

// 8-bit image, HWC row-major, 1 (gray) or 3 (RGB) channels.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<uint8_t> pixels;

    uint8_t& at(int x, int y, int c) {
        return pixels[static_cast<size_t>((y * width + x) * channels + c)];
    }
    uint8_t at(int x, int y, int c) const {
        return pixels[static_cast<size_t>((y * width + x) * channels + c)];
    }
};

// Throws DataError if the file cannot be opened, FormatError if it is not a
// decodable 8-bit gray or RGB PNG.
Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& image);

// [3, H, W] floats in [0, 1]; a gray image is replicated across channels.
Tensor<float> to_tensor(const Image& image);

// Clamps to [0, 1] and quantizes. Accepts [1|3, H, W].
Image to_image(const Tensor<float>& tensor);

// Bilinear resample of [C, H, W] (align-corners). A 1x1 source broadcasts.
Tensor<float> resize_bilinear(const Tensor<float>& src, int out_h, int out_w);

}  // namespace eo2sar::data
