#include "eo2sar/data/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>

#include "eo2sar/errors.hpp"

namespace eo2sar::data {

Image read_png(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) {
        throw DataError("missing image file: " + path.string());
    }

    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&png, path.string().c_str())) {
        throw FormatError("cannot decode " + path.string() + ": " + png.message);
    }

    Image out;
    out.width = static_cast<int>(png.width);
    out.height = static_cast<int>(png.height);

    // Grayscale stays single-channel; everything else (palette, RGB, alpha)
    // is decoded to RGBA and flattened over black.
    const bool gray = PNG_IMAGE_SAMPLE_CHANNELS(png.format) == 1 &&
                      (png.format & PNG_FORMAT_FLAG_ALPHA) == 0;
    png.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGBA;

    std::vector<uint8_t> buffer(PNG_IMAGE_SIZE(png));
    if (!png_image_finish_read(&png, nullptr, buffer.data(), 0, nullptr)) {
        throw FormatError("cannot decode " + path.string() + ": " + png.message);
    }

    if (gray) {
        out.channels = 1;
        out.pixels = std::move(buffer);
        return out;
    }
    out.channels = 3;
    out.pixels.resize(static_cast<size_t>(out.width) * out.height * 3);
    for (size_t i = 0, n = static_cast<size_t>(out.width) * out.height; i < n; ++i) {
        const unsigned a = buffer[i * 4 + 3];
        for (int c = 0; c < 3; ++c) {
            out.pixels[i * 3 + static_cast<size_t>(c)] =
                static_cast<uint8_t>(buffer[i * 4 + static_cast<size_t>(c)] * a / 255);
        }
    }
    return out;
}

void write_png(const std::filesystem::path& path, const Image& image) {
    if (image.channels != 1 && image.channels != 3) {
        throw ConfigError("write_png: image must have 1 or 3 channels, has " +
                          std::to_string(image.channels));
    }
    if (image.width < 1 || image.height < 1 ||
        image.pixels.size() !=
            static_cast<size_t>(image.width) * image.height * image.channels) {
        throw ConfigError("write_png: image buffer does not match its extents");
    }
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(image.width);
    png.height = static_cast<png_uint_32>(image.height);
    png.format = image.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&png, path.string().c_str(), 0, image.pixels.data(), 0,
                                 nullptr)) {
        throw DataError("cannot write " + path.string() + ": " + png.message);
    }
}

Tensor<float> to_tensor(const Image& image) {
    if (image.channels != 1 && image.channels != 3) {
        throw ConfigError("to_tensor: image must have 1 or 3 channels, has " +
                          std::to_string(image.channels));
    }
    Tensor<float> out(Shape{3, image.height, image.width});
    const int64_t plane = static_cast<int64_t>(image.height) * image.width;
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            const int64_t i = static_cast<int64_t>(y) * image.width + x;
            for (int c = 0; c < 3; ++c) {
                const uint8_t v = image.channels == 1 ? image.at(x, y, 0) : image.at(x, y, c);
                out[c * plane + i] = static_cast<float>(v) / 255.0f;
            }
        }
    }
    return out;
}

Image to_image(const Tensor<float>& tensor) {
    if (tensor.rank() != 3 || (tensor.dim(0) != 1 && tensor.dim(0) != 3)) {
        throw DimensionError("to_image: expected [1|3,H,W], got " + shape_str(tensor.shape()));
    }
    Image out;
    out.channels = tensor.dim(0);
    out.height = tensor.dim(1);
    out.width = tensor.dim(2);
    out.pixels.resize(static_cast<size_t>(out.width) * out.height * out.channels);
    const int64_t plane = static_cast<int64_t>(out.height) * out.width;
    for (int c = 0; c < out.channels; ++c) {
        for (int64_t i = 0; i < plane; ++i) {
            float v = std::clamp(tensor[c * plane + i], 0.0f, 1.0f);
            out.pixels[static_cast<size_t>(i * out.channels + c)] =
                static_cast<uint8_t>(std::lround(v * 255.0f));
        }
    }
    return out;
}

Tensor<float> resize_bilinear(const Tensor<float>& src, int out_h, int out_w) {
    if (src.rank() != 3) {
        throw DimensionError("resize_bilinear: expected [C,H,W], got " + shape_str(src.shape()));
    }
    if (out_h < 1 || out_w < 1) throw ConfigError("resize_bilinear: output extents must be >= 1");
    const int c = src.dim(0), in_h = src.dim(1), in_w = src.dim(2);
    Tensor<float> out(Shape{c, out_h, out_w});

    // Align-corners sampling; a single source row or column broadcasts.
    const double sy = out_h > 1 && in_h > 1 ? static_cast<double>(in_h - 1) / (out_h - 1) : 0.0;
    const double sx = out_w > 1 && in_w > 1 ? static_cast<double>(in_w - 1) / (out_w - 1) : 0.0;

    for (int ch = 0; ch < c; ++ch) {
        const float* plane = src.data() + static_cast<int64_t>(ch) * in_h * in_w;
        float* dst = out.data() + static_cast<int64_t>(ch) * out_h * out_w;
        for (int y = 0; y < out_h; ++y) {
            const double fy = y * sy;
            const int y0 = static_cast<int>(fy);
            const int y1 = std::min(y0 + 1, in_h - 1);
            const double wy = fy - y0;
            for (int x = 0; x < out_w; ++x) {
                const double fx = x * sx;
                const int x0 = static_cast<int>(fx);
                const int x1 = std::min(x0 + 1, in_w - 1);
                const double wx = fx - x0;
                const double top = plane[y0 * in_w + x0] * (1.0 - wx) + plane[y0 * in_w + x1] * wx;
                const double bot = plane[y1 * in_w + x0] * (1.0 - wx) + plane[y1 * in_w + x1] * wx;
                dst[y * out_w + x] = static_cast<float>(top * (1.0 - wy) + bot * wy);
            }
        }
    }
    return out;
}

}  // namespace eo2sar::data
