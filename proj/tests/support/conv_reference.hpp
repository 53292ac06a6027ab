#pragma once

#include "eo2sar/tensor.hpp"

// Brute-force convolution oracle. Deliberately written as the naive six
// nested loops with no shared code or tricks from the engine implementation,
// so the two can disagree.
template <typename T>
eo2sar::Tensor<T> conv2d_reference(const eo2sar::Tensor<T>& input,
                                   const eo2sar::Tensor<T>& kernels,
                                   const eo2sar::Tensor<T>& bias, int stride, int padding) {
    const int n = input.dim(0);
    const int cin = input.dim(1);
    const int h = input.dim(2);
    const int w = input.dim(3);
    const int cout = kernels.dim(0);
    const int kh = kernels.dim(2);
    const int kw = kernels.dim(3);
    const int out_h = (h + 2 * padding - kh) / stride + 1;
    const int out_w = (w + 2 * padding - kw) / stride + 1;

    eo2sar::Tensor<T> out(eo2sar::Shape{n, cout, out_h, out_w});
    for (int in = 0; in < n; ++in) {
        for (int o = 0; o < cout; ++o) {
            for (int i = 0; i < out_h; ++i) {
                for (int j = 0; j < out_w; ++j) {
                    T acc = bias[o];
                    for (int c = 0; c < cin; ++c) {
                        for (int u = 0; u < kh; ++u) {
                            for (int v = 0; v < kw; ++v) {
                                const int y = i * stride + u - padding;
                                const int x = j * stride + v - padding;
                                if (y < 0 || y >= h || x < 0 || x >= w) continue;
                                acc += kernels.at4(o, c, u, v) * input.at4(in, c, y, x);
                            }
                        }
                    }
                    out.at4(in, o, i, j) = acc;
                }
            }
        }
    }
    return out;
}
