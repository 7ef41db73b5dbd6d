#pragma once

#include <vector>

#include "lfdf/tensor.hpp"

namespace lfdf::dconv {

// Learnable per-position sampling displacements for a k x k kernel.
// data is [H, W, 2*k*k], tap-major with (dy, dx) interleaved:
// channel 2n = dy of tap n, channel 2n+1 = dx of tap n, where tap
// n = i*k + j corresponds to the fixed offset (i - k/2, j - k/2).
struct OffsetField {
    Tensor data;
    int kernel_size = 3;

    int taps() const { return kernel_size * kernel_size; }
    void validate(int h, int w) const;
};

// k x k convolution kernel with bias; k odd.
struct ConvKernel {
    Tensor weights;  // [C_out, C_in, k, k]
    Tensor bias;     // [C_out]

    ConvKernel() = default;
    ConvKernel(int c_out, int c_in, int k)
        : weights(Tensor({c_out, c_in, k, k})), bias(Tensor({c_out})) {}

    int c_out() const { return weights.dim(0); }
    int c_in() const { return weights.dim(1); }
    int k() const { return weights.dim(2); }
};

// 4-neighbor bilinear read of feature [H, W, C] at fractional (y, x).
// Coordinates outside [0, H-1] x [0, W-1] read as zeros; corners that fall
// outside contribute nothing (partial weights at the border).
void bilinear_sample(const Tensor& feature, double y, double x, double* out);
std::vector<double> bilinear_sample(const Tensor& feature, double y, double x);

// Deformable 2D convolution, stride 1, zero padding k/2, spatial size
// preserved: out(p0) = sum_n w(p_n) . sample(feature, p0 + p_n + dp_n) + bias.
Tensor deform_conv2d(const Tensor& feature, const OffsetField& offsets,
                     const ConvKernel& kernel);

struct DeformConvGrads {
    Tensor d_feature;  // [H, W, C_in]
    Tensor d_weights;  // [C_out, C_in, k, k]
    Tensor d_bias;     // [C_out]
    Tensor d_offsets;  // [H, W, 2*k*k]
};

// Exact gradients of deform_conv2d under upstream gradient d_out [H, W, C_out].
// The bilinear derivative at exactly-integer coordinates uses the
// left-continuous convention (slope of the cell below / to the left).
DeformConvGrads deform_conv2d_grad(const Tensor& feature, const OffsetField& offsets,
                                   const ConvKernel& kernel, const Tensor& d_out);

}  // namespace lfdf::dconv
