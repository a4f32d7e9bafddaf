#pragma once

#include "piig/tensor.hpp"

namespace piig {

struct Stride2 {
  int y = 1;
  int x = 1;
};

enum class Padding { kSame, kValid };

struct ConvGeometry {
  int out_h = 0;
  int out_w = 0;
  int pad_top = 0;
  int pad_left = 0;
};

// Output extent and padding for a convolution. "Same" keeps out = ceil(in /
// stride) with the total padding split evenly, extra pixel on the
// bottom/right; "valid" uses no padding and requires the kernel to fit.
ConvGeometry conv_geometry(int in_h, int in_w, int k_h, int k_w,
                           Stride2 stride, Stride2 dilation, Padding padding);

// input (N,Cin,H,W), weight (Cout,Cin,kh,kw), bias (1,Cout,1,1).
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              Stride2 stride, Stride2 dilation, Padding padding);

// Transposed convolution. weight (Cin,Cout,kh,kw); output is exactly
// (N,Cout,H*stride.y,W*stride.x), which requires kernel - stride to be even
// per axis so the kernel centers on the upsampling grid.
Tensor conv2d_transpose(const Tensor& input, const Tensor& weight,
                        const Tensor& bias, Stride2 stride);

// Flattens (N,C,H,W) to rows of length C*H*W. weight (Dout,Din,1,1),
// bias (1,Dout,1,1); output (N,Dout,1,1).
Tensor fully_connected(const Tensor& input, const Tensor& weight,
                       const Tensor& bias);

}  // namespace piig
