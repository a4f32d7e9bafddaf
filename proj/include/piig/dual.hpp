#pragma once

#include "piig/ops.hpp"
#include "piig/tensor.hpp"

namespace piig {

// Value/tangent pair for a recorded forward-mode pass. Running a network on
// a Dual computes a directional derivative of its output with respect to the
// input while still recording a graph, so parameter gradients of that
// directional derivative come out of an ordinary backward call.
struct Dual {
  Tensor value;
  Tensor tangent;
};

inline Dual conv2d(const Dual& x, const Tensor& weight, const Tensor& bias,
                   Stride2 stride, Stride2 dilation, Padding padding) {
  Tensor zero_bias = Tensor::zeros(bias.shape());
  return {conv2d(x.value, weight, bias, stride, dilation, padding),
          conv2d(x.tangent, weight, zero_bias, stride, dilation, padding)};
}

inline Dual fully_connected(const Dual& x, const Tensor& weight,
                            const Tensor& bias) {
  Tensor zero_bias = Tensor::zeros(bias.shape());
  return {fully_connected(x.value, weight, bias),
          fully_connected(x.tangent, weight, zero_bias)};
}

inline Dual elu(const Dual& x) {
  return {elu(x.value), mul(x.tangent, elu_slope(x.value))};
}

}  // namespace piig
