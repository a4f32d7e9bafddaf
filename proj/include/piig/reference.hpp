#pragma once

// Double-precision, loop-based mirrors of the networks and layer ops.
// These share no code with the fast float path (beyond the padding
// geometry helper) and exist as independent oracles for finite-difference
// gradient checks and second-order cross-checks in the tests and the
// gradcheck command.

#include <string>
#include <utility>
#include <vector>

#include "piig/networks.hpp"
#include "piig/ops.hpp"
#include "piig/tensor.hpp"

namespace piig::ref {

// Dense double tensor in the same NCHW layout as Tensor.
struct Arr {
  Shape4 shape{0, 0, 0, 0};
  std::vector<double> v;

  static Arr zeros(Shape4 s);
  double& at(int n, int c, int y, int x);
  double at(int n, int c, int y, int x) const;
  std::int64_t numel() const { return shape.numel(); }
};

Arr from_tensor(const Tensor& t);

// Naive layer forward passes; geometry identical to the float ops.
Arr conv2d(const Arr& input, const Arr& weight, const Arr& bias,
           Stride2 stride, Stride2 dilation, Padding padding);
Arr conv2d_transpose(const Arr& input, const Arr& weight, const Arr& bias,
                     Stride2 stride);
Arr fully_connected(const Arr& input, const Arr& weight, const Arr& bias);
Arr elu(const Arr& a);
Arr elu_slope(const Arr& a);
Arr tanh(const Arr& a);

// A parameter of a mirror network, addressable for perturbation. Views are
// listed in the same order as the float network's params() list.
struct ParamView {
  std::string name;
  Arr* arr = nullptr;
};

struct RefConv {
  Arr weight, bias;
  Stride2 stride{1, 1};
  Stride2 dilation{1, 1};
  Padding padding = Padding::kSame;
};

Arr apply(const RefConv& l, const Arr& x);

struct RefExtractor {
  RefConv conv1, conv2, conv3, conv4;
  Arr fc_mean_w, fc_mean_b, fc_logvar_w, fc_logvar_b;
  int flatten_dim = 0;

  static RefExtractor mirror(const ExtractorNet& net);
  Arr features(const Arr& image) const;
  // (mean, logvar)
  std::pair<Arr, Arr> forward(const Arr& image) const;
  std::vector<ParamView> param_views();
};

struct RefGenerator {
  RefConv enc1, enc2, enc3, dil1, dil2, dil3;
  Arr dec1_w, dec1_b, dec2_w, dec2_b;
  RefConv out_conv;

  static RefGenerator mirror(const GeneratorNet& net);
  Arr forward(const Arr& masked_image, const Arr& mask, const Arr& z_map) const;
  std::vector<ParamView> param_views();
};

struct RefCritic {
  std::vector<RefConv> convs;
  Arr fc_w, fc_b;

  static RefCritic mirror(const CriticStack& stack);
  // (N, 1, 1, 1) scores.
  Arr score(const Arr& x) const;
  // Gradient of the summed scores with respect to the input, by naive
  // reverse passes through the stack.
  Arr input_grad(const Arr& x) const;
  std::vector<ParamView> param_views();
};

}  // namespace piig::ref
