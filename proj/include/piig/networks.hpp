#pragma once

#include <utility>
#include <vector>

#include "piig/dual.hpp"
#include "piig/latent.hpp"
#include "piig/ops.hpp"
#include "piig/params.hpp"
#include "piig/rng.hpp"
#include "piig/tensor.hpp"

namespace piig {

struct Conv2dLayer {
  Tensor weight;
  Tensor bias;
  Stride2 stride{1, 1};
  Stride2 dilation{1, 1};
  Padding padding = Padding::kSame;
};

template <class T>
T apply(const Conv2dLayer& l, const T& x) {
  return conv2d(x, l.weight, l.bias, l.stride, l.dilation, l.padding);
}

// Encoder that maps an image to latent distribution parameters. Four ELU
// convolutions (5x5; widths 64, 128, 256, 256; strides 2, 2, 2, 1) shrink
// the image by 8x, then two parallel heads read mean and log-variance off
// the flattened features.
struct ExtractorNet {
  Conv2dLayer conv1, conv2, conv3, conv4;
  Tensor fc_mean_w, fc_mean_b;
  Tensor fc_logvar_w, fc_logvar_b;
  int latent_dim = 0;
  int flatten_dim = 0;

  static ExtractorNet init(int image_channels, int resolution, int latent_dim,
                           RngStream& rng);
  // Convolution stack output, flattened to (N, D, 1, 1). Works for any
  // input whose sides divide by 8.
  Tensor features(const Tensor& image) const;
  LatentSample forward(const Tensor& image) const;
  NetworkParams params(const std::string& prefix) const;
  ExtractorNet detached() const;
};

// Completion network: concatenated [masked image, mask, tiled z] runs
// through a strided encoder, three dilated bottleneck convolutions
// (dilations 2, 4, 8), and a transposed-convolution decoder onto a tanh
// output. Needs H and W divisible by 4.
struct GeneratorNet {
  Conv2dLayer enc1, enc2, enc3;
  Conv2dLayer dil1, dil2, dil3;
  Tensor dec1_w, dec1_b;
  Tensor dec2_w, dec2_b;
  Conv2dLayer out_conv;
  int image_channels = 0;
  int latent_dim = 0;

  static GeneratorNet init(int image_channels, int latent_dim, RngStream& rng);
  Tensor forward(const Tensor& masked_image, const Tensor& mask,
                 const Tensor& z_map) const;
  NetworkParams params(const std::string& prefix) const;
  GeneratorNet detached() const;
};

// Shared shape for the two Wasserstein critics: strided ELU convolutions
// into a single linear score per sample. No output nonlinearity.
struct CriticStack {
  std::vector<Conv2dLayer> convs;
  Tensor fc_w, fc_b;
  int input_h = 0, input_w = 0;

  static CriticStack init(int in_channels, int input_h, int input_w,
                          const std::vector<int>& widths, RngStream& rng);

  template <class T>
  T score(const T& x) const {
    T h = x;
    for (const auto& l : convs) h = elu(apply(l, h));
    return fully_connected(h, fc_w, fc_b);
  }

  NetworkParams params(const std::string& prefix) const;
  CriticStack detached() const;
};

struct CriticNets {
  CriticStack global_net;  // full frames
  CriticStack local_net;   // hole crops

  static CriticNets init(int image_channels, int resolution, int hole_h,
                         int hole_w, RngStream& rng);
};

// (global score, local score), each (N, 1, 1, 1).
std::pair<Tensor, Tensor> critic_forward(const CriticNets& nets,
                                         const Tensor& image,
                                         const Tensor& hole_crop);

// Keeps known pixels from raw and fills the hole from generated:
// mask 1 = known, 0 = missing. Bitwise-preserving on the known region.
Tensor composite(const Tensor& raw, const Tensor& generated,
                 const Tensor& mask);

}  // namespace piig
