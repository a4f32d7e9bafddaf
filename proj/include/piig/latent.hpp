#pragma once

#include <cstdint>

#include "piig/rng.hpp"
#include "piig/tensor.hpp"

namespace piig {

// Diagonal Gaussian over the latent code, parameterized by mean and
// log-variance maps of shape (N, J, 1, 1).
struct LatentSample {
  Tensor mean;
  Tensor logvar;
  Tensor z;  // set by reparameterize

  int latent_dim() const { return mean.defined() ? mean.shape().c : 0; }
};

// z = mean + exp(logvar / 2) * eps. Gradients flow to mean and logvar; eps
// is treated as a constant. Stores z on the sample and returns it.
Tensor reparameterize(LatentSample& sample, const Tensor& eps);

// Standard normal draws of shape (N, J, 1, 1).
Tensor sample_prior(int n, int latent_dim, RngStream& rng);
Tensor sample_prior(int n, int latent_dim, std::uint64_t seed);

// Broadcasts (N, J, 1, 1) codes over a spatial grid.
Tensor tile_latent(const Tensor& z, int h, int w);

// Channel concatenation in the fixed order [image, mask, z]. A mask with
// batch 1 is repeated across the batch.
Tensor concat_inputs(const Tensor& masked_image, const Tensor& mask,
                     const Tensor& z_map);

}  // namespace piig
