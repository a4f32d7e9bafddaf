#include "piig/latent.hpp"

#include <stdexcept>
#include <vector>

namespace piig {

Tensor reparameterize(LatentSample& sample, const Tensor& eps) {
  if (!sample.mean.defined() || !sample.logvar.defined()) {
    throw std::invalid_argument("reparameterize: undefined latent sample");
  }
  if (!(sample.mean.shape() == sample.logvar.shape()) ||
      !(sample.mean.shape() == eps.shape())) {
    throw std::invalid_argument(
        "reparameterize: mean " + to_string(sample.mean.shape()) +
        ", logvar " + to_string(sample.logvar.shape()) + ", eps " +
        to_string(eps.shape()) + " must agree");
  }
  Tensor sigma = exp(scale(sample.logvar, 0.5f));
  sample.z = add(sample.mean, mul(sigma, eps));
  return sample.z;
}

Tensor sample_prior(int n, int latent_dim, RngStream& rng) {
  if (n <= 0 || latent_dim <= 0) {
    throw std::invalid_argument("sample_prior: non-positive dimensions");
  }
  std::vector<float> data(static_cast<std::size_t>(n) * latent_dim);
  for (auto& v : data) v = rng.normal();
  return Tensor::from_data({n, latent_dim, 1, 1}, std::move(data));
}

Tensor sample_prior(int n, int latent_dim, std::uint64_t seed) {
  RngStream rng(seed);
  return sample_prior(n, latent_dim, rng);
}

Tensor tile_latent(const Tensor& z, int h, int w) {
  return tile_spatial(z, h, w);
}

Tensor concat_inputs(const Tensor& masked_image, const Tensor& mask,
                     const Tensor& z_map) {
  const Shape4 is = masked_image.shape();
  const Shape4 ms = mask.shape();
  const Shape4 zs = z_map.shape();
  if (ms.c != 1) {
    throw std::invalid_argument("concat_inputs: mask must have one channel");
  }
  if (ms.h != is.h || ms.w != is.w || zs.h != is.h || zs.w != is.w ||
      zs.n != is.n) {
    throw std::invalid_argument("concat_inputs: image " + to_string(is) +
                                ", mask " + to_string(ms) + ", z " +
                                to_string(zs) + " must share N, H, W");
  }
  Tensor mask_b = ms.n == is.n ? mask : repeat_batch(mask, is.n);
  return concat_channels({masked_image, mask_b, z_map});
}

}  // namespace piig
