#include "piig/networks.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace piig {

namespace {

Tensor normal_init(Shape4 shape, double stddev, RngStream& rng) {
  std::vector<float> v(static_cast<std::size_t>(shape.numel()));
  for (auto& x : v) x = static_cast<float>(stddev * rng.normal64());
  return Tensor::from_data(shape, std::move(v), /*requires_grad=*/true);
}

Tensor he_init(Shape4 shape, int fan_in, RngStream& rng, double gain = 1.0) {
  return normal_init(shape, gain * std::sqrt(2.0 / fan_in), rng);
}

Conv2dLayer make_conv(int cin, int cout, int k, Stride2 stride, Stride2 dil,
                      RngStream& rng, double gain = 1.0) {
  Conv2dLayer l;
  l.weight = he_init({cout, cin, k, k}, cin * k * k, rng, gain);
  l.bias = Tensor::zeros({1, cout, 1, 1}, /*requires_grad=*/true);
  l.stride = stride;
  l.dilation = dil;
  l.padding = Padding::kSame;
  return l;
}

Conv2dLayer copy_detached(const Conv2dLayer& l) {
  Conv2dLayer out = l;
  out.weight = l.weight.detached();
  out.bias = l.bias.detached();
  return out;
}

void add_conv(NetworkParams& p, const std::string& name, const Conv2dLayer& l) {
  p.add(name + ".weight", l.weight);
  p.add(name + ".bias", l.bias);
}

constexpr int kGenWidth1 = 16;
constexpr int kGenWidth2 = 32;
constexpr int kGenWidth3 = 64;

}  // namespace

// ---------------------------------------------------------------------------
// Extractor

ExtractorNet ExtractorNet::init(int image_channels, int resolution,
                                int latent_dim, RngStream& rng) {
  if (resolution <= 0 || resolution % 8 != 0) {
    throw std::invalid_argument(
        "ExtractorNet: resolution must be a positive multiple of 8, got " +
        std::to_string(resolution));
  }
  if (latent_dim <= 0) {
    throw std::invalid_argument("ExtractorNet: non-positive latent width");
  }
  ExtractorNet net;
  net.latent_dim = latent_dim;
  net.conv1 = make_conv(image_channels, 64, 5, {2, 2}, {1, 1}, rng);
  net.conv2 = make_conv(64, 128, 5, {2, 2}, {1, 1}, rng);
  net.conv3 = make_conv(128, 256, 5, {2, 2}, {1, 1}, rng);
  net.conv4 = make_conv(256, 256, 5, {1, 1}, {1, 1}, rng);
  const int side = resolution / 8;
  net.flatten_dim = side * side * 256;
  // Small head weights start the code near the prior.
  net.fc_mean_w = normal_init({latent_dim, net.flatten_dim, 1, 1}, 0.01, rng);
  net.fc_mean_b = Tensor::zeros({1, latent_dim, 1, 1}, true);
  net.fc_logvar_w = normal_init({latent_dim, net.flatten_dim, 1, 1}, 0.01, rng);
  net.fc_logvar_b = Tensor::zeros({1, latent_dim, 1, 1}, true);
  return net;
}

Tensor ExtractorNet::features(const Tensor& image) const {
  const Shape4 s = image.shape();
  if (s.h % 8 != 0 || s.w % 8 != 0) {
    throw std::invalid_argument(
        "ExtractorNet: input sides must divide by 8, got " + to_string(s));
  }
  Tensor h = elu(apply(conv1, image));
  h = elu(apply(conv2, h));
  h = elu(apply(conv3, h));
  h = elu(apply(conv4, h));
  return h;  // fully_connected flattens (N,C,H,W) rows itself
}

LatentSample ExtractorNet::forward(const Tensor& image) const {
  Tensor feat = features(image);
  const Shape4 fs = feat.shape();
  const int flat = fs.c * fs.h * fs.w;
  if (flat != flatten_dim) {
    throw std::invalid_argument(
        "ExtractorNet: feature width " + std::to_string(flat) +
        " does not match the configured head width " +
        std::to_string(flatten_dim));
  }
  LatentSample out;
  out.mean = fully_connected(feat, fc_mean_w, fc_mean_b);
  out.logvar = fully_connected(feat, fc_logvar_w, fc_logvar_b);
  return out;
}

NetworkParams ExtractorNet::params(const std::string& prefix) const {
  NetworkParams p;
  add_conv(p, prefix + "/conv1", conv1);
  add_conv(p, prefix + "/conv2", conv2);
  add_conv(p, prefix + "/conv3", conv3);
  add_conv(p, prefix + "/conv4", conv4);
  p.add(prefix + "/fc_mean.weight", fc_mean_w);
  p.add(prefix + "/fc_mean.bias", fc_mean_b);
  p.add(prefix + "/fc_logvar.weight", fc_logvar_w);
  p.add(prefix + "/fc_logvar.bias", fc_logvar_b);
  return p;
}

ExtractorNet ExtractorNet::detached() const {
  ExtractorNet out = *this;
  out.conv1 = copy_detached(conv1);
  out.conv2 = copy_detached(conv2);
  out.conv3 = copy_detached(conv3);
  out.conv4 = copy_detached(conv4);
  out.fc_mean_w = fc_mean_w.detached();
  out.fc_mean_b = fc_mean_b.detached();
  out.fc_logvar_w = fc_logvar_w.detached();
  out.fc_logvar_b = fc_logvar_b.detached();
  return out;
}

// ---------------------------------------------------------------------------
// Generator

GeneratorNet GeneratorNet::init(int image_channels, int latent_dim,
                                RngStream& rng) {
  if (image_channels <= 0 || latent_dim <= 0) {
    throw std::invalid_argument("GeneratorNet: non-positive dimensions");
  }
  GeneratorNet net;
  net.image_channels = image_channels;
  net.latent_dim = latent_dim;
  const int in_ch = image_channels + 1 + latent_dim;
  net.enc1 = make_conv(in_ch, kGenWidth1, 3, {1, 1}, {1, 1}, rng);
  net.enc2 = make_conv(kGenWidth1, kGenWidth2, 3, {2, 2}, {1, 1}, rng);
  net.enc3 = make_conv(kGenWidth2, kGenWidth3, 3, {2, 2}, {1, 1}, rng);
  net.dil1 = make_conv(kGenWidth3, kGenWidth3, 3, {1, 1}, {2, 2}, rng);
  net.dil2 = make_conv(kGenWidth3, kGenWidth3, 3, {1, 1}, {4, 4}, rng);
  net.dil3 = make_conv(kGenWidth3, kGenWidth3, 3, {1, 1}, {8, 8}, rng);
  net.dec1_w = he_init({kGenWidth3, kGenWidth2, 4, 4}, kGenWidth3 * 16, rng);
  net.dec1_b = Tensor::zeros({1, kGenWidth2, 1, 1}, true);
  net.dec2_w = he_init({kGenWidth2, kGenWidth1, 4, 4}, kGenWidth2 * 16, rng);
  net.dec2_b = Tensor::zeros({1, kGenWidth1, 1, 1}, true);
  // Gentle output scale keeps the tanh unsaturated at start.
  net.out_conv =
      make_conv(kGenWidth1, image_channels, 3, {1, 1}, {1, 1}, rng, 0.5);
  return net;
}

Tensor GeneratorNet::forward(const Tensor& masked_image, const Tensor& mask,
                             const Tensor& z_map) const {
  const Shape4 s = masked_image.shape();
  if (s.c != image_channels) {
    throw std::invalid_argument("GeneratorNet: expected " +
                                std::to_string(image_channels) +
                                " image channels, got " + to_string(s));
  }
  if (z_map.shape().c != latent_dim) {
    throw std::invalid_argument("GeneratorNet: z map has " +
                                std::to_string(z_map.shape().c) +
                                " channels, expected " +
                                std::to_string(latent_dim));
  }
  if (s.h % 4 != 0 || s.w % 4 != 0) {
    throw std::invalid_argument(
        "GeneratorNet: input sides must divide by 4, got " + to_string(s));
  }
  Tensor x = concat_inputs(masked_image, mask, z_map);
  Tensor h = elu(apply(enc1, x));
  h = elu(apply(enc2, h));
  h = elu(apply(enc3, h));
  h = elu(apply(dil1, h));
  h = elu(apply(dil2, h));
  h = elu(apply(dil3, h));
  h = elu(conv2d_transpose(h, dec1_w, dec1_b, {2, 2}));
  h = elu(conv2d_transpose(h, dec2_w, dec2_b, {2, 2}));
  return tanh(apply(out_conv, h));
}

NetworkParams GeneratorNet::params(const std::string& prefix) const {
  NetworkParams p;
  add_conv(p, prefix + "/enc1", enc1);
  add_conv(p, prefix + "/enc2", enc2);
  add_conv(p, prefix + "/enc3", enc3);
  add_conv(p, prefix + "/dil1", dil1);
  add_conv(p, prefix + "/dil2", dil2);
  add_conv(p, prefix + "/dil3", dil3);
  p.add(prefix + "/dec1.weight", dec1_w);
  p.add(prefix + "/dec1.bias", dec1_b);
  p.add(prefix + "/dec2.weight", dec2_w);
  p.add(prefix + "/dec2.bias", dec2_b);
  add_conv(p, prefix + "/out", out_conv);
  return p;
}

GeneratorNet GeneratorNet::detached() const {
  GeneratorNet out = *this;
  out.enc1 = copy_detached(enc1);
  out.enc2 = copy_detached(enc2);
  out.enc3 = copy_detached(enc3);
  out.dil1 = copy_detached(dil1);
  out.dil2 = copy_detached(dil2);
  out.dil3 = copy_detached(dil3);
  out.dec1_w = dec1_w.detached();
  out.dec1_b = dec1_b.detached();
  out.dec2_w = dec2_w.detached();
  out.dec2_b = dec2_b.detached();
  out.out_conv = copy_detached(out_conv);
  return out;
}

// ---------------------------------------------------------------------------
// Critics

CriticStack CriticStack::init(int in_channels, int input_h, int input_w,
                              const std::vector<int>& widths, RngStream& rng) {
  if (widths.empty()) {
    throw std::invalid_argument("CriticStack: no layer widths");
  }
  CriticStack s;
  s.input_h = input_h;
  s.input_w = input_w;
  int c = in_channels;
  int h = input_h;
  int w = input_w;
  for (int width : widths) {
    s.convs.push_back(make_conv(c, width, 5, {2, 2}, {1, 1}, rng));
    c = width;
    h = (h + 1) / 2;
    w = (w + 1) / 2;
    if (h < 1 || w < 1) {
      throw std::invalid_argument("CriticStack: input too small for depth");
    }
  }
  const int flat = c * h * w;
  s.fc_w = he_init({1, flat, 1, 1}, flat, rng);
  s.fc_b = Tensor::zeros({1, 1, 1, 1}, true);
  return s;
}

NetworkParams CriticStack::params(const std::string& prefix) const {
  NetworkParams p;
  for (std::size_t i = 0; i < convs.size(); ++i) {
    add_conv(p, prefix + "/conv" + std::to_string(i + 1), convs[i]);
  }
  p.add(prefix + "/fc.weight", fc_w);
  p.add(prefix + "/fc.bias", fc_b);
  return p;
}

CriticStack CriticStack::detached() const {
  CriticStack out = *this;
  for (auto& l : out.convs) l = copy_detached(l);
  out.fc_w = fc_w.detached();
  out.fc_b = fc_b.detached();
  return out;
}

CriticNets CriticNets::init(int image_channels, int resolution, int hole_h,
                            int hole_w, RngStream& rng) {
  CriticNets nets;
  nets.global_net = CriticStack::init(image_channels, resolution, resolution,
                                      {24, 48, 96, 96}, rng);
  nets.local_net =
      CriticStack::init(image_channels, hole_h, hole_w, {24, 48, 96}, rng);
  return nets;
}

std::pair<Tensor, Tensor> critic_forward(const CriticNets& nets,
                                         const Tensor& image,
                                         const Tensor& hole_crop) {
  const Shape4 is = image.shape();
  const Shape4 cs = hole_crop.shape();
  if (cs.h > is.h || cs.w > is.w) {
    throw std::invalid_argument("critic_forward: crop " + to_string(cs) +
                                " larger than image " + to_string(is));
  }
  return {nets.global_net.score(image), nets.local_net.score(hole_crop)};
}

Tensor composite(const Tensor& raw, const Tensor& generated,
                 const Tensor& mask) {
  if (!(raw.shape() == generated.shape())) {
    throw std::invalid_argument("composite: raw " + to_string(raw.shape()) +
                                " vs generated " +
                                to_string(generated.shape()));
  }
  return where_mask(mask, raw, generated);
}

}  // namespace piig
