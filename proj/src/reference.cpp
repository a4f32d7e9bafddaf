#include "piig/reference.hpp"

#include <cmath>
#include <stdexcept>

namespace piig::ref {

namespace {

std::int64_t index_of(const Shape4& s, int n, int c, int y, int x) {
  return ((static_cast<std::int64_t>(n) * s.c + c) * s.h + y) * s.w + x;
}

double elu_scalar(double x) { return x > 0.0 ? x : std::expm1(x); }
double elu_slope_scalar(double x) { return x > 0.0 ? 1.0 : std::exp(x); }

}  // namespace

Arr Arr::zeros(Shape4 s) {
  Arr a;
  a.shape = s;
  a.v.assign(static_cast<std::size_t>(s.numel()), 0.0);
  return a;
}

double& Arr::at(int n, int c, int y, int x) {
  return v[static_cast<std::size_t>(index_of(shape, n, c, y, x))];
}

double Arr::at(int n, int c, int y, int x) const {
  return v[static_cast<std::size_t>(index_of(shape, n, c, y, x))];
}

Arr from_tensor(const Tensor& t) {
  Arr a;
  a.shape = t.shape();
  a.v.assign(t.data(), t.data() + t.numel());
  return a;
}

Arr conv2d(const Arr& input, const Arr& weight, const Arr& bias,
           Stride2 stride, Stride2 dilation, Padding padding) {
  const Shape4 xs = input.shape;
  const Shape4 ws = weight.shape;  // (Cout, Cin, kh, kw)
  if (ws.c != xs.c) throw std::invalid_argument("ref conv2d: channel mismatch");
  const ConvGeometry g =
      conv_geometry(xs.h, xs.w, ws.h, ws.w, stride, dilation, padding);
  Arr out = Arr::zeros({xs.n, ws.n, g.out_h, g.out_w});
  for (int n = 0; n < xs.n; ++n)
    for (int co = 0; co < ws.n; ++co)
      for (int oy = 0; oy < g.out_h; ++oy)
        for (int ox = 0; ox < g.out_w; ++ox) {
          double acc = bias.v[static_cast<std::size_t>(co)];
          for (int ci = 0; ci < xs.c; ++ci)
            for (int ky = 0; ky < ws.h; ++ky) {
              const int iy = oy * stride.y - g.pad_top + ky * dilation.y;
              if (iy < 0 || iy >= xs.h) continue;
              for (int kx = 0; kx < ws.w; ++kx) {
                const int ix = ox * stride.x - g.pad_left + kx * dilation.x;
                if (ix < 0 || ix >= xs.w) continue;
                acc += weight.at(co, ci, ky, kx) * input.at(n, ci, iy, ix);
              }
            }
          out.at(n, co, oy, ox) = acc;
        }
  return out;
}

Arr conv2d_transpose(const Arr& input, const Arr& weight, const Arr& bias,
                     Stride2 stride) {
  const Shape4 xs = input.shape;
  const Shape4 ws = weight.shape;  // (Cin, Cout, kh, kw)
  if (ws.n != xs.c) {
    throw std::invalid_argument("ref conv2d_transpose: channel mismatch");
  }
  const int pad_y = (ws.h - stride.y) / 2;
  const int pad_x = (ws.w - stride.x) / 2;
  const int oh = xs.h * stride.y;
  const int ow = xs.w * stride.x;
  Arr out = Arr::zeros({xs.n, ws.c, oh, ow});
  for (int n = 0; n < xs.n; ++n)
    for (int ci = 0; ci < xs.c; ++ci)
      for (int iy = 0; iy < xs.h; ++iy)
        for (int ix = 0; ix < xs.w; ++ix) {
          const double xv = input.at(n, ci, iy, ix);
          for (int co = 0; co < ws.c; ++co)
            for (int ky = 0; ky < ws.h; ++ky) {
              const int y = iy * stride.y - pad_y + ky;
              if (y < 0 || y >= oh) continue;
              for (int kx = 0; kx < ws.w; ++kx) {
                const int x = ix * stride.x - pad_x + kx;
                if (x < 0 || x >= ow) continue;
                out.at(n, co, y, x) += xv * weight.at(ci, co, ky, kx);
              }
            }
        }
  for (int n = 0; n < xs.n; ++n)
    for (int co = 0; co < ws.c; ++co)
      for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x)
          out.at(n, co, y, x) += bias.v[static_cast<std::size_t>(co)];
  return out;
}

Arr fully_connected(const Arr& input, const Arr& weight, const Arr& bias) {
  const Shape4 xs = input.shape;
  const Shape4 ws = weight.shape;  // (Dout, Din, 1, 1)
  const std::int64_t din = static_cast<std::int64_t>(xs.c) * xs.h * xs.w;
  if (ws.c != din) {
    throw std::invalid_argument("ref fully_connected: width mismatch");
  }
  Arr out = Arr::zeros({xs.n, ws.n, 1, 1});
  for (int n = 0; n < xs.n; ++n)
    for (int o = 0; o < ws.n; ++o) {
      double acc = bias.v[static_cast<std::size_t>(o)];
      const double* row = weight.v.data() + static_cast<std::int64_t>(o) * din;
      const double* x = input.v.data() + static_cast<std::int64_t>(n) * din;
      for (std::int64_t d = 0; d < din; ++d) acc += row[d] * x[d];
      out.v[static_cast<std::size_t>(n) * ws.n + o] = acc;
    }
  return out;
}

Arr elu(const Arr& a) {
  Arr out = a;
  for (auto& x : out.v) x = elu_scalar(x);
  return out;
}

Arr elu_slope(const Arr& a) {
  Arr out = a;
  for (auto& x : out.v) x = elu_slope_scalar(x);
  return out;
}

Arr tanh(const Arr& a) {
  Arr out = a;
  for (auto& x : out.v) x = std::tanh(x);
  return out;
}

Arr apply(const RefConv& l, const Arr& x) {
  return conv2d(x, l.weight, l.bias, l.stride, l.dilation, l.padding);
}

namespace {

RefConv mirror_conv(const Conv2dLayer& l) {
  RefConv out;
  out.weight = from_tensor(l.weight);
  out.bias = from_tensor(l.bias);
  out.stride = l.stride;
  out.dilation = l.dilation;
  out.padding = l.padding;
  return out;
}

void add_conv_views(std::vector<ParamView>& views, const std::string& name,
                    RefConv& l) {
  views.push_back({name + ".weight", &l.weight});
  views.push_back({name + ".bias", &l.bias});
}

}  // namespace

// ---------------------------------------------------------------------------
// Extractor mirror

RefExtractor RefExtractor::mirror(const ExtractorNet& net) {
  RefExtractor r;
  r.conv1 = mirror_conv(net.conv1);
  r.conv2 = mirror_conv(net.conv2);
  r.conv3 = mirror_conv(net.conv3);
  r.conv4 = mirror_conv(net.conv4);
  r.fc_mean_w = from_tensor(net.fc_mean_w);
  r.fc_mean_b = from_tensor(net.fc_mean_b);
  r.fc_logvar_w = from_tensor(net.fc_logvar_w);
  r.fc_logvar_b = from_tensor(net.fc_logvar_b);
  r.flatten_dim = net.flatten_dim;
  return r;
}

Arr RefExtractor::features(const Arr& image) const {
  Arr h = elu(apply(conv1, image));
  h = elu(apply(conv2, h));
  h = elu(apply(conv3, h));
  h = elu(apply(conv4, h));
  return h;
}

std::pair<Arr, Arr> RefExtractor::forward(const Arr& image) const {
  Arr feat = features(image);
  return {fully_connected(feat, fc_mean_w, fc_mean_b),
          fully_connected(feat, fc_logvar_w, fc_logvar_b)};
}

std::vector<ParamView> RefExtractor::param_views() {
  std::vector<ParamView> views;
  add_conv_views(views, "conv1", conv1);
  add_conv_views(views, "conv2", conv2);
  add_conv_views(views, "conv3", conv3);
  add_conv_views(views, "conv4", conv4);
  views.push_back({"fc_mean.weight", &fc_mean_w});
  views.push_back({"fc_mean.bias", &fc_mean_b});
  views.push_back({"fc_logvar.weight", &fc_logvar_w});
  views.push_back({"fc_logvar.bias", &fc_logvar_b});
  return views;
}

// ---------------------------------------------------------------------------
// Generator mirror

RefGenerator RefGenerator::mirror(const GeneratorNet& net) {
  RefGenerator r;
  r.enc1 = mirror_conv(net.enc1);
  r.enc2 = mirror_conv(net.enc2);
  r.enc3 = mirror_conv(net.enc3);
  r.dil1 = mirror_conv(net.dil1);
  r.dil2 = mirror_conv(net.dil2);
  r.dil3 = mirror_conv(net.dil3);
  r.dec1_w = from_tensor(net.dec1_w);
  r.dec1_b = from_tensor(net.dec1_b);
  r.dec2_w = from_tensor(net.dec2_w);
  r.dec2_b = from_tensor(net.dec2_b);
  r.out_conv = mirror_conv(net.out_conv);
  return r;
}

Arr RefGenerator::forward(const Arr& masked_image, const Arr& mask,
                          const Arr& z_map) const {
  const Shape4 s = masked_image.shape;
  // Concatenate [image, mask, z] along channels; a batch-1 mask repeats.
  Arr x = Arr::zeros({s.n, s.c + 1 + z_map.shape.c, s.h, s.w});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < s.h; ++y)
        for (int xx = 0; xx < s.w; ++xx)
          x.at(n, c, y, xx) = masked_image.at(n, c, y, xx);
    const int mn = mask.shape.n == 1 ? 0 : n;
    for (int y = 0; y < s.h; ++y)
      for (int xx = 0; xx < s.w; ++xx)
        x.at(n, s.c, y, xx) = mask.at(mn, 0, y, xx);
    for (int c = 0; c < z_map.shape.c; ++c)
      for (int y = 0; y < s.h; ++y)
        for (int xx = 0; xx < s.w; ++xx)
          x.at(n, s.c + 1 + c, y, xx) = z_map.at(n, c, y, xx);
  }
  Arr h = elu(apply(enc1, x));
  h = elu(apply(enc2, h));
  h = elu(apply(enc3, h));
  h = elu(apply(dil1, h));
  h = elu(apply(dil2, h));
  h = elu(apply(dil3, h));
  h = elu(conv2d_transpose(h, dec1_w, dec1_b, {2, 2}));
  h = elu(conv2d_transpose(h, dec2_w, dec2_b, {2, 2}));
  return tanh(apply(out_conv, h));
}

std::vector<ParamView> RefGenerator::param_views() {
  std::vector<ParamView> views;
  add_conv_views(views, "enc1", enc1);
  add_conv_views(views, "enc2", enc2);
  add_conv_views(views, "enc3", enc3);
  add_conv_views(views, "dil1", dil1);
  add_conv_views(views, "dil2", dil2);
  add_conv_views(views, "dil3", dil3);
  views.push_back({"dec1.weight", &dec1_w});
  views.push_back({"dec1.bias", &dec1_b});
  views.push_back({"dec2.weight", &dec2_w});
  views.push_back({"dec2.bias", &dec2_b});
  add_conv_views(views, "out", out_conv);
  return views;
}

// ---------------------------------------------------------------------------
// Critic mirror

RefCritic RefCritic::mirror(const CriticStack& stack) {
  RefCritic r;
  for (const auto& l : stack.convs) r.convs.push_back(mirror_conv(l));
  r.fc_w = from_tensor(stack.fc_w);
  r.fc_b = from_tensor(stack.fc_b);
  return r;
}

Arr RefCritic::score(const Arr& x) const {
  Arr h = x;
  for (const auto& l : convs) h = elu(apply(l, h));
  return fully_connected(h, fc_w, fc_b);
}

Arr RefCritic::input_grad(const Arr& x) const {
  // Forward, keeping each layer's input and pre-activation.
  std::vector<Arr> inputs;   // input to conv i
  std::vector<Arr> pres;     // conv i output before the ELU
  Arr h = x;
  for (const auto& l : convs) {
    inputs.push_back(h);
    Arr pre = apply(l, h);
    pres.push_back(pre);
    h = elu(pre);
  }

  // d(sum_n score_n)/d(fc input): each sample's row is the fc weight row.
  const Shape4 hs = h.shape;
  const std::int64_t din = static_cast<std::int64_t>(hs.c) * hs.h * hs.w;
  Arr g = Arr::zeros(hs);
  for (int n = 0; n < hs.n; ++n)
    for (std::int64_t d = 0; d < din; ++d)
      g.v[static_cast<std::size_t>(n * din + d)] =
          fc_w.v[static_cast<std::size_t>(d)];

  for (int i = static_cast<int>(convs.size()) - 1; i >= 0; --i) {
    // Through the ELU.
    const Arr& pre = pres[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < g.v.size(); ++k)
      g.v[k] *= elu_slope_scalar(pre.v[k]);

    // Through the convolution, to its input.
    const RefConv& l = convs[static_cast<std::size_t>(i)];
    const Shape4 xs = inputs[static_cast<std::size_t>(i)].shape;
    const Shape4 ws = l.weight.shape;
    const ConvGeometry geo = conv_geometry(xs.h, xs.w, ws.h, ws.w, l.stride,
                                           l.dilation, l.padding);
    Arr gin = Arr::zeros(xs);
    for (int n = 0; n < xs.n; ++n)
      for (int co = 0; co < ws.n; ++co)
        for (int oy = 0; oy < geo.out_h; ++oy)
          for (int ox = 0; ox < geo.out_w; ++ox) {
            const double go = g.at(n, co, oy, ox);
            if (go == 0.0) continue;
            for (int ci = 0; ci < xs.c; ++ci)
              for (int ky = 0; ky < ws.h; ++ky) {
                const int iy = oy * l.stride.y - geo.pad_top + ky * l.dilation.y;
                if (iy < 0 || iy >= xs.h) continue;
                for (int kx = 0; kx < ws.w; ++kx) {
                  const int ix =
                      ox * l.stride.x - geo.pad_left + kx * l.dilation.x;
                  if (ix < 0 || ix >= xs.w) continue;
                  gin.at(n, ci, iy, ix) += l.weight.at(co, ci, ky, kx) * go;
                }
              }
          }
    g = std::move(gin);
  }
  return g;
}

std::vector<ParamView> RefCritic::param_views() {
  std::vector<ParamView> views;
  for (std::size_t i = 0; i < convs.size(); ++i) {
    add_conv_views(views, "conv" + std::to_string(i + 1), convs[i]);
  }
  views.push_back({"fc.weight", &fc_w});
  views.push_back({"fc.bias", &fc_b});
  return views;
}

}  // namespace piig::ref
