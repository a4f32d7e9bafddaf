#include "piig/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace piig {

namespace {

using MatCM = Eigen::MatrixXf;
using MatRM = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatRM>;
using CMapRM = Eigen::Map<const MatRM>;

std::shared_ptr<detail::Node> require_node(const Tensor& t, const char* where) {
  auto n = t.node();
  if (!n) throw std::invalid_argument(std::string(where) + ": undefined tensor");
  return n;
}

void check_bias(const Tensor& bias, int channels, const char* where) {
  const Shape4 s = bias.shape();
  if (s.n != 1 || s.c != channels || s.h != 1 || s.w != 1) {
    throw std::invalid_argument(std::string(where) + ": bias shape " +
                                to_string(s) + " does not match " +
                                std::to_string(channels) + " channels");
  }
}

// Gathers a (Cout x N*OH*OW) matrix from NCHW, or scatters it back.
void gather_out(const float* nchw, MatCM& m, int n, int c, std::int64_t hw) {
  for (int b = 0; b < n; ++b)
    for (int ch = 0; ch < c; ++ch) {
      const float* src = nchw + (static_cast<std::int64_t>(b) * c + ch) * hw;
      for (std::int64_t i = 0; i < hw; ++i) m(ch, b * hw + i) = src[i];
    }
}

}  // namespace

ConvGeometry conv_geometry(int in_h, int in_w, int k_h, int k_w, Stride2 stride,
                           Stride2 dilation, Padding padding) {
  if (in_h <= 0 || in_w <= 0)
    throw std::invalid_argument("conv_geometry: empty input");
  if (stride.y <= 0 || stride.x <= 0)
    throw std::invalid_argument("conv_geometry: non-positive stride");
  if (dilation.y <= 0 || dilation.x <= 0)
    throw std::invalid_argument("conv_geometry: non-positive dilation");
  const int eff_h = (k_h - 1) * dilation.y + 1;
  const int eff_w = (k_w - 1) * dilation.x + 1;
  ConvGeometry g;
  if (padding == Padding::kSame) {
    g.out_h = (in_h + stride.y - 1) / stride.y;
    g.out_w = (in_w + stride.x - 1) / stride.x;
    const int pad_h = std::max((g.out_h - 1) * stride.y + eff_h - in_h, 0);
    const int pad_w = std::max((g.out_w - 1) * stride.x + eff_w - in_w, 0);
    g.pad_top = pad_h / 2;
    g.pad_left = pad_w / 2;
  } else {
    if (eff_h > in_h || eff_w > in_w) {
      throw std::invalid_argument(
          "conv_geometry: kernel does not fit input, empty output");
    }
    g.out_h = (in_h - eff_h) / stride.y + 1;
    g.out_w = (in_w - eff_w) / stride.x + 1;
  }
  return g;
}

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              Stride2 stride, Stride2 dilation, Padding padding) {
  auto xn = require_node(input, "conv2d");
  auto wn = require_node(weight, "conv2d");
  auto bn = require_node(bias, "conv2d");
  const Shape4 xs = xn->shape;
  const Shape4 ws = wn->shape;
  if (ws.c != xs.c) {
    throw std::invalid_argument("conv2d: channel mismatch, input " +
                                to_string(xs) + " weight " + to_string(ws));
  }
  check_bias(bias, ws.n, "conv2d");
  const ConvGeometry g =
      conv_geometry(xs.h, xs.w, ws.h, ws.w, stride, dilation, padding);

  const int cout = ws.n;
  const int k = xs.c * ws.h * ws.w;         // receptive field size
  const std::int64_t ohw = static_cast<std::int64_t>(g.out_h) * g.out_w;
  const std::int64_t m = xs.n * ohw;        // output positions across batch

  // im2col over the whole batch; column j holds the receptive field of one
  // output position, so the convolution is a single GEMM.
  auto col = std::make_shared<MatCM>(k, m);
  {
    MatCM& cm = *col;
    for (int b = 0; b < xs.n; ++b)
      for (int oy = 0; oy < g.out_h; ++oy)
        for (int ox = 0; ox < g.out_w; ++ox) {
          const std::int64_t j = (b * g.out_h + oy) * g.out_w + ox;
          const int y0 = oy * stride.y - g.pad_top;
          const int x0 = ox * stride.x - g.pad_left;
          float* dst = cm.data() + j * k;
          for (int ci = 0; ci < xs.c; ++ci) {
            const float* plane =
                xn->value.data() + (static_cast<std::int64_t>(b) * xs.c + ci) *
                                       xs.h * xs.w;
            for (int ky = 0; ky < ws.h; ++ky) {
              const int y = y0 + ky * dilation.y;
              for (int kx = 0; kx < ws.w; ++kx) {
                const int x = x0 + kx * dilation.x;
                *dst++ = (y >= 0 && y < xs.h && x >= 0 && x < xs.w)
                             ? plane[y * xs.w + x]
                             : 0.0f;
              }
            }
          }
        }
  }

  MatCM prod(cout, m);
  {
    CMapRM wm(wn->value.data(), cout, k);
    prod.noalias() = wm * (*col);
  }

  const Shape4 out_shape{xs.n, cout, g.out_h, g.out_w};
  std::vector<float> out(static_cast<std::size_t>(out_shape.numel()));
  for (int b = 0; b < xs.n; ++b)
    for (int co = 0; co < cout; ++co) {
      const float bv = bn->value[co];
      float* dst = out.data() + (static_cast<std::int64_t>(b) * cout + co) * ohw;
      for (std::int64_t i = 0; i < ohw; ++i) dst[i] = prod(co, b * ohw + i) + bv;
    }

  return detail::make_op(
      out_shape, std::move(out), {xn, wn, bn},
      [xn, wn, bn, col, g, stride, dilation, ohw](detail::Node& self) {
        const Shape4 xs = xn->shape;
        const Shape4 ws = wn->shape;
        const int cout = ws.n;
        const int k = xs.c * ws.h * ws.w;
        const std::int64_t m = xs.n * ohw;

        MatCM gout(cout, m);
        gather_out(self.grad.data(), gout, xs.n, cout, ohw);

        if (bn->requires_grad) {
          // Summed by hand in a fixed order: Eigen reductions choose their
          // vector split from runtime buffer alignment, which costs
          // bit-identical reruns.
          for (int co = 0; co < cout; ++co) {
            double acc = 0.0;
            for (std::int64_t j = 0; j < m; ++j) acc += gout(co, j);
            bn->grad[co] += static_cast<float>(acc);
          }
        }
        if (wn->requires_grad) {
          MapRM gw(wn->grad.data(), cout, k);
          gw.noalias() += gout * col->transpose();
        }
        if (xn->requires_grad) {
          MatCM gcol(k, m);
          {
            CMapRM wm(wn->value.data(), cout, k);
            gcol.noalias() = wm.transpose() * gout;
          }
          // col2im: scatter-add receptive-field gradients back to the input.
          for (int b = 0; b < xs.n; ++b)
            for (int oy = 0; oy < g.out_h; ++oy)
              for (int ox = 0; ox < g.out_w; ++ox) {
                const std::int64_t j = (b * g.out_h + oy) * g.out_w + ox;
                const int y0 = oy * stride.y - g.pad_top;
                const int x0 = ox * stride.x - g.pad_left;
                const float* src = gcol.data() + j * k;
                for (int ci = 0; ci < xs.c; ++ci) {
                  float* plane = xn->grad.data() +
                                 (static_cast<std::int64_t>(b) * xs.c + ci) *
                                     xs.h * xs.w;
                  for (int ky = 0; ky < ws.h; ++ky) {
                    const int y = y0 + ky * dilation.y;
                    for (int kx = 0; kx < ws.w; ++kx) {
                      const int x = x0 + kx * dilation.x;
                      const float v = *src++;
                      if (y >= 0 && y < xs.h && x >= 0 && x < xs.w)
                        plane[y * xs.w + x] += v;
                    }
                  }
                }
              }
        }
      });
}

Tensor conv2d_transpose(const Tensor& input, const Tensor& weight,
                        const Tensor& bias, Stride2 stride) {
  auto xn = require_node(input, "conv2d_transpose");
  auto wn = require_node(weight, "conv2d_transpose");
  auto bn = require_node(bias, "conv2d_transpose");
  const Shape4 xs = xn->shape;
  const Shape4 ws = wn->shape;  // (Cin, Cout, kh, kw)
  if (ws.n != xs.c) {
    throw std::invalid_argument("conv2d_transpose: channel mismatch, input " +
                                to_string(xs) + " weight " + to_string(ws));
  }
  if (stride.y <= 0 || stride.x <= 0)
    throw std::invalid_argument("conv2d_transpose: non-positive stride");
  if ((ws.h - stride.y) % 2 != 0 || (ws.w - stride.x) % 2 != 0) {
    throw std::invalid_argument(
        "conv2d_transpose: kernel minus stride must be even, got kernel " +
        std::to_string(ws.h) + "x" + std::to_string(ws.w) + " stride " +
        std::to_string(stride.y) + "x" + std::to_string(stride.x));
  }
  const int cout = ws.c;
  check_bias(bias, cout, "conv2d_transpose");
  const int pad_y = (ws.h - stride.y) / 2;
  const int pad_x = (ws.w - stride.x) / 2;
  const int oh = xs.h * stride.y;
  const int ow = xs.w * stride.x;
  const int kk = cout * ws.h * ws.w;
  const std::int64_t ihw = static_cast<std::int64_t>(xs.h) * xs.w;
  const std::int64_t m = xs.n * ihw;

  // in_mat: (Cin x N*IH*IW)
  auto in_mat = std::make_shared<MatCM>(xs.c, m);
  gather_out(xn->value.data(), *in_mat, xs.n, xs.c, ihw);

  MatCM cols(kk, m);
  {
    CMapRM wm(wn->value.data(), xs.c, kk);
    cols.noalias() = wm.transpose() * (*in_mat);
  }

  const Shape4 out_shape{xs.n, cout, oh, ow};
  std::vector<float> out(static_cast<std::size_t>(out_shape.numel()), 0.0f);
  for (int b = 0; b < xs.n; ++b)
    for (int iy = 0; iy < xs.h; ++iy)
      for (int ix = 0; ix < xs.w; ++ix) {
        const std::int64_t j = (b * xs.h + iy) * xs.w + ix;
        const float* src = cols.data() + j * kk;
        for (int co = 0; co < cout; ++co) {
          float* plane =
              out.data() +
              (static_cast<std::int64_t>(b) * cout + co) * oh * ow;
          for (int ky = 0; ky < ws.h; ++ky) {
            const int y = iy * stride.y - pad_y + ky;
            for (int kx = 0; kx < ws.w; ++kx) {
              const int x = ix * stride.x - pad_x + kx;
              const float v = *src++;
              if (y >= 0 && y < oh && x >= 0 && x < ow) plane[y * ow + x] += v;
            }
          }
        }
      }
  for (int b = 0; b < xs.n; ++b)
    for (int co = 0; co < cout; ++co) {
      const float bv = bn->value[co];
      float* plane =
          out.data() + (static_cast<std::int64_t>(b) * cout + co) * oh * ow;
      for (std::int64_t i = 0; i < static_cast<std::int64_t>(oh) * ow; ++i)
        plane[i] += bv;
    }

  return detail::make_op(
      out_shape, std::move(out), {xn, wn, bn},
      [xn, wn, bn, in_mat, stride, pad_y, pad_x, kk, ihw](detail::Node& self) {
        const Shape4 xs = xn->shape;
        const Shape4 ws = wn->shape;
        const int cout = ws.c;
        const int oh = self.shape.h;
        const int ow = self.shape.w;
        const std::int64_t m = xs.n * ihw;

        // Gather upstream gradients into the kernel-column layout; this is
        // im2col over the output with the transposed geometry.
        MatCM gcols(kk, m);
        for (int b = 0; b < xs.n; ++b)
          for (int iy = 0; iy < xs.h; ++iy)
            for (int ix = 0; ix < xs.w; ++ix) {
              const std::int64_t j = (b * xs.h + iy) * xs.w + ix;
              float* dst = gcols.data() + j * kk;
              for (int co = 0; co < cout; ++co) {
                const float* plane =
                    self.grad.data() +
                    (static_cast<std::int64_t>(b) * cout + co) * oh * ow;
                for (int ky = 0; ky < ws.h; ++ky) {
                  const int y = iy * stride.y - pad_y + ky;
                  for (int kx = 0; kx < ws.w; ++kx) {
                    const int x = ix * stride.x - pad_x + kx;
                    *dst++ = (y >= 0 && y < oh && x >= 0 && x < ow)
                                 ? plane[y * ow + x]
                                 : 0.0f;
                  }
                }
              }
            }

        if (bn->requires_grad) {
          const std::int64_t ohw = static_cast<std::int64_t>(oh) * ow;
          for (int b = 0; b < xs.n; ++b)
            for (int co = 0; co < cout; ++co) {
              const float* plane =
                  self.grad.data() +
                  (static_cast<std::int64_t>(b) * cout + co) * ohw;
              double acc = 0.0;
              for (std::int64_t i = 0; i < ohw; ++i) acc += plane[i];
              bn->grad[co] += static_cast<float>(acc);
            }
        }
        if (wn->requires_grad) {
          MapRM gw(wn->grad.data(), xs.c, kk);
          gw.noalias() += (*in_mat) * gcols.transpose();
        }
        if (xn->requires_grad) {
          MatCM gin(xs.c, m);
          {
            CMapRM wm(wn->value.data(), xs.c, kk);
            gin.noalias() = wm * gcols;
          }
          for (int b = 0; b < xs.n; ++b)
            for (int ci = 0; ci < xs.c; ++ci) {
              float* dst = xn->grad.data() +
                           (static_cast<std::int64_t>(b) * xs.c + ci) * ihw;
              for (std::int64_t i = 0; i < ihw; ++i)
                dst[i] += gin(ci, b * ihw + i);
            }
        }
      });
}

Tensor fully_connected(const Tensor& input, const Tensor& weight,
                       const Tensor& bias) {
  auto xn = require_node(input, "fully_connected");
  auto wn = require_node(weight, "fully_connected");
  auto bn = require_node(bias, "fully_connected");
  const Shape4 xs = xn->shape;
  const Shape4 ws = wn->shape;  // (Dout, Din, 1, 1)
  const std::int64_t din = static_cast<std::int64_t>(xs.c) * xs.h * xs.w;
  if (ws.h != 1 || ws.w != 1 || ws.c != din) {
    throw std::invalid_argument("fully_connected: weight " + to_string(ws) +
                                " does not match flattened input width " +
                                std::to_string(din));
  }
  const int dout = ws.n;
  check_bias(bias, dout, "fully_connected");

  std::vector<float> out(static_cast<std::size_t>(xs.n) * dout);
  {
    CMapRM xm(xn->value.data(), xs.n, din);
    CMapRM wm(wn->value.data(), dout, din);
    MapRM om(out.data(), xs.n, dout);
    om.noalias() = xm * wm.transpose();
    for (int b = 0; b < xs.n; ++b)
      for (int d = 0; d < dout; ++d) om(b, d) += bn->value[d];
  }

  return detail::make_op(
      {xs.n, dout, 1, 1}, std::move(out), {xn, wn, bn},
      [xn, wn, bn, din, dout](detail::Node& self) {
        const int batch = xn->shape.n;
        CMapRM gout(self.grad.data(), batch, dout);
        CMapRM xm(xn->value.data(), batch, din);
        CMapRM wm(wn->value.data(), dout, din);
        if (bn->requires_grad) {
          // Summed by hand in a fixed order: Eigen reductions choose their
          // vector split from runtime buffer alignment, which costs
          // bit-identical reruns.
          for (int d = 0; d < dout; ++d) {
            double acc = 0.0;
            for (int b = 0; b < batch; ++b) {
              acc += self.grad[static_cast<std::size_t>(b) * dout + d];
            }
            bn->grad[d] += static_cast<float>(acc);
          }
        }
        if (wn->requires_grad) {
          MapRM gw(wn->grad.data(), dout, din);
          gw.noalias() += gout.transpose() * xm;
        }
        if (xn->requires_grad) {
          MapRM gx(xn->grad.data(), batch, din);
          gx.noalias() += gout * wm;
        }
      });
}

}  // namespace piig
