#include "piig/gradcheck.hpp"

#include <cmath>
#include <cstdlib>
#include <functional>
#include <ostream>
#include <utility>

#include "piig/networks.hpp"
#include "piig/ops.hpp"
#include "piig/reference.hpp"
#include "piig/rng.hpp"
#include "piig/tensor.hpp"

namespace piig {

namespace {

constexpr double kFdStep = 1e-3;

Tensor rand_tensor(Shape4 s, float lo, float hi, RngStream& rng,
                   bool requires_grad) {
  std::vector<float> v(static_cast<std::size_t>(s.numel()));
  for (auto& x : v) {
    x = lo + (hi - lo) * static_cast<float>(rng.uniform64());
  }
  return Tensor::from_data(s, std::move(v), requires_grad);
}

// Uniform magnitude in [0.2, 1] with random sign: keeps coordinates away
// from kinks (|x| and the ELU-slope step) so the finite difference is taken
// where the function is differentiable.
Tensor rand_tensor_off_zero(Shape4 s, RngStream& rng, bool requires_grad) {
  std::vector<float> v(static_cast<std::size_t>(s.numel()));
  for (auto& x : v) {
    const float mag = 0.2f + 0.8f * static_cast<float>(rng.uniform64());
    x = rng.uniform64() < 0.5 ? -mag : mag;
  }
  return Tensor::from_data(s, std::move(v), requires_grad);
}

double dot_ref(const ref::Arr& a, const Tensor& weights) {
  double acc = 0.0;
  const float* w = weights.data();
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    acc += a.v[i] * static_cast<double>(w[i]);
  }
  return acc;
}

struct Probe {
  std::size_t target;
  std::int64_t coord;
};

std::vector<Probe> all_probes(const std::vector<ref::Arr*>& refs) {
  std::vector<Probe> probes;
  for (std::size_t t = 0; t < refs.size(); ++t) {
    for (std::int64_t c = 0; c < refs[t]->numel(); ++c) {
      probes.push_back({t, c});
    }
  }
  return probes;
}

std::vector<Probe> sampled_probes(const std::vector<ref::Arr*>& refs, int n,
                                  RngStream& rng) {
  std::vector<Probe> probes;
  probes.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto t = static_cast<std::size_t>(rng.uniform_int(refs.size()));
    probes.push_back(
        {t, static_cast<std::int64_t>(rng.uniform_int(
                static_cast<std::uint64_t>(refs[t]->numel())))});
  }
  return probes;
}

// Compares analytic float gradients (already in the leaves) against central
// finite differences of `eval` over the probe set.
void fd_compare(GradcheckResult& res, const GradcheckOptions& opts,
                const std::vector<Tensor>& floats,
                const std::vector<ref::Arr*>& refs,
                const std::function<double()>& eval,
                const std::vector<Probe>& probes) {
  for (const Probe& p : probes) {
    ref::Arr* r = refs[p.target];
    const double saved = r->v[static_cast<std::size_t>(p.coord)];
    r->v[static_cast<std::size_t>(p.coord)] = saved + kFdStep;
    const double fp = eval();
    r->v[static_cast<std::size_t>(p.coord)] = saved - kFdStep;
    const double fm = eval();
    r->v[static_cast<std::size_t>(p.coord)] = saved;
    const double fd = (fp - fm) / (2.0 * kFdStep);
    const double a = floats[p.target].grad()[static_cast<std::size_t>(p.coord)];
    const double err = std::abs(a - fd);
    const double scale = std::max(std::abs(a), std::abs(fd));
    const double rel = err / std::max(scale, opts.abs_floor);
    if (rel > res.max_rel_error) res.max_rel_error = rel;
    ++res.checks;
    if (err > std::max(opts.rel_tol * scale, opts.abs_floor)) ++res.failures;
  }
}

// ---------------------------------------------------------------------------
// Double-precision mirrors of the shape/selection ops used by the mixed
// graph check.

ref::Arr arr_where(const ref::Arr& mask, const ref::Arr& a,
                   const ref::Arr& b) {
  ref::Arr out = a;
  const Shape4 s = a.shape;
  for (int n = 0; n < s.n; ++n) {
    const int mn = mask.shape.n == 1 ? 0 : n;
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x)
          out.at(n, c, y, x) = mask.at(mn, 0, y, x) == 1.0
                                   ? a.at(n, c, y, x)
                                   : b.at(n, c, y, x);
  }
  return out;
}

ref::Arr arr_crop(const ref::Arr& a, int y0, int x0, int h, int w) {
  ref::Arr out = ref::Arr::zeros({a.shape.n, a.shape.c, h, w});
  for (int n = 0; n < a.shape.n; ++n)
    for (int c = 0; c < a.shape.c; ++c)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          out.at(n, c, y, x) = a.at(n, c, y0 + y, x0 + x);
  return out;
}

ref::Arr arr_slice(const ref::Arr& a, int c0, int c1) {
  ref::Arr out = ref::Arr::zeros({a.shape.n, c1 - c0, a.shape.h, a.shape.w});
  for (int n = 0; n < a.shape.n; ++n)
    for (int c = c0; c < c1; ++c)
      for (int y = 0; y < a.shape.h; ++y)
        for (int x = 0; x < a.shape.w; ++x)
          out.at(n, c - c0, y, x) = a.at(n, c, y, x);
  return out;
}

ref::Arr arr_concat(const ref::Arr& a, const ref::Arr& b) {
  ref::Arr out =
      ref::Arr::zeros({a.shape.n, a.shape.c + b.shape.c, a.shape.h, a.shape.w});
  for (int n = 0; n < a.shape.n; ++n)
    for (int y = 0; y < a.shape.h; ++y)
      for (int x = 0; x < a.shape.w; ++x) {
        for (int c = 0; c < a.shape.c; ++c)
          out.at(n, c, y, x) = a.at(n, c, y, x);
        for (int c = 0; c < b.shape.c; ++c)
          out.at(n, a.shape.c + c, y, x) = b.at(n, c, y, x);
      }
  return out;
}

ref::Arr arr_tile(const ref::Arr& z, int h, int w) {
  ref::Arr out = ref::Arr::zeros({z.shape.n, z.shape.c, h, w});
  for (int n = 0; n < z.shape.n; ++n)
    for (int c = 0; c < z.shape.c; ++c)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.at(n, c, y, x) = z.at(n, c, 0, 0);
  return out;
}

ref::Arr arr_repeat(const ref::Arr& a, int n) {
  ref::Arr out = ref::Arr::zeros({n, a.shape.c, a.shape.h, a.shape.w});
  for (int b = 0; b < n; ++b)
    for (int c = 0; c < a.shape.c; ++c)
      for (int y = 0; y < a.shape.h; ++y)
        for (int x = 0; x < a.shape.w; ++x)
          out.at(b, c, y, x) = a.at(0, c, y, x);
  return out;
}

// ---------------------------------------------------------------------------
// Individual checks. Each runs `opts.trials` independent trials.

GradcheckResult check_conv2d(const GradcheckOptions& opts, std::string name,
                             std::uint64_t seed, Shape4 xs, Shape4 ws,
                             Stride2 stride, Stride2 dilation,
                             Padding padding) {
  GradcheckResult res{std::move(name)};
  RngStream rng(seed);
  for (int trial = 0; trial < opts.trials; ++trial) {
    Tensor x = rand_tensor(xs, -1.0f, 1.0f, rng, true);
    Tensor w = rand_tensor(ws, -0.5f, 0.5f, rng, true);
    Tensor b = rand_tensor({1, ws.n, 1, 1}, -0.5f, 0.5f, rng, true);
    Tensor out = conv2d(x, w, b, stride, dilation, padding);
    Tensor r = rand_tensor(out.shape(), -1.0f, 1.0f, rng, false);
    backward(sum(mul(out, r)));

    ref::Arr xr = ref::from_tensor(x), wr = ref::from_tensor(w),
             br = ref::from_tensor(b);
    std::vector<ref::Arr*> refs{&xr, &wr, &br};
    auto eval = [&]() {
      return dot_ref(ref::conv2d(xr, wr, br, stride, dilation, padding), r);
    };
    fd_compare(res, opts, {x, w, b}, refs, eval, all_probes(refs));
  }
  return res;
}

GradcheckResult check_conv2d_transpose(const GradcheckOptions& opts,
                                       std::uint64_t seed) {
  GradcheckResult res{"conv2d_transpose/s2_k4"};
  RngStream rng(seed);
  for (int trial = 0; trial < opts.trials; ++trial) {
    Tensor x = rand_tensor({2, 2, 4, 4}, -1.0f, 1.0f, rng, true);
    Tensor w = rand_tensor({2, 3, 4, 4}, -0.5f, 0.5f, rng, true);
    Tensor b = rand_tensor({1, 3, 1, 1}, -0.5f, 0.5f, rng, true);
    Tensor out = conv2d_transpose(x, w, b, {2, 2});
    Tensor r = rand_tensor(out.shape(), -1.0f, 1.0f, rng, false);
    backward(sum(mul(out, r)));

    ref::Arr xr = ref::from_tensor(x), wr = ref::from_tensor(w),
             br = ref::from_tensor(b);
    std::vector<ref::Arr*> refs{&xr, &wr, &br};
    auto eval = [&]() {
      return dot_ref(ref::conv2d_transpose(xr, wr, br, {2, 2}), r);
    };
    fd_compare(res, opts, {x, w, b}, refs, eval, all_probes(refs));
  }
  return res;
}

GradcheckResult check_fully_connected(const GradcheckOptions& opts,
                                      std::uint64_t seed) {
  GradcheckResult res{"fully_connected/random"};
  RngStream rng(seed);
  for (int trial = 0; trial < opts.trials; ++trial) {
    Tensor x = rand_tensor({3, 4, 2, 2}, -1.0f, 1.0f, rng, true);
    Tensor w = rand_tensor({5, 16, 1, 1}, -0.5f, 0.5f, rng, true);
    Tensor b = rand_tensor({1, 5, 1, 1}, -0.5f, 0.5f, rng, true);
    Tensor out = fully_connected(x, w, b);
    Tensor r = rand_tensor(out.shape(), -1.0f, 1.0f, rng, false);
    backward(sum(mul(out, r)));

    ref::Arr xr = ref::from_tensor(x), wr = ref::from_tensor(w),
             br = ref::from_tensor(b);
    std::vector<ref::Arr*> refs{&xr, &wr, &br};
    auto eval = [&]() { return dot_ref(ref::fully_connected(xr, wr, br), r); };
    fd_compare(res, opts, {x, w, b}, refs, eval, all_probes(refs));
  }
  return res;
}

GradcheckResult check_elementwise(
    const GradcheckOptions& opts, std::string name, std::uint64_t seed,
    bool off_zero, const std::function<Tensor(const Tensor&)>& op,
    const std::function<double(double)>& op_ref) {
  GradcheckResult res{std::move(name)};
  RngStream rng(seed);
  for (int trial = 0; trial < opts.trials; ++trial) {
    Tensor x = off_zero ? rand_tensor_off_zero({2, 3, 4, 4}, rng, true)
                        : rand_tensor({2, 3, 4, 4}, -1.0f, 1.0f, rng, true);
    Tensor out = op(x);
    Tensor r = rand_tensor(out.shape(), -1.0f, 1.0f, rng, false);
    backward(sum(mul(out, r)));

    ref::Arr xr = ref::from_tensor(x);
    std::vector<ref::Arr*> refs{&xr};
    auto eval = [&]() {
      double acc = 0.0;
      const float* rw = r.data();
      for (std::size_t i = 0; i < xr.v.size(); ++i) {
        acc += op_ref(xr.v[i]) * static_cast<double>(rw[i]);
      }
      return acc;
    };
    fd_compare(res, opts, {x}, refs, eval, all_probes(refs));
  }
  return res;
}

GradcheckResult check_chain(const GradcheckOptions& opts, std::uint64_t seed) {
  GradcheckResult res{"chain/conv_elu_fc_mean"};
  RngStream rng(seed);
  for (int trial = 0; trial < opts.trials; ++trial) {
    Tensor x = rand_tensor({2, 2, 8, 8}, -1.0f, 1.0f, rng, true);
    Tensor cw = rand_tensor({3, 2, 3, 3}, -0.5f, 0.5f, rng, true);
    Tensor cb = rand_tensor({1, 3, 1, 1}, -0.5f, 0.5f, rng, true);
    Tensor fw = rand_tensor({4, 3 * 4 * 4, 1, 1}, -0.5f, 0.5f, rng, true);
    Tensor fb = rand_tensor({1, 4, 1, 1}, -0.5f, 0.5f, rng, true);
    Tensor h = elu(conv2d(x, cw, cb, {2, 2}, {1, 1}, Padding::kSame));
    Tensor out = fully_connected(h, fw, fb);
    Tensor r = rand_tensor(out.shape(), -1.0f, 1.0f, rng, false);
    backward(mean(mul(out, r)));

    ref::Arr xr = ref::from_tensor(x), cwr = ref::from_tensor(cw),
             cbr = ref::from_tensor(cb), fwr = ref::from_tensor(fw),
             fbr = ref::from_tensor(fb);
    std::vector<ref::Arr*> refs{&xr, &cwr, &cbr, &fwr, &fbr};
    auto eval = [&]() {
      ref::Arr hr = ref::elu(
          ref::conv2d(xr, cwr, cbr, {2, 2}, {1, 1}, Padding::kSame));
      ref::Arr outr = ref::fully_connected(hr, fwr, fbr);
      double acc = 0.0;
      const float* rw = r.data();
      for (std::size_t i = 0; i < outr.v.size(); ++i) {
        acc += outr.v[i] * static_cast<double>(rw[i]);
      }
      return acc / static_cast<double>(outr.v.size());
    };
    fd_compare(res, opts, {x, cw, cb, fw, fb}, refs, eval, all_probes(refs));
  }
  return res;
}

// One graph exercising the selection/shape primitives the trainer relies
// on: where_mask, crop, slice, concat, tile, repeat_batch, sum_per_sample,
// plus the scalar elementwise ops.
GradcheckResult check_mixed_graph(const GradcheckOptions& opts,
                                  std::uint64_t seed) {
  GradcheckResult res{"graph/shape_and_select_ops"};
  RngStream rng(seed);

  std::vector<float> mv(64, 1.0f);
  for (int y = 2; y < 6; ++y)
    for (int x = 2; x < 6; ++x) mv[static_cast<std::size_t>(y) * 8 + x] = 0.0f;
  Tensor m = Tensor::from_data({1, 1, 8, 8}, mv, false);
  ref::Arr mr = ref::from_tensor(m);

  for (int trial = 0; trial < opts.trials; ++trial) {
    Tensor x = rand_tensor({2, 3, 8, 8}, -1.0f, 1.0f, rng, true);
    Tensor y = rand_tensor({2, 3, 8, 8}, -1.0f, 1.0f, rng, true);
    Tensor z = rand_tensor({2, 5, 1, 1}, -1.0f, 1.0f, rng, true);
    Tensor w1 = rand_tensor({1, 5, 4, 4}, -1.0f, 1.0f, rng, true);
    Tensor r1 = rand_tensor({2, 5, 4, 4}, -1.0f, 1.0f, rng, false);
    Tensor r2 = rand_tensor({2, 1, 1, 1}, -1.0f, 1.0f, rng, false);

    Tensor a = where_mask(m, x, y);
    Tensor b = crop_spatial(a, 2, 2, 4, 4);
    Tensor yc = slice_channels(crop_spatial(y, 1, 3, 4, 4), 0, 2);
    Tensor c = concat_channels({b, yc});
    Tensor d = mul(c, tile_spatial(z, 4, 4));
    Tensor e = add(d, repeat_batch(w1, 2));
    Tensor f = piig::exp(scale(e, 0.3f));
    Tensor g = sub(f, add_scalar(piig::tanh(e), 0.5f));
    Tensor p1 = sum(mul(g, r1));
    Tensor p2 = sum(mul(sum_per_sample(piig::abs(add_scalar(d, 1.7f))), r2));
    backward(add(p1, p2));

    ref::Arr xr = ref::from_tensor(x), yr = ref::from_tensor(y),
             zr = ref::from_tensor(z), w1r = ref::from_tensor(w1);
    std::vector<ref::Arr*> refs{&xr, &yr, &zr, &w1r};
    auto eval = [&]() {
      ref::Arr ar = arr_where(mr, xr, yr);
      ref::Arr br = arr_crop(ar, 2, 2, 4, 4);
      ref::Arr ycr = arr_slice(arr_crop(yr, 1, 3, 4, 4), 0, 2);
      ref::Arr cr = arr_concat(br, ycr);
      ref::Arr dr = cr;
      ref::Arr zt = arr_tile(zr, 4, 4);
      for (std::size_t i = 0; i < dr.v.size(); ++i) dr.v[i] *= zt.v[i];
      ref::Arr er = dr;
      ref::Arr w1t = arr_repeat(w1r, 2);
      for (std::size_t i = 0; i < er.v.size(); ++i) er.v[i] += w1t.v[i];
      double acc = 0.0;
      const float* r1w = r1.data();
      for (std::size_t i = 0; i < er.v.size(); ++i) {
        const double gv = std::exp(0.3 * er.v[i]) - (std::tanh(er.v[i]) + 0.5);
        acc += gv * static_cast<double>(r1w[i]);
      }
      const float* r2w = r2.data();
      const std::int64_t per = dr.numel() / dr.shape.n;
      for (int n = 0; n < dr.shape.n; ++n) {
        double sps = 0.0;
        for (std::int64_t i = 0; i < per; ++i) {
          sps += std::abs(dr.v[static_cast<std::size_t>(n * per + i)] + 1.7);
        }
        acc += sps * static_cast<double>(r2w[n]);
      }
      return acc;
    };
    fd_compare(res, opts, {x, y, z, w1}, refs, eval, all_probes(refs));
  }
  return res;
}

GradcheckResult check_extractor(const GradcheckOptions& opts,
                                std::uint64_t seed) {
  GradcheckResult res{"network/extractor_16x16"};
  RngStream rng(seed);
  for (int trial = 0; trial < opts.trials; ++trial) {
    ExtractorNet net = ExtractorNet::init(3, 16, 8, rng);
    Tensor x = rand_tensor({2, 3, 16, 16}, -1.0f, 1.0f, rng, true);
    LatentSample s = net.forward(x);
    Tensor r1 = rand_tensor(s.mean.shape(), -1.0f, 1.0f, rng, false);
    Tensor r2 = rand_tensor(s.logvar.shape(), -1.0f, 1.0f, rng, false);
    backward(add(sum(mul(s.mean, r1)), sum(mul(s.logvar, r2))));

    ref::RefExtractor refnet = ref::RefExtractor::mirror(net);
    ref::Arr xr = ref::from_tensor(x);
    NetworkParams params = net.params("e");
    std::vector<ref::ParamView> views = refnet.param_views();
    std::vector<Tensor> floats;
    std::vector<ref::Arr*> refs;
    for (std::size_t i = 0; i < params.items.size(); ++i) {
      floats.push_back(params.items[i].tensor);
      refs.push_back(views[i].arr);
    }
    floats.push_back(x);
    refs.push_back(&xr);
    auto eval = [&]() {
      auto [mu, lv] = refnet.forward(xr);
      return dot_ref(mu, r1) + dot_ref(lv, r2);
    };
    fd_compare(res, opts, floats, refs, eval,
               sampled_probes(refs, opts.coords_per_trial, rng));
    zero_grads(params);
    x.zero_grad();
  }
  return res;
}

GradcheckResult check_generator(const GradcheckOptions& opts,
                                std::uint64_t seed) {
  GradcheckResult res{"network/generator_16x16"};
  RngStream rng(seed);

  std::vector<float> mv(256, 1.0f);
  for (int y = 4; y < 12; ++y)
    for (int x = 4; x < 12; ++x) mv[static_cast<std::size_t>(y) * 16 + x] = 0.0f;
  Tensor m = Tensor::from_data({1, 1, 16, 16}, mv, false);
  ref::Arr mr = ref::from_tensor(m);

  for (int trial = 0; trial < opts.trials; ++trial) {
    GeneratorNet net = GeneratorNet::init(3, 8, rng);
    Tensor x = rand_tensor({2, 3, 16, 16}, -1.0f, 1.0f, rng, true);
    Tensor z = rand_tensor({2, 8, 1, 1}, -1.0f, 1.0f, rng, true);
    Tensor out = net.forward(x, m, tile_spatial(z, 16, 16));
    Tensor r = rand_tensor(out.shape(), -1.0f, 1.0f, rng, false);
    backward(sum(mul(out, r)));

    ref::RefGenerator refnet = ref::RefGenerator::mirror(net);
    ref::Arr xr = ref::from_tensor(x);
    ref::Arr zr = ref::from_tensor(z);
    NetworkParams params = net.params("g");
    std::vector<ref::ParamView> views = refnet.param_views();
    std::vector<Tensor> floats;
    std::vector<ref::Arr*> refs;
    for (std::size_t i = 0; i < params.items.size(); ++i) {
      floats.push_back(params.items[i].tensor);
      refs.push_back(views[i].arr);
    }
    floats.push_back(x);
    refs.push_back(&xr);
    floats.push_back(z);
    refs.push_back(&zr);
    auto eval = [&]() {
      return dot_ref(refnet.forward(xr, mr, arr_tile(zr, 16, 16)), r);
    };
    fd_compare(res, opts, floats, refs, eval,
               sampled_probes(refs, opts.coords_per_trial, rng));
    zero_grads(params);
    x.zero_grad();
    z.zero_grad();
  }
  return res;
}

GradcheckResult check_critic(const GradcheckOptions& opts, std::string name,
                             std::uint64_t seed,
                             const std::vector<int>& widths, int in_h,
                             int in_w) {
  GradcheckResult res{std::move(name)};
  RngStream rng(seed);
  for (int trial = 0; trial < opts.trials; ++trial) {
    CriticStack stack = CriticStack::init(3, in_h, in_w, widths, rng);
    Tensor x = rand_tensor({2, 3, in_h, in_w}, -1.0f, 1.0f, rng, true);
    Tensor out = stack.score(x);
    Tensor r = rand_tensor(out.shape(), -1.0f, 1.0f, rng, false);
    backward(sum(mul(out, r)));

    ref::RefCritic refnet = ref::RefCritic::mirror(stack);
    ref::Arr xr = ref::from_tensor(x);
    NetworkParams params = stack.params("d");
    std::vector<ref::ParamView> views = refnet.param_views();
    std::vector<Tensor> floats;
    std::vector<ref::Arr*> refs;
    for (std::size_t i = 0; i < params.items.size(); ++i) {
      floats.push_back(params.items[i].tensor);
      refs.push_back(views[i].arr);
    }
    floats.push_back(x);
    refs.push_back(&xr);
    auto eval = [&]() { return dot_ref(refnet.score(xr), r); };
    fd_compare(res, opts, floats, refs, eval,
               sampled_probes(refs, opts.coords_per_trial, rng));
    zero_grads(params);
    x.zero_grad();
  }
  return res;
}

}  // namespace

std::vector<GradcheckResult> run_gradcheck(const GradcheckOptions& opts,
                                           std::ostream* log) {
  std::vector<GradcheckResult> results;
  std::uint64_t idx = 0;
  auto next_seed = [&]() { return derive_seed(opts.seed, idx++); };
  auto emit = [&](GradcheckResult r) {
    if (log) {
      *log << (r.failures == 0 ? "ok   " : "FAIL ") << r.name << ": "
           << r.checks << " checks, " << r.failures
           << " failures, max rel err " << r.max_rel_error << "\n";
      log->flush();
    }
    results.push_back(std::move(r));
  };

  emit(check_conv2d(opts, "conv2d/s1_valid_k3", next_seed(), {2, 2, 6, 6},
                    {3, 2, 3, 3}, {1, 1}, {1, 1}, Padding::kValid));
  emit(check_conv2d(opts, "conv2d/s2_same_k5", next_seed(), {2, 3, 8, 8},
                    {4, 3, 5, 5}, {2, 2}, {1, 1}, Padding::kSame));
  emit(check_conv2d(opts, "conv2d/dilated_same_k3", next_seed(), {1, 2, 8, 8},
                    {2, 2, 3, 3}, {1, 1}, {2, 2}, Padding::kSame));
  emit(check_conv2d_transpose(opts, next_seed()));
  emit(check_fully_connected(opts, next_seed()));
  emit(check_elementwise(opts, "elementwise/elu", next_seed(), false,
                         [](const Tensor& t) { return elu(t); },
                         [](double v) { return v > 0 ? v : std::expm1(v); }));
  emit(check_elementwise(
      opts, "elementwise/elu_slope", next_seed(), true,
      [](const Tensor& t) { return elu_slope(t); },
      [](double v) { return v > 0 ? 1.0 : std::exp(v); }));
  emit(check_elementwise(opts, "elementwise/tanh", next_seed(), false,
                         [](const Tensor& t) { return piig::tanh(t); },
                         [](double v) { return std::tanh(v); }));
  emit(check_elementwise(opts, "elementwise/exp", next_seed(), false,
                         [](const Tensor& t) { return piig::exp(t); },
                         [](double v) { return std::exp(v); }));
  emit(check_elementwise(opts, "elementwise/abs", next_seed(), true,
                         [](const Tensor& t) { return piig::abs(t); },
                         [](double v) { return std::abs(v); }));
  emit(check_chain(opts, next_seed()));
  emit(check_mixed_graph(opts, next_seed()));
  emit(check_extractor(opts, next_seed()));
  emit(check_generator(opts, next_seed()));
  emit(check_critic(opts, "network/critic_global_16x16", next_seed(),
                    {24, 48, 96, 96}, 16, 16));
  emit(check_critic(opts, "network/critic_local_16x16", next_seed(),
                    {24, 48, 96}, 16, 16));
  return results;
}

bool gradcheck_passed(const std::vector<GradcheckResult>& results) {
  for (const auto& r : results) {
    if (r.failures != 0) return false;
  }
  return true;
}

}  // namespace piig
