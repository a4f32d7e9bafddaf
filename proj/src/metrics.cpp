#include "piig/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "piig/rng.hpp"

namespace piig {

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!(a.shape() == b.shape())) {
    throw std::invalid_argument(std::string(what) +
                                ": inputs must have the same shape");
  }
}

constexpr int kWindow = 8;

// Per-window SSIM. Both inputs are 64-element grayscale windows; all sums
// use the same expressions for x and y so bitwise-equal windows produce
// exactly 1.0.
double window_ssim(const double* xs, const double* ys, double c1, double c2) {
  constexpr int n = kWindow * kWindow;
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n; ++i) mx += xs[i];
  for (int i = 0; i < n; ++i) my += ys[i];
  mx /= n;
  my /= n;
  double vx = 0.0, vy = 0.0, cov = 0.0;
  for (int i = 0; i < n; ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    vx += dx * dx;
    vy += dy * dy;
    cov += dx * dy;
  }
  vx /= n;
  vy /= n;
  cov /= n;
  const double num = (2.0 * mx * my + c1) * (2.0 * cov + c2);
  const double den = (mx * mx + my * my + c1) * (vx + vy + c2);
  return num / den;
}

// Channel-mean grayscale plane of batch item n, in double precision.
std::vector<double> grayscale_plane(const Tensor& t, int n) {
  const Shape4 s = t.shape();
  std::vector<double> plane(static_cast<std::size_t>(s.h) * s.w, 0.0);
  const float* v = t.data();
  const std::int64_t chw = static_cast<std::int64_t>(s.c) * s.h * s.w;
  const std::int64_t hw = static_cast<std::int64_t>(s.h) * s.w;
  for (int c = 0; c < s.c; ++c) {
    const float* src = v + n * chw + c * hw;
    for (std::int64_t i = 0; i < hw; ++i) plane[i] += src[i];
  }
  for (auto& p : plane) p /= s.c;
  return plane;
}

}  // namespace

double psnr(const Tensor& a, const Tensor& b, double peak) {
  check_same_shape(a, b, "psnr");
  if (!(peak > 0.0)) throw std::invalid_argument("psnr: peak must be > 0");
  const std::int64_t n = a.numel();
  const float* av = a.data();
  const float* bv = b.data();
  double mse = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(av[i]) - static_cast<double>(bv[i]);
    mse += d * d;
  }
  mse /= static_cast<double>(n);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const Tensor& a, const Tensor& b, double peak) {
  check_same_shape(a, b, "ssim");
  if (!(peak > 0.0)) throw std::invalid_argument("ssim: peak must be > 0");
  const Shape4 s = a.shape();
  if (s.h < kWindow || s.w < kWindow) {
    throw std::invalid_argument("ssim: image " + std::to_string(s.h) + "x" +
                                std::to_string(s.w) +
                                " is smaller than the 8x8 window");
  }
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  const int wy = s.h / kWindow;
  const int wx = s.w / kWindow;
  double total = 0.0;
  std::int64_t count = 0;
  double xs[kWindow * kWindow];
  double ys[kWindow * kWindow];
  for (int n = 0; n < s.n; ++n) {
    const std::vector<double> ga = grayscale_plane(a, n);
    const std::vector<double> gb = grayscale_plane(b, n);
    for (int by = 0; by < wy; ++by) {
      for (int bx = 0; bx < wx; ++bx) {
        int k = 0;
        for (int y = 0; y < kWindow; ++y) {
          for (int x = 0; x < kWindow; ++x) {
            const std::size_t idx =
                static_cast<std::size_t>(by * kWindow + y) * s.w +
                (bx * kWindow + x);
            xs[k] = ga[idx];
            ys[k] = gb[idx];
            ++k;
          }
        }
        total += window_ssim(xs, ys, c1, c2);
        ++count;
      }
    }
  }
  return total / static_cast<double>(count);
}

double l1_percent(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "l1_percent");
  const std::int64_t n = a.numel();
  const float* av = a.data();
  const float* bv = b.data();
  double acc = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    acc += std::abs(static_cast<double>(av[i]) - static_cast<double>(bv[i]));
  }
  return acc / static_cast<double>(n) * 100.0;
}

double l2_percent(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "l2_percent");
  const std::int64_t n = a.numel();
  const float* av = a.data();
  const float* bv = b.data();
  double acc = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(av[i]) - static_cast<double>(bv[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(n) * 100.0;
}

double feature_distance(const std::vector<float>& a,
                        const std::vector<float>& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("feature_distance: vectors differ in length");
  }
  // Identical vectors are at distance 0 by definition; short-circuiting
  // avoids sqrt rounding turning that into +-1e-16.
  if (a == b) return 0.0;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i];
    const double y = b[i];
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (na == 0.0 || nb == 0.0) return 1.0;  // one all-zero vector: no angle
  double d = 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
  if (d < 0.0) d = 0.0;
  if (d > 2.0) d = 2.0;
  return d;
}

DiversityReport diversity(const std::vector<Tensor>& samples,
                          const MaskSpec& spec, const FeatureFn& feature_fn,
                          std::int64_t requested_pairs, std::uint64_t seed) {
  const std::size_t k = samples.size();
  if (k < 2) {
    throw std::invalid_argument(
        "diversity: need at least two samples, got " + std::to_string(k));
  }
  if (requested_pairs <= 0) {
    throw std::invalid_argument("diversity: requested_pairs must be > 0");
  }
  for (const auto& s : samples) {
    const Shape4 sh = s.shape();
    if (sh.n != 1 || sh.h != spec.image_h || sh.w != spec.image_w) {
      throw std::invalid_argument(
          "diversity: sample shape does not match the mask spec");
    }
  }

  std::vector<std::vector<float>> global_feats(k), local_feats(k);
  for (std::size_t i = 0; i < k; ++i) {
    global_feats[i] = feature_fn(samples[i]);
    local_feats[i] = feature_fn(crop_spatial(samples[i].detached(),
                                             spec.hole_top(), spec.hole_left(),
                                             spec.hole_h, spec.hole_w));
  }

  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(k * (k - 1) / 2);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
  }
  std::size_t use = pairs.size();
  if (static_cast<std::int64_t>(pairs.size()) > requested_pairs) {
    use = static_cast<std::size_t>(requested_pairs);
    // Partial Fisher-Yates: the first `use` slots become a uniform
    // without-replacement draw from all pairs.
    RngStream rng(seed);
    for (std::size_t i = 0; i < use; ++i) {
      const std::size_t j =
          i + static_cast<std::size_t>(
                  rng.uniform_int(static_cast<std::int64_t>(pairs.size() - i)));
      std::swap(pairs[i], pairs[j]);
    }
  }

  DiversityReport report;
  report.n_pairs = static_cast<std::int64_t>(use);
  for (std::size_t p = 0; p < use; ++p) {
    const auto [i, j] = pairs[p];
    report.global_score += feature_distance(global_feats[i], global_feats[j]);
    report.local_score += feature_distance(local_feats[i], local_feats[j]);
  }
  report.global_score /= static_cast<double>(use);
  report.local_score /= static_cast<double>(use);
  return report;
}

}  // namespace piig
