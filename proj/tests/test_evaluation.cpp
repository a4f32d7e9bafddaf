// Quality metrics and the paired-sample diversity score: hand-evaluated
// constants, independent per-window and loop oracles, and the exact-zero
// guarantees the pluralism acceptance check relies on.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "piig/data.hpp"
#include "piig/metrics.hpp"
#include "piig/rng.hpp"
#include "piig/tensor.hpp"

using namespace piig;
using testutil::make;
using testutil::random_tensor;

namespace {

// Flattened raw pixels as the feature vector; keeps diversity tests
// independent of any network.
std::vector<float> pixel_features(const Tensor& t) {
  return std::vector<float>(t.data(), t.data() + t.numel());
}

// Independent double-precision SSIM: channel-mean grayscale, non-overlapping
// 8x8 windows, population statistics, standard stabilizers.
double ssim_oracle(const Tensor& a, const Tensor& b, double peak) {
  const Shape4 s = a.shape();
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  double total = 0.0;
  int count = 0;
  for (int n = 0; n < s.n; ++n) {
    for (int by = 0; by + 8 <= s.h; by += 8) {
      for (int bx = 0; bx + 8 <= s.w; bx += 8) {
        double mx = 0, my = 0;
        double sxx = 0, syy = 0, sxy = 0;
        for (int y = by; y < by + 8; ++y) {
          for (int x = bx; x < bx + 8; ++x) {
            double ga = 0, gb = 0;
            for (int c = 0; c < s.c; ++c) {
              const std::int64_t i =
                  ((static_cast<std::int64_t>(n) * s.c + c) * s.h + y) * s.w +
                  x;
              ga += a.data()[i];
              gb += b.data()[i];
            }
            ga /= s.c;
            gb /= s.c;
            mx += ga;
            my += gb;
            sxx += ga * ga;
            syy += gb * gb;
            sxy += ga * gb;
          }
        }
        const double inv = 1.0 / 64.0;
        mx *= inv;
        my *= inv;
        const double vx = sxx * inv - mx * mx;
        const double vy = syy * inv - my * my;
        const double cov = sxy * inv - mx * my;
        total += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) /
                 ((mx * mx + my * my + c1) * (vx + vy + c2));
        ++count;
      }
    }
  }
  return total / count;
}

}  // namespace

TEST_SUITE("evaluation") {

TEST_CASE("psnr") {
  RngStream rng(600);

  SUBCASE("identical images report infinity") {
    Tensor a = random_tensor({1, 3, 8, 8}, rng, 0.0f, 1.0f);
    const double v = psnr(a, a, 1.0);
    CHECK(std::isinf(v));
    CHECK(v > 0.0);
  }

  SUBCASE("constant gap of 16 gray levels at peak 255 is about 24.05 dB") {
    Tensor a = Tensor::full({1, 3, 8, 8}, 100.0f);
    Tensor b = Tensor::full({1, 3, 8, 8}, 116.0f);
    const double want = 10.0 * std::log10(65025.0 / 256.0);
    CHECK(std::abs(psnr(a, b, 255.0) - want) < 1e-9);
    CHECK(std::abs(psnr(a, b, 255.0) - 24.05) < 0.01);
  }

  SUBCASE("halving the squared error gains about 3.0103 dB") {
    Tensor base = Tensor::zeros({1, 1, 8, 8});
    Tensor far = Tensor::full({1, 1, 8, 8}, 0.2f);
    Tensor near = Tensor::full({1, 1, 8, 8}, 0.2f / std::sqrt(2.0f));
    const double gain = psnr(base, near, 1.0) - psnr(base, far, 1.0);
    CHECK(gain == doctest::Approx(10.0 * std::log10(2.0)).epsilon(1e-4));
    CHECK(gain == doctest::Approx(3.0103).epsilon(1e-3));
  }

  SUBCASE("symmetric in its arguments") {
    Tensor a = random_tensor({2, 3, 8, 8}, rng, 0.0f, 1.0f);
    Tensor b = random_tensor({2, 3, 8, 8}, rng, 0.0f, 1.0f);
    CHECK(psnr(a, b, 1.0) == psnr(b, a, 1.0));
  }

  SUBCASE("positive for distinct in-range images") {
    Tensor a = random_tensor({1, 3, 8, 8}, rng, 0.0f, 1.0f);
    Tensor b = random_tensor({1, 3, 8, 8}, rng, 0.0f, 1.0f);
    CHECK(psnr(a, b, 1.0) > 0.0);
  }

  SUBCASE("shape and peak validation") {
    Tensor a = Tensor::zeros({1, 1, 4, 4});
    Tensor b = Tensor::zeros({1, 1, 8, 8});
    CHECK_THROWS_AS((void)psnr(a, b, 1.0), std::invalid_argument);
    CHECK_THROWS_AS((void)psnr(a, a, 0.0), std::invalid_argument);
  }
}

TEST_CASE("ssim") {
  RngStream rng(610);

  SUBCASE("an image against itself is exactly one") {
    for (int trial = 0; trial < 5; ++trial) {
      Tensor a = random_tensor({1, 3, 16, 16}, rng, 0.0f, 1.0f);
      CHECK(ssim(a, a, 1.0) == 1.0);
    }
  }

  SUBCASE("inverting a non-constant image breaks similarity") {
    Tensor a = random_tensor({1, 1, 16, 16}, rng, 0.0f, 1.0f);
    Tensor b = add_scalar(scale(a, -1.0f), 1.0f);  // 1 - a
    CHECK(ssim(a, b, 1.0) < 1.0);
  }

  SUBCASE("random pairs match an independent window oracle") {
    for (int trial = 0; trial < 5; ++trial) {
      Tensor a = random_tensor({2, 3, 16, 16}, rng, 0.0f, 1.0f);
      Tensor b = random_tensor({2, 3, 16, 16}, rng, 0.0f, 1.0f);
      CHECK(std::abs(ssim(a, b, 1.0) - ssim_oracle(a, b, 1.0)) < 1e-6);
    }
  }

  SUBCASE("values stay within [-1, 1] on random pairs") {
    for (int trial = 0; trial < 5; ++trial) {
      Tensor a = random_tensor({1, 3, 8, 8}, rng, 0.0f, 1.0f);
      Tensor b = random_tensor({1, 3, 8, 8}, rng, 0.0f, 1.0f);
      const double v = ssim(a, b, 1.0);
      CHECK(v <= 1.0);
      CHECK(v >= -1.0);
    }
  }

  SUBCASE("images smaller than the window are rejected") {
    Tensor a = Tensor::zeros({1, 1, 7, 16});
    CHECK_THROWS_AS((void)ssim(a, a, 1.0), std::invalid_argument);
    Tensor b = Tensor::zeros({1, 1, 16, 4});
    CHECK_THROWS_AS((void)ssim(b, b, 1.0), std::invalid_argument);
  }
}

TEST_CASE("l1 and l2 percentages") {
  RngStream rng(620);

  SUBCASE("identical images score zero exactly") {
    Tensor a = random_tensor({1, 3, 8, 8}, rng, 0.0f, 1.0f);
    CHECK(l1_percent(a, a) == 0.0);
    CHECK(l2_percent(a, a) == 0.0);
  }

  SUBCASE("an exact quarter gap gives 25 and 6.25") {
    Tensor a = Tensor::full({1, 3, 4, 4}, 0.5f);
    Tensor b = Tensor::full({1, 3, 4, 4}, 0.25f);
    CHECK(l1_percent(a, b) == 25.0);
    CHECK(l2_percent(a, b) == 6.25);
  }

  SUBCASE("a 0.05 gap gives about 5.0 and 0.25") {
    Tensor a = Tensor::full({1, 3, 4, 4}, 0.30f);
    Tensor b = Tensor::full({1, 3, 4, 4}, 0.25f);
    CHECK(l1_percent(a, b) == doctest::Approx(5.0).epsilon(1e-6));
    CHECK(l2_percent(a, b) == doctest::Approx(0.25).epsilon(1e-6));
  }

  SUBCASE("random pairs match the loop oracles to 1e-6") {
    Tensor a = random_tensor({2, 3, 8, 8}, rng, 0.0f, 1.0f);
    Tensor b = random_tensor({2, 3, 8, 8}, rng, 0.0f, 1.0f);
    double l1 = 0.0, l2 = 0.0;
    for (std::int64_t i = 0; i < a.numel(); ++i) {
      const double d = static_cast<double>(a.data()[i]) - b.data()[i];
      l1 += std::abs(d);
      l2 += d * d;
    }
    l1 = l1 / static_cast<double>(a.numel()) * 100.0;
    l2 = l2 / static_cast<double>(a.numel()) * 100.0;
    CHECK(std::abs(l1_percent(a, b) - l1) < 1e-6);
    CHECK(std::abs(l2_percent(a, b) - l2) < 1e-6);
  }

  SUBCASE("shape mismatch is rejected") {
    CHECK_THROWS_AS(
        (void)l1_percent(Tensor::zeros({1, 1, 2, 2}),
                         Tensor::zeros({1, 1, 3, 3})),
        std::invalid_argument);
  }
}

TEST_CASE("feature distance") {
  SUBCASE("bitwise-identical vectors score exactly zero") {
    const std::vector<float> a{0.1f, -0.7f, 0.3f};
    CHECK(feature_distance(a, a) == 0.0);
  }

  SUBCASE("zero vectors: one gives 1, both give 0") {
    const std::vector<float> z{0.0f, 0.0f};
    const std::vector<float> a{1.0f, 2.0f};
    CHECK(feature_distance(z, a) == 1.0);
    CHECK(feature_distance(a, z) == 1.0);
    CHECK(feature_distance(z, z) == 0.0);
  }

  SUBCASE("orthogonal gives 1, opposite gives 2") {
    const std::vector<float> x{1.0f, 0.0f};
    const std::vector<float> y{0.0f, 3.0f};
    CHECK(feature_distance(x, y) == doctest::Approx(1.0).epsilon(1e-12));
    const std::vector<float> nx{-2.0f, 0.0f};
    CHECK(feature_distance(x, nx) == doctest::Approx(2.0).epsilon(1e-12));
  }

  SUBCASE("scale invariance of the cosine") {
    const std::vector<float> a{0.5f, -1.5f, 2.0f};
    const std::vector<float> b{1.0f, -3.0f, 4.0f};
    CHECK(feature_distance(a, b) == doctest::Approx(0.0).epsilon(1e-9));
  }

  SUBCASE("length mismatch is rejected") {
    CHECK_THROWS_AS(
        (void)feature_distance({1.0f}, {1.0f, 2.0f}), std::invalid_argument);
  }
}

TEST_CASE("diversity") {
  RngStream rng(630);
  MaskSpec spec;
  spec.image_h = spec.image_w = 16;
  spec.hole_h = spec.hole_w = 8;

  auto random_sample = [&]() {
    return random_tensor({1, 3, 16, 16}, rng, 0.0f, 1.0f);
  };

  SUBCASE("identical samples score exactly zero") {
    Tensor base = random_sample();
    std::vector<Tensor> samples(6, base);
    DiversityReport r = diversity(samples, spec, pixel_features, 100, 1);
    CHECK(r.global_score == 0.0);
    CHECK(r.local_score == 0.0);
    CHECK(r.n_pairs == 15);
  }

  SUBCASE("two samples make exactly one pair with that pair's distance") {
    Tensor a = random_sample();
    Tensor b = random_sample();
    DiversityReport r = diversity({a, b}, spec, pixel_features, 10, 1);
    CHECK(r.n_pairs == 1);
    CHECK(r.global_score ==
          doctest::Approx(feature_distance(pixel_features(a),
                                           pixel_features(b)))
              .epsilon(1e-12));
    Tensor ca = crop_spatial(a, 4, 4, 8, 8);
    Tensor cb = crop_spatial(b, 4, 4, 8, 8);
    CHECK(r.local_score ==
          doctest::Approx(feature_distance(pixel_features(ca),
                                           pixel_features(cb)))
              .epsilon(1e-12));
  }

  SUBCASE("appending a distinct sample to an identical set raises both") {
    Tensor base = random_sample();
    std::vector<Tensor> samples(4, base);
    DiversityReport zero = diversity(samples, spec, pixel_features, 100, 1);
    samples.push_back(random_sample());
    DiversityReport more = diversity(samples, spec, pixel_features, 100, 1);
    CHECK(more.global_score > zero.global_score);
    CHECK(more.local_score > zero.local_score);
  }

  SUBCASE("exhaustive pairs match a direct pairwise loop") {
    std::vector<Tensor> samples;
    for (int i = 0; i < 5; ++i) samples.push_back(random_sample());
    DiversityReport r = diversity(samples, spec, pixel_features, 10, 1);
    CHECK(r.n_pairs == 10);
    double global = 0.0, local = 0.0;
    int pairs = 0;
    for (int i = 0; i < 5; ++i) {
      for (int j = i + 1; j < 5; ++j) {
        global += feature_distance(pixel_features(samples[i]),
                                   pixel_features(samples[j]));
        Tensor ci = crop_spatial(samples[i], 4, 4, 8, 8);
        Tensor cj = crop_spatial(samples[j], 4, 4, 8, 8);
        local += feature_distance(pixel_features(ci), pixel_features(cj));
        ++pairs;
      }
    }
    CHECK(r.global_score == doctest::Approx(global / pairs).epsilon(1e-12));
    CHECK(r.local_score == doctest::Approx(local / pairs).epsilon(1e-12));
  }

  SUBCASE("differences confined to the hole dilute the global score") {
    Tensor base = random_sample();
    std::vector<Tensor> samples;
    for (int k = 0; k < 4; ++k) {
      Tensor s = base.detached();
      for (int c = 0; c < 3; ++c) {
        for (int y = 4; y < 12; ++y) {
          for (int x = 4; x < 12; ++x) {
            s.data()[(c * 16 + y) * 16 + x] = rng.uniform();
          }
        }
      }
      samples.push_back(s);
    }
    DiversityReport r = diversity(samples, spec, pixel_features, 6, 1);
    CHECK(r.local_score > 0.0);
    CHECK(r.global_score > 0.0);
    // Shared context outside the hole can only pull the cosine distance
    // of full frames below the crop-only distance.
    CHECK(r.global_score <= r.local_score);
  }

  SUBCASE("sampled subsets are seeded and sized exactly") {
    std::vector<Tensor> samples;
    for (int i = 0; i < 6; ++i) samples.push_back(random_sample());
    DiversityReport a = diversity(samples, spec, pixel_features, 4, 9);
    DiversityReport b = diversity(samples, spec, pixel_features, 4, 9);
    CHECK(a.n_pairs == 4);
    CHECK(a.global_score == b.global_score);
    CHECK(a.local_score == b.local_score);
  }

  SUBCASE("permutation invariance over the sample list") {
    std::vector<Tensor> samples;
    for (int i = 0; i < 5; ++i) samples.push_back(random_sample());
    DiversityReport fwd = diversity(samples, spec, pixel_features, 10, 1);
    std::vector<Tensor> rev(samples.rbegin(), samples.rend());
    DiversityReport bwd = diversity(rev, spec, pixel_features, 10, 1);
    CHECK(fwd.global_score ==
          doctest::Approx(bwd.global_score).epsilon(1e-12));
    CHECK(fwd.local_score == doctest::Approx(bwd.local_score).epsilon(1e-12));
  }

  SUBCASE("argument validation") {
    Tensor only = random_sample();
    CHECK_THROWS_AS((void)diversity({only}, spec, pixel_features, 10, 1),
                    std::invalid_argument);
    Tensor other = random_sample();
    CHECK_THROWS_AS((void)diversity({only, other}, spec, pixel_features, 0, 1),
                    std::invalid_argument);
    Tensor small = random_tensor({1, 3, 8, 8}, rng);
    CHECK_THROWS_AS(
        (void)diversity({only, small}, spec, pixel_features, 10, 1),
        std::invalid_argument);
  }
}

}  // TEST_SUITE
