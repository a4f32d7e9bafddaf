// Latent machinery: reparameterized sampling (values, moments, gradient
// routing), prior draws, spatial tiling, and input concatenation.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "piig/latent.hpp"
#include "piig/rng.hpp"
#include "piig/tensor.hpp"

using namespace piig;
using testutil::bitwise_equal;
using testutil::make;
using testutil::random_normal;
using testutil::random_tensor;

TEST_SUITE("latent") {

TEST_CASE("reparameterize values") {
  RngStream rng(500);

  SUBCASE("zero noise returns the mean exactly") {
    LatentSample s;
    s.mean = random_tensor({3, 4, 1, 1}, rng);
    s.logvar = random_tensor({3, 4, 1, 1}, rng);
    Tensor z = reparameterize(s, Tensor::zeros({3, 4, 1, 1}));
    CHECK(bitwise_equal(z, s.mean));
    CHECK(bitwise_equal(s.z, s.mean));
  }

  SUBCASE("unit variance adds the noise exactly") {
    LatentSample s;
    s.mean = random_tensor({2, 5, 1, 1}, rng);
    s.logvar = Tensor::zeros({2, 5, 1, 1});
    Tensor e = random_normal({2, 5, 1, 1}, rng);
    Tensor z = reparameterize(s, e);
    for (std::int64_t i = 0; i < z.numel(); ++i) {
      CHECK(z.data()[i] == s.mean.data()[i] + e.data()[i]);
    }
  }

  SUBCASE("shape mismatch is rejected") {
    LatentSample s;
    s.mean = Tensor::zeros({2, 4, 1, 1});
    s.logvar = Tensor::zeros({2, 4, 1, 1});
    CHECK_THROWS_AS((void)reparameterize(s, Tensor::zeros({2, 3, 1, 1})),
                    std::invalid_argument);
  }

  SUBCASE("sample moments match mean 1, variance 4 over 1e5 draws") {
    const int n = 100000;
    LatentSample s;
    s.mean = Tensor::full({n, 1, 1, 1}, 1.0f);
    s.logvar = Tensor::full({n, 1, 1, 1}, std::log(4.0f));
    Tensor e = random_normal({n, 1, 1, 1}, rng);
    Tensor z = reparameterize(s, e);
    double m = 0.0;
    for (int i = 0; i < n; ++i) m += z.data()[i];
    m /= n;
    double var = 0.0;
    for (int i = 0; i < n; ++i) {
      var += (z.data()[i] - m) * (z.data()[i] - m);
    }
    var /= n - 1;
    CHECK(std::abs(m - 1.0) < 0.02);
    CHECK(std::abs(var - 4.0) < 0.1);
  }
}

TEST_CASE("reparameterize gradient routing") {
  RngStream rng(510);
  const Shape4 shape{2, 3, 1, 1};
  LatentSample s;
  s.mean = random_tensor(shape, rng, -1.0f, 1.0f, true);
  s.logvar = random_tensor(shape, rng, -1.0f, 1.0f, true);
  Tensor e = random_normal(shape, rng);
  Tensor a = random_tensor(shape, rng);  // projection, no gradient
  Tensor z = reparameterize(s, e);
  backward(sum(mul(z, a)));

  SUBCASE("dL/dmean equals dL/dz: the chain through the mean is identity") {
    auto g = s.mean.grad();
    for (std::int64_t i = 0; i < shape.numel(); ++i) {
      CHECK(g[i] == doctest::Approx(a.data()[i]).epsilon(1e-6));
    }
  }

  SUBCASE("dL/dlogvar matches the analytic half-sigma-eps factor") {
    auto g = s.logvar.grad();
    for (std::int64_t i = 0; i < shape.numel(); ++i) {
      const double sigma = std::exp(0.5 * s.logvar.data()[i]);
      const double want = 0.5 * sigma * e.data()[i] * a.data()[i];
      CHECK(g[i] == doctest::Approx(want).epsilon(1e-5));
    }
  }

  SUBCASE("noise is a constant: it has no gradient buffer") {
    CHECK_FALSE(e.requires_grad());
  }
}

TEST_CASE("prior sampling") {
  SUBCASE("same seed gives bitwise-identical draws") {
    Tensor a = sample_prior(4, 16, 99u);
    Tensor b = sample_prior(4, 16, 99u);
    CHECK(bitwise_equal(a, b));
    CHECK(a.shape() == Shape4{4, 16, 1, 1});
  }

  SUBCASE("different seeds differ") {
    Tensor a = sample_prior(4, 16, 99u);
    Tensor b = sample_prior(4, 16, 100u);
    CHECK_FALSE(bitwise_equal(a, b));
  }

  SUBCASE("moments over 1e5 draws match the standard normal") {
    Tensor z = sample_prior(100000, 1, 7u);
    double m = 0.0;
    for (int i = 0; i < 100000; ++i) m += z.data()[i];
    m /= 100000;
    double var = 0.0;
    for (int i = 0; i < 100000; ++i) {
      var += (z.data()[i] - m) * (z.data()[i] - m);
    }
    var /= 100000 - 1;
    CHECK(std::abs(m) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.03);
  }

  SUBCASE("non-positive dimensions are rejected") {
    CHECK_THROWS_AS((void)sample_prior(0, 4, 1u), std::invalid_argument);
    CHECK_THROWS_AS((void)sample_prior(4, 0, 1u), std::invalid_argument);
  }
}

TEST_CASE("tile_latent") {
  SUBCASE("a single code value floods the grid") {
    Tensor z = make({1, 1, 1, 1}, {3.0f});
    Tensor t = tile_latent(z, 2, 2);
    CHECK(t.shape() == Shape4{1, 1, 2, 2});
    for (int i = 0; i < 4; ++i) CHECK(t.data()[i] == 3.0f);
  }

  SUBCASE("per-channel spatial variance is zero") {
    RngStream rng(520);
    Tensor z = random_normal({2, 5, 1, 1}, rng);
    Tensor t = tile_latent(z, 4, 6);
    for (int n = 0; n < 2; ++n) {
      for (int c = 0; c < 5; ++c) {
        const float v0 = t.data()[((n * 5 + c) * 4 + 0) * 6 + 0];
        for (int y = 0; y < 4; ++y) {
          for (int x = 0; x < 6; ++x) {
            CHECK(t.data()[((n * 5 + c) * 4 + y) * 6 + x] == v0);
          }
        }
      }
    }
  }

  SUBCASE("spatial mean recovers the code exactly") {
    RngStream rng(521);
    Tensor z = random_normal({3, 4, 1, 1}, rng);
    Tensor t = tile_latent(z, 5, 7);
    // All 35 values per channel are identical, so the mean is exact.
    for (int n = 0; n < 3; ++n) {
      for (int c = 0; c < 4; ++c) {
        double acc = 0.0;
        for (int y = 0; y < 5; ++y) {
          for (int x = 0; x < 7; ++x) {
            acc += t.data()[((n * 4 + c) * 5 + y) * 7 + x];
          }
        }
        CHECK(static_cast<float>(acc / 35.0) ==
              doctest::Approx(z.data()[n * 4 + c]).epsilon(1e-7));
      }
    }
  }
}

TEST_CASE("concat_inputs") {
  RngStream rng(530);
  Tensor image = random_tensor({2, 3, 8, 8}, rng);
  Tensor mask = Tensor::full({1, 1, 8, 8}, 1.0f);
  Tensor z_map = random_normal({2, 64, 8, 8}, rng);

  SUBCASE("channel count is image + mask + code") {
    Tensor cat = concat_inputs(image, mask, z_map);
    CHECK(cat.shape() == Shape4{2, 3 + 1 + 64, 8, 8});
  }

  SUBCASE("slicing recovers every part bitwise") {
    Tensor cat = concat_inputs(image, mask, z_map);
    CHECK(bitwise_equal(slice_channels(cat, 0, 3), image));
    CHECK(bitwise_equal(slice_channels(cat, 3, 4), repeat_batch(mask, 2)));
    CHECK(bitwise_equal(slice_channels(cat, 4, 68), z_map));
  }

  SUBCASE("slice-and-reconcat round-trips bitwise") {
    Tensor cat = concat_inputs(image, mask, z_map);
    Tensor again = concat_channels({slice_channels(cat, 0, 3),
                                    slice_channels(cat, 3, 4),
                                    slice_channels(cat, 4, 68)});
    CHECK(bitwise_equal(cat, again));
  }

  SUBCASE("spatial mismatch is rejected") {
    Tensor bad = Tensor::zeros({2, 64, 4, 4});
    CHECK_THROWS_AS((void)concat_inputs(image, mask, bad),
                    std::invalid_argument);
  }

  SUBCASE("multi-channel masks are rejected") {
    Tensor bad = Tensor::zeros({2, 2, 8, 8});
    CHECK_THROWS_AS((void)concat_inputs(image, bad, z_map),
                    std::invalid_argument);
  }
}

}  // TEST_SUITE
