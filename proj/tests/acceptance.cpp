// Acceptance gate for the full pipeline. Eight criteria run in order, each
// printing one [PASS]/[FAIL] line; the exit code is the number of failures.
//
//   1. gradient soundness        finite-difference suite at defaults, < 2 min
//   2. KL correctness            closed form vs 1e6-sample Monte-Carlo, 1%
//   3. gradient-penalty cases    constant, unit-norm linear, masked invariance
//   4. known-pixel preservation  200 iterations, composites bitwise outside
//   5. desk-scale convergence    2000 iterations halve the consistency loss
//   6. pluralism                 distinct prior draws yield diverse holes
//   7. metric unit cases         PSNR / SSIM / L1 / L2 / diversity anchors
//   8. reproducibility           bit-identical rerun and checkpoint resume

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "piig/checkpoint.hpp"
#include "piig/config.hpp"
#include "piig/data.hpp"
#include "piig/gradcheck.hpp"
#include "piig/latent.hpp"
#include "piig/losses.hpp"
#include "piig/metrics.hpp"
#include "piig/networks.hpp"
#include "piig/params.hpp"
#include "piig/rng.hpp"
#include "piig/tensor.hpp"
#include "piig/trainer.hpp"

namespace fs = std::filesystem;
using namespace piig;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int index, const char* label, bool pass,
            const std::string& detail) {
  std::printf("[%s] criterion %d: %s: %s\n", pass ? "PASS" : "FAIL", index,
              label, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

using Outcome = std::pair<bool, std::string>;

template <typename F>
void criterion(int index, const char* label, F&& body) {
  try {
    Outcome out = body();
    report(index, label, out.first, out.second);
  } catch (const std::exception& e) {
    report(index, label, false, std::string("exception: ") + e.what());
  }
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

Tensor random_tensor(Shape4 shape, RngStream& rng, float lo = -1.0f,
                     float hi = 1.0f) {
  std::vector<float> v(static_cast<std::size_t>(shape.numel()));
  for (auto& x : v) x = lo + (hi - lo) * rng.uniform();
  return Tensor::from_data(shape, std::move(v));
}

bool tensor_bits_equal(const Tensor& a, const Tensor& b) {
  if (!(a.shape() == b.shape())) return false;
  return std::memcmp(a.data(), b.data(),
                     static_cast<std::size_t>(a.numel()) * sizeof(float)) == 0;
}

bool params_bits_equal(const NetworkParams& a, const NetworkParams& b) {
  if (a.items.size() != b.items.size()) return false;
  for (std::size_t i = 0; i < a.items.size(); ++i) {
    if (a.items[i].name != b.items[i].name) return false;
    if (!tensor_bits_equal(a.items[i].tensor, b.items[i].tensor)) return false;
  }
  return true;
}

bool adam_bits_equal(const AdamState& a, const AdamState& b) {
  if (a.step_count != b.step_count || a.m.size() != b.m.size() ||
      a.v.size() != b.v.size()) {
    return false;
  }
  auto vec_eq = [](const std::vector<float>& x, const std::vector<float>& y) {
    return x.size() == y.size() &&
           (x.empty() ||
            std::memcmp(x.data(), y.data(), x.size() * sizeof(float)) == 0);
  };
  for (std::size_t i = 0; i < a.m.size(); ++i) {
    if (!vec_eq(a.m[i], b.m[i]) || !vec_eq(a.v[i], b.v[i])) return false;
  }
  return true;
}

// Bitwise check that out agrees with ref wherever the mask is one.
bool known_pixels_match(const Tensor& out, const Tensor& ref,
                        const Tensor& mask) {
  const Shape4 s = out.shape();
  const Shape4 ms = mask.shape();
  if (!(ref.shape() == s)) return false;
  for (int n = 0; n < s.n; ++n) {
    const float* m = mask.data() + (ms.n == 1 ? 0 : n * ms.h * ms.w);
    for (int c = 0; c < s.c; ++c) {
      for (int y = 0; y < s.h; ++y) {
        for (int x = 0; x < s.w; ++x) {
          if (m[y * s.w + x] != 1.0f) continue;
          const std::int64_t i =
              ((static_cast<std::int64_t>(n) * s.c + c) * s.h + y) * s.w + x;
          if (std::memcmp(&out.data()[i], &ref.data()[i], sizeof(float)) != 0) {
            return false;
          }
        }
      }
    }
  }
  return true;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Monte-Carlo estimate of KL(q || p) for scalar q = N(mu, e^logvar) against
// the standard normal, in double precision. The shared normalizing
// constants cancel; the integrand is -logvar/2 - eps^2/2 + z^2/2.
double mc_kl(double mu, double logvar, std::int64_t n, std::uint64_t seed) {
  RngStream rng(seed);
  const double sigma = std::exp(0.5 * logvar);
  double acc = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double eps = rng.normal64();
    const double z = mu + sigma * eps;
    acc += -0.5 * logvar - 0.5 * eps * eps + 0.5 * z * z;
  }
  return acc / static_cast<double>(n);
}

double mean_over(const std::vector<LossReport>& reports, std::size_t begin,
                 std::size_t end) {
  double acc = 0.0;
  for (std::size_t i = begin; i < end; ++i) acc += reports[i].cons_e;
  return acc / static_cast<double>(end - begin);
}

bool report_finite(const LossReport& r) {
  return std::isfinite(r.kl_e) && std::isfinite(r.kl_g) &&
         std::isfinite(r.cons_e) && std::isfinite(r.cons_g) &&
         std::isfinite(r.latent_cons) && std::isfinite(r.adv_global) &&
         std::isfinite(r.adv_local) && std::isfinite(r.total);
}

// Mean absolute pixel difference, in the [-1, 1] pixel scale.
double mean_abs_gap(const Tensor& a, const Tensor& b) {
  double acc = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    acc += std::abs(static_cast<double>(a.data()[i]) - b.data()[i]);
  }
  return acc / static_cast<double>(a.numel());
}

}  // namespace

int main() {
  const fs::path root = fs::temp_directory_path() / "piig_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path dir_a = root / "dir_a";
  const fs::path dir_b = root / "dir_b";
  const fs::path dir_c = root / "dir_c";

  std::printf("building the 2000-image synthetic dataset at 32x32...\n");
  std::fflush(stdout);
  const Dataset data =
      Dataset::from_synthetic(generate_synthetic_dataset(2000, 32, 1));

  // dataset-defaults training configuration shared by criteria 5, 6, and 8
  TrainConfig cfg_a;
  cfg_a.seed = 1;
  cfg_a.iterations = 2000;
  cfg_a.checkpoint_interval = 600;
  cfg_a.log_interval = 1;
  cfg_a.out_dir = dir_a.string();

  TrainState state_a = TrainState::init(cfg_a);
  TrainRun run_a;
  bool have_run_a = false;

  criterion(1, "gradient soundness", [&]() -> Outcome {
    const Clock::time_point t0 = Clock::now();
    GradcheckOptions opts;  // 20 trials, 1e-2 relative tolerance
    const std::vector<GradcheckResult> results = run_gradcheck(opts, nullptr);
    const double secs = seconds_since(t0);
    std::int64_t checks = 0, failures = 0;
    double worst = 0.0;
    for (const GradcheckResult& r : results) {
      checks += r.checks;
      failures += r.failures;
      worst = std::max(worst, r.max_rel_error);
    }
    const bool pass = gradcheck_passed(results) && !results.empty() &&
                      opts.trials >= 20 && secs < 120.0;
    return {pass, fmt("%lld comparisons across %zu checks, %lld failures, "
                      "worst rel err %.2e, %.1f s (limit 120)",
                      static_cast<long long>(checks), results.size(),
                      static_cast<long long>(failures), worst, secs)};
  });

  criterion(2, "closed-form KL vs Monte-Carlo", [&]() -> Outcome {
    Tensor origin = Tensor::zeros({1, 4, 1, 1});
    const float at_origin = kl_divergence(origin, origin).item();
    bool pass = (at_origin == 0.0f);
    RngStream pick(202);
    double worst_rel = 0.0;
    int points = 0;
    while (points < 25) {
      const float mu = static_cast<float>(-2.0 + 4.0 * pick.uniform64());
      const float lv = static_cast<float>(-2.0 + 4.0 * pick.uniform64());
      const double cf =
          0.5 * (std::exp(static_cast<double>(lv)) +
                 static_cast<double>(mu) * mu - 1.0 - lv);
      // Redraw near-zero references: a 1e6-sample estimate of a KL this
      // small is dominated by Monte-Carlo noise, not by the formula.
      if (cf < 0.05) continue;
      const double lib =
          kl_divergence(Tensor::full({1, 1, 1, 1}, mu),
                        Tensor::full({1, 1, 1, 1}, lv))
              .item();
      const double mc =
          mc_kl(mu, lv, 1000000, derive_seed(777, static_cast<std::uint64_t>(
                                                      points)));
      const double rel = std::abs(mc - lib) / lib;
      worst_rel = std::max(worst_rel, rel);
      if (rel > 0.01) pass = false;
      ++points;
    }
    return {pass, fmt("25 points within 1%% of the 1e6-sample estimate "
                      "(worst %.3f%%), value at the origin %.1f",
                      worst_rel * 100.0, static_cast<double>(at_origin))};
  });

  criterion(3, "gradient-penalty analytic cases", [&]() -> Outcome {
    RngStream rng(303);

    CriticOps constant;
    constant.score = [](const Tensor& x) {
      return Tensor::full({x.shape().n, 1, 1, 1}, 2.5f);
    };
    constant.score_detached = constant.score;
    Tensor real = random_tensor({3, 2, 4, 4}, rng);
    Tensor fake = random_tensor({3, 2, 4, 4}, rng);
    const std::vector<float> u3{0.2f, 0.5f, 0.9f};
    const double gp_const =
        gradient_penalty(constant, real, fake, u3).item();
    const bool ok_const = std::abs(gp_const - 1.0) <= 1e-6;

    // Linear critic with unit-norm weights: the input gradient is w
    // everywhere, so the penalty vanishes.
    Tensor w = random_tensor({1, 3, 4, 4}, rng);
    double norm = 0.0;
    for (std::int64_t i = 0; i < w.numel(); ++i) {
      norm += static_cast<double>(w.data()[i]) * w.data()[i];
    }
    norm = std::sqrt(norm);
    for (std::int64_t i = 0; i < w.numel(); ++i) {
      w.data()[i] = static_cast<float>(w.data()[i] / norm);
    }
    CriticOps linear;
    linear.score = [w](const Tensor& x) {
      return sum_per_sample(mul(x, repeat_batch(w, x.shape().n)));
    };
    linear.score_detached = linear.score;
    Tensor real2 = random_tensor({2, 3, 4, 4}, rng);
    Tensor fake2 = random_tensor({2, 3, 4, 4}, rng);
    const std::vector<float> u2{0.3f, 0.7f};
    const double gp_lin =
        gradient_penalty(linear, real2, fake2, u2).item();
    const bool ok_lin = gp_lin <= 1e-6;

    // Hole-only critic: masked penalty must ignore known-region pixels.
    Tensor mask = make_center_mask(8, 8, 4, 4);
    CriticOps hole;
    hole.score = [mask](const Tensor& x) {
      Tensor zeros = Tensor::zeros(x.shape());
      return sum_per_sample(tanh(where_mask(mask, zeros, x)));
    };
    hole.score_detached = hole.score;
    Tensor real3 = random_tensor({2, 3, 8, 8}, rng);
    Tensor fake3 = random_tensor({2, 3, 8, 8}, rng);
    const std::vector<float> um{0.15f, 0.85f};
    const double before =
        gradient_penalty(hole, real3, fake3, um, &mask).item();
    Tensor real4 = real3.detached();
    Tensor fake4 = fake3.detached();
    for (int n = 0; n < 2; ++n) {
      for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < 8; ++y) {
          for (int x = 0; x < 8; ++x) {
            if (mask.data()[y * 8 + x] != 1.0f) continue;
            const std::int64_t i = ((n * 3 + c) * 8 + y) * 8 + x;
            const float delta = ((y + x) % 2 == 0) ? 0.31f : -0.17f;
            real4.data()[i] += delta;
            fake4.data()[i] -= delta;
          }
        }
      }
    }
    const double after =
        gradient_penalty(hole, real4, fake4, um, &mask).item();
    const bool ok_mask = std::abs(after - before) <= 1e-6;

    return {ok_const && ok_lin && ok_mask,
            fmt("constant critic %.8f (target 1), unit-norm linear %.2e "
                "(<= 1e-6), masked shift %.2e (<= 1e-6)",
                gp_const, gp_lin, std::abs(after - before))};
  });

  criterion(4, "known-pixel preservation", [&]() -> Outcome {
    TrainConfig cfg;  // defaults: 32x32, 16x16 hole, batch 12
    cfg.iterations = 200;
    cfg.seed = 4;
    std::int64_t seen = 0;
    std::int64_t mismatches = 0;
    TrainObserver observer = [&](const IterationArtifacts& art) {
      ++seen;
      if (!known_pixels_match(art.recon_output, art.recon_input, art.mask)) {
        ++mismatches;
      }
      if (!known_pixels_match(art.gen_output, art.gen_input, art.mask)) {
        ++mismatches;
      }
    };
    const Clock::time_point t0 = Clock::now();
    train(cfg, data, observer);
    const double secs = seconds_since(t0);
    const bool pass = (seen == 200) && mismatches == 0;
    return {pass, fmt("%lld iterations observed, %lld composites differing "
                      "outside the hole, %.0f s",
                      static_cast<long long>(seen),
                      static_cast<long long>(mismatches), secs)};
  });

  criterion(5, "desk-scale convergence", [&]() -> Outcome {
    const Clock::time_point t0 = Clock::now();
    run_a = train(cfg_a, data, state_a);
    const double secs = seconds_since(t0);
    if (run_a.reports.size() != 2000) {
      return {false, fmt("expected 2000 loss reports, got %zu",
                         run_a.reports.size())};
    }
    have_run_a = true;
    std::size_t non_finite = 0;
    for (const LossReport& r : run_a.reports) {
      if (!report_finite(r)) ++non_finite;
    }
    const double first = mean_over(run_a.reports, 0, 50);
    const double last = mean_over(run_a.reports, 1950, 2000);
    const bool pass = non_finite == 0 && last <= 0.5 * first && secs < 1800.0;
    return {pass, fmt("cons_e mean %.4f over the first 50 iterations vs "
                      "%.4f over the last 50 (ratio %.3f, need <= 0.5), "
                      "%zu non-finite reports, %.0f s (limit 1800)",
                      first, last, last / first, non_finite, secs)};
  });

  criterion(6, "pluralism", [&]() -> Outcome {
    if (!have_run_a) {
      return {false, "skipped: the criterion-5 training run is unavailable"};
    }
    const GeneratorNet gen = state_a.generator.detached();
    const ExtractorNet ext = state_a.extractor.detached();
    const int res = cfg_a.resolution;
    Tensor mask = make_center_mask(res, res, cfg_a.hole_h, cfg_a.hole_w);
    const MaskSpec spec{res, res, cfg_a.hole_h, cfg_a.hole_w};
    const FeatureFn features = [&ext](const Tensor& image) {
      Tensor f = ext.features(image);
      return std::vector<float>(f.data(), f.data() + f.numel());
    };
    const int top = spec.hole_top();
    const int left = spec.hole_left();

    RngStream rng(606);
    const int n_inputs = 50;
    const int k_draws = 20;
    const std::int64_t all_pairs = k_draws * (k_draws - 1) / 2;
    double worst_repeated = 0.0;
    int distinct_wins = 0;
    int spread_hits = 0;
    for (int i = 0; i < n_inputs; ++i) {
      const Tensor& raw = data.images[static_cast<std::size_t>(i)];
      Tensor masked = apply_mask(raw, mask);

      Tensor z0 = sample_prior(1, cfg_a.latent_dim, rng);
      Tensor first = composite(raw,
                               gen.forward(masked, mask,
                                           tile_latent(z0, res, res)),
                               mask)
                         .detached();
      const std::vector<Tensor> repeated(k_draws, first);
      const double repeated_local =
          diversity(repeated, spec, features, all_pairs, 1).local_score;
      worst_repeated = std::max(worst_repeated, std::abs(repeated_local));

      std::vector<Tensor> samples;
      samples.reserve(k_draws);
      for (int k = 0; k < k_draws; ++k) {
        Tensor z = sample_prior(1, cfg_a.latent_dim, rng);
        samples.push_back(composite(raw,
                                    gen.forward(masked, mask,
                                                tile_latent(z, res, res)),
                                    mask)
                              .detached());
      }
      const DiversityReport distinct =
          diversity(samples, spec, features, all_pairs, 1);
      if (distinct.local_score > repeated_local) ++distinct_wins;

      std::vector<Tensor> crops;
      crops.reserve(k_draws);
      for (const Tensor& s : samples) {
        crops.push_back(
            crop_spatial(s, top, left, spec.hole_h, spec.hole_w));
      }
      double spread = 0.0;
      for (int p = 0; p < k_draws; ++p) {
        for (int q = p + 1; q < k_draws; ++q) {
          spread += mean_abs_gap(crops[p], crops[q]);
        }
      }
      spread /= static_cast<double>(all_pairs);
      if (spread > 0.01) ++spread_hits;
    }
    const bool pass = worst_repeated <= 1e-6 && distinct_wins == n_inputs &&
                      spread_hits >= 45;
    return {pass, fmt("repeated-z local score at most %.1e (need <= 1e-6); "
                      "distinct draws beat repeated on %d/%d inputs; hole L1 "
                      "spread > 0.01 on %d/%d (need >= 45)",
                      worst_repeated, distinct_wins, n_inputs, spread_hits,
                      n_inputs)};
  });

  criterion(7, "metric unit cases", [&]() -> Outcome {
    Tensor a = Tensor::full({1, 3, 8, 8}, 100.0f);
    Tensor b = Tensor::full({1, 3, 8, 8}, 116.0f);
    const double gap_db = psnr(a, b, 255.0);
    const bool ok_psnr = std::abs(gap_db - 24.05) <= 0.01;

    RngStream rng(707);
    Tensor x = random_tensor({1, 3, 16, 16}, rng, 0.0f, 1.0f);
    const bool ok_ssim = (ssim(x, x, 1.0) == 1.0);

    Tensor y = random_tensor({2, 3, 8, 8}, rng, 0.0f, 1.0f);
    Tensor z = random_tensor({2, 3, 8, 8}, rng, 0.0f, 1.0f);
    double l1 = 0.0, l2 = 0.0;
    for (std::int64_t i = 0; i < y.numel(); ++i) {
      const double d = static_cast<double>(y.data()[i]) - z.data()[i];
      l1 += std::abs(d);
      l2 += d * d;
    }
    l1 = l1 / static_cast<double>(y.numel()) * 100.0;
    l2 = l2 / static_cast<double>(y.numel()) * 100.0;
    const bool ok_l1 = std::abs(l1_percent(y, z) - l1) <= 1e-6;
    const bool ok_l2 = std::abs(l2_percent(y, z) - l2) <= 1e-6;

    const MaskSpec spec{16, 16, 8, 8};
    const FeatureFn pixels = [](const Tensor& t) {
      return std::vector<float>(t.data(), t.data() + t.numel());
    };
    const std::vector<Tensor> same(5, x);
    const DiversityReport d = diversity(same, spec, pixels, 10, 1);
    const bool ok_div = (d.global_score == 0.0 && d.local_score == 0.0);

    return {ok_psnr && ok_ssim && ok_l1 && ok_l2 && ok_div,
            fmt("constant-gap PSNR %.4f dB (target 24.05 +- 0.01), "
                "SSIM(a,a) exact: %s, L1/L2 loop-oracle gaps %.1e/%.1e, "
                "identical-sample diversity %.1f/%.1f",
                gap_db, ok_ssim ? "yes" : "no",
                std::abs(l1_percent(y, z) - l1),
                std::abs(l2_percent(y, z) - l2), d.global_score,
                d.local_score)};
  });

  criterion(8, "reproducibility and persistence", [&]() -> Outcome {
    if (!have_run_a) {
      return {false, "skipped: the criterion-5 training run is unavailable"};
    }
    // Fresh rerun with the same seed and config: the loss CSV must be
    // byte-identical.
    TrainConfig cfg_b = cfg_a;
    cfg_b.out_dir = dir_b.string();
    TrainState state_b = TrainState::init(cfg_b);
    train(cfg_b, data, state_b);
    const std::string csv_a = read_file((dir_a / "losses.csv").string());
    const std::string csv_b = read_file((dir_b / "losses.csv").string());
    const bool csv_same = !csv_a.empty() && csv_a == csv_b;

    // Resume from the iteration-1800 checkpoint and finish the run: rows and
    // the final state must match run A bit for bit.
    TrainConfig echo;
    TrainState state_c =
        load_checkpoint((dir_a / "ckpt_001800.piig").string(), &echo);
    const bool at_1800 = (state_c.iteration == 1800);
    TrainConfig cfg_c = cfg_a;
    cfg_c.out_dir = dir_c.string();
    TrainRun run_c = train(cfg_c, data, state_c);
    bool rows_same = run_c.reports.size() == 200;
    if (rows_same) {
      for (std::size_t k = 0; k < 200; ++k) {
        if (loss_report_csv_row(run_c.reports[k]) !=
            loss_report_csv_row(run_a.reports[1800 + k])) {
          rows_same = false;
          break;
        }
      }
    }
    const bool state_same =
        state_c.iteration == state_a.iteration && state_c.rng == state_a.rng &&
        params_bits_equal(state_a.extractor.params("e"),
                          state_c.extractor.params("e")) &&
        params_bits_equal(state_a.generator.params("g"),
                          state_c.generator.params("g")) &&
        params_bits_equal(state_a.critics.global_net.params("dg"),
                          state_c.critics.global_net.params("dg")) &&
        params_bits_equal(state_a.critics.local_net.params("dl"),
                          state_c.critics.local_net.params("dl")) &&
        adam_bits_equal(state_a.opt_extractor, state_c.opt_extractor) &&
        adam_bits_equal(state_a.opt_generator, state_c.opt_generator) &&
        adam_bits_equal(state_a.opt_global, state_c.opt_global) &&
        adam_bits_equal(state_a.opt_local, state_c.opt_local);

    return {csv_same && at_1800 && rows_same && state_same,
            fmt("rerun loss CSV byte-identical: %s; checkpoint resumed at "
                "1800: %s; 200 resumed rows identical: %s; final state "
                "bit-identical: %s",
                csv_same ? "yes" : "no", at_1800 ? "yes" : "no",
                rows_same ? "yes" : "no", state_same ? "yes" : "no")};
  });

  std::printf("acceptance: %d of 8 criteria passed\n", 8 - g_failures);
  return g_failures;
}
