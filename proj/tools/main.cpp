// Command-line front end: train, sample, eval, gradcheck, make-data.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "piig/checkpoint.hpp"
#include "piig/config.hpp"
#include "piig/data.hpp"
#include "piig/gradcheck.hpp"
#include "piig/image_io.hpp"
#include "piig/latent.hpp"
#include "piig/metrics.hpp"
#include "piig/networks.hpp"
#include "piig/trainer.hpp"

namespace fs = std::filesystem;
using namespace piig;

namespace {

std::string fmt_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

// Normalized [-1, 1] tensor to a [0, 1] copy for metric reporting.
Tensor to_unit_range(const Tensor& t) {
  Tensor out = t.detached();
  float* v = out.data();
  for (std::int64_t i = 0; i < out.numel(); ++i) v[i] = (v[i] + 1.0f) * 0.5f;
  return out;
}

// Lays image tiles into a grid with a 2-pixel white gutter.
Image8 make_grid(const std::vector<Image8>& tiles, int columns) {
  const int gap = 2;
  const int tw = tiles.front().width;
  const int th = tiles.front().height;
  const int cols = std::min<int>(columns, static_cast<int>(tiles.size()));
  const int rows =
      (static_cast<int>(tiles.size()) + cols - 1) / cols;
  Image8 grid;
  grid.width = cols * tw + (cols + 1) * gap;
  grid.height = rows * th + (rows + 1) * gap;
  grid.rgb.assign(static_cast<std::size_t>(grid.width) * grid.height * 3, 255);
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    const int r = static_cast<int>(i) / cols;
    const int c = static_cast<int>(i) % cols;
    const int y0 = gap + r * (th + gap);
    const int x0 = gap + c * (tw + gap);
    for (int y = 0; y < th; ++y) {
      for (int x = 0; x < tw; ++x) {
        for (int ch = 0; ch < 3; ++ch) {
          grid.rgb[(static_cast<std::size_t>(y0 + y) * grid.width + x0 + x) *
                       3 +
                   ch] = tiles[i].rgb[(static_cast<std::size_t>(y) * tw + x) *
                                          3 +
                                      ch];
        }
      }
    }
  }
  return grid;
}

void check_resume_compatible(const TrainConfig& run, const TrainConfig& ckpt) {
  auto fail = [](const std::string& what) {
    throw ConfigError("resume: config does not match the checkpoint (" + what +
                      ")");
  };
  if (run.resolution != ckpt.resolution) fail("resolution");
  if (run.image_channels != ckpt.image_channels) fail("image_channels");
  if (run.latent_dim != ckpt.latent_dim) fail("latent_dim");
  if (run.hole_h != ckpt.hole_h || run.hole_w != ckpt.hole_w) fail("hole");
}

int cmd_train(const std::string& config_path, const std::string& resume_path) {
  TrainConfig cfg = parse_config_file(config_path);
  cfg.validate();
  if (cfg.data_dir.empty()) {
    throw ConfigError(config_path + ": train needs data_dir");
  }
  Dataset data = Dataset::load_dir(cfg.data_dir);
  std::printf("dataset: %zu images at %dx%d\n", data.images.size(),
              data.resolution, data.resolution);

  TrainState state;
  if (!resume_path.empty()) {
    TrainConfig ckpt_cfg;
    state = load_checkpoint(resume_path, &ckpt_cfg);
    check_resume_compatible(cfg, ckpt_cfg);
    std::printf("resumed %s at iteration %lld\n", resume_path.c_str(),
                static_cast<long long>(state.iteration));
  } else {
    state = TrainState::init(cfg);
  }
  if (state.iteration >= cfg.iterations) {
    std::printf("nothing to do: checkpoint is at iteration %lld of %d\n",
                static_cast<long long>(state.iteration), cfg.iterations);
    return 0;
  }

  std::int64_t done = 0;
  TrainObserver observer = [&](const IterationArtifacts& art) {
    done = art.iteration;
    if (art.iteration % 100 == 0 || art.iteration == cfg.iterations) {
      std::printf("iteration %lld/%d\n", static_cast<long long>(art.iteration),
                  cfg.iterations);
      std::fflush(stdout);
    }
  };
  TrainRun run = train(cfg, data, state, observer);
  if (!run.reports.empty()) {
    const LossReport& last = run.reports.back();
    std::printf("done at iteration %lld: total %s cons_e %s cons_g %s\n",
                static_cast<long long>(done), fmt_g9(last.total).c_str(),
                fmt_g9(last.cons_e).c_str(), fmt_g9(last.cons_g).c_str());
  }
  if (!cfg.out_dir.empty()) {
    std::printf("outputs in %s\n", cfg.out_dir.c_str());
  }
  return 0;
}

int cmd_sample(const std::string& ckpt_path, const std::string& input_path,
               int k, std::uint64_t seed, const std::string& out_dir) {
  TrainConfig cfg;
  TrainState state = load_checkpoint(ckpt_path, &cfg);
  Image8 img = read_ppm(input_path);
  if (img.width != cfg.resolution || img.height != cfg.resolution) {
    throw std::runtime_error(input_path + ": expected " +
                             std::to_string(cfg.resolution) + "x" +
                             std::to_string(cfg.resolution) + " input, got " +
                             std::to_string(img.width) + "x" +
                             std::to_string(img.height));
  }
  Tensor raw = normalize_image(img);
  Tensor mask =
      make_center_mask(cfg.resolution, cfg.resolution, cfg.hole_h, cfg.hole_w);
  Tensor masked = apply_mask(raw, mask);

  const GeneratorNet gen = state.generator.detached();
  fs::create_directories(out_dir);

  std::vector<Image8> tiles;
  tiles.push_back(denormalize_image(masked));
  RngStream rng(seed);
  for (int i = 0; i < k; ++i) {
    Tensor z = sample_prior(1, cfg.latent_dim, rng);
    Tensor out = gen.forward(masked, mask,
                             tile_latent(z, cfg.resolution, cfg.resolution));
    Tensor comp = composite(raw, out, mask);
    Image8 tile = denormalize_image(comp);
    char name[64];
    std::snprintf(name, sizeof(name), "completion_%02d.ppm", i);
    write_ppm((fs::path(out_dir) / name).string(), tile);
    tiles.push_back(std::move(tile));
  }
  write_ppm((fs::path(out_dir) / "grid.ppm").string(), make_grid(tiles, 6));
  std::printf("wrote %d completions and grid.ppm to %s\n", k, out_dir.c_str());
  return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_dir,
             const std::string& out_dir, int n_metrics, int k_select,
             int div_inputs, int div_samples, int div_pairs,
             std::uint64_t seed) {
  TrainConfig cfg;
  TrainState state = load_checkpoint(ckpt_path, &cfg);
  Dataset data = Dataset::load_dir(data_dir);
  if (data.resolution != cfg.resolution) {
    throw std::runtime_error(data_dir + ": dataset resolution " +
                             std::to_string(data.resolution) +
                             " does not match checkpoint resolution " +
                             std::to_string(cfg.resolution));
  }
  const GeneratorNet gen = state.generator.detached();
  const ExtractorNet ext = state.extractor.detached();

  const int res = cfg.resolution;
  Tensor mask = make_center_mask(res, res, cfg.hole_h, cfg.hole_w);
  MaskSpec spec{res, res, cfg.hole_h, cfg.hole_w};
  fs::create_directories(out_dir);

  // --- Quality: best-of-K completions against the ground truth.
  const int nm = std::min<int>(n_metrics, static_cast<int>(data.images.size()));
  std::ofstream mcsv(fs::path(out_dir) / "metrics.csv");
  mcsv << "index,l1_percent,l2_percent,psnr_db,ssim\n";
  MetricReport report;
  for (int i = 0; i < nm; ++i) {
    const Tensor& raw = data.images[static_cast<std::size_t>(i)];
    Tensor masked = apply_mask(raw, mask);
    Tensor gt01 = to_unit_range(raw);
    RngStream rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    Tensor best;
    double best_psnr = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < k_select; ++s) {
      Tensor z = sample_prior(1, cfg.latent_dim, rng);
      Tensor comp01 = to_unit_range(
          composite(raw, gen.forward(masked, mask, tile_latent(z, res, res)),
                    mask));
      const double p = psnr(comp01, gt01, 1.0);
      if (p > best_psnr) {
        best_psnr = p;
        best = comp01;
      }
    }
    const double l1 = l1_percent(best, gt01);
    const double l2 = l2_percent(best, gt01);
    const double ss = ssim(best, gt01, 1.0);
    report.l1_percent += l1;
    report.l2_percent += l2;
    report.psnr_db += best_psnr;
    report.ssim += ss;
    ++report.n_images;
    mcsv << i << ',' << fmt_g9(l1) << ',' << fmt_g9(l2) << ','
         << fmt_g9(best_psnr) << ',' << fmt_g9(ss) << '\n';
  }
  if (report.n_images > 0) {
    const double n = static_cast<double>(report.n_images);
    report.l1_percent /= n;
    report.l2_percent /= n;
    report.psnr_db /= n;
    report.ssim /= n;
  }
  mcsv << "mean," << fmt_g9(report.l1_percent) << ','
       << fmt_g9(report.l2_percent) << ',' << fmt_g9(report.psnr_db) << ','
       << fmt_g9(report.ssim) << '\n';

  // --- Diversity: K prior draws per masked input, feature distances from
  // the trained extractor trunk.
  FeatureFn features = [&](const Tensor& image) {
    Tensor f = ext.features(image);
    return std::vector<float>(f.data(), f.data() + f.numel());
  };
  const int nd =
      std::min<int>(div_inputs, static_cast<int>(data.images.size()));
  std::ofstream dcsv(fs::path(out_dir) / "diversity.csv");
  dcsv << "index,global_score,local_score,n_pairs\n";
  double mean_global = 0.0, mean_local = 0.0;
  std::int64_t total_pairs = 0;
  for (int i = 0; i < nd; ++i) {
    const Tensor& raw = data.images[static_cast<std::size_t>(i)];
    Tensor masked = apply_mask(raw, mask);
    RngStream rng(derive_seed(seed, 1000000u + static_cast<std::uint64_t>(i)));
    std::vector<Tensor> samples;
    samples.reserve(static_cast<std::size_t>(div_samples));
    for (int s = 0; s < div_samples; ++s) {
      Tensor z = sample_prior(1, cfg.latent_dim, rng);
      samples.push_back(
          composite(raw, gen.forward(masked, mask, tile_latent(z, res, res)),
                    mask)
              .detached());
    }
    DiversityReport d =
        diversity(samples, spec, features, div_pairs,
                  derive_seed(seed, 2000000u + static_cast<std::uint64_t>(i)));
    mean_global += d.global_score;
    mean_local += d.local_score;
    total_pairs += d.n_pairs;
    dcsv << i << ',' << fmt_g9(d.global_score) << ',' << fmt_g9(d.local_score)
         << ',' << d.n_pairs << '\n';
  }
  if (nd > 0) {
    mean_global /= nd;
    mean_local /= nd;
  }
  dcsv << "mean," << fmt_g9(mean_global) << ',' << fmt_g9(mean_local) << ','
       << total_pairs << '\n';

  std::printf("quality over %lld images (best of %d by PSNR):\n",
              static_cast<long long>(report.n_images), k_select);
  std::printf("  %-12s %-12s %-12s %-12s\n", "L1%", "L2%", "PSNR(dB)", "SSIM");
  std::printf("  %-12.4f %-12.4f %-12.4f %-12.6f\n", report.l1_percent,
              report.l2_percent, report.psnr_db, report.ssim);
  std::printf("diversity over %d inputs x %d samples (%lld pairs):\n", nd,
              div_samples, static_cast<long long>(total_pairs));
  std::printf("  global %.6f  local %.6f\n", mean_global, mean_local);
  std::printf("reports in %s\n", out_dir.c_str());
  return 0;
}

int cmd_gradcheck(std::uint64_t seed, int trials, int coords) {
  GradcheckOptions opts;
  opts.seed = seed;
  opts.trials = trials;
  opts.coords_per_trial = coords;
  std::vector<GradcheckResult> results = run_gradcheck(opts, &std::cout);
  std::int64_t checks = 0, failures = 0;
  for (const auto& r : results) {
    checks += r.checks;
    failures += r.failures;
  }
  std::printf("%lld comparisons, %lld failures\n",
              static_cast<long long>(checks), static_cast<long long>(failures));
  return gradcheck_passed(results) ? 0 : 1;
}

int cmd_make_data(const std::string& out_dir, int n, int res,
                  std::uint64_t seed) {
  SyntheticDataset data = generate_synthetic_dataset(n, res, seed);
  write_synthetic_dataset(data, out_dir);
  std::printf("wrote %d images at %dx%d to %s\n", n, res, res,
              out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pluralistic image inpainting: training, sampling, and "
               "evaluation on small synthetic scenes"};
  app.require_subcommand(1);

  std::string config_path, resume_path;
  CLI::App* train_cmd = app.add_subcommand("train", "Train from a config file");
  train_cmd->add_option("--config", config_path, "Config file path")
      ->required();
  train_cmd->add_option("--resume", resume_path,
                        "Checkpoint to continue from");

  std::string ckpt_path, input_path, out_dir = "samples";
  int k = 10;
  std::uint64_t seed = 0;
  CLI::App* sample_cmd =
      app.add_subcommand("sample", "Write K completions of one masked image");
  sample_cmd->add_option("--checkpoint", ckpt_path, "Checkpoint path")
      ->required();
  sample_cmd->add_option("--input", input_path, "Input image (binary PPM)")
      ->required();
  sample_cmd->add_option("--k", k, "Completions to draw");
  sample_cmd->add_option("--seed", seed, "Sampling seed");
  sample_cmd->add_option("--out", out_dir, "Output directory");

  std::string eval_ckpt, eval_data, eval_out = "eval";
  int n_metrics = 100, k_select = 10, div_inputs = 50, div_samples = 20,
      div_pairs = 20;
  std::uint64_t eval_seed = 0;
  CLI::App* eval_cmd =
      app.add_subcommand("eval", "Quality and diversity reports");
  eval_cmd->add_option("--checkpoint", eval_ckpt, "Checkpoint path")
      ->required();
  eval_cmd->add_option("--data", eval_data, "Dataset directory")->required();
  eval_cmd->add_option("--out", eval_out, "Report directory");
  eval_cmd->add_option("--n-metrics", n_metrics,
                       "Images for the quality table");
  eval_cmd->add_option("--k-select", k_select,
                       "Completions per image; best by PSNR is scored");
  eval_cmd->add_option("--div-inputs", div_inputs,
                       "Masked inputs for the diversity score");
  eval_cmd->add_option("--div-samples", div_samples,
                       "Completions per masked input");
  eval_cmd->add_option("--div-pairs-per-input", div_pairs,
                       "Sampled pairs per input");
  eval_cmd->add_option("--seed", eval_seed, "Sampling seed");

  std::uint64_t gc_seed = 7;
  int gc_trials = 20, gc_coords = 10;
  CLI::App* gc_cmd =
      app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  gc_cmd->add_option("--seed", gc_seed, "Base seed");
  gc_cmd->add_option("--trials", gc_trials, "Trials per check");
  gc_cmd->add_option("--coords", gc_coords,
                     "Probed coordinates per network trial");

  std::string md_out;
  int md_n = 2000, md_res = 32;
  std::uint64_t md_seed = 1;
  CLI::App* md_cmd =
      app.add_subcommand("make-data", "Generate a synthetic dataset");
  md_cmd->add_option("--out", md_out, "Output directory")->required();
  md_cmd->add_option("--n", md_n, "Number of images");
  md_cmd->add_option("--res", md_res, "Image side in pixels");
  md_cmd->add_option("--seed", md_seed, "Dataset seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the diagnostic
    return 2;
  }

  try {
    if (*train_cmd) return cmd_train(config_path, resume_path);
    if (*sample_cmd) {
      return cmd_sample(ckpt_path, input_path, k, seed, out_dir);
    }
    if (*eval_cmd) {
      return cmd_eval(eval_ckpt, eval_data, eval_out, n_metrics, k_select,
                      div_inputs, div_samples, div_pairs, eval_seed);
    }
    if (*gc_cmd) return cmd_gradcheck(gc_seed, gc_trials, gc_coords);
    if (*md_cmd) return cmd_make_data(md_out, md_n, md_res, md_seed);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
