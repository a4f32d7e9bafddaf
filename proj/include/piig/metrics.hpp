#pragma once

// Image quality metrics (L1%, L2%, PSNR, SSIM) and the paired-sample
// diversity score over multiple completions of one masked input.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "piig/data.hpp"
#include "piig/tensor.hpp"

namespace piig {

// Aggregate quality numbers over a set of evaluated images.
struct MetricReport {
  double l1_percent = 0.0;
  double l2_percent = 0.0;
  double psnr_db = 0.0;
  double ssim = 0.0;
  std::int64_t n_images = 0;
};

// 10*log10(peak^2 / MSE), in decibels. Identical inputs have zero MSE and
// return +infinity; callers that print reports render that as "inf".
double psnr(const Tensor& a, const Tensor& b, double peak);

// Mean structural similarity over non-overlapping 8x8 windows of the
// channel-mean grayscale image, with the standard stabilizers
// C1 = (0.01*peak)^2 and C2 = (0.03*peak)^2 and population statistics.
// Throws std::invalid_argument if either spatial side is smaller than 8.
double ssim(const Tensor& a, const Tensor& b, double peak);

// Mean absolute difference (resp. mean squared difference) times 100.
// Inputs are expected on a [0, 1] scale for percentage reporting.
double l1_percent(const Tensor& a, const Tensor& b);
double l2_percent(const Tensor& a, const Tensor& b);

// Mean pairwise feature distance across completions: over full frames
// (global) and over the mask hole crop (local).
struct DiversityReport {
  double global_score = 0.0;
  double local_score = 0.0;
  std::int64_t n_pairs = 0;
};

// Maps one image tensor (1, C, H, W) to a flat feature vector.
using FeatureFn = std::function<std::vector<float>(const Tensor&)>;

// Cosine-complement distance 1 - <a,b>/(|a||b|), computed in double
// precision and clamped to [0, 2]. Bitwise-identical vectors score exactly
// 0; if exactly one vector is all-zero the distance is 1 (undefined angle,
// treated as orthogonal); two all-zero vectors score 0.
double feature_distance(const std::vector<float>& a,
                        const std::vector<float>& b);

// Scores K >= 2 completions of one masked input. Pairs are drawn without
// replacement: every unordered pair when requested_pairs >= K*(K-1)/2,
// otherwise a seeded uniform subset of exactly requested_pairs pairs.
// global_score averages feature_fn distances on full frames, local_score
// the same on the (hole_top, hole_left, hole_h, hole_w) crop given by spec.
// Throws std::invalid_argument if fewer than two samples are given, if
// requested_pairs is not positive, or if a sample does not match spec.
DiversityReport diversity(const std::vector<Tensor>& samples,
                          const MaskSpec& spec, const FeatureFn& feature_fn,
                          std::int64_t requested_pairs, std::uint64_t seed);

}  // namespace piig
