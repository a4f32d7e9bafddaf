#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "piig/image_io.hpp"
#include "piig/rng.hpp"
#include "piig/tensor.hpp"

namespace piig {

// Axis-aligned hole description; the hole is centered, ties broken toward
// the top-left.
struct MaskSpec {
  int image_h = 0;
  int image_w = 0;
  int hole_h = 0;
  int hole_w = 0;

  int hole_top() const { return (image_h - hole_h) / 2; }
  int hole_left() const { return (image_w - hole_w) / 2; }
};

// (1, 1, H, W) with ones on known pixels and zeros inside the hole.
Tensor make_center_mask(int image_h, int image_w, int hole_h, int hole_w);

// Replaces masked-out pixels (mask 0) with the fill value; known pixels are
// copied through bitwise.
Tensor apply_mask(const Tensor& image, const Tensor& mask, float fill = 1.0f);

struct HoleBox {
  int top = 0, left = 0, h = 0, w = 0;
  bool empty() const { return h == 0 || w == 0; }
};

// Bounding box of the zeros of a (1|N, 1, H, W) mask.
HoleBox mask_hole_bbox(const Tensor& mask);

// One procedurally rendered scene: a shaded background plus a small shape
// (disc or bar) whose kind, orientation, size, and color sit near the image
// center, where a center hole will hide them.
struct SceneAttributes {
  float bg_r = 0, bg_g = 0, bg_b = 0;   // base color in [0.15, 0.85]
  float shade = 0;                       // vertical shading in [-0.25, 0.25]
  int shape_kind = 0;                    // 0 = disc, 1 = bar
  float center_x = 0, center_y = 0;      // fractions of the side, near 0.5
  float theta = 0;                       // bar orientation in [0, pi)
  float accent_r = 0, accent_g = 0, accent_b = 0;  // in [0.05, 0.95]
  float size = 0;                        // radius / half-thickness fraction
};

SceneAttributes sample_scene(RngStream& rng);
// Deterministic render to 8-bit RGB; identical attributes give identical
// bytes.
Image8 render_scene(const SceneAttributes& attrs, int resolution);

struct SyntheticDataset {
  std::vector<Tensor> images;  // normalized (1, 3, R, R)
  std::vector<SceneAttributes> attrs;
  int resolution = 0;
};

// Per-image seeds derive from (seed, index), so any prefix of the dataset
// is independent of the total count.
SyntheticDataset generate_synthetic_dataset(int n, int resolution,
                                            std::uint64_t seed);
// Writes images/img_NNNNN.ppm plus attributes.csv.
void write_synthetic_dataset(const SyntheticDataset& data,
                             const std::string& dir);

struct Dataset {
  std::vector<Tensor> images;  // normalized (1, C, H, W)
  int resolution = 0;
  int channels = 3;

  static Dataset load_dir(const std::string& dir);
  static Dataset from_synthetic(const SyntheticDataset& data);
};

}  // namespace piig
