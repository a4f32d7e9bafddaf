#include "piig/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace piig {

namespace fs = std::filesystem;

Tensor make_center_mask(int image_h, int image_w, int hole_h, int hole_w) {
  if (image_h <= 0 || image_w <= 0) {
    throw std::invalid_argument("make_center_mask: empty image");
  }
  if (hole_h <= 0 || hole_w <= 0 || hole_h > image_h || hole_w > image_w) {
    throw std::invalid_argument(
        "make_center_mask: hole " + std::to_string(hole_h) + "x" +
        std::to_string(hole_w) + " does not fit " + std::to_string(image_h) +
        "x" + std::to_string(image_w));
  }
  const int top = (image_h - hole_h) / 2;
  const int left = (image_w - hole_w) / 2;
  std::vector<float> m(static_cast<std::size_t>(image_h) * image_w, 1.0f);
  for (int y = top; y < top + hole_h; ++y)
    for (int x = left; x < left + hole_w; ++x) m[y * image_w + x] = 0.0f;
  return Tensor::from_data({1, 1, image_h, image_w}, std::move(m));
}

Tensor apply_mask(const Tensor& image, const Tensor& mask, float fill) {
  return where_mask(mask, image, Tensor::full(image.shape(), fill));
}

HoleBox mask_hole_bbox(const Tensor& mask) {
  const Shape4 s = mask.shape();
  if (s.c != 1) {
    throw std::invalid_argument("mask_hole_bbox: mask must have one channel");
  }
  int y0 = s.h, y1 = -1, x0 = s.w, x1 = -1;
  const float* m = mask.data();
  for (int n = 0; n < s.n; ++n)
    for (int y = 0; y < s.h; ++y)
      for (int x = 0; x < s.w; ++x) {
        if (m[(n * s.h + y) * s.w + x] == 0.0f) {
          y0 = std::min(y0, y);
          y1 = std::max(y1, y);
          x0 = std::min(x0, x);
          x1 = std::max(x1, x);
        }
      }
  if (y1 < 0) return {};
  return {y0, x0, y1 - y0 + 1, x1 - x0 + 1};
}

SceneAttributes sample_scene(RngStream& rng) {
  auto range = [&rng](float lo, float hi) {
    return lo + (hi - lo) * rng.uniform();
  };
  SceneAttributes a;
  a.bg_r = range(0.15f, 0.85f);
  a.bg_g = range(0.15f, 0.85f);
  a.bg_b = range(0.15f, 0.85f);
  a.shade = range(-0.25f, 0.25f);
  a.shape_kind = static_cast<int>(rng.uniform_int(2));
  a.center_x = range(0.455f, 0.545f);
  a.center_y = range(0.455f, 0.545f);
  a.theta = range(0.0f, 3.14159265f);
  a.accent_r = range(0.05f, 0.95f);
  a.accent_g = range(0.05f, 0.95f);
  a.accent_b = range(0.05f, 0.95f);
  a.size = range(0.06f, 0.11f);
  return a;
}

Image8 render_scene(const SceneAttributes& a, int resolution) {
  if (resolution <= 0) {
    throw std::invalid_argument("render_scene: non-positive resolution");
  }
  const int r = resolution;
  Image8 img;
  img.width = r;
  img.height = r;
  img.rgb.resize(static_cast<std::size_t>(r) * r * 3);

  const float cx = a.center_x * r;
  const float cy = a.center_y * r;
  const float radius = a.size * r;
  const float half_thick = 0.5f * a.size * r;
  const float half_len = 1.6f * a.size * r;
  const float dir_x = std::cos(a.theta);
  const float dir_y = std::sin(a.theta);

  for (int y = 0; y < r; ++y) {
    const float shade =
        a.shade * ((static_cast<float>(y) + 0.5f) / r - 0.5f) * 2.0f;
    for (int x = 0; x < r; ++x) {
      const float px = static_cast<float>(x) + 0.5f - cx;
      const float py = static_cast<float>(y) + 0.5f - cy;
      float dist;
      if (a.shape_kind == 0) {
        dist = std::sqrt(px * px + py * py) - radius;
      } else {
        const float along = px * dir_x + py * dir_y;
        const float across = -px * dir_y + py * dir_x;
        dist = std::max(std::fabs(along) - half_len,
                        std::fabs(across) - half_thick);
      }
      // One-pixel soft edge.
      float cov = 0.5f - dist;
      cov = cov < 0.0f ? 0.0f : (cov > 1.0f ? 1.0f : cov);
      const float base[3] = {a.bg_r + shade, a.bg_g + shade, a.bg_b + shade};
      const float accent[3] = {a.accent_r, a.accent_g, a.accent_b};
      for (int c = 0; c < 3; ++c) {
        float v = base[c] * (1.0f - cov) + accent[c] * cov;
        v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
        const float q = std::nearbyint(v * 255.0f);
        img.rgb[(y * r + x) * 3 + c] = static_cast<std::uint8_t>(
            q < 0.0f ? 0 : (q > 255.0f ? 255 : static_cast<int>(q)));
      }
    }
  }
  return img;
}

SyntheticDataset generate_synthetic_dataset(int n, int resolution,
                                            std::uint64_t seed) {
  if (n <= 0) {
    throw std::invalid_argument("generate_synthetic_dataset: need n >= 1");
  }
  SyntheticDataset out;
  out.resolution = resolution;
  out.images.reserve(n);
  out.attrs.reserve(n);
  for (int i = 0; i < n; ++i) {
    RngStream rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    SceneAttributes a = sample_scene(rng);
    out.attrs.push_back(a);
    out.images.push_back(normalize_image(render_scene(a, resolution)));
  }
  return out;
}

void write_synthetic_dataset(const SyntheticDataset& data,
                             const std::string& dir) {
  const fs::path root(dir);
  fs::create_directories(root / "images");
  char name[64];
  for (std::size_t i = 0; i < data.images.size(); ++i) {
    std::snprintf(name, sizeof(name), "img_%05zu.ppm", i);
    write_ppm((root / "images" / name).string(),
              denormalize_image(data.images[i]));
  }
  std::ofstream csv(root / "attributes.csv");
  if (!csv) throw std::runtime_error(dir + ": cannot write attributes.csv");
  csv << "index,bg_r,bg_g,bg_b,shade,shape_kind,center_x,center_y,theta,"
         "accent_r,accent_g,accent_b,size\n";
  char buf[512];
  for (std::size_t i = 0; i < data.attrs.size(); ++i) {
    const SceneAttributes& a = data.attrs[i];
    std::snprintf(buf, sizeof(buf),
                  "%zu,%.9g,%.9g,%.9g,%.9g,%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,"
                  "%.9g\n",
                  i, a.bg_r, a.bg_g, a.bg_b, a.shade, a.shape_kind, a.center_x,
                  a.center_y, a.theta, a.accent_r, a.accent_g, a.accent_b,
                  a.size);
    csv << buf;
  }
}

Dataset Dataset::load_dir(const std::string& dir) {
  fs::path root(dir);
  if (fs::exists(root / "images") && fs::is_directory(root / "images")) {
    root /= "images";
  }
  if (!fs::is_directory(root)) {
    throw std::runtime_error("Dataset: '" + dir + "' is not a directory");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_regular_file() && entry.path().extension() == ".ppm") {
      files.push_back(entry.path());
    }
  }
  if (files.empty()) {
    throw std::runtime_error("Dataset: no .ppm images under '" + dir + "'");
  }
  std::sort(files.begin(), files.end());
  Dataset out;
  for (const auto& f : files) {
    Tensor t = normalize_image(read_ppm(f.string()));
    const Shape4 s = t.shape();
    if (out.images.empty()) {
      if (s.h != s.w) {
        throw std::runtime_error("Dataset: images must be square, got " +
                                 to_string(s));
      }
      out.resolution = s.h;
      out.channels = s.c;
    } else if (s.h != out.resolution || s.w != out.resolution) {
      throw std::runtime_error("Dataset: inconsistent image size in '" +
                               f.string() + "'");
    }
    out.images.push_back(std::move(t));
  }
  return out;
}

Dataset Dataset::from_synthetic(const SyntheticDataset& data) {
  Dataset out;
  out.images = data.images;
  out.resolution = data.resolution;
  out.channels = 3;
  return out;
}

}  // namespace piig
