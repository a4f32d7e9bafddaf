#pragma once

// Shared helpers for the test suites: tensor construction, bitwise and
// tolerance comparisons, and scratch-directory management.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "piig/rng.hpp"
#include "piig/tensor.hpp"

namespace testutil {

inline piig::Tensor make(piig::Shape4 shape, std::vector<float> data,
                         bool requires_grad = false) {
  return piig::Tensor::from_data(shape, std::move(data), requires_grad);
}

// Uniform [lo, hi) tensor from a seeded stream.
inline piig::Tensor random_tensor(piig::Shape4 shape, piig::RngStream& rng,
                                  float lo = -1.0f, float hi = 1.0f,
                                  bool requires_grad = false) {
  std::vector<float> v(static_cast<std::size_t>(shape.numel()));
  for (auto& x : v) x = lo + (hi - lo) * rng.uniform();
  return piig::Tensor::from_data(shape, std::move(v), requires_grad);
}

inline piig::Tensor random_normal(piig::Shape4 shape, piig::RngStream& rng,
                                  bool requires_grad = false) {
  std::vector<float> v(static_cast<std::size_t>(shape.numel()));
  for (auto& x : v) x = rng.normal();
  return piig::Tensor::from_data(shape, std::move(v), requires_grad);
}

inline bool bitwise_equal(const piig::Tensor& a, const piig::Tensor& b) {
  if (!(a.shape() == b.shape())) return false;
  const float* pa = a.data();
  const float* pb = b.data();
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    if (std::memcmp(&pa[i], &pb[i], sizeof(float)) != 0) return false;
  }
  return true;
}

inline double max_abs_diff(const piig::Tensor& a, const piig::Tensor& b) {
  REQUIRE(a.shape() == b.shape());
  double m = 0.0;
  const float* pa = a.data();
  const float* pb = b.data();
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    m = std::max(m, std::abs(static_cast<double>(pa[i]) - pb[i]));
  }
  return m;
}

inline double mean_abs_diff(const piig::Tensor& a, const piig::Tensor& b) {
  REQUIRE(a.shape() == b.shape());
  double s = 0.0;
  const float* pa = a.data();
  const float* pb = b.data();
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    s += std::abs(static_cast<double>(pa[i]) - pb[i]);
  }
  return a.numel() ? s / static_cast<double>(a.numel()) : 0.0;
}

// Fresh empty directory under the system temp root; recreated on reuse.
inline std::string scratch_dir(const std::string& name) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "piig_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out.good());
  out << content;
}

}  // namespace testutil
