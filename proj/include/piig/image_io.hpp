#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "piig/tensor.hpp"

namespace piig {

struct Image8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, interleaved
};

// Binary PPM (P6), maxval 255 only.
Image8 read_ppm(const std::string& path);
void write_ppm(const std::string& path, const Image8& image);

// 8-bit <-> [-1, 1]: v / 127.5 - 1 one way, round((x + 1) * 127.5) clamped
// the other; the round trip is exact on every 8-bit value.
Tensor normalize_image(const Image8& image);   // (1, 3, H, W)
Image8 denormalize_image(const Tensor& image);

}  // namespace piig
