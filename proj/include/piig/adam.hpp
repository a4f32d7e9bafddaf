#pragma once

#include <cstdint>
#include <vector>

#include "piig/params.hpp"

namespace piig {

struct AdamConfig {
  float lr = 2e-4f;
  float beta1 = 0.5f;
  float beta2 = 0.9f;
  float eps = 1e-8f;
};

struct AdamState {
  AdamConfig cfg;
  std::int64_t step_count = 0;
  std::vector<std::vector<float>> m;  // first moments, one entry per param
  std::vector<std::vector<float>> v;  // second moments

  static AdamState init(const NetworkParams& params, AdamConfig cfg);
};

// One bias-corrected Adam update in place. Gradients are read, never
// cleared; the caller decides when to zero them.
void adam_step(NetworkParams& params, AdamState& state);

}  // namespace piig
