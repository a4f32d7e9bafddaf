#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "piig/losses.hpp"

namespace piig {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  int batch_size = 12;
  int iterations = 2000;
  float learning_rate = 2e-4f;
  float beta1 = 0.5f;
  float beta2 = 0.9f;
  LossWeights weights;
  int n_critic = 1;
  std::uint64_t seed = 1;
  int resolution = 32;
  int image_channels = 3;
  int latent_dim = 64;
  int hole_h = 16;
  int hole_w = 16;
  int checkpoint_interval = 500;
  int log_interval = 1;
  std::string data_dir;
  std::string out_dir;

  void validate() const;
};

// Grammar: one `key = value` pair per line; `#` starts a comment; blank
// lines are ignored. Unknown keys and malformed values are rejected with
// the offending line number.
TrainConfig parse_config_text(const std::string& text,
                              const std::string& origin);
TrainConfig parse_config_file(const std::string& path);

// Canonical text round-trip used for the checkpoint config echo.
std::string config_to_text(const TrainConfig& cfg);

}  // namespace piig
