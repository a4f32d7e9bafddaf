#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace piig {

// Deterministic random stream. Normal draws use Box-Muller with no cached
// spare so the full state is the engine itself, which serializes exactly.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  double uniform64();                     // [0, 1)
  float uniform() { return static_cast<float>(uniform64()); }
  double normal64();
  float normal() { return static_cast<float>(normal64()); }
  std::uint64_t uniform_int(std::uint64_t n);  // [0, n)

  std::string serialize() const;
  static RngStream deserialize(const std::string& text);

  bool operator==(const RngStream& other) const {
    return engine_ == other.engine_;
  }

 private:
  std::mt19937_64 engine_;
};

// Stable per-index seed derivation for fan-out work.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

}  // namespace piig
