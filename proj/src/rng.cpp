#include "piig/rng.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace piig {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}
}  // namespace

double RngStream::uniform64() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::normal64() {
  // u1 in (0, 1] keeps the log finite.
  const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

std::uint64_t RngStream::uniform_int(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_int: empty range");
  return engine_() % n;
}

std::string RngStream::serialize() const {
  std::ostringstream oss;
  oss << engine_;
  return oss.str();
}

RngStream RngStream::deserialize(const std::string& text) {
  RngStream s(0);
  std::istringstream iss(text);
  iss >> s.engine_;
  if (iss.fail()) {
    throw std::runtime_error("RngStream::deserialize: malformed state text");
  }
  return s;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return splitmix64(base ^ splitmix64(index + 0x51ED2701ULL));
}

}  // namespace piig
