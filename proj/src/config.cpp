#include "piig/config.hpp"

#include <cctype>
#include <charconv>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace piig {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

[[noreturn]] void fail(const std::string& origin, int line,
                       const std::string& message) {
  throw ConfigError(origin + ":" + std::to_string(line) + ": " + message);
}

long long parse_int(const std::string& origin, int line,
                    const std::string& value) {
  long long out = 0;
  const char* begin = value.data();
  const char* end = begin + value.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc() || ptr != end) {
    fail(origin, line, "expected an integer, got '" + value + "'");
  }
  return out;
}

double parse_float(const std::string& origin, int line,
                   const std::string& value) {
  try {
    std::size_t used = 0;
    const double out = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return out;
  } catch (const std::exception&) {
    fail(origin, line, "expected a number, got '" + value + "'");
  }
}

std::string format_float(float v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
  return buf;
}

}  // namespace

void TrainConfig::validate() const {
  auto bad = [](const std::string& message) {
    throw ConfigError("config: " + message);
  };
  if (batch_size < 1) bad("batch_size must be at least 1");
  if (iterations < 0) bad("iterations must not be negative");
  if (!(learning_rate > 0)) bad("learning_rate must be positive");
  if (!(beta1 >= 0 && beta1 < 1)) bad("beta1 must lie in [0, 1)");
  if (!(beta2 >= 0 && beta2 < 1)) bad("beta2 must lie in [0, 1)");
  if (n_critic < 1 || n_critic > 5) bad("n_critic must lie in [1, 5]");
  if (resolution < 8 || resolution % 8 != 0)
    bad("resolution must be a positive multiple of 8");
  if (image_channels < 1) bad("image_channels must be at least 1");
  if (latent_dim < 1) bad("latent_dim must be at least 1");
  if (hole_h < 1 || hole_w < 1 || hole_h > resolution || hole_w > resolution)
    bad("hole must be at least 1x1 and fit inside the image");
  if (checkpoint_interval < 1) bad("checkpoint_interval must be at least 1");
  if (log_interval < 1) bad("log_interval must be at least 1");
  if (!(weights.lambda >= 0)) bad("lambda_gp must not be negative");
}

TrainConfig parse_config_text(const std::string& text,
                              const std::string& origin) {
  TrainConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      fail(origin, lineno, "expected 'key = value', got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(origin, lineno, "missing key");
    if (value.empty()) fail(origin, lineno, "missing value for '" + key + "'");

    if (key == "batch_size") {
      cfg.batch_size = static_cast<int>(parse_int(origin, lineno, value));
    } else if (key == "iterations") {
      cfg.iterations = static_cast<int>(parse_int(origin, lineno, value));
    } else if (key == "learning_rate") {
      cfg.learning_rate = static_cast<float>(parse_float(origin, lineno, value));
    } else if (key == "beta1") {
      cfg.beta1 = static_cast<float>(parse_float(origin, lineno, value));
    } else if (key == "beta2") {
      cfg.beta2 = static_cast<float>(parse_float(origin, lineno, value));
    } else if (key == "alpha_kl") {
      cfg.weights.alpha_kl =
          static_cast<float>(parse_float(origin, lineno, value));
    } else if (key == "alpha_c") {
      cfg.weights.alpha_c =
          static_cast<float>(parse_float(origin, lineno, value));
    } else if (key == "alpha_adv") {
      cfg.weights.alpha_adv =
          static_cast<float>(parse_float(origin, lineno, value));
    } else if (key == "lambda_gp") {
      cfg.weights.lambda =
          static_cast<float>(parse_float(origin, lineno, value));
    } else if (key == "n_critic") {
      cfg.n_critic = static_cast<int>(parse_int(origin, lineno, value));
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(parse_int(origin, lineno, value));
    } else if (key == "resolution") {
      cfg.resolution = static_cast<int>(parse_int(origin, lineno, value));
    } else if (key == "image_channels") {
      cfg.image_channels = static_cast<int>(parse_int(origin, lineno, value));
    } else if (key == "latent_dim") {
      cfg.latent_dim = static_cast<int>(parse_int(origin, lineno, value));
    } else if (key == "hole_h") {
      cfg.hole_h = static_cast<int>(parse_int(origin, lineno, value));
    } else if (key == "hole_w") {
      cfg.hole_w = static_cast<int>(parse_int(origin, lineno, value));
    } else if (key == "checkpoint_interval") {
      cfg.checkpoint_interval =
          static_cast<int>(parse_int(origin, lineno, value));
    } else if (key == "log_interval") {
      cfg.log_interval = static_cast<int>(parse_int(origin, lineno, value));
    } else if (key == "data_dir") {
      cfg.data_dir = value;
    } else if (key == "out_dir") {
      cfg.out_dir = value;
    } else {
      fail(origin, lineno, "unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

TrainConfig parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("config: cannot open '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

std::string config_to_text(const TrainConfig& cfg) {
  std::ostringstream out;
  out << "batch_size = " << cfg.batch_size << "\n";
  out << "iterations = " << cfg.iterations << "\n";
  out << "learning_rate = " << format_float(cfg.learning_rate) << "\n";
  out << "beta1 = " << format_float(cfg.beta1) << "\n";
  out << "beta2 = " << format_float(cfg.beta2) << "\n";
  out << "alpha_kl = " << format_float(cfg.weights.alpha_kl) << "\n";
  out << "alpha_c = " << format_float(cfg.weights.alpha_c) << "\n";
  out << "alpha_adv = " << format_float(cfg.weights.alpha_adv) << "\n";
  out << "lambda_gp = " << format_float(cfg.weights.lambda) << "\n";
  out << "n_critic = " << cfg.n_critic << "\n";
  out << "seed = " << cfg.seed << "\n";
  out << "resolution = " << cfg.resolution << "\n";
  out << "image_channels = " << cfg.image_channels << "\n";
  out << "latent_dim = " << cfg.latent_dim << "\n";
  out << "hole_h = " << cfg.hole_h << "\n";
  out << "hole_w = " << cfg.hole_w << "\n";
  out << "checkpoint_interval = " << cfg.checkpoint_interval << "\n";
  out << "log_interval = " << cfg.log_interval << "\n";
  if (!cfg.data_dir.empty()) out << "data_dir = " << cfg.data_dir << "\n";
  if (!cfg.out_dir.empty()) out << "out_dir = " << cfg.out_dir << "\n";
  return out.str();
}

}  // namespace piig
