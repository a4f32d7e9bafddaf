#include "piig/image_io.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace piig {

namespace {

// Reads one whitespace-delimited token, skipping '#' comments, as PPM
// headers allow.
std::string next_token(std::istream& in) {
  std::string tok;
  int ch = 0;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

int parse_header_int(std::istream& in, const std::string& path,
                     const char* what) {
  const std::string tok = next_token(in);
  if (tok.empty()) {
    throw std::runtime_error(path + ": truncated header, missing " + what);
  }
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size() || v <= 0) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(path + ": malformed " + what + " '" + tok + "'");
  }
}

}  // namespace

Image8 read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open");
  const std::string magic = next_token(in);
  if (magic != "P6") {
    throw std::runtime_error(path + ": not a binary PPM (magic '" + magic +
                             "')");
  }
  Image8 img;
  img.width = parse_header_int(in, path, "width");
  img.height = parse_header_int(in, path, "height");
  const int maxval = parse_header_int(in, path, "maxval");
  if (maxval != 255) {
    throw std::runtime_error(path + ": unsupported maxval " +
                             std::to_string(maxval));
  }
  // Exactly one whitespace byte separates the header from the payload; the
  // token reader has already consumed it.
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height * 3;
  img.rgb.resize(n);
  in.read(reinterpret_cast<char*>(img.rgb.data()),
          static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw std::runtime_error(path + ": truncated pixel data");
  }
  return img;
}

void write_ppm(const std::string& path, const Image8& image) {
  if (image.width <= 0 || image.height <= 0 ||
      image.rgb.size() !=
          static_cast<std::size_t>(image.width) * image.height * 3) {
    throw std::invalid_argument(path + ": inconsistent image buffer");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.rgb.data()),
            static_cast<std::streamsize>(image.rgb.size()));
  if (!out) throw std::runtime_error(path + ": write failed");
}

Tensor normalize_image(const Image8& image) {
  if (image.rgb.size() !=
      static_cast<std::size_t>(image.width) * image.height * 3) {
    throw std::invalid_argument("normalize_image: inconsistent buffer");
  }
  const int h = image.height;
  const int w = image.width;
  std::vector<float> data(static_cast<std::size_t>(3) * h * w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        const std::uint8_t v = image.rgb[(y * w + x) * 3 + c];
        data[(c * h + y) * w + x] = static_cast<float>(v) / 127.5f - 1.0f;
      }
  return Tensor::from_data({1, 3, h, w}, std::move(data));
}

Image8 denormalize_image(const Tensor& image) {
  const Shape4 s = image.shape();
  if (s.n != 1 || s.c != 3) {
    throw std::invalid_argument("denormalize_image: expected (1,3,H,W), got " +
                                to_string(s));
  }
  Image8 out;
  out.width = s.w;
  out.height = s.h;
  out.rgb.resize(static_cast<std::size_t>(s.h) * s.w * 3);
  const float* data = image.data();
  for (int y = 0; y < s.h; ++y)
    for (int x = 0; x < s.w; ++x)
      for (int c = 0; c < 3; ++c) {
        const float v = (data[(c * s.h + y) * s.w + x] + 1.0f) * 127.5f;
        const float r = std::nearbyint(v);
        out.rgb[(y * s.w + x) * 3 + c] = static_cast<std::uint8_t>(
            r < 0.0f ? 0 : (r > 255.0f ? 255 : static_cast<int>(r)));
      }
  return out;
}

}  // namespace piig
