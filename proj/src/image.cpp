#include "trobench/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

namespace trobench {

GrayFrame::GrayFrame(int height, int width, double fill) : height_(height), width_(width) {
  if (height <= 0 || width <= 0) {
    throw std::invalid_argument("frame dimensions must be positive");
  }
  pixels_.assign(static_cast<std::size_t>(height) * width, fill);
}

void GrayFrame::quantize() {
  for (double& v : pixels_) {
    v = std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
  }
}

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in) {
  std::string token;
  char c = 0;
  while (in.get(c)) {
    if (c == '#') {
      std::string discard;
      std::getline(in, discard);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!token.empty()) {
        break;
      }
      continue;
    }
    token.push_back(c);
  }
  return token;
}

}  // namespace

GrayFrame read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  if (header_token(in) != "P5") {
    throw std::runtime_error(path.string() + ": not a binary PGM (P5)");
  }
  int width = 0;
  int height = 0;
  int maxval = 0;
  try {
    width = std::stoi(header_token(in));
    height = std::stoi(header_token(in));
    maxval = std::stoi(header_token(in));
  } catch (const std::exception&) {
    throw std::runtime_error(path.string() + ": malformed PGM header");
  }
  if (width <= 0 || height <= 0 || maxval != 255) {
    throw std::runtime_error(path.string() + ": unsupported PGM geometry or depth");
  }
  std::vector<unsigned char> raw(static_cast<std::size_t>(width) * height);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw std::runtime_error(path.string() + ": truncated pixel data");
  }
  GrayFrame frame(height, width);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      frame.at(r, c) = raw[static_cast<std::size_t>(r) * width + c] / 255.0;
    }
  }
  return frame;
}

void write_pgm(const GrayFrame& frame, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out << "P5\n" << frame.width() << ' ' << frame.height() << "\n255\n";
  std::vector<unsigned char> raw;
  raw.reserve(frame.pixels().size());
  for (double v : frame.pixels()) {
    raw.push_back(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) {
    throw std::runtime_error("write failed: " + path.string());
  }
}

}  // namespace trobench
