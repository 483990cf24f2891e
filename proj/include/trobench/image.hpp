#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace trobench {

/// Row-major grayscale image with intensities in [0, 1].
class GrayFrame {
 public:
  GrayFrame() = default;
  GrayFrame(int height, int width, double fill = 0.0);

  [[nodiscard]] int height() const { return height_; }
  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] bool empty() const { return pixels_.empty(); }

  [[nodiscard]] double at(int row, int col) const {
    return pixels_[static_cast<std::size_t>(row) * width_ + col];
  }
  double& at(int row, int col) { return pixels_[static_cast<std::size_t>(row) * width_ + col]; }

  [[nodiscard]] const std::vector<double>& pixels() const { return pixels_; }

  /// Snap every intensity onto the 8-bit grid k/255 so PGM storage is lossless.
  void quantize();

  friend bool operator==(const GrayFrame&, const GrayFrame&) = default;

 private:
  int height_{0};
  int width_{0};
  std::vector<double> pixels_;
};

/// Binary (P5) 8-bit PGM. Throws std::runtime_error on I/O or format errors.
GrayFrame read_pgm(const std::filesystem::path& path);
void write_pgm(const GrayFrame& frame, const std::filesystem::path& path);

}  // namespace trobench
