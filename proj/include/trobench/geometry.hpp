#pragma once

#include <stdexcept>
#include <string>

namespace trobench {

/// Axis-aligned rectangle in pixel coordinates. (x, y) is the top-left corner.
struct BoundingBox {
  double x{0.0};
  double y{0.0};
  double w{0.0};
  double h{0.0};

  [[nodiscard]] double area() const { return w * h; }
  [[nodiscard]] double center_x() const { return x + w * 0.5; }
  [[nodiscard]] double center_y() const { return y + h * 0.5; }

  /// Finite fields and strictly positive extent.
  [[nodiscard]] bool valid() const;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

class InvalidBoxError : public std::invalid_argument {
 public:
  explicit InvalidBoxError(const std::string& what) : std::invalid_argument(what) {}
};

/// Throws InvalidBoxError unless the box is usable in a metric.
void require_valid(const BoundingBox& box);

[[nodiscard]] double intersection_area(const BoundingBox& a, const BoundingBox& b);
[[nodiscard]] double union_area(const BoundingBox& a, const BoundingBox& b);

/// |a ∩ b| / |a ∪ b|, in [0, 1].
[[nodiscard]] double overlap_score(const BoundingBox& predicted, const BoundingBox& truth);

/// Euclidean distance between box centers, in pixels.
[[nodiscard]] double center_error(const BoundingBox& predicted, const BoundingBox& truth);

std::string to_string(const BoundingBox& box);

}  // namespace trobench
