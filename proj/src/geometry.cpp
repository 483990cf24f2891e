#include "trobench/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace trobench {

namespace {

// Overlap of [a0, a0 + aw) and [b0, b0 + bw). When one interval lies inside the
// other the inner width is returned as is, so identical boxes give exactly S = 1.
double overlap_1d(double a0, double aw, double b0, double bw) {
  const double lo = std::max(a0, b0);
  const double hi = std::min(a0 + aw, b0 + bw);
  if (hi <= lo) return 0.0;
  if (lo == a0 && hi == a0 + aw) return aw;
  if (lo == b0 && hi == b0 + bw) return bw;
  return hi - lo;
}

}  // namespace

bool BoundingBox::valid() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) && std::isfinite(h) &&
         w > 0.0 && h > 0.0;
}

void require_valid(const BoundingBox& box) {
  if (!box.valid()) {
    throw InvalidBoxError("invalid bounding box " + to_string(box));
  }
}

double intersection_area(const BoundingBox& a, const BoundingBox& b) {
  require_valid(a);
  require_valid(b);
  return overlap_1d(a.x, a.w, b.x, b.w) * overlap_1d(a.y, a.h, b.y, b.h);
}

double union_area(const BoundingBox& a, const BoundingBox& b) {
  return a.area() + b.area() - intersection_area(a, b);
}

double overlap_score(const BoundingBox& predicted, const BoundingBox& truth) {
  const double inter = intersection_area(predicted, truth);
  const double uni = predicted.area() + truth.area() - inter;
  // Rounding can push the ratio a hair above 1 for near-identical boxes.
  return std::clamp(inter / uni, 0.0, 1.0);
}

double center_error(const BoundingBox& predicted, const BoundingBox& truth) {
  require_valid(predicted);
  require_valid(truth);
  return std::hypot(predicted.center_x() - truth.center_x(),
                    predicted.center_y() - truth.center_y());
}

std::string to_string(const BoundingBox& box) {
  std::ostringstream os;
  os << '(' << box.x << ',' << box.y << ',' << box.w << ',' << box.h << ')';
  return os.str();
}

}  // namespace trobench
