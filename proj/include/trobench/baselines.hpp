#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "trobench/dataset.hpp"
#include "trobench/eval.hpp"
#include "trobench/image.hpp"

namespace trobench {

/// Returns the initialization box on every frame.
class StaticTracker final : public Tracker {
 public:
  void init(const GrayFrame& frame, const BoundingBox& box) override;
  BoundingBox step(const GrayFrame& frame) override;

 private:
  BoundingBox box_{};
};

/// Zero-normalized cross-correlation of `patch` against the equally sized window of
/// `image` whose top-left corner is (row, col). Returns 0 when either side is flat.
double zncc(const GrayFrame& image, int row, int col, const GrayFrame& patch);

/// Exhaustive integer-offset template matcher around the previous box. The
/// template is cut once at init and never updated. Ties go to the smallest
/// row-major offset (dy first, then dx, both ascending).
class NccTracker final : public Tracker {
 public:
  explicit NccTracker(int search_radius = 8, Warnings* warnings = nullptr)
      : radius_(search_radius), warnings_(warnings) {}

  void init(const GrayFrame& frame, const BoundingBox& box) override;
  BoundingBox step(const GrayFrame& frame) override;

  [[nodiscard]] double last_score() const { return last_score_; }
  [[nodiscard]] bool degenerate() const { return degenerate_; }

 private:
  int radius_;
  Warnings* warnings_;
  GrayFrame template_;
  BoundingBox box_{};
  int row_{0};
  int col_{0};
  bool degenerate_{false};
  double last_score_{1.0};
};

/// "static" or "ncc"; throws std::invalid_argument otherwise.
std::unique_ptr<Tracker> make_tracker(const std::string& name, int search_radius = 8,
                                      Warnings* warnings = nullptr);

enum class TargetPattern {
  Random,     // seeded texture
  Symmetric,  // left-right symmetric texture, identical to its own mirror image
};

struct SynthSpec {
  std::string name{"synth"};
  int frame_width{96};
  int frame_height{64};
  int target_width{12};
  int target_height{12};
  double start_x{10.0};
  double start_y{20.0};
  double velocity_x{0.0};  // pixels per frame
  double velocity_y{0.0};
  double amplitude_x{0.0};  // sinusoidal wobble added to the linear path
  double amplitude_y{0.0};
  double period{32.0};      // frames
  bool mirrored_distractor{false};
  double mirror_x{48.0};    // vertical mirror line
  TargetPattern pattern{TargetPattern::Random};
  double background{0.2};
  double noise{0.0};        // Gaussian std-dev in intensity units
  int length{62};
  bool allow_out_of_view{false};
  AttributeSet declared;    // manual flags copied into the sequence
  std::uint64_t seed{0};
};

SynthSpec synth_spec_from_json(const std::string& text);
std::string synth_spec_to_json(const SynthSpec& spec);

/// Renders a sequence with 8-bit-quantized frames. Ground truth follows the target
/// only. FM, LR and ARC flags are derived with the dataset rules. Throws
/// std::invalid_argument for specs the generator cannot honor.
Sequence generate(const SynthSpec& spec);

/// Ten stationary sequences followed by ten translating ones with a mirrored
/// distractor. Per-sequence seeds derive from `seed`.
std::vector<SynthSpec> reflection_suite(std::uint64_t seed);

}  // namespace trobench
