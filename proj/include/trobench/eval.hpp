#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trobench/dataset.hpp"
#include "trobench/geometry.hpp"
#include "trobench/image.hpp"

namespace trobench {

/// Single-object tracker driven by one-pass evaluation.
class Tracker {
 public:
  virtual ~Tracker() = default;
  virtual void init(const GrayFrame& frame, const BoundingBox& box) = 0;
  virtual BoundingBox step(const GrayFrame& frame) = 0;
};

struct TrackerOutput {
  std::string sequence;
  std::vector<BoundingBox> boxes;
  std::vector<std::size_t> flagged_frames;  // 0-based frames whose prediction was invalid
};

/// Initializes the tracker once on frame 0 with ground truth and steps it over every
/// later frame. Invalid predictions are kept verbatim and flagged.
TrackerOutput run_ope(Tracker& tracker, const Sequence& seq);

/// Reads a result file of "x,y,w,h" lines. Boxes are kept even if degenerate.
TrackerOutput load_tracker_output(const std::filesystem::path& file, const std::string& sequence);
void write_tracker_output(const TrackerOutput& output, const std::filesystem::path& file);

inline constexpr std::size_t kPrecisionSteps = 51;  // 0..50 px
inline constexpr std::size_t kSuccessSteps = 101;   // 0.00..1.00
inline constexpr std::size_t kPrecisionIndex20 = 20;

/// Threshold grids. Success thresholds are computed as i / 100 so that the grid
/// points are the correctly rounded decimals.
double precision_threshold(std::size_t i);
double success_threshold(std::size_t i);

struct PrecisionCurve {
  std::array<double, kPrecisionSteps> values{};
  [[nodiscard]] double prc20() const { return values[kPrecisionIndex20]; }
  friend bool operator==(const PrecisionCurve&, const PrecisionCurve&) = default;
};

struct SuccessCurve {
  std::array<double, kSuccessSteps> values{};
  double auc{0.0};
  friend bool operator==(const SuccessCurve&, const SuccessCurve&) = default;
};

/// Per-frame overlap and center error for the frames that carry a ground-truth box.
/// Invalid predictions score overlap 0 and center error +inf.
struct FrameScores {
  std::vector<double> overlaps;
  std::vector<double> center_errors;

  [[nodiscard]] std::size_t size() const { return overlaps.size(); }
};

FrameScores score_frames(const TrackerOutput& pred, const Sequence& seq);

/// value(t) = fraction of frames with center error <= t.
PrecisionCurve precision_curve(std::span<const double> center_errors);
/// value(t) = fraction of frames with overlap > t; auc = mean of the 101 values.
SuccessCurve success_curve(std::span<const double> overlaps);

PrecisionCurve precision_curve(const TrackerOutput& pred, const Sequence& seq);
SuccessCurve success_curve(const TrackerOutput& pred, const Sequence& seq);

struct SequenceScores {
  std::string name;
  AttributeSet attributes;
  FrameScores frames;
};

enum class Pooling {
  Frames,        // pool all frames of the scope, then build one curve
  SequenceMean,  // build a curve per sequence, then average curves
};

struct ScopeResult {
  std::string scope;  // "overall" or an attribute name
  std::size_t sequences{0};
  std::size_t frames{0};
  PrecisionCurve precision;
  SuccessCurve success;
  friend bool operator==(const ScopeResult&, const ScopeResult&) = default;
};

struct EvalReport {
  std::string tracker;
  std::vector<ScopeResult> scopes;  // overall first, then attributes in fixed order

  [[nodiscard]] const ScopeResult& overall() const;
  [[nodiscard]] const ScopeResult* find(const std::string& scope) const;
  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

inline constexpr const char* kOverallScope = "overall";

/// Curves for the sequences in a scope (std::nullopt for overall). Returns
/// std::nullopt when no sequence falls into the scope.
std::optional<ScopeResult> aggregate(std::span<const SequenceScores> seqs,
                                     std::optional<Attribute> scope,
                                     Pooling pooling = Pooling::Frames);

/// Overall scope plus every non-empty attribute scope. Empty attribute scopes are
/// omitted and reported through `warnings`.
EvalReport build_report(std::string tracker, std::span<const SequenceScores> seqs,
                        Pooling pooling = Pooling::Frames, Warnings* warnings = nullptr);

struct RankEntry {
  std::string tracker;
  double auc;
  double prc20;
};

/// Descending AUC, then descending PRC20, then ascending tracker name.
std::vector<RankEntry> rank(std::span<const EvalReport> reports);

std::string report_to_csv(std::span<const EvalReport> reports);
std::string report_to_json(std::span<const EvalReport> reports);
std::vector<EvalReport> report_from_json(const std::string& text);

}  // namespace trobench
