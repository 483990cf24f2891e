#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "trobench/geometry.hpp"
#include "trobench/image.hpp"

namespace trobench {

/// The twelve challenge attributes. The enumerator order is the column order of
/// attributes.txt and must not change.
enum class Attribute : int { IV, SV, DEF, MB, FM, OV, BC, LR, POC, ROT, FOC, ARC };

inline constexpr std::size_t kAttributeCount = 12;

std::string_view attribute_name(Attribute a);
std::optional<Attribute> attribute_from_name(std::string_view name);

inline constexpr std::array<Attribute, kAttributeCount> kAllAttributes = {
    Attribute::IV, Attribute::SV, Attribute::DEF, Attribute::MB,  Attribute::FM,  Attribute::OV,
    Attribute::BC, Attribute::LR, Attribute::POC, Attribute::ROT, Attribute::FOC, Attribute::ARC};

class AttributeSet {
 public:
  AttributeSet() = default;
  AttributeSet(std::initializer_list<Attribute> attrs) {
    for (Attribute a : attrs) set(a);
  }

  [[nodiscard]] bool has(Attribute a) const { return flags_[static_cast<std::size_t>(a)]; }
  void set(Attribute a, bool on = true) { flags_[static_cast<std::size_t>(a)] = on; }
  [[nodiscard]] std::size_t count() const;

  friend bool operator==(const AttributeSet&, const AttributeSet&) = default;

 private:
  std::array<bool, kAttributeCount> flags_{};
};

/// Ground truth for one frame: a box, or nothing when the target is absent.
struct FrameLabel {
  std::optional<BoundingBox> box;

  static FrameLabel absent() { return {}; }
  [[nodiscard]] bool is_absent() const { return !box.has_value(); }

  friend bool operator==(const FrameLabel&, const FrameLabel&) = default;
};

struct Sequence {
  std::string name;
  std::vector<FrameLabel> labels;
  AttributeSet attributes;
  std::vector<GrayFrame> frames;  // empty when the sequence carries annotations only

  [[nodiscard]] std::size_t length() const { return labels.size(); }
  [[nodiscard]] bool has_frames() const { return !frames.empty(); }

  friend bool operator==(const Sequence&, const Sequence&) = default;
};

/// Parse or I/O failure while reading a dataset. `line` is 1-based, 0 when not applicable.
class DatasetError : public std::runtime_error {
 public:
  DatasetError(std::filesystem::path file, std::size_t line, const std::string& message);

  [[nodiscard]] const std::filesystem::path& file() const { return file_; }
  [[nodiscard]] std::size_t line() const { return line_; }

 private:
  std::filesystem::path file_;
  std::size_t line_;
};

using Warnings = std::vector<std::string>;

struct LoadOptions {
  bool load_frames = true;
};

/// Reads `<dir>/groundtruth.txt`, optional `absent.txt`, `attributes.txt` and
/// `img/%06d.pgm`. A missing attribute file yields all-false flags and a warning.
Sequence load_sequence(const std::filesystem::path& dir, const LoadOptions& options = {},
                       Warnings* warnings = nullptr);

/// Inverse of load_sequence. Absent frames are written as "0,0,0,0" plus a 1 in absent.txt.
void write_sequence(const Sequence& seq, const std::filesystem::path& dir);

/// Sequence directory names listed in `<root>/manifest.txt`, in file order.
std::vector<std::string> read_manifest(const std::filesystem::path& root);
void write_manifest(const std::filesystem::path& root, std::span<const std::string> names);

inline constexpr std::string_view kManifestFile = "manifest.txt";

/// Parses one "x,y,w,h" line. Throws DatasetError tagged with file/line.
BoundingBox parse_box_line(std::string_view text, const std::filesystem::path& file,
                           std::size_t line);
AttributeSet parse_attribute_line(std::string_view text, const std::filesystem::path& file,
                                  std::size_t line);
std::string format_box_line(const BoundingBox& box);
std::string format_attribute_line(const AttributeSet& attrs);

struct Finding {
  std::string sequence;
  std::optional<std::size_t> frame;  // 1-based
  std::string message;

  [[nodiscard]] std::string to_string() const;
};

std::vector<Finding> validate_sequence(const Sequence& seq);

struct HistogramBin {
  std::size_t lower;
  std::size_t width;
  std::size_t count;

  friend bool operator==(const HistogramBin&, const HistogramBin&) = default;
};

struct DatasetStats {
  std::size_t num_videos{0};
  std::size_t total_frames{0};
  std::size_t min_frames{0};
  std::size_t max_frames{0};
  std::size_t avg_frames{0};  // rounded half-up
  std::size_t frame_range{0};
  std::vector<HistogramBin> histogram;

  friend bool operator==(const DatasetStats&, const DatasetStats&) = default;
};

/// Statistics over sequence lengths. Bins are [k·w, (k+1)·w) from the bin
/// holding the shortest sequence to the one holding the longest.
DatasetStats compute_stats(std::span<const std::size_t> lengths, std::size_t bin_width);
DatasetStats compute_stats(std::span<const Sequence> seqs, std::size_t bin_width);

// Rule-based attributes. Absent frames and boxes with non-positive extent are ignored.

/// Fast motion: some pair of adjacent visible frames moves the center by at least
/// 20% of sqrt(w·h) of the earlier box.
bool auto_attribute_fm(const Sequence& seq, Warnings* warnings = nullptr);
/// Low resolution: some visible box covers fewer than 900 pixels.
bool auto_attribute_lr(const Sequence& seq);
/// Aspect ratio change: some visible box's w/h, relative to the first visible box's
/// w/h, falls outside [0.5, 2].
bool auto_attribute_arc(const Sequence& seq);

using CooccurrenceMatrix = std::array<std::array<std::size_t, kAttributeCount>, kAttributeCount>;

CooccurrenceMatrix cooccurrence(std::span<const Sequence> seqs);

}  // namespace trobench
