#include "trobench/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace trobench {

namespace fs = std::filesystem;

namespace {

constexpr std::array<std::string_view, kAttributeCount> kNames = {
    "IV", "SV", "DEF", "MB", "FM", "OV", "BC", "LR", "POC", "ROT", "FOC", "ARC"};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(',', start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) {
      break;
    }
    start = pos + 1;
  }
  return out;
}

// Non-empty lines of a newline-terminated text file. Throws on open failure.
std::vector<std::string> read_lines(const fs::path& file) {
  std::ifstream in(file);
  if (!in) {
    throw DatasetError(file, 0, "cannot open file");
  }
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    lines.push_back(line);
  }
  if (lines.empty()) {
    throw DatasetError(file, 0, "empty file");
  }
  return lines;
}

void write_text(const fs::path& file, const std::string& content) {
  std::ofstream out(file, std::ios::binary);
  out << content;
  if (!out) {
    throw DatasetError(file, 0, "cannot write file");
  }
}

std::string frame_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu.pgm", index);
  return buf;
}

// Visible boxes with positive extent, paired with their frame index.
std::vector<std::pair<std::size_t, BoundingBox>> visible_boxes(const Sequence& seq) {
  std::vector<std::pair<std::size_t, BoundingBox>> out;
  for (std::size_t i = 0; i < seq.labels.size(); ++i) {
    const auto& box = seq.labels[i].box;
    if (box && box->valid()) {
      out.emplace_back(i, *box);
    }
  }
  return out;
}

}  // namespace

std::string_view attribute_name(Attribute a) { return kNames[static_cast<std::size_t>(a)]; }

std::optional<Attribute> attribute_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) {
      return static_cast<Attribute>(i);
    }
  }
  return std::nullopt;
}

std::size_t AttributeSet::count() const {
  return static_cast<std::size_t>(std::count(flags_.begin(), flags_.end(), true));
}

DatasetError::DatasetError(fs::path file, std::size_t line, const std::string& message)
    : std::runtime_error(file.string() + (line > 0 ? ":" + std::to_string(line) : "") + ": " +
                         message),
      file_(std::move(file)),
      line_(line) {}

BoundingBox parse_box_line(std::string_view text, const fs::path& file, std::size_t line) {
  const auto fields = split_commas(trim(text));
  if (fields.size() != 4) {
    throw DatasetError(file, line,
                       "expected 4 comma-separated fields, got " + std::to_string(fields.size()));
  }
  std::array<double, 4> v{};
  for (std::size_t i = 0; i < 4; ++i) {
    const auto f = fields[i];
    const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v[i]);
    if (ec != std::errc{} || ptr != f.data() + f.size() || f.empty() || !std::isfinite(v[i])) {
      throw DatasetError(file, line, "non-numeric field '" + std::string(f) + "'");
    }
  }
  return {v[0], v[1], v[2], v[3]};
}

AttributeSet parse_attribute_line(std::string_view text, const fs::path& file, std::size_t line) {
  const auto fields = split_commas(trim(text));
  if (fields.size() != kAttributeCount) {
    throw DatasetError(file, line,
                       "expected 12 attribute flags, got " + std::to_string(fields.size()));
  }
  AttributeSet attrs;
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    if (fields[i] == "1") {
      attrs.set(kAllAttributes[i]);
    } else if (fields[i] != "0") {
      throw DatasetError(file, line, "attribute flag must be 0 or 1, got '" +
                                         std::string(fields[i]) + "'");
    }
  }
  return attrs;
}

std::string format_box_line(const BoundingBox& box) {
  std::string out;
  for (double v : {box.x, box.y, box.w, box.h}) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    if (!out.empty()) {
      out.push_back(',');
    }
    out.append(buf, res.ptr);
  }
  return out;
}

std::string format_attribute_line(const AttributeSet& attrs) {
  std::string out;
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    if (i > 0) {
      out.push_back(',');
    }
    out.push_back(attrs.has(kAllAttributes[i]) ? '1' : '0');
  }
  return out;
}

Sequence load_sequence(const fs::path& dir, const LoadOptions& options, Warnings* warnings) {
  Sequence seq;
  seq.name = dir.filename().string();
  if (seq.name.empty()) {
    seq.name = dir.parent_path().filename().string();
  }

  const fs::path gt_file = dir / "groundtruth.txt";
  const auto gt_lines = read_lines(gt_file);
  seq.labels.reserve(gt_lines.size());
  for (std::size_t i = 0; i < gt_lines.size(); ++i) {
    seq.labels.push_back({parse_box_line(gt_lines[i], gt_file, i + 1)});
  }

  const fs::path absent_file = dir / "absent.txt";
  if (fs::exists(absent_file)) {
    const auto lines = read_lines(absent_file);
    if (lines.size() != seq.labels.size()) {
      throw DatasetError(absent_file, 0,
                         "absent flag count " + std::to_string(lines.size()) +
                             " does not match label count " + std::to_string(seq.labels.size()));
    }
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const auto flag = trim(lines[i]);
      if (flag == "1") {
        seq.labels[i] = FrameLabel::absent();
      } else if (flag != "0") {
        throw DatasetError(absent_file, i + 1,
                           "absent flag must be 0 or 1, got '" + std::string(flag) + "'");
      }
    }
  }

  const fs::path attr_file = dir / "attributes.txt";
  if (fs::exists(attr_file)) {
    const auto lines = read_lines(attr_file);
    if (lines.size() != 1) {
      throw DatasetError(attr_file, 2, "expected a single attribute line");
    }
    seq.attributes = parse_attribute_line(lines.front(), attr_file, 1);
  } else if (warnings != nullptr) {
    warnings->push_back(seq.name + ": no attributes.txt, all attribute flags cleared");
  }

  const fs::path img_dir = dir / "img";
  if (options.load_frames && fs::is_directory(img_dir)) {
    for (std::size_t i = 1;; ++i) {
      const fs::path frame_path = img_dir / frame_file_name(i);
      if (!fs::exists(frame_path)) {
        break;
      }
      try {
        seq.frames.push_back(read_pgm(frame_path));
      } catch (const std::runtime_error& e) {
        throw DatasetError(frame_path, 0, e.what());
      }
    }
  }
  return seq;
}

void write_sequence(const Sequence& seq, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw DatasetError(dir, 0, "cannot create directory: " + ec.message());
  }
  std::string gt;
  std::string absent;
  bool any_absent = false;
  for (const auto& label : seq.labels) {
    gt += (label.box ? format_box_line(*label.box) : std::string("0,0,0,0")) + '\n';
    absent += label.is_absent() ? "1\n" : "0\n";
    any_absent = any_absent || label.is_absent();
  }
  write_text(dir / "groundtruth.txt", gt);
  if (any_absent) {
    write_text(dir / "absent.txt", absent);
  } else {
    fs::remove(dir / "absent.txt", ec);
  }
  write_text(dir / "attributes.txt", format_attribute_line(seq.attributes) + '\n');
  if (!seq.frames.empty()) {
    fs::create_directories(dir / "img", ec);
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
      try {
        write_pgm(seq.frames[i], dir / "img" / frame_file_name(i + 1));
      } catch (const std::runtime_error& e) {
        throw DatasetError(dir / "img" / frame_file_name(i + 1), 0, e.what());
      }
    }
  }
}

std::vector<std::string> read_manifest(const fs::path& root) {
  const fs::path file = root / kManifestFile;
  if (!fs::exists(file)) {
    throw DatasetError(file, 0, "manifest not found");
  }
  std::vector<std::string> names;
  std::ifstream in(file);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto name = trim(line);
    if (name.empty()) {
      throw DatasetError(file, n, "empty sequence name");
    }
    names.emplace_back(name);
  }
  return names;
}

void write_manifest(const fs::path& root, std::span<const std::string> names) {
  std::string content;
  for (const auto& n : names) {
    content += n + '\n';
  }
  write_text(root / kManifestFile, content);
}

std::string Finding::to_string() const {
  std::string out = sequence + ": " + message;
  if (frame) {
    out += ", frame " + std::to_string(*frame);
  }
  return out;
}

std::vector<Finding> validate_sequence(const Sequence& seq) {
  std::vector<Finding> findings;
  if (seq.labels.empty()) {
    findings.push_back({seq.name, std::nullopt, "empty sequence"});
    return findings;
  }
  if (seq.labels.front().is_absent()) {
    findings.push_back({seq.name, std::nullopt, "uninitializable sequence"});
  }
  if (seq.has_frames() && seq.frames.size() != seq.labels.size()) {
    findings.push_back({seq.name, std::nullopt,
                        "length mismatch: " + std::to_string(seq.frames.size()) + " frames vs " +
                            std::to_string(seq.labels.size()) + " labels"});
  }
  for (std::size_t i = 1; i < seq.frames.size(); ++i) {
    if (seq.frames[i].height() != seq.frames[0].height() ||
        seq.frames[i].width() != seq.frames[0].width()) {
      findings.push_back({seq.name, i + 1, "frame dimensions differ from frame 1"});
    }
  }
  for (std::size_t i = 0; i < seq.labels.size(); ++i) {
    const auto& box = seq.labels[i].box;
    if (!box) {
      continue;
    }
    if (!(box->w > 0.0) || !(box->h > 0.0)) {
      findings.push_back({seq.name, i + 1, "non-positive extent"});
      continue;
    }
    if (i < seq.frames.size()) {
      const auto& f = seq.frames[i];
      if (box->x + box->w <= 0.0 || box->y + box->h <= 0.0 || box->x >= f.width() ||
          box->y >= f.height()) {
        findings.push_back({seq.name, i + 1, "box fully outside frame bounds"});
      }
    }
  }
  return findings;
}

DatasetStats compute_stats(std::span<const std::size_t> lengths, std::size_t bin_width) {
  if (lengths.empty()) {
    throw std::invalid_argument("statistics need at least one sequence");
  }
  if (bin_width == 0) {
    throw std::invalid_argument("bin width must be positive");
  }
  DatasetStats s;
  s.num_videos = lengths.size();
  s.total_frames = std::accumulate(lengths.begin(), lengths.end(), std::size_t{0});
  const auto [lo, hi] = std::minmax_element(lengths.begin(), lengths.end());
  s.min_frames = *lo;
  s.max_frames = *hi;
  s.avg_frames = (2 * s.total_frames + s.num_videos) / (2 * s.num_videos);
  s.frame_range = s.max_frames - s.min_frames;

  const std::size_t first_bin = s.min_frames / bin_width;
  const std::size_t last_bin = s.max_frames / bin_width;
  for (std::size_t b = first_bin; b <= last_bin; ++b) {
    s.histogram.push_back({b * bin_width, bin_width, 0});
  }
  for (std::size_t len : lengths) {
    ++s.histogram[len / bin_width - first_bin].count;
  }
  return s;
}

DatasetStats compute_stats(std::span<const Sequence> seqs, std::size_t bin_width) {
  std::vector<std::size_t> lengths;
  lengths.reserve(seqs.size());
  for (const auto& s : seqs) {
    lengths.push_back(s.length());
  }
  return compute_stats(lengths, bin_width);
}

bool auto_attribute_fm(const Sequence& seq, Warnings* warnings) {
  bool evaluable = false;
  for (std::size_t i = 1; i < seq.labels.size(); ++i) {
    const auto& prev = seq.labels[i - 1].box;
    const auto& next = seq.labels[i].box;
    if (!prev || !next || !prev->valid() || !next->valid()) {
      continue;
    }
    evaluable = true;
    const double shift = std::hypot(next->center_x() - prev->center_x(),
                                    next->center_y() - prev->center_y());
    // shift >= 0.2 * size, kept in a form that is exact for integral boxes.
    if (5.0 * shift >= std::sqrt(prev->area())) {
      return true;
    }
  }
  if (!evaluable && warnings != nullptr) {
    warnings->push_back(seq.name + ": FM rule needs two adjacent visible frames");
  }
  return false;
}

bool auto_attribute_lr(const Sequence& seq) {
  const auto boxes = visible_boxes(seq);
  if (boxes.empty()) {
    throw std::invalid_argument(seq.name + ": LR rule needs a visible frame");
  }
  return std::any_of(boxes.begin(), boxes.end(),
                     [](const auto& entry) { return entry.second.area() < 900.0; });
}

bool auto_attribute_arc(const Sequence& seq) {
  const auto boxes = visible_boxes(seq);
  if (boxes.empty()) {
    throw std::invalid_argument(seq.name + ": ARC rule needs a visible frame");
  }
  const BoundingBox& ref = boxes.front().second;
  return std::any_of(boxes.begin(), boxes.end(), [&ref](const auto& entry) {
    const BoundingBox& b = entry.second;
    // (w/h) / (w0/h0) without intermediate divisions.
    const double num = b.w * ref.h;
    const double den = b.h * ref.w;
    return num < 0.5 * den || num > 2.0 * den;
  });
}

CooccurrenceMatrix cooccurrence(std::span<const Sequence> seqs) {
  CooccurrenceMatrix m{};
  for (const auto& s : seqs) {
    for (std::size_t a = 0; a < kAttributeCount; ++a) {
      if (!s.attributes.has(kAllAttributes[a])) continue;
      for (std::size_t b = 0; b < kAttributeCount; ++b) {
        if (s.attributes.has(kAllAttributes[b])) ++m[a][b];
      }
    }
  }
  return m;
}

}  // namespace trobench
