#include "trobench/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <stdexcept>

#include "json.hpp"

namespace trobench {

void StaticTracker::init(const GrayFrame&, const BoundingBox& box) { box_ = box; }

BoundingBox StaticTracker::step(const GrayFrame&) { return box_; }

double zncc(const GrayFrame& image, int row, int col, const GrayFrame& patch) {
  const int h = patch.height();
  const int w = patch.width();
  const double n = static_cast<double>(h) * w;
  double sum_i = 0.0;
  double sum_p = 0.0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      sum_i += image.at(row + r, col + c);
      sum_p += patch.at(r, c);
    }
  }
  const double mean_i = sum_i / n;
  const double mean_p = sum_p / n;
  double cross = 0.0;
  double var_i = 0.0;
  double var_p = 0.0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double di = image.at(row + r, col + c) - mean_i;
      const double dp = patch.at(r, c) - mean_p;
      cross += di * dp;
      var_i += di * di;
      var_p += dp * dp;
    }
  }
  if (var_i <= 0.0 || var_p <= 0.0) {
    return 0.0;
  }
  return std::clamp(cross / std::sqrt(var_i * var_p), -1.0, 1.0);
}

void NccTracker::init(const GrayFrame& frame, const BoundingBox& box) {
  box_ = box;
  row_ = static_cast<int>(std::lround(box.y));
  col_ = static_cast<int>(std::lround(box.x));
  const int h = static_cast<int>(std::lround(box.h));
  const int w = static_cast<int>(std::lround(box.w));
  if (h < 1 || w < 1 || row_ < 0 || col_ < 0 || row_ + h > frame.height() ||
      col_ + w > frame.width()) {
    throw std::invalid_argument("NCC template " + to_string(box) + " does not fit in frame");
  }
  template_ = GrayFrame(h, w);
  double lo = 1.0;
  double hi = 0.0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      template_.at(r, c) = frame.at(row_ + r, col_ + c);
      lo = std::min(lo, template_.at(r, c));
      hi = std::max(hi, template_.at(r, c));
    }
  }
  degenerate_ = !(hi > lo);
  if (degenerate_ && warnings_ != nullptr) {
    warnings_->push_back("NCC template has zero variance, tracker stays at the initial box");
  }
}

BoundingBox NccTracker::step(const GrayFrame& frame) {
  if (degenerate_) {
    return box_;
  }
  const int h = template_.height();
  const int w = template_.width();
  double best = -2.0;
  int best_row = row_;
  int best_col = col_;
  for (int dy = -radius_; dy <= radius_; ++dy) {
    for (int dx = -radius_; dx <= radius_; ++dx) {
      const int r = row_ + dy;
      const int c = col_ + dx;
      if (r < 0 || c < 0 || r + h > frame.height() || c + w > frame.width()) {
        continue;
      }
      const double score = zncc(frame, r, c, template_);
      if (score > best) {
        best = score;
        best_row = r;
        best_col = c;
      }
    }
  }
  last_score_ = best;
  box_.x += best_col - col_;
  box_.y += best_row - row_;
  row_ = best_row;
  col_ = best_col;
  return box_;
}

std::unique_ptr<Tracker> make_tracker(const std::string& name, int search_radius,
                                      Warnings* warnings) {
  if (name == "static") return std::make_unique<StaticTracker>();
  if (name == "ncc") return std::make_unique<NccTracker>(search_radius, warnings);
  throw std::invalid_argument("unknown tracker '" + name + "'");
}

namespace {

using nlohmann::json;

GrayFrame make_texture(const SynthSpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(0.45, 1.0);
  GrayFrame tex(spec.target_height, spec.target_width);
  for (int r = 0; r < tex.height(); ++r) {
    for (int c = 0; c < tex.width(); ++c) {
      if (spec.pattern == TargetPattern::Symmetric && c >= (tex.width() + 1) / 2) {
        tex.at(r, c) = tex.at(r, tex.width() - 1 - c);
      } else {
        tex.at(r, c) = dist(rng);
      }
    }
  }
  return tex;
}

void paint(GrayFrame& frame, const GrayFrame& patch, int row, int col, bool mirrored) {
  for (int r = 0; r < patch.height(); ++r) {
    for (int c = 0; c < patch.width(); ++c) {
      const int fr = row + r;
      const int fc = col + c;
      if (fr < 0 || fc < 0 || fr >= frame.height() || fc >= frame.width()) continue;
      frame.at(fr, fc) = patch.at(r, mirrored ? patch.width() - 1 - c : c);
    }
  }
}

}  // namespace

Sequence generate(const SynthSpec& spec) {
  if (spec.length < 2) {
    throw std::invalid_argument("synthetic sequence needs at least 2 frames");
  }
  if (spec.frame_width < 1 || spec.frame_height < 1 || spec.target_width < 1 ||
      spec.target_height < 1) {
    throw std::invalid_argument("frame and target sizes must be positive");
  }
  if (spec.noise < 0.0 || spec.background < 0.0 || spec.background > 1.0) {
    throw std::invalid_argument("noise must be non-negative and background in [0, 1]");
  }

  std::mt19937_64 rng(spec.seed);
  const GrayFrame texture = make_texture(spec, rng);
  std::normal_distribution<double> noise(0.0, 1.0);

  Sequence seq;
  seq.name = spec.name;
  for (int t = 0; t < spec.length; ++t) {
    const double phase = 2.0 * std::numbers::pi * t / spec.period;
    const int col = static_cast<int>(
        std::lround(spec.start_x + spec.velocity_x * t + spec.amplitude_x * std::sin(phase)));
    const int row = static_cast<int>(
        std::lround(spec.start_y + spec.velocity_y * t + spec.amplitude_y * std::sin(phase)));
    const bool inside = col >= 0 && row >= 0 && col + spec.target_width <= spec.frame_width &&
                        row + spec.target_height <= spec.frame_height;
    if (!inside && !spec.allow_out_of_view) {
      throw std::invalid_argument(spec.name + ": target leaves the frame at frame " +
                                  std::to_string(t + 1));
    }

    GrayFrame frame(spec.frame_height, spec.frame_width, spec.background);
    if (spec.mirrored_distractor) {
      const int mirror_col =
          static_cast<int>(std::lround(2.0 * spec.mirror_x - col - spec.target_width));
      paint(frame, texture, row, mirror_col, true);
    }
    paint(frame, texture, row, col, false);
    if (spec.noise > 0.0) {
      for (int r = 0; r < frame.height(); ++r) {
        for (int c = 0; c < frame.width(); ++c) {
          frame.at(r, c) += spec.noise * noise(rng);
        }
      }
    }
    frame.quantize();
    seq.frames.push_back(std::move(frame));

    // Clip to the visible part; fully hidden targets are absent.
    const double x0 = std::max(0, col);
    const double y0 = std::max(0, row);
    const double x1 = std::min(spec.frame_width, col + spec.target_width);
    const double y1 = std::min(spec.frame_height, row + spec.target_height);
    if (x1 > x0 && y1 > y0) {
      seq.labels.push_back({BoundingBox{x0, y0, x1 - x0, y1 - y0}});
    } else {
      seq.labels.push_back(FrameLabel::absent());
    }
  }
  if (seq.labels.front().is_absent()) {
    throw std::invalid_argument(spec.name + ": target not visible in the first frame");
  }
  seq.attributes = spec.declared;
  seq.attributes.set(Attribute::FM, auto_attribute_fm(seq));
  seq.attributes.set(Attribute::LR, auto_attribute_lr(seq));
  seq.attributes.set(Attribute::ARC, auto_attribute_arc(seq));
  if (std::any_of(seq.labels.begin(), seq.labels.end(),
                  [](const FrameLabel& l) { return l.is_absent(); }) ||
      std::any_of(seq.labels.begin(), seq.labels.end(), [&spec](const FrameLabel& l) {
        return l.box && (l.box->w < spec.target_width || l.box->h < spec.target_height);
      })) {
    seq.attributes.set(Attribute::OV);
  }
  return seq;
}

std::vector<SynthSpec> reflection_suite(std::uint64_t seed) {
  std::vector<SynthSpec> specs;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> start(4, 20);
  for (int i = 0; i < 20; ++i) {
    SynthSpec s;
    const bool moving = i >= 10;
    char name[32];
    std::snprintf(name, sizeof name, "%s_%02d", moving ? "mirror" : "still", i % 10);
    s.name = name;
    s.frame_width = 96;
    s.frame_height = 64;
    s.target_width = 12 + 2 * (i % 3);
    s.target_height = 12;
    s.start_x = start(rng);
    s.start_y = 16 + start(rng);
    s.length = 62 + 4 * (i % 10);
    s.noise = 0.01;
    s.seed = rng();
    if (moving) {
      s.velocity_x = 0.5;
      s.amplitude_y = 3.0;
      s.mirrored_distractor = true;
      s.mirror_x = 80.0;
      s.declared.set(Attribute::BC);
    }
    specs.push_back(s);
  }
  return specs;
}

SynthSpec synth_spec_from_json(const std::string& text) {
  const json j = json::parse(text);
  SynthSpec s;
  s.name = j.value("name", s.name);
  s.frame_width = j.value("frame_width", s.frame_width);
  s.frame_height = j.value("frame_height", s.frame_height);
  s.target_width = j.value("target_width", s.target_width);
  s.target_height = j.value("target_height", s.target_height);
  s.start_x = j.value("start_x", s.start_x);
  s.start_y = j.value("start_y", s.start_y);
  s.velocity_x = j.value("velocity_x", s.velocity_x);
  s.velocity_y = j.value("velocity_y", s.velocity_y);
  s.amplitude_x = j.value("amplitude_x", s.amplitude_x);
  s.amplitude_y = j.value("amplitude_y", s.amplitude_y);
  s.period = j.value("period", s.period);
  s.mirrored_distractor = j.value("mirrored_distractor", s.mirrored_distractor);
  s.mirror_x = j.value("mirror_x", s.mirror_x);
  const std::string pattern = j.value("pattern", std::string("random"));
  if (pattern == "random") {
    s.pattern = TargetPattern::Random;
  } else if (pattern == "symmetric") {
    s.pattern = TargetPattern::Symmetric;
  } else {
    throw std::invalid_argument("unknown pattern '" + pattern + "'");
  }
  s.background = j.value("background", s.background);
  s.noise = j.value("noise", s.noise);
  s.length = j.value("length", s.length);
  s.allow_out_of_view = j.value("allow_out_of_view", s.allow_out_of_view);
  for (const auto& a : j.value("attributes", std::vector<std::string>{})) {
    const auto attr = attribute_from_name(a);
    if (!attr) {
      throw std::invalid_argument("unknown attribute '" + a + "'");
    }
    s.declared.set(*attr);
  }
  s.seed = j.value("seed", s.seed);
  return s;
}

std::string synth_spec_to_json(const SynthSpec& s) {
  std::vector<std::string> declared;
  for (Attribute a : kAllAttributes) {
    if (s.declared.has(a)) declared.emplace_back(attribute_name(a));
  }
  json j{{"name", s.name},
         {"frame_width", s.frame_width},
         {"frame_height", s.frame_height},
         {"target_width", s.target_width},
         {"target_height", s.target_height},
         {"start_x", s.start_x},
         {"start_y", s.start_y},
         {"velocity_x", s.velocity_x},
         {"velocity_y", s.velocity_y},
         {"amplitude_x", s.amplitude_x},
         {"amplitude_y", s.amplitude_y},
         {"period", s.period},
         {"mirrored_distractor", s.mirrored_distractor},
         {"mirror_x", s.mirror_x},
         {"pattern", s.pattern == TargetPattern::Symmetric ? "symmetric" : "random"},
         {"background", s.background},
         {"noise", s.noise},
         {"length", s.length},
         {"allow_out_of_view", s.allow_out_of_view},
         {"attributes", declared},
         {"seed", s.seed}};
  return j.dump(2);
}

}  // namespace trobench
