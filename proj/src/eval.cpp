#include "trobench/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace trobench {

namespace fs = std::filesystem;
using nlohmann::json;

TrackerOutput run_ope(Tracker& tracker, const Sequence& seq) {
  if (!seq.has_frames()) {
    throw std::invalid_argument(seq.name + ": one-pass evaluation needs image frames");
  }
  if (seq.frames.size() != seq.labels.size()) {
    throw std::invalid_argument(seq.name + ": frame count does not match label count");
  }
  const auto& init = seq.labels.front().box;
  if (!init || !init->valid()) {
    throw std::invalid_argument(seq.name + ": first frame has no valid ground-truth box");
  }
  TrackerOutput out;
  out.sequence = seq.name;
  out.boxes.reserve(seq.length());
  tracker.init(seq.frames.front(), *init);
  out.boxes.push_back(*init);
  for (std::size_t i = 1; i < seq.frames.size(); ++i) {
    const BoundingBox box = tracker.step(seq.frames[i]);
    if (!box.valid()) {
      out.flagged_frames.push_back(i);
    }
    out.boxes.push_back(box);
  }
  return out;
}

TrackerOutput load_tracker_output(const fs::path& file, const std::string& sequence) {
  std::ifstream in(file);
  if (!in) {
    throw DatasetError(file, 0, "missing result file for sequence " + sequence);
  }
  TrackerOutput out;
  out.sequence = sequence;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const BoundingBox box = parse_box_line(line, file, n);
    if (!box.valid()) {
      out.flagged_frames.push_back(n - 1);
    }
    out.boxes.push_back(box);
  }
  if (out.boxes.empty()) {
    throw DatasetError(file, 0, "empty file");
  }
  return out;
}

void write_tracker_output(const TrackerOutput& output, const fs::path& file) {
  std::ofstream out(file, std::ios::binary);
  for (const auto& box : output.boxes) {
    out << format_box_line(box) << '\n';
  }
  if (!out) {
    throw DatasetError(file, 0, "cannot write file");
  }
}

double precision_threshold(std::size_t i) { return static_cast<double>(i); }
double success_threshold(std::size_t i) { return static_cast<double>(i) / 100.0; }

FrameScores score_frames(const TrackerOutput& pred, const Sequence& seq) {
  if (pred.boxes.size() != seq.labels.size()) {
    throw std::invalid_argument(seq.name + ": " + std::to_string(pred.boxes.size()) +
                                " predictions for " + std::to_string(seq.labels.size()) +
                                " frames");
  }
  FrameScores scores;
  for (std::size_t i = 0; i < seq.labels.size(); ++i) {
    const auto& truth = seq.labels[i].box;
    if (!truth) {
      continue;
    }
    if (!truth->valid()) {
      throw InvalidBoxError(seq.name + ": invalid ground truth at frame " +
                            std::to_string(i + 1));
    }
    const BoundingBox& p = pred.boxes[i];
    if (p.valid()) {
      scores.overlaps.push_back(overlap_score(p, *truth));
      scores.center_errors.push_back(center_error(p, *truth));
    } else {
      scores.overlaps.push_back(0.0);
      scores.center_errors.push_back(std::numeric_limits<double>::infinity());
    }
  }
  return scores;
}

PrecisionCurve precision_curve(std::span<const double> center_errors) {
  if (center_errors.empty()) {
    throw std::invalid_argument("precision curve needs at least one evaluated frame");
  }
  PrecisionCurve curve;
  const double n = static_cast<double>(center_errors.size());
  for (std::size_t i = 0; i < kPrecisionSteps; ++i) {
    const double t = precision_threshold(i);
    const auto hits = std::count_if(center_errors.begin(), center_errors.end(),
                                    [t](double e) { return e <= t; });
    curve.values[i] = static_cast<double>(hits) / n;
  }
  return curve;
}

SuccessCurve success_curve(std::span<const double> overlaps) {
  if (overlaps.empty()) {
    throw std::invalid_argument("success curve needs at least one evaluated frame");
  }
  SuccessCurve curve;
  const double n = static_cast<double>(overlaps.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < kSuccessSteps; ++i) {
    const double t = success_threshold(i);
    const auto hits =
        std::count_if(overlaps.begin(), overlaps.end(), [t](double s) { return s > t; });
    curve.values[i] = static_cast<double>(hits) / n;
    sum += curve.values[i];
  }
  curve.auc = sum / static_cast<double>(kSuccessSteps);
  return curve;
}

PrecisionCurve precision_curve(const TrackerOutput& pred, const Sequence& seq) {
  return precision_curve(score_frames(pred, seq).center_errors);
}

SuccessCurve success_curve(const TrackerOutput& pred, const Sequence& seq) {
  return success_curve(score_frames(pred, seq).overlaps);
}

const ScopeResult& EvalReport::overall() const {
  const ScopeResult* s = find(kOverallScope);
  if (s == nullptr) {
    throw std::logic_error("report for " + tracker + " has no overall scope");
  }
  return *s;
}

const ScopeResult* EvalReport::find(const std::string& scope) const {
  const auto it = std::find_if(scopes.begin(), scopes.end(),
                               [&scope](const ScopeResult& s) { return s.scope == scope; });
  return it == scopes.end() ? nullptr : &*it;
}

std::optional<ScopeResult> aggregate(std::span<const SequenceScores> seqs,
                                     std::optional<Attribute> scope, Pooling pooling) {
  std::vector<const SequenceScores*> members;
  for (const auto& s : seqs) {
    if (!scope || s.attributes.has(*scope)) {
      members.push_back(&s);
    }
  }
  if (members.empty()) {
    return std::nullopt;
  }
  ScopeResult result;
  result.scope = scope ? std::string(attribute_name(*scope)) : kOverallScope;
  result.sequences = members.size();

  if (pooling == Pooling::Frames) {
    std::vector<double> overlaps;
    std::vector<double> errors;
    for (const auto* m : members) {
      overlaps.insert(overlaps.end(), m->frames.overlaps.begin(), m->frames.overlaps.end());
      errors.insert(errors.end(), m->frames.center_errors.begin(),
                    m->frames.center_errors.end());
    }
    result.frames = overlaps.size();
    result.precision = precision_curve(errors);
    result.success = success_curve(overlaps);
    return result;
  }

  const double n = static_cast<double>(members.size());
  for (const auto* m : members) {
    result.frames += m->frames.size();
    const auto p = precision_curve(m->frames.center_errors);
    const auto s = success_curve(m->frames.overlaps);
    for (std::size_t i = 0; i < kPrecisionSteps; ++i) result.precision.values[i] += p.values[i];
    for (std::size_t i = 0; i < kSuccessSteps; ++i) result.success.values[i] += s.values[i];
  }
  double sum = 0.0;
  for (double& v : result.precision.values) v /= n;
  for (double& v : result.success.values) {
    v /= n;
    sum += v;
  }
  result.success.auc = sum / static_cast<double>(kSuccessSteps);
  return result;
}

EvalReport build_report(std::string tracker, std::span<const SequenceScores> seqs,
                        Pooling pooling, Warnings* warnings) {
  EvalReport report;
  report.tracker = std::move(tracker);
  auto overall = aggregate(seqs, std::nullopt, pooling);
  if (!overall) {
    throw std::invalid_argument("report for " + report.tracker + " has no sequences");
  }
  report.scopes.push_back(std::move(*overall));
  for (Attribute a : kAllAttributes) {
    if (auto r = aggregate(seqs, a, pooling)) {
      report.scopes.push_back(std::move(*r));
    } else if (warnings != nullptr) {
      warnings->push_back(report.tracker + ": no sequence carries " +
                          std::string(attribute_name(a)) + ", scope omitted");
    }
  }
  return report;
}

std::vector<RankEntry> rank(std::span<const EvalReport> reports) {
  std::vector<RankEntry> out;
  out.reserve(reports.size());
  for (const auto& r : reports) {
    const auto& o = r.overall();
    out.push_back({r.tracker, o.success.auc, o.precision.prc20()});
  }
  std::sort(out.begin(), out.end(), [](const RankEntry& a, const RankEntry& b) {
    if (a.auc != b.auc) return a.auc > b.auc;
    if (a.prc20 != b.prc20) return a.prc20 > b.prc20;
    return a.tracker < b.tracker;
  });
  return out;
}

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string report_to_csv(std::span<const EvalReport> reports) {
  std::string out;
  for (const auto& r : reports) {
    for (const auto& s : r.scopes) {
      out += "# tracker=" + r.tracker + " scope=" + s.scope +
             " sequences=" + std::to_string(s.sequences) + " frames=" + std::to_string(s.frames) +
             " auc=" + fixed(s.success.auc, 6) + " prc20=" + fixed(s.precision.prc20(), 6) + "\n";
      out += "curve,threshold,value\n";
      for (std::size_t i = 0; i < kPrecisionSteps; ++i) {
        out += "precision," + fixed(precision_threshold(i), 0) + "," +
               fixed(s.precision.values[i], 6) + "\n";
      }
      for (std::size_t i = 0; i < kSuccessSteps; ++i) {
        out += "success," + fixed(success_threshold(i), 2) + "," +
               fixed(s.success.values[i], 6) + "\n";
      }
      out += "\n";
    }
  }
  return out;
}

std::string report_to_json(std::span<const EvalReport> reports) {
  json doc;
  doc["reports"] = json::array();
  for (const auto& r : reports) {
    json jr;
    jr["tracker"] = r.tracker;
    jr["scopes"] = json::array();
    for (const auto& s : r.scopes) {
      json js;
      js["scope"] = s.scope;
      js["sequences"] = s.sequences;
      js["frames"] = s.frames;
      js["auc"] = s.success.auc;
      js["prc20"] = s.precision.prc20();
      json prec = json::array();
      for (std::size_t i = 0; i < kPrecisionSteps; ++i) {
        prec.push_back({precision_threshold(i), s.precision.values[i]});
      }
      json succ = json::array();
      for (std::size_t i = 0; i < kSuccessSteps; ++i) {
        succ.push_back({success_threshold(i), s.success.values[i]});
      }
      js["precision"] = std::move(prec);
      js["success"] = std::move(succ);
      jr["scopes"].push_back(std::move(js));
    }
    doc["reports"].push_back(std::move(jr));
  }
  doc["ranking"] = json::array();
  for (const auto& e : rank(reports)) {
    doc["ranking"].push_back({{"tracker", e.tracker}, {"auc", e.auc}, {"prc20", e.prc20}});
  }
  return doc.dump(2) + "\n";
}

std::vector<EvalReport> report_from_json(const std::string& text) {
  const json doc = json::parse(text);
  std::vector<EvalReport> reports;
  for (const auto& jr : doc.at("reports")) {
    EvalReport r;
    r.tracker = jr.at("tracker").get<std::string>();
    for (const auto& js : jr.at("scopes")) {
      ScopeResult s;
      s.scope = js.at("scope").get<std::string>();
      s.sequences = js.at("sequences").get<std::size_t>();
      s.frames = js.at("frames").get<std::size_t>();
      s.success.auc = js.at("auc").get<double>();
      const auto& prec = js.at("precision");
      const auto& succ = js.at("success");
      if (prec.size() != kPrecisionSteps || succ.size() != kSuccessSteps) {
        throw std::invalid_argument("report curve has wrong number of thresholds");
      }
      for (std::size_t i = 0; i < kPrecisionSteps; ++i) {
        s.precision.values[i] = prec[i].at(1).get<double>();
      }
      for (std::size_t i = 0; i < kSuccessSteps; ++i) {
        s.success.values[i] = succ[i].at(1).get<double>();
      }
      r.scopes.push_back(std::move(s));
    }
    reports.push_back(std::move(r));
  }
  return reports;
}

}  // namespace trobench
