#include "trobench/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "trobench/baselines.hpp"
#include "trobench/dataset.hpp"
#include "trobench/encoder.hpp"
#include "trobench/encoder_checks.hpp"
#include "trobench/eval.hpp"

namespace trobench::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Error carrying the exit code it should map to.
struct CommandError : std::runtime_error {
  CommandError(int code, const std::string& what) : std::runtime_error(what), code(code) {}
  int code;
};

struct CommandConfig {
  fs::path root;
  fs::path out;
  std::string format;
  std::vector<std::string> trackers;
  std::vector<std::string> results;
  std::vector<double> rhos;
  std::uint64_t seed{0};
  std::size_t bin_width{100};
  int search_radius{8};
  std::string pooling{"frames"};
  fs::path spec;
  fs::path dump;
  double rho{0.3};
  bool suite{false};
  bool write{false};
};

void flush_warnings(const Warnings& warnings, std::ostream& err) {
  for (const auto& w : warnings) err << "warning: " << w << '\n';
}

std::vector<std::string> manifest_or_throw(const fs::path& root) {
  if (!fs::is_directory(root)) {
    throw CommandError(kUsageError, "dataset root " + root.string() + " is not a directory");
  }
  try {
    return read_manifest(root);
  } catch (const DatasetError& e) {
    throw CommandError(kUsageError, e.what());
  }
}

std::vector<Sequence> load_all(const fs::path& root, bool frames, Warnings& warnings) {
  const auto names = manifest_or_throw(root);
  std::vector<Sequence> seqs;
  seqs.reserve(names.size());
  for (const auto& name : names) {
    try {
      seqs.push_back(load_sequence(root / name, {.load_frames = frames}, &warnings));
    } catch (const DatasetError& e) {
      throw CommandError(kDomainFailure, e.what());
    }
  }
  return seqs;
}

// Runs fn(0..n-1) on a small worker pool. Each index is handled exactly once.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) {
    throw CommandError(kUsageError, "cannot write " + path.string());
  }
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

// --- validate ---------------------------------------------------------------------

int cmd_validate(const CommandConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto names = manifest_or_throw(cfg.root);
  std::size_t count = 0;
  Warnings warnings;
  for (const auto& name : names) {
    std::vector<Finding> findings;
    try {
      findings = validate_sequence(load_sequence(cfg.root / name, {}, &warnings));
    } catch (const DatasetError& e) {
      findings.push_back({name, std::nullopt, e.what()});
    }
    for (const auto& f : findings) out << f.to_string() << '\n';
    count += findings.size();
  }
  flush_warnings(warnings, err);
  return count == 0 ? kSuccess : kDomainFailure;
}

// --- stats ----------------------------------------------------------------------------

json stats_to_json(const DatasetStats& s) {
  json hist = json::array();
  for (const auto& b : s.histogram) {
    hist.push_back({{"lower", b.lower}, {"width", b.width}, {"count", b.count}});
  }
  return {{"num_videos", s.num_videos},   {"total_frames", s.total_frames},
          {"min_frames", s.min_frames},   {"max_frames", s.max_frames},
          {"avg_frames", s.avg_frames},   {"frame_range", s.frame_range},
          {"histogram", std::move(hist)}};
}

int cmd_stats(const CommandConfig& cfg, std::ostream& out, std::ostream& err) {
  Warnings warnings;
  const auto seqs = load_all(cfg.root, false, warnings);
  flush_warnings(warnings, err);
  if (seqs.empty()) {
    err << "error: dataset is empty\n";
    return kDomainFailure;
  }
  const DatasetStats s = compute_stats(seqs, cfg.bin_width);
  if (cfg.format == "json") {
    out << stats_to_json(s).dump(2) << '\n';
  } else if (cfg.format == "csv") {
    out << "num_videos,min_frames,max_frames,total_frames,avg_frames,frame_range\n"
        << s.num_videos << ',' << s.min_frames << ',' << s.max_frames << ',' << s.total_frames
        << ',' << s.avg_frames << ',' << s.frame_range << "\n\nbin_lower,bin_width,count\n";
    for (const auto& b : s.histogram) out << b.lower << ',' << b.width << ',' << b.count << '\n';
  } else {
    out << "Number of videos  " << s.num_videos << '\n'
        << "Min frames        " << s.min_frames << '\n'
        << "Max frames        " << s.max_frames << '\n'
        << "Total frames      " << s.total_frames << '\n'
        << "Avg frames        " << s.avg_frames << '\n'
        << "Frame range       " << s.frame_range << '\n'
        << "Histogram\n";
    for (const auto& b : s.histogram) {
      out << "  [" << b.lower << ", " << b.lower + b.width << ")  " << b.count << '\n';
    }
  }
  return kSuccess;
}

// --- annotate ----------------------------------------------------------------------------

int cmd_annotate(const CommandConfig& cfg, std::ostream& out, std::ostream& err) {
  Warnings warnings;
  auto seqs = load_all(cfg.root, false, warnings);
  out << "sequence FM LR ARC\n";
  for (auto& s : seqs) {
    bool fm = false, lr = false, arc = false;
    try {
      fm = auto_attribute_fm(s, &warnings);
      lr = auto_attribute_lr(s);
      arc = auto_attribute_arc(s);
    } catch (const std::invalid_argument& e) {
      warnings.push_back(e.what());
    }
    out << s.name << ' ' << fm << ' ' << lr << ' ' << arc << '\n';
    if (cfg.write) {
      s.attributes.set(Attribute::FM, fm);
      s.attributes.set(Attribute::LR, lr);
      s.attributes.set(Attribute::ARC, arc);
      write_file(cfg.root / s.name / "attributes.txt", format_attribute_line(s.attributes) + "\n");
    }
  }
  out << "\nco-occurrence";
  for (Attribute a : kAllAttributes) out << ' ' << attribute_name(a);
  out << '\n';
  const auto m = cooccurrence(seqs);
  for (std::size_t a = 0; a < kAttributeCount; ++a) {
    out << attribute_name(kAllAttributes[a]);
    for (std::size_t b = 0; b < kAttributeCount; ++b) out << ' ' << m[a][b];
    out << '\n';
  }
  flush_warnings(warnings, err);
  return kSuccess;
}

// --- eval ------------------------------------------------------------------------------------

int cmd_eval(const CommandConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.trackers.empty() && cfg.results.empty()) {
    throw CommandError(kUsageError, "eval needs --tracker or --results");
  }
  if (cfg.format != "" && cfg.format != "csv" && cfg.format != "json") {
    throw CommandError(kUsageError, "eval --format must be csv or json");
  }
  const Pooling pooling = cfg.pooling == "sequence" ? Pooling::SequenceMean : Pooling::Frames;
  Warnings warnings;
  const auto seqs = load_all(cfg.root, !cfg.trackers.empty(), warnings);
  if (seqs.empty()) {
    err << "error: dataset is empty\n";
    return kDomainFailure;
  }
  std::error_code ec;
  fs::create_directories(cfg.out, ec);
  if (ec) {
    throw CommandError(kUsageError, "cannot create " + cfg.out.string());
  }

  std::vector<EvalReport> reports;
  for (const auto& name : cfg.trackers) {
    if (name != "static" && name != "ncc") {
      throw CommandError(kUsageError, "unknown tracker '" + name + "'");
    }
    const fs::path result_dir = cfg.out / name;
    fs::create_directories(result_dir, ec);
    std::vector<SequenceScores> scores(seqs.size());
    std::vector<Warnings> local(seqs.size());
    parallel_for(seqs.size(), [&](std::size_t i) {
      auto tracker = make_tracker(name, cfg.search_radius, &local[i]);
      const TrackerOutput o = run_ope(*tracker, seqs[i]);
      write_tracker_output(o, result_dir / (seqs[i].name + ".txt"));
      scores[i] = {seqs[i].name, seqs[i].attributes, score_frames(o, seqs[i])};
      for (std::size_t f : o.flagged_frames) {
        local[i].push_back(seqs[i].name + ": invalid prediction at frame " + std::to_string(f + 1));
      }
    });
    for (const auto& w : local) warnings.insert(warnings.end(), w.begin(), w.end());
    reports.push_back(build_report(name, scores, pooling, &warnings));
  }
  for (const auto& dir_name : cfg.results) {
    const fs::path dir(dir_name);
    std::vector<SequenceScores> scores(seqs.size());
    for (std::size_t i = 0; i < seqs.size(); ++i) {
      const fs::path file = dir / (seqs[i].name + ".txt");
      if (!fs::exists(file)) {
        err << "error: missing result file for sequence " << seqs[i].name << " (" << file.string()
            << ")\n";
        return kDomainFailure;
      }
      try {
        const TrackerOutput o = load_tracker_output(file, seqs[i].name);
        scores[i] = {seqs[i].name, seqs[i].attributes, score_frames(o, seqs[i])};
      } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kDomainFailure;
      }
    }
    std::string tracker = dir.filename().string();
    if (tracker.empty()) tracker = dir.parent_path().filename().string();
    reports.push_back(build_report(tracker, scores, pooling, &warnings));
  }
  flush_warnings(warnings, err);

  if (cfg.format != "json") write_file(cfg.out / "report.csv", report_to_csv(reports));
  if (cfg.format != "csv") write_file(cfg.out / "report.json", report_to_json(reports));

  out << "rank tracker auc prc20\n";
  std::size_t pos = 1;
  for (const auto& e : rank(reports)) {
    out << pos++ << ' ' << e.tracker << ' ' << fixed(e.auc, 6) << ' ' << fixed(e.prc20, 6) << '\n';
  }
  return kSuccess;
}

// --- encoder ---------------------------------------------------------------------------------

int cmd_rho_sweep(const CommandConfig& cfg, std::ostream& out, std::ostream&) {
  const std::vector<double> rhos = cfg.rhos.empty() ? encoder::default_rho_grid() : cfg.rhos;
  for (double r : rhos) {
    if (!(r >= 0.0 && r <= 1.0)) {
      throw CommandError(kUsageError, "rho " + std::to_string(r) + " outside [0, 1]");
    }
  }
  const auto rows = encoder::rho_sweep(rhos, cfg.seed);
  out << "rho reduction_residual affinity_residual feature_norm\n";
  for (const auto& r : rows) {
    out << fixed(r.rho, 2) << ' ' << sci(r.reduction_residual) << ' ' << sci(r.affinity_residual)
        << ' ' << fixed(r.feature_norm, 9) << '\n';
  }
  return kSuccess;
}

int cmd_encoder_check(const CommandConfig& cfg, std::ostream& out, std::ostream&) {
  if (!(cfg.rho >= 0.0 && cfg.rho <= 1.0)) {
    throw CommandError(kUsageError, "rho outside [0, 1]");
  }
  encoder::CheckSettings settings;
  settings.rho = cfg.rho;
  const auto results = encoder::run_encoder_checks(cfg.seed, settings);
  bool all = true;
  for (const auto& r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << r.detail << ")\n";
    all = all && r.passed;
  }
  if (!cfg.dump.empty()) {
    encoder::EncoderConfig ecfg;
    ecfg.seed = cfg.seed;
    ecfg.rho = cfg.rho;
    const auto params = encoder::init_params(ecfg);
    const auto [t, s] = encoder::random_inputs(ecfg, cfg.seed);
    const auto f = encoder::encoder_forward(t, s, params, ecfg);
    json tokens = json::array();
    for (int r = 0; r < f.size(); ++r) {
      json row = json::array();
      for (int c = 0; c < f.dim(); ++c) row.push_back(f.tokens(r, c));
      tokens.push_back(std::move(row));
    }
    const json doc{{"seed", cfg.seed},         {"rho", cfg.rho},
                   {"n_template", f.n_template}, {"n_search", f.n_search},
                   {"dim", f.dim()},             {"tokens", std::move(tokens)}};
    write_file(cfg.dump, doc.dump() + "\n");
  }
  return all ? kSuccess : kDomainFailure;
}

// --- synth -----------------------------------------------------------------------------------

int cmd_synth(const CommandConfig& cfg, std::ostream& out, std::ostream&) {
  std::vector<SynthSpec> specs;
  if (cfg.suite) {
    specs = reflection_suite(cfg.seed);
  } else {
    if (cfg.spec.empty()) {
      throw CommandError(kUsageError, "synth needs --spec or --suite");
    }
    std::ifstream in(cfg.spec);
    if (!in) {
      throw CommandError(kUsageError, "cannot read " + cfg.spec.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    json doc;
    try {
      doc = json::parse(buf.str());
    } catch (const json::exception& e) {
      throw CommandError(kUsageError, cfg.spec.string() + ": " + e.what());
    }
    const json list = doc.contains("sequences") ? doc.at("sequences") : json::array({doc});
    for (std::size_t i = 0; i < list.size(); ++i) {
      try {
        SynthSpec s = synth_spec_from_json(list[i].dump());
        if (!list[i].contains("seed")) s.seed = cfg.seed + i;
        specs.push_back(std::move(s));
      } catch (const std::exception& e) {
        throw CommandError(kUsageError, cfg.spec.string() + ": " + e.what());
      }
    }
  }
  std::vector<std::string> names;
  for (const auto& s : specs) {
    Sequence seq;
    try {
      seq = generate(s);
    } catch (const std::invalid_argument& e) {
      throw CommandError(kDomainFailure, e.what());
    }
    try {
      write_sequence(seq, cfg.out / seq.name);
    } catch (const DatasetError& e) {
      throw CommandError(kUsageError, e.what());
    }
    names.push_back(seq.name);
    out << seq.name << ' ' << seq.length() << " frames\n";
  }
  write_manifest(cfg.out, names);
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Single-object tracking benchmark toolkit"};
  app.require_subcommand(1);
  CommandConfig cfg;

  auto* validate = app.add_subcommand("validate", "Check every sequence listed in the manifest");
  validate->add_option("--root", cfg.root, "Dataset root")->required();

  auto* stats = app.add_subcommand("stats", "Dataset statistics and frame-count histogram");
  stats->add_option("--root", cfg.root, "Dataset root")->required();
  stats->add_option("--bin-width", cfg.bin_width, "Histogram bin width")->check(CLI::PositiveNumber);
  stats->add_option("--format", cfg.format, "text, csv or json")
      ->check(CLI::IsMember({"text", "csv", "json"}));

  auto* annotate = app.add_subcommand("annotate", "Rule-based FM/LR/ARC flags and co-occurrence");
  annotate->add_option("--root", cfg.root, "Dataset root")->required();
  annotate->add_flag("--write", cfg.write, "Store derived flags in attributes.txt");

  auto* eval = app.add_subcommand("eval", "One-pass evaluation and reporting");
  eval->add_option("--root", cfg.root, "Dataset root")->required();
  eval->add_option("--out", cfg.out, "Output directory")->required();
  eval->add_option("--tracker", cfg.trackers, "Built-in tracker (static, ncc); repeatable");
  eval->add_option("--results", cfg.results, "Per-tracker result directory; repeatable");
  eval->add_option("--format", cfg.format, "csv or json (default: both)")
      ->check(CLI::IsMember({"csv", "json"}));
  eval->add_option("--pooling", cfg.pooling, "frames or sequence")
      ->check(CLI::IsMember({"frames", "sequence"}));
  eval->add_option("--search-radius", cfg.search_radius, "NCC search radius in pixels")
      ->check(CLI::NonNegativeNumber);

  auto* sweep = app.add_subcommand("rho-sweep", "Encoder diagnostics over a grid of rho values");
  sweep->add_option("--rho", cfg.rhos, "Comma-separated rho values")->delimiter(',');
  sweep->add_option("--seed", cfg.seed, "Parameter seed");

  auto* check = app.add_subcommand("encoder-check", "Run the encoder invariant suite");
  check->add_option("--seed", cfg.seed, "Base seed");
  check->add_option("--rho", cfg.rho, "Mixing constant for the sensitivity check and dump");
  check->add_option("--dump", cfg.dump, "Write the aggregated features as JSON");

  auto* synth = app.add_subcommand("synth", "Write synthetic sequences in dataset format");
  synth->add_option("--spec", cfg.spec, "JSON spec (object or {\"sequences\": [...]})");
  synth->add_flag("--suite", cfg.suite, "Generate the built-in 20-sequence reflection suite");
  synth->add_option("--out", cfg.out, "Output dataset root")->required();
  synth->add_option("--seed", cfg.seed, "Seed for specs without one");

  std::vector<std::string> storage{"trobench"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsageError;
  }

  try {
    if (*validate) return cmd_validate(cfg, out, err);
    if (*stats) return cmd_stats(cfg, out, err);
    if (*annotate) return cmd_annotate(cfg, out, err);
    if (*eval) return cmd_eval(cfg, out, err);
    if (*sweep) return cmd_rho_sweep(cfg, out, err);
    if (*check) return cmd_encoder_check(cfg, out, err);
    if (*synth) return cmd_synth(cfg, out, err);
  } catch (const CommandError& e) {
    err << "error: " << e.what() << '\n';
    return e.code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDomainFailure;
  }
  return kUsageError;
}

}  // namespace trobench::cli
