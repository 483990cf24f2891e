#include <gtest/gtest.h>

#include <sstream>

#include "fixtures.hpp"
#include "json.hpp"
#include "trobench/baselines.hpp"
#include "trobench/cli.hpp"
#include "trobench/dataset.hpp"
#include "trobench/eval.hpp"

namespace trobench {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_small_dataset(const fs::path& root, std::size_t count = 3, bool moving = false) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < count; ++i) {
    SynthSpec spec;
    spec.name = "s" + std::to_string(i);
    spec.seed = i;
    spec.length = 20;
    spec.velocity_x = moving ? 1.0 : 0.0;
    write_sequence(generate(spec), root / spec.name);
    names.push_back(spec.name);
  }
  write_manifest(root, names);
}

TEST(CliValidate, CleanCorruptMissing) {
  TempDir tmp("cli");
  write_small_dataset(tmp.path());
  Result r = run({"validate", "--root", tmp.path().string()});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "");

  std::ofstream(tmp.path() / "s1" / "groundtruth.txt", std::ios::app) << "1,2,three,4\n";
  r = run({"validate", "--root", tmp.path().string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 1);
  EXPECT_NE(r.out.find("groundtruth.txt:21"), std::string::npos) << r.out;

  r = run({"validate", "--root", (tmp.path() / "nope").string()});
  EXPECT_EQ(r.code, 2);
}

TEST(CliStats, GoldenFixtureTextAndJson) {
  TempDir tmp("golden");
  testing::write_golden_dataset(tmp.path());
  Result r = run({"stats", "--root", tmp.path().string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("Number of videos  200"), std::string::npos);
  EXPECT_NE(r.out.find("Avg frames        349"), std::string::npos);

  r = run({"stats", "--root", tmp.path().string(), "--format", "json", "--bin-width", "100"});
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["num_videos"], 200);
  EXPECT_EQ(j["min_frames"], 62);
  EXPECT_EQ(j["max_frames"], 1211);
  EXPECT_EQ(j["total_frames"], 69810);
  EXPECT_EQ(j["avg_frames"], 349);
  EXPECT_EQ(j["frame_range"], 1149);
  // Parse back into DatasetStats and compare with the library result.
  DatasetStats parsed{j["num_videos"], j["total_frames"], j["min_frames"], j["max_frames"],
                      j["avg_frames"], j["frame_range"], {}};
  for (const auto& b : j["histogram"]) parsed.histogram.push_back({b["lower"], b["width"], b["count"]});
  EXPECT_EQ(parsed, compute_stats(testing::golden_lengths(), 100));
}

TEST(CliStats, SingleAndEmpty) {
  TempDir tmp("single");
  write_small_dataset(tmp.path(), 1);
  Result r = run({"stats", "--root", tmp.path().string(), "--format", "csv"});
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("1,20,20,20,20,0"), std::string::npos) << r.out;

  std::ofstream(tmp.path() / "manifest.txt", std::ios::trunc).flush();
  EXPECT_EQ(run({"stats", "--root", tmp.path().string()}).code, 1);
}

TEST(CliEval, StaticTrackerOnStationarySet) {
  TempDir tmp("eval");
  write_small_dataset(tmp.path() / "data");
  Result r = run({"eval", "--root", (tmp.path() / "data").string(), "--out",
                  (tmp.path() / "out").string(), "--tracker", "static"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("1 static 0.990099 1.000000"), std::string::npos) << r.out;
  EXPECT_TRUE(fs::exists(tmp.path() / "out" / "report.csv"));
  EXPECT_TRUE(fs::exists(tmp.path() / "out" / "static" / "s0.txt"));
  const auto reports = report_from_json(slurp(tmp.path() / "out" / "report.json"));
  ASSERT_EQ(reports.size(), 1u);
  EXPECT_GE(reports[0].overall().success.auc, 0.99);
}

TEST(CliEval, OfflineGroundTruthAndRanking) {
  TempDir tmp("offline");
  const fs::path data = tmp.path() / "data";
  write_small_dataset(data, 3, true);
  // Perfect results: copy each ground-truth file.
  fs::create_directories(tmp.path() / "oracle");
  for (const auto& name : read_manifest(data)) {
    fs::copy_file(data / name / "groundtruth.txt", tmp.path() / "oracle" / (name + ".txt"));
  }
  Result r = run({"eval", "--root", data.string(), "--out", (tmp.path() / "out").string(),
                  "--results", (tmp.path() / "oracle").string(), "--tracker", "static",
                  "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto reports = report_from_json(slurp(tmp.path() / "out" / "report.json"));
  ASSERT_EQ(reports.size(), 2u);
  const auto ranking = rank(reports);
  EXPECT_EQ(ranking[0].tracker, "oracle");
  EXPECT_EQ(ranking[0].prc20, 1.0);
  EXPECT_EQ(ranking[1].tracker, "static");
  EXPECT_LT(r.out.find("oracle"), r.out.find("static"));
  EXPECT_FALSE(fs::exists(tmp.path() / "out" / "report.csv"));
}

TEST(CliEval, MissingResultFileNamesSequence) {
  TempDir tmp("missing");
  write_small_dataset(tmp.path() / "data");
  fs::create_directories(tmp.path() / "partial");
  fs::copy_file(tmp.path() / "data" / "s0" / "groundtruth.txt", tmp.path() / "partial" / "s0.txt");
  Result r = run({"eval", "--root", (tmp.path() / "data").string(), "--out",
                  (tmp.path() / "out").string(), "--results", (tmp.path() / "partial").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("s1"), std::string::npos);
}

TEST(CliEval, UsageErrors) {
  TempDir tmp("usage");
  write_small_dataset(tmp.path());
  EXPECT_EQ(run({"eval", "--root", tmp.path().string(), "--out", "x"}).code, 2);
  EXPECT_EQ(run({"eval", "--root", tmp.path().string(), "--out", (tmp.path() / "o").string(),
                 "--tracker", "kcf"}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(CliRhoSweep, DefaultGridAndErrors) {
  Result r = run({"rho-sweep", "--seed", "4"});
  ASSERT_EQ(r.code, 0);
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "rho reduction_residual affinity_residual feature_norm");
  int rows = 0;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    double rho, red, aff, norm;
    row >> rho >> red >> aff >> norm;
    EXPECT_LE(aff, 1e-9);
    ++rows;
  }
  EXPECT_EQ(rows, 10);
  EXPECT_EQ(run({"rho-sweep", "--seed", "4"}).out, r.out);

  r = run({"rho-sweep", "--rho", "0,0.5,1"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 4);
  EXPECT_EQ(run({"rho-sweep", "--rho", "0.5,1.5"}).code, 2);
}

TEST(CliEncoderCheck, PassesAndDumps) {
  TempDir tmp("enc");
  const fs::path dump = tmp.path() / "f.json";
  Result r = run({"encoder-check", "--seed", "2", "--dump", dump.string()});
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 7);
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
  const auto j = nlohmann::json::parse(slurp(dump));
  EXPECT_EQ(j["tokens"].size(), 80u);
  EXPECT_EQ(j["tokens"][0].size(), 32u);
  const std::string first = slurp(dump);
  ASSERT_EQ(run({"encoder-check", "--seed", "2", "--dump", dump.string()}).code, 0);
  EXPECT_EQ(slurp(dump), first);
}

TEST(CliSynth, SpecFileAndSuite) {
  TempDir tmp("synth");
  const fs::path spec = tmp.path() / "spec.json";
  std::ofstream(spec) << R"({"sequences": [
    {"name": "a", "length": 62, "velocity_x": 1.0},
    {"name": "b", "length": 30, "mirrored_distractor": true, "attributes": ["BC"]}]})";
  Result r = run({"synth", "--spec", spec.string(), "--out", (tmp.path() / "d").string(),
                  "--seed", "9"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_manifest(tmp.path() / "d"), (std::vector<std::string>{"a", "b"}));
  const Sequence a = load_sequence(tmp.path() / "d" / "a");
  EXPECT_EQ(a.length(), 62u);
  EXPECT_EQ(a.frames.size(), 62u);
  EXPECT_TRUE(load_sequence(tmp.path() / "d" / "b").attributes.has(Attribute::BC));
  EXPECT_EQ(run({"validate", "--root", (tmp.path() / "d").string()}).code, 0);

  r = run({"synth", "--suite", "--out", (tmp.path() / "suite").string(), "--seed", "1"});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(read_manifest(tmp.path() / "suite").size(), 20u);

  std::ofstream(spec, std::ios::trunc) << R"({"velocity_x": 50.0})";
  EXPECT_EQ(run({"synth", "--spec", spec.string(), "--out", (tmp.path() / "e").string()}).code, 1);
  EXPECT_EQ(run({"synth", "--out", (tmp.path() / "e").string()}).code, 2);
}

TEST(CliAnnotate, DerivesFlagsAndCooccurrence) {
  TempDir tmp("annotate");
  write_small_dataset(tmp.path(), 2);
  Result r = run({"annotate", "--root", tmp.path().string(), "--write"});
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("s0 0 1 0"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("LR 0 0 0 0 0 0 0 2"), std::string::npos) << r.out;
  EXPECT_TRUE(load_sequence(tmp.path() / "s0").attributes.has(Attribute::LR));
}

}  // namespace
}  // namespace trobench
