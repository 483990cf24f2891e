#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>
#include <vector>

namespace trobench::testing {

class TempDir {
 public:
  explicit TempDir(const std::string& tag = "tmp") {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("trobench_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::vector<std::size_t> golden_lengths() {
  std::ifstream in(std::string(TROBENCH_TEST_DATA) + "/tro_lengths.txt");
  std::vector<std::size_t> out;
  for (std::size_t v; in >> v;) out.push_back(v);
  return out;
}

/// Annotation-only dataset with one sequence per golden length.
inline void write_golden_dataset(const std::filesystem::path& root) {
  const auto lengths = golden_lengths();
  std::ofstream manifest(root / "manifest.txt");
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    const std::string name = "tro_" + std::to_string(i + 1);
    manifest << name << '\n';
    std::filesystem::create_directories(root / name);
    std::ofstream gt(root / name / "groundtruth.txt");
    for (std::size_t f = 0; f < lengths[i]; ++f) {
      gt << 100 + f % 7 << ',' << 80 << ',' << 40 << ',' << 30 << '\n';
    }
    std::ofstream(root / name / "attributes.txt") << "0,0,0,0,0,0,0,0,1,0,0,0\n";
  }
}

}  // namespace trobench::testing
