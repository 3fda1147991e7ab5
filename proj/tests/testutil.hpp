#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "cansig/record.hpp"

namespace testutil {

/// Self-cleaning scratch directory for one test.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    namespace fs = std::filesystem;
    base_ = fs::temp_directory_path() /
            ("cansig_" + tag + "_" + std::to_string(counter()++));
    fs::create_directories(base_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(base_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string path(const std::string& name = "") const {
    return name.empty() ? base_.string() : (base_ / name).string();
  }

 private:
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::filesystem::path base_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

/// A record stream over `ids` message types: id k carries signal k, emits
/// every step, values uniform in [0,1].
inline std::vector<cansig::SignalRecord> uniform_records(int m, int steps,
                                                         unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, m - 1);
  std::vector<cansig::SignalRecord> records;
  records.reserve(steps);
  for (int t = 0; t < steps; ++t) {
    cansig::SignalRecord rec;
    rec.time = 0.01 * t;
    const int id = pick(rng);
    rec.msg_id = "id" + std::to_string(id);
    rec.values.push_back({id, uni(rng)});
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace testutil
