#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "seqmod/dataio.hpp"
#include "seqmod/matrix.hpp"

namespace testing {

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("seqmod_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline seqmod::Matrix<double> random_matrix(std::size_t rows, std::size_t cols,
                                            std::mt19937_64& rng, double lo = -1.0,
                                            double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  seqmod::Matrix<double> m(rows, cols);
  for (auto& x : m.data()) x = u(rng);
  return m;
}

inline seqmod::FeatureMatrix random_features(std::size_t rows, std::size_t cols,
                                             std::mt19937_64& rng) {
  std::normal_distribution<float> n(0.0f, 1.0f);
  std::vector<float> v(rows * cols);
  for (auto& x : v) x = n(rng);
  return seqmod::FeatureMatrix(rows, cols, std::move(v));
}

}  // namespace testing
