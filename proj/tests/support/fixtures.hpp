#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <random>
#include <string>
#include <vector>

#include "patron/dataset_io.hpp"
#include "patron/matrix.hpp"

namespace fixtures {

inline patron::MatrixF matrix(std::initializer_list<std::initializer_list<float>> rows) {
  const std::size_t cols = rows.begin()->size();
  std::vector<float> values;
  for (const auto& r : rows) values.insert(values.end(), r.begin(), r.end());
  return patron::MatrixF(rows.size(), cols, std::move(values));
}

// Dataset whose embeddings are the row index repeated across `d` columns.
inline patron::DatasetMatrices with_probs(patron::MatrixF probs, std::size_t d = 2) {
  patron::DatasetMatrices data;
  data.embeddings = patron::MatrixF(probs.rows(), d);
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    for (std::size_t j = 0; j < d; ++j) data.embeddings(i, j) = static_cast<float>(i);
  }
  data.class_probs = std::move(probs);
  return data;
}

inline patron::MatrixF random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, float lo = -1.0f,
                                     float hi = 1.0f) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(lo, hi);
  patron::MatrixF m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = dist(rng);
  }
  return m;
}

// Fresh, empty scratch directory under the system temp dir.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("patron-test-" + tag + "-" + std::to_string(std::random_device{}()));
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

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace fixtures
