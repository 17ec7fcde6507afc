#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "patron/matrix.hpp"
#include "patron/metrics.hpp"
#include "patron/params.hpp"

namespace patron {

// Tolerance on |sum(row) - 1| for stored class probabilities.
inline constexpr double kProbRowTolerance = 1e-5;

struct DatasetMatrices {
  MatrixF embeddings;                        // n x d
  MatrixF class_probs;                       // n x c, rows sum to 1
  std::optional<MatrixF> raw_label_probs;    // n x c, entries in [0, 1]
  std::optional<std::vector<std::int32_t>> gold_labels;  // n entries in [0, c)

  std::size_t n() const noexcept { return embeddings.rows(); }
  std::size_t d() const noexcept { return embeddings.cols(); }
  std::size_t c() const noexcept { return class_probs.cols(); }
};

// Checks every DatasetMatrices invariant; throws ProbRowInvalid,
// RawProbInvalid, LabelOutOfRange or SizeMismatch.
void validate(const DatasetMatrices& data);

// Key/value manifest describing the binary payloads. Paths are resolved
// relative to the manifest's directory when not absolute.
struct Manifest {
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t c = 0;
  std::string dtype = "f32le";
  std::string layout = "row-major";
  std::string embedding_path;
  std::string prob_path;
  std::optional<std::string> raw_prob_path;
  std::optional<std::string> labels_path;  // int32 little-endian, n entries

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

Manifest read_manifest(const std::filesystem::path& manifest_path);
void write_manifest(const Manifest& manifest, const std::filesystem::path& manifest_path);

DatasetMatrices load_dataset(const std::filesystem::path& manifest_path);

// Writes `data` as <stem>.emb.f32, <stem>.probs.f32 (plus optional raw/label
// files) next to `manifest_path`, then writes the manifest itself.
Manifest save_dataset(const DatasetMatrices& data, const std::filesystem::path& manifest_path);

// Raw little-endian payload helpers.
std::vector<float> read_f32le(const std::filesystem::path& path, std::size_t expected_count);
void write_f32le(const std::filesystem::path& path, const std::vector<float>& values);
std::vector<std::int32_t> read_i32le(const std::filesystem::path& path, std::size_t expected_count);
void write_i32le(const std::filesystem::path& path, const std::vector<std::int32_t>& values);

// Everything a selection run resolved, echoed into its output.
struct RunSettings {
  HyperParams params;
  bool normalize = false;
  bool jacobi = false;
  std::string mode = "select";               // "select" or "round"
  std::vector<std::size_t> labeled_pool;     // D_l (round mode)
  std::string prior_source = "class_probs";  // or "raw_label_probs"

  friend bool operator==(const RunSettings&, const RunSettings&) = default;
};

struct ClusterChoice {
  std::size_t cluster = 0;
  std::size_t sample = 0;
  friend bool operator==(const ClusterChoice&, const ClusterChoice&) = default;
};

struct SelectionOutput {
  std::size_t pool_size = 0;  // n of the dataset the indices refer to
  std::vector<std::size_t> selected;
  std::vector<ClusterChoice> per_cluster;
  std::size_t iterations_run = 0;
  bool converged = false;
  std::vector<double> objective_trace;
  RunSettings config;
  std::optional<SelectionReport> metrics;

  friend bool operator==(const SelectionOutput&, const SelectionOutput&) = default;
};

// Throws InvalidBudget (empty), DuplicateIndex, IndexOutOfRange or
// InvalidArgument (size/budget/per-cluster mismatch).
void validate(const SelectionOutput& out);

std::string serialize_selection(const SelectionOutput& out);
SelectionOutput parse_selection(const std::string& text);

std::string serialize_report(const SelectionReport& report);
SelectionReport parse_report(const std::string& text);

void write_selection(const SelectionOutput& out, const std::filesystem::path& path);
SelectionOutput read_selection(const std::filesystem::path& path);

// Whitespace-separated index list (labeled pool files). Empty file -> empty.
std::vector<std::size_t> read_index_list(const std::filesystem::path& path);
// Whitespace-separated reals (reference class frequencies).
std::vector<double> read_real_list(const std::filesystem::path& path);

}  // namespace patron
