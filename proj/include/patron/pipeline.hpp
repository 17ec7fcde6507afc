#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "patron/calibration.hpp"
#include "patron/dataset_io.hpp"
#include "patron/error.hpp"
#include "patron/metrics.hpp"
#include "patron/params.hpp"
#include "patron/propagation.hpp"

namespace patron {

struct PipelineOptions {
  HyperParams params;
  bool normalize = false;  // L2-normalize embeddings before any distance computation
  bool jacobi = false;     // simultaneous instead of sequential rewrite sweeps
  std::optional<std::vector<double>> reference_freqs;  // LDD reference; pool label frequencies otherwise
};

// Runs `fn` and tags any patron::Error escaping it with `stage`.
template <class Fn>
auto run_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    if (!e.stage().empty()) throw;
    throw e.with_stage(stage);
  }
}

// Uncertainty computed by an earlier stage, with the prior source it used.
struct UncertaintyDoc {
  UncertaintyVectors vectors;
  std::string prior_source;
};

struct EntropyDoc {
  std::vector<double> entropy;
  std::string prior_source;
};

struct CalibrationStage {
  SupportSet support;
  PriorVector prior;
  std::vector<double> entropy;
};

// Support set, contextual prior, calibration and entropy.
CalibrationStage run_calibration(const DatasetMatrices& data, const HyperParams& params);

// kNN graph plus propagation; a single-sample pool propagates nothing.
UncertaintyVectors run_propagation(const MatrixF& embeddings, std::span<const double> raw_u, const HyperParams& params);

// Throws LabeledPoolInvalid for duplicates or indices outside [0, n).
void validate_labeled_pool(std::span<const std::size_t> labeled_pool, std::size_t n);

// Full selection. With an empty labeled pool this is the single-round
// procedure; otherwise selection runs over the samples outside D_l and the
// cross-cluster neighbor pool also contains D_l. `precomputed` replaces the
// calibration and propagation stages (single-round only, length n).
SelectionOutput run_selection(const DatasetMatrices& data, const PipelineOptions& options,
                              std::span<const std::size_t> labeled_pool = {},
                              const UncertaintyDoc* precomputed = nullptr, bool round_mode = false);

// IMB/LDD need gold labels (MissingLabels otherwise) unless `geometry_only`.
// Geometry metrics run over the samples outside `labeled_pool`, on the
// embedding selected by `normalize`.
SelectionReport compute_report(const DatasetMatrices& data, std::span<const std::size_t> selected,
                               std::span<const std::size_t> labeled_pool, bool normalize,
                               const std::optional<std::vector<double>>& reference_freqs, bool geometry_only = false);

// Stage documents exchanged by the calibrate/propagate/select subcommands.
void write_calibration_doc(const CalibrationStage& stage, const std::filesystem::path& path);
EntropyDoc read_entropy_doc(const std::filesystem::path& path);
void write_uncertainty_doc(const UncertaintyDoc& doc, const std::filesystem::path& path);
UncertaintyDoc read_uncertainty_doc(const std::filesystem::path& path);
void write_report_doc(const SelectionReport& report, const std::filesystem::path& path);

}  // namespace patron
