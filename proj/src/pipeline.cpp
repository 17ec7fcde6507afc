#include "patron/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

#include "json.hpp"
#include "patron/error.hpp"
#include "patron/partition.hpp"
#include "patron/rewrite.hpp"

namespace patron {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Rows of the selectable pool: everything outside D_l, ascending.
std::vector<std::size_t> unlabeled_rows(std::size_t n, std::span<const std::size_t> labeled_pool) {
  std::vector<bool> labeled(n, false);
  for (auto idx : labeled_pool) labeled[idx] = true;
  std::vector<std::size_t> rows;
  rows.reserve(n - labeled_pool.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (!labeled[i]) rows.push_back(i);
  }
  return rows;
}

DatasetMatrices subset(const DatasetMatrices& data, std::span<const std::size_t> rows) {
  DatasetMatrices out;
  out.embeddings = gather_rows(data.embeddings, rows);
  out.class_probs = gather_rows(data.class_probs, rows);
  if (data.raw_label_probs) out.raw_label_probs = gather_rows(*data.raw_label_probs, rows);
  if (data.gold_labels) {
    std::vector<std::int32_t> labels;
    labels.reserve(rows.size());
    for (auto r : rows) labels.push_back((*data.gold_labels)[r]);
    out.gold_labels = std::move(labels);
  }
  return out;
}

json read_json(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::MissingFile, "file not found: " + path.string());
  std::ifstream in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, path.string() + " is not valid JSON: " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error(ErrorCode::IoFailure, "failed to write " + path.string());
}

}  // namespace

CalibrationStage run_calibration(const DatasetMatrices& data, const HyperParams& params) {
  CalibrationStage stage;
  stage.support = build_support_set(data, params.k_support);
  stage.prior = contextual_prior(data, stage.support);
  stage.entropy = entropy(calibrate(data, stage.prior));
  return stage;
}

UncertaintyVectors run_propagation(const MatrixF& embeddings, std::span<const double> raw_u, const HyperParams& params) {
  if (embeddings.rows() < 2) {
    return UncertaintyVectors{{raw_u.begin(), raw_u.end()}, {raw_u.begin(), raw_u.end()}};
  }
  return propagate(raw_u, knn_graph(embeddings, params.knn_size), params.rho);
}

void validate_labeled_pool(std::span<const std::size_t> labeled_pool, std::size_t n) {
  std::vector<bool> seen(n, false);
  for (auto idx : labeled_pool) {
    if (idx >= n) {
      throw Error(ErrorCode::LabeledPoolInvalid, "labeled index " + std::to_string(idx) + " outside [0, " +
                                                     std::to_string(n) + ")");
    }
    if (seen[idx]) throw Error(ErrorCode::LabeledPoolInvalid, "labeled index " + std::to_string(idx) + " listed twice");
    seen[idx] = true;
  }
}

SelectionReport compute_report(const DatasetMatrices& data, std::span<const std::size_t> selected,
                               std::span<const std::size_t> labeled_pool, bool normalize,
                               const std::optional<std::vector<double>>& reference_freqs, bool geometry_only) {
  SelectionReport report;
  report.embedding = normalize ? "normalized" : "raw";

  const auto rows = unlabeled_rows(data.n(), labeled_pool);
  std::vector<std::size_t> local_of(data.n(), data.n());
  for (std::size_t r = 0; r < rows.size(); ++r) local_of[rows[r]] = r;
  std::vector<std::size_t> local;
  for (auto s : selected) {
    if (s >= data.n() || local_of[s] == data.n()) {
      throw Error(ErrorCode::IndexOutOfRange, "selected index " + std::to_string(s) + " is not in the unlabeled pool");
    }
    local.push_back(local_of[s]);
  }

  if (!geometry_only) {
    if (!data.gold_labels) throw Error(ErrorCode::MissingLabels, "IMB/LDD need gold labels in the manifest");
    std::vector<std::int32_t> chosen;
    for (auto s : selected) chosen.push_back((*data.gold_labels)[s]);
    std::vector<double> reference;
    if (reference_freqs) {
      if (reference_freqs->size() != data.c()) {
        throw Error(ErrorCode::InvalidArgument, "reference frequencies need one entry per class");
      }
      reference = *reference_freqs;
    } else {
      std::vector<std::int32_t> pool_labels;
      for (auto r : rows) pool_labels.push_back((*data.gold_labels)[r]);
      reference = label_frequencies(pool_labels, data.c());
    }
    report.imb = imbalance(chosen, data.c());
    report.ldd = label_divergence(chosen, reference);
  }

  MatrixF pool = gather_rows(data.embeddings, rows);
  if (normalize) pool = l2_normalized(pool);
  report.diversity = diversity(local, pool);
  if (pool.rows() > 10) {
    report.representativeness = representativeness(local, pool, 10);
    double total = 0.0;
    for (double v : report.representativeness) total += v;
    report.representativeness_mean = total / static_cast<double>(report.representativeness.size());
  }
  return report;
}

SelectionOutput run_selection(const DatasetMatrices& data, const PipelineOptions& options,
                              std::span<const std::size_t> labeled_pool, const UncertaintyDoc* precomputed,
                              bool round_mode) {
  const HyperParams& params = options.params;
  run_stage("config", [&] {
    validate(params);
    validate_labeled_pool(labeled_pool, data.n());
    if (precomputed && !labeled_pool.empty()) {
      throw Error(ErrorCode::InvalidArgument, "precomputed uncertainty cannot be combined with a labeled pool");
    }
    if (precomputed && (precomputed->vectors.raw.size() != data.n() || precomputed->vectors.propagated.size() != data.n())) {
      throw Error(ErrorCode::SizeMismatch, "precomputed uncertainty length differs from n");
    }
  });

  const auto rows = unlabeled_rows(data.n(), labeled_pool);
  run_stage("partition", [&] { validate(params, rows.size()); });

  const bool whole_pool = labeled_pool.empty();
  const DatasetMatrices pool_storage = whole_pool ? DatasetMatrices{} : subset(data, rows);
  const DatasetMatrices& pool = whole_pool ? data : pool_storage;

  MatrixF embeddings = options.normalize ? l2_normalized(data.embeddings) : data.embeddings;
  MatrixF pool_embeddings_storage = whole_pool ? MatrixF{} : gather_rows(embeddings, rows);
  const MatrixF& pool_embeddings = whole_pool ? embeddings : pool_embeddings_storage;

  RunSettings settings;
  settings.params = params;
  settings.normalize = options.normalize;
  settings.jacobi = options.jacobi;
  settings.mode = round_mode ? "round" : "select";
  settings.labeled_pool.assign(labeled_pool.begin(), labeled_pool.end());

  UncertaintyVectors unc;
  if (precomputed) {
    unc = precomputed->vectors;
    settings.prior_source = precomputed->prior_source;
  } else {
    const CalibrationStage cal = run_stage("calibration", [&] { return run_calibration(pool, params); });
    settings.prior_source = to_string(cal.prior.source);
    UncertaintyVectors local = run_stage("propagation", [&] { return run_propagation(pool_embeddings, cal.entropy, params); });
    if (whole_pool) {
      unc = std::move(local);
    } else {
      unc.raw.assign(data.n(), 0.0);
      unc.propagated.assign(data.n(), 0.0);
      for (std::size_t r = 0; r < rows.size(); ++r) {
        unc.raw[rows[r]] = local.raw[r];
        unc.propagated[rows[r]] = local.propagated[r];
      }
    }
  }

  const Partition part = run_stage("partition", [&] {
    Partition local = kmeans(pool_embeddings, params.budget, params.seed);
    return whole_pool ? local : remap_partition(local, rows, data.n());
  });

  const SelectionState state = run_stage("rewrite", [&] {
    return run_ptr(part, unc, params, embeddings, labeled_pool,
                   options.jacobi ? SweepMode::Jacobi : SweepMode::GaussSeidel);
  });

  SelectionOutput out;
  out.pool_size = data.n();
  out.selected = state.selected;
  for (std::size_t c = 0; c < state.selected.size(); ++c) out.per_cluster.push_back({c, state.selected[c]});
  out.iterations_run = state.iterations_run;
  out.converged = state.converged;
  out.objective_trace = state.objective_trace;
  out.config = std::move(settings);

  if (data.gold_labels) {
    out.metrics = run_stage("metrics", [&] {
      return compute_report(data, out.selected, labeled_pool, options.normalize, options.reference_freqs);
    });
  }
  return out;
}

void write_calibration_doc(const CalibrationStage& stage, const fs::path& path) {
  json j;
  j["prior_source"] = to_string(stage.prior.source);
  j["prior"] = stage.prior.prior;
  j["support"] = stage.support.union_indices;
  j["entropy"] = stage.entropy;
  write_text(path, j.dump(2) + "\n");
}

EntropyDoc read_entropy_doc(const fs::path& path) {
  const json j = read_json(path);
  try {
    return {j.at("entropy").get<std::vector<double>>(), j.at("prior_source").get<std::string>()};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, path.string() + ": " + e.what());
  }
}

void write_uncertainty_doc(const UncertaintyDoc& doc, const fs::path& path) {
  json j;
  j["prior_source"] = doc.prior_source;
  j["raw"] = doc.vectors.raw;
  j["propagated"] = doc.vectors.propagated;
  write_text(path, j.dump(2) + "\n");
}

UncertaintyDoc read_uncertainty_doc(const fs::path& path) {
  const json j = read_json(path);
  try {
    return {{j.at("raw").get<std::vector<double>>(), j.at("propagated").get<std::vector<double>>()},
            j.at("prior_source").get<std::string>()};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, path.string() + ": " + e.what());
  }
}

void write_report_doc(const SelectionReport& report, const fs::path& path) { write_text(path, serialize_report(report)); }

}  // namespace patron
