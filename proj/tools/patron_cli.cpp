// Command-line driver: select, round, calibrate, propagate, metrics, generate.
//
// Exit codes: 0 success, 2 validation failure, 3 computation failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "patron/dataset_io.hpp"
#include "patron/error.hpp"
#include "patron/parallel.hpp"
#include "patron/pipeline.hpp"
#include "patron/synthgen.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitComputation = 3;

struct Flags {
  std::string manifest;
  std::string out;
  std::optional<std::size_t> budget;
  std::optional<double> rho;
  std::optional<double> beta;
  std::optional<double> gamma;
  std::optional<double> margin;
  std::optional<std::size_t> iterations;
  std::optional<std::size_t> k_support;
  std::optional<std::size_t> knn;
  std::optional<std::size_t> cknn;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  bool normalize = false;
  bool jacobi = false;
  std::string labeled_pool;
  std::string reference_freqs;
  std::string preset;
  std::string uncertainty;
  std::string entropy;
  std::string selection;
  bool geometry_only = false;
};

enum class Need { Calibration, Propagation, Selection };

patron::HyperParams resolve_params(const Flags& f, Need need) {
  patron::HyperParams p;
  if (!f.preset.empty()) {
    auto preset = patron::find_builtin_preset(f.preset);
    if (!preset) preset = patron::load_preset_file(f.preset);
    if (preset->k_support) p.k_support = *preset->k_support;
    if (preset->rho) p.rho = *preset->rho;
    if (preset->beta) p.beta = *preset->beta;
    if (preset->gamma) p.gamma = *preset->gamma;
    if (preset->margin) p.margin = *preset->margin;
  }
  const bool preset_given = !f.preset.empty();
  auto require = [&](bool present, const char* flag) {
    if (!present && !preset_given) {
      throw patron::Error(patron::ErrorCode::InvalidArgument, std::string(flag) + " is required (or pass --preset)");
    }
  };
  if (f.k_support) p.k_support = *f.k_support;
  if (f.rho) p.rho = *f.rho;
  if (f.beta) p.beta = *f.beta;
  if (f.gamma) p.gamma = *f.gamma;
  if (f.margin) p.margin = *f.margin;
  if (f.iterations) p.iterations = *f.iterations;
  if (f.knn) p.knn_size = *f.knn;
  if (f.cknn) p.cknn_size = *f.cknn;
  if (f.budget) p.budget = *f.budget;
  p.seed = f.seed;

  switch (need) {
    case Need::Selection:
      if (!f.budget) throw patron::Error(patron::ErrorCode::InvalidBudget, "--budget is required");
      require(f.beta.has_value(), "--beta");
      require(f.gamma.has_value(), "--gamma");
      [[fallthrough]];
    case Need::Propagation:
      require(f.rho.has_value(), "--rho");
      if (need == Need::Propagation) break;
      [[fallthrough]];
    case Need::Calibration:
      require(f.k_support.has_value(), "--k-support");
      break;
  }
  return p;
}

patron::PipelineOptions pipeline_options(const Flags& f, Need need) {
  patron::PipelineOptions opts;
  opts.params = resolve_params(f, need);
  opts.normalize = f.normalize;
  opts.jacobi = f.jacobi;
  if (!f.reference_freqs.empty()) opts.reference_freqs = patron::read_real_list(f.reference_freqs);
  return opts;
}

patron::DatasetMatrices load(const Flags& f) {
  return patron::run_stage("load", [&] { return patron::load_dataset(f.manifest); });
}

void emit(const std::string& out_path, const auto& writer) {
  patron::run_stage("output", [&] { writer(std::filesystem::path(out_path)); });
}

int cmd_select(const Flags& f, bool round_mode) {
  const auto opts = patron::run_stage("config", [&] {
    auto o = pipeline_options(f, Need::Selection);
    patron::validate(o.params);
    if (round_mode && f.labeled_pool.empty()) {
      throw patron::Error(patron::ErrorCode::InvalidArgument, "round needs --labeled-pool");
    }
    if (round_mode && !f.uncertainty.empty()) {
      throw patron::Error(patron::ErrorCode::InvalidArgument, "--uncertainty is only supported by select");
    }
    return o;
  });
  const auto data = load(f);

  std::vector<std::size_t> labeled;
  if (!f.labeled_pool.empty()) {
    labeled = patron::run_stage("config", [&] {
      auto pool = patron::read_index_list(f.labeled_pool);
      patron::validate_labeled_pool(pool, data.n());
      return pool;
    });
  }
  std::optional<patron::UncertaintyDoc> precomputed;
  if (!f.uncertainty.empty()) precomputed = patron::run_stage("load", [&] { return patron::read_uncertainty_doc(f.uncertainty); });

  const auto out = patron::run_selection(data, opts, labeled, precomputed ? &*precomputed : nullptr, round_mode);
  emit(f.out, [&](const std::filesystem::path& p) { patron::write_selection(out, p); });
  std::cerr << "selected " << out.selected.size() << " samples in " << out.iterations_run << " rewrite round(s)"
            << (out.converged ? " (converged)" : "") << "\n";
  return EXIT_SUCCESS;
}

int cmd_calibrate(const Flags& f) {
  const auto params = patron::run_stage("config", [&] { return resolve_params(f, Need::Calibration); });
  const auto data = load(f);
  const auto stage = patron::run_stage("calibration", [&] { return patron::run_calibration(data, params); });
  emit(f.out, [&](const std::filesystem::path& p) { patron::write_calibration_doc(stage, p); });
  return EXIT_SUCCESS;
}

int cmd_propagate(const Flags& f) {
  const auto params = patron::run_stage("config", [&] {
    auto p = resolve_params(f, Need::Propagation);
    if (f.entropy.empty()) throw patron::Error(patron::ErrorCode::InvalidArgument, "propagate needs --entropy");
    return p;
  });
  const auto data = load(f);
  const auto entropy = patron::run_stage("load", [&] { return patron::read_entropy_doc(f.entropy); });
  if (entropy.entropy.size() != data.n()) {
    throw patron::Error(patron::ErrorCode::SizeMismatch, "entropy length differs from n").with_stage("propagation");
  }
  const patron::MatrixF embeddings = f.normalize ? patron::l2_normalized(data.embeddings) : data.embeddings;
  const auto unc = patron::run_stage("propagation",
                                     [&] { return patron::run_propagation(embeddings, entropy.entropy, params); });
  emit(f.out, [&](const std::filesystem::path& p) { patron::write_uncertainty_doc({unc, entropy.prior_source}, p); });
  return EXIT_SUCCESS;
}

int cmd_metrics(const Flags& f) {
  if (f.selection.empty()) {
    throw patron::Error(patron::ErrorCode::InvalidArgument, "metrics needs --selection").with_stage("config");
  }
  std::optional<std::vector<double>> reference;
  if (!f.reference_freqs.empty()) {
    reference = patron::run_stage("config", [&] { return patron::read_real_list(f.reference_freqs); });
  }
  const auto data = load(f);
  const auto selection = patron::run_stage("load", [&] { return patron::read_selection(f.selection); });
  if (selection.pool_size != data.n()) {
    throw patron::Error(patron::ErrorCode::SizeMismatch, "selection was made on a pool of a different size")
        .with_stage("metrics");
  }
  const auto report = patron::run_stage("metrics", [&] {
    return patron::compute_report(data, selection.selected, selection.config.labeled_pool, selection.config.normalize,
                                  reference, f.geometry_only);
  });
  if (f.out.empty()) {
    std::cout << patron::serialize_report(report);
  } else {
    emit(f.out, [&](const std::filesystem::path& p) { patron::write_report_doc(report, p); });
  }
  return EXIT_SUCCESS;
}

int cmd_generate(const patron::SynthSpec& spec, const std::string& out) {
  const auto data = patron::run_stage("generate", [&] { return patron::generate(spec); });
  emit(out, [&](const std::filesystem::path& p) { patron::save_dataset(data, p); });
  return EXIT_SUCCESS;
}

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--manifest", f.manifest, "Dataset manifest")->required();
  cmd->add_option("--threads", f.threads, "Worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
  cmd->add_option("--preset", f.preset, "Built-in preset (imdb, yelp-full, agnews, yahoo, dbpedia, trec) or JSON file");
  cmd->add_option("--k-support", f.k_support, "Support-set size per class");
  cmd->add_option("--seed", f.seed, "Random seed");
}

void add_selection(CLI::App* cmd, Flags& f) {
  add_common(cmd, f);
  cmd->add_option("--out", f.out, "Selection output file")->required();
  cmd->add_option("--budget", f.budget, "Number of samples to select (= number of clusters)");
  cmd->add_option("--rho", f.rho, "RBF kernel width");
  cmd->add_option("--beta", f.beta, "Distance-to-centroid weight");
  cmd->add_option("--gamma", f.gamma, "Margin penalty weight");
  cmd->add_option("--margin", f.margin, "Squared-distance margin (default 0.5)");
  cmd->add_option("--iterations", f.iterations, "Rewrite rounds (default 2)");
  cmd->add_option("--knn", f.knn, "Neighbors for uncertainty propagation (default 50)");
  cmd->add_option("--cknn", f.cknn, "Neighbors among selections (default 10)");
  cmd->add_flag("--normalize", f.normalize, "L2-normalize embeddings first");
  cmd->add_flag("--jacobi", f.jacobi, "Simultaneous rewrite sweeps instead of sequential ones");
  cmd->add_option("--labeled-pool", f.labeled_pool, "File of already-labeled sample indices");
  cmd->add_option("--reference-freqs", f.reference_freqs, "Reference class frequencies for LDD");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cold-start data selection over precomputed embeddings and prompt probabilities"};
  app.require_subcommand(1);
  Flags f;

  auto* select = app.add_subcommand("select", "Run the full selection pipeline");
  add_selection(select, f);
  select->add_option("--uncertainty", f.uncertainty, "Propagated uncertainty from the propagate subcommand");

  auto* round = app.add_subcommand("round", "Multi-round selection that avoids an existing labeled pool");
  add_selection(round, f);

  auto* calibrate = app.add_subcommand("calibrate", "Compute the calibrated entropy of every sample");
  add_common(calibrate, f);
  calibrate->add_option("--out", f.out, "Calibration output file")->required();

  auto* propagate = app.add_subcommand("propagate", "Propagate calibrated entropy over the kNN graph");
  add_common(propagate, f);
  propagate->add_option("--out", f.out, "Uncertainty output file")->required();
  propagate->add_option("--entropy", f.entropy, "Output of the calibrate subcommand")->required();
  propagate->add_option("--rho", f.rho, "RBF kernel width");
  propagate->add_option("--knn", f.knn, "Neighbors for uncertainty propagation (default 50)");
  propagate->add_flag("--normalize", f.normalize, "L2-normalize embeddings first");

  auto* metrics = app.add_subcommand("metrics", "Selection-quality report for an existing selection");
  metrics->add_option("--manifest", f.manifest, "Dataset manifest")->required();
  metrics->add_option("--selection", f.selection, "Selection file")->required();
  metrics->add_option("--out", f.out, "Report file (stdout when omitted)");
  metrics->add_option("--reference-freqs", f.reference_freqs, "Reference class frequencies for LDD");
  metrics->add_option("--threads", f.threads, "Worker threads")->check(CLI::PositiveNumber);
  metrics->add_flag("--geometry-only", f.geometry_only, "Skip IMB/LDD (no gold labels needed)");

  patron::SynthSpec spec;
  std::string synth_out;
  auto* generate = app.add_subcommand("generate", "Write a synthetic Gaussian-mixture dataset");
  generate->add_option("--out", synth_out, "Manifest path to create")->required();
  generate->add_option("--n", spec.n, "Samples");
  generate->add_option("--d", spec.d, "Embedding dimension");
  generate->add_option("--c", spec.c, "Classes");
  generate->add_option("--separation", spec.cluster_separation, "Expected distance between class centers");
  generate->add_option("--blob-scale", spec.blob_scale, "Per-coordinate spread inside a class");
  generate->add_option("--label-noise", spec.label_noise, "Fraction of rows with uniformly resampled probabilities");
  generate->add_option("--seed", spec.seed, "Random seed");
  generate->add_flag("--raw-probs", spec.with_raw_probs, "Also write raw label-word probabilities");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    patron::set_thread_count(f.threads);
    if (*select) return cmd_select(f, false);
    if (*round) return cmd_select(f, true);
    if (*calibrate) return cmd_calibrate(f);
    if (*propagate) return cmd_propagate(f);
    if (*metrics) return cmd_metrics(f);
    if (*generate) return cmd_generate(spec, synth_out);
  } catch (const patron::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return patron::is_validation_error(e.code()) ? kExitValidation : kExitComputation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitComputation;
  }
  return kExitValidation;
}
