#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "patron/dataset_io.hpp"
#include "patron/matrix.hpp"

namespace patron {

// Floor applied to prior entries so the calibration never divides by zero.
inline constexpr double kPriorFloor = 1e-12;

struct SupportSet {
  std::vector<std::vector<std::size_t>> per_class;  // top-k rows per class
  std::vector<std::size_t> union_indices;           // first-seen order, no duplicates
};

enum class PriorSource { ClassProbs, RawLabelProbs };

std::string to_string(PriorSource source);

struct PriorVector {
  std::vector<double> prior;
  PriorSource source = PriorSource::ClassProbs;
};

// Calibrated pseudo-label distributions (n x c, rows sum to 1).
struct CalibratedLabels {
  MatrixD probs;
};

// For every class, the min(k, n) rows with the highest probability for that
// class; ties go to the smaller row index.
SupportSet build_support_set(const DatasetMatrices& data, std::size_t k_support);

// Mean label-word probability over the support set. Uses raw_label_probs when
// the dataset carries them, class_probs otherwise.
PriorVector contextual_prior(const DatasetMatrices& data, const SupportSet& support);

// y_i = (p_i / P_i) / sum_j (p_j / P_j). Throws DegenerateRow when a row's
// normalizer is zero or not finite.
CalibratedLabels calibrate(const DatasetMatrices& data, const PriorVector& prior);

// Shannon entropy (natural log) of every calibrated row, 0 ln 0 = 0.
std::vector<double> entropy(const CalibratedLabels& labels);

}  // namespace patron
