#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "patron/matrix.hpp"

namespace patron {

// Selection-quality diagnostics. Infinite values are legal for imb, ldd and
// diversity and are serialized as the string "inf".
struct SelectionReport {
  std::optional<double> imb;
  std::optional<double> ldd;
  double diversity = 0.0;
  std::vector<double> representativeness;
  double representativeness_mean = 0.0;
  std::string embedding = "raw";  // which embedding matrix the geometry metrics used

  friend bool operator==(const SelectionReport&, const SelectionReport&) = default;
};

// max class count / min class count; +inf when a class was never selected.
double imbalance(std::span<const std::int32_t> selected_labels, std::size_t num_classes);

// KL(q || p) with q the selected-label frequencies, natural log.
double label_divergence(std::span<const std::int32_t> selected_labels,
                        std::span<const double> reference_freqs);

// Inverse mean Euclidean distance from every pool row to its nearest selected
// row. +inf when the selection covers every pool point exactly.
double diversity(std::span<const std::size_t> selected, const MatrixF& embeddings);

// Mean cosine similarity between each selected row and its `k` most
// cosine-similar pool rows (itself excluded).
std::vector<double> representativeness(std::span<const std::size_t> selected,
                                       const MatrixF& embeddings, std::size_t k = 10);

// Class frequencies of a label vector over `num_classes` classes.
std::vector<double> label_frequencies(std::span<const std::int32_t> labels, std::size_t num_classes);

}  // namespace patron
