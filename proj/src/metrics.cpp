#include "patron/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "patron/error.hpp"
#include "patron/knn.hpp"
#include "patron/parallel.hpp"

namespace patron {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::size_t> class_counts(std::span<const std::int32_t> labels, std::size_t num_classes) {
  std::vector<std::size_t> counts(num_classes, 0);
  for (auto y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(y) + " outside [0, " +
                                                  std::to_string(num_classes) + ")");
    }
    ++counts[static_cast<std::size_t>(y)];
  }
  return counts;
}

double norm(std::span<const float> v) {
  double s = 0.0;
  for (float x : v) s += static_cast<double>(x) * x;
  return std::sqrt(s);
}

double dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += static_cast<double>(a[j]) * b[j];
  return s;
}

}  // namespace

std::vector<double> label_frequencies(std::span<const std::int32_t> labels, std::size_t num_classes) {
  const auto counts = class_counts(labels, num_classes);
  std::vector<double> freqs(num_classes, 0.0);
  if (labels.empty()) return freqs;
  for (std::size_t i = 0; i < num_classes; ++i) freqs[i] = static_cast<double>(counts[i]) / static_cast<double>(labels.size());
  return freqs;
}

double imbalance(std::span<const std::int32_t> selected_labels, std::size_t num_classes) {
  if (num_classes == 0) throw Error(ErrorCode::InvalidArgument, "imbalance needs at least one class");
  const auto counts = class_counts(selected_labels, num_classes);
  const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
  if (*lo == 0) return kInf;
  return static_cast<double>(*hi) / static_cast<double>(*lo);
}

double label_divergence(std::span<const std::int32_t> selected_labels, std::span<const double> reference_freqs) {
  if (selected_labels.empty()) throw Error(ErrorCode::InvalidArgument, "label divergence of an empty selection");
  double ref_sum = 0.0;
  for (double p : reference_freqs) {
    if (!(p >= 0.0)) throw Error(ErrorCode::InvalidArgument, "reference frequencies must be nonnegative");
    ref_sum += p;
  }
  if (std::abs(ref_sum - 1.0) > 1e-6) throw Error(ErrorCode::InvalidArgument, "reference frequencies must sum to 1");

  const auto q = label_frequencies(selected_labels, reference_freqs.size());
  double kl = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] == 0.0) continue;
    if (reference_freqs[i] == 0.0) return kInf;
    kl += q[i] * std::log(q[i] / reference_freqs[i]);
  }
  return std::max(kl, 0.0);
}

double diversity(std::span<const std::size_t> selected, const MatrixF& embeddings) {
  if (selected.empty()) throw Error(ErrorCode::InvalidArgument, "diversity of an empty selection");
  const std::size_t n = embeddings.rows();
  for (auto s : selected) {
    if (s >= n) throw Error(ErrorCode::IndexOutOfRange, "selected index " + std::to_string(s) + " outside the pool");
  }
  std::vector<double> nearest(n);
  parallel_for(n, 1024, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      double best = kInf;
      for (auto s : selected) best = std::min(best, squared_distance(embeddings.row(i), embeddings.row(s)));
      nearest[i] = std::sqrt(best);
    }
  });
  double total = 0.0;
  for (double v : nearest) total += v;
  const double mean = total / static_cast<double>(n);
  return mean > 0.0 ? 1.0 / mean : kInf;
}

std::vector<double> representativeness(std::span<const std::size_t> selected, const MatrixF& embeddings,
                                       std::size_t k) {
  const std::size_t n = embeddings.rows();
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "representativeness needs k >= 1");
  if (n <= k) {
    throw Error(ErrorCode::InvalidArgument, "pool of " + std::to_string(n) + " samples is too small for k = " +
                                                std::to_string(k));
  }
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) norms[i] = norm(embeddings.row(i));
  for (std::size_t i = 0; i < n; ++i) {
    if (norms[i] == 0.0) throw Error(ErrorCode::ZeroVector, "embedding row " + std::to_string(i) + " has zero norm");
  }

  std::vector<double> out(selected.size());
  parallel_for(selected.size(), 1, [&](std::size_t begin, std::size_t end) {
    std::vector<std::pair<double, std::size_t>> sims;  // (-cosine, index)
    for (std::size_t s = begin; s < end; ++s) {
      const std::size_t x = selected[s];
      sims.clear();
      for (std::size_t i = 0; i < n; ++i) {
        if (i == x) continue;
        const double cosine = dot(embeddings.row(x), embeddings.row(i)) / (norms[x] * norms[i]);
        sims.emplace_back(-cosine, i);
      }
      std::partial_sort(sims.begin(), sims.begin() + static_cast<std::ptrdiff_t>(k), sims.end());
      double total = 0.0;
      for (std::size_t t = 0; t < k; ++t) total += -sims[t].first;
      out[s] = std::clamp(total / static_cast<double>(k), -1.0, 1.0);
    }
  });
  return out;
}

}  // namespace patron
