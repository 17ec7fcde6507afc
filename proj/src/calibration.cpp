#include "patron/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "patron/error.hpp"
#include "patron/parallel.hpp"

namespace patron {

std::string to_string(PriorSource source) {
  return source == PriorSource::RawLabelProbs ? "raw_label_probs" : "class_probs";
}

SupportSet build_support_set(const DatasetMatrices& data, std::size_t k_support) {
  if (k_support < 1) throw Error(ErrorCode::InvalidArgument, "k_support must be at least 1");
  const std::size_t n = data.n(), c = data.c();
  const std::size_t k = std::min(k_support, n);

  SupportSet support;
  support.per_class.resize(c);
  std::vector<std::size_t> order(n);
  for (std::size_t cls = 0; cls < c; ++cls) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto higher = [&](std::size_t a, std::size_t b) {
      const float pa = data.class_probs(a, cls), pb = data.class_probs(b, cls);
      return pa != pb ? pa > pb : a < b;
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), higher);
    support.per_class[cls].assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  }

  std::vector<bool> seen(n, false);
  for (const auto& rows : support.per_class) {
    for (auto r : rows) {
      if (!seen[r]) {
        seen[r] = true;
        support.union_indices.push_back(r);
      }
    }
  }
  return support;
}

PriorVector contextual_prior(const DatasetMatrices& data, const SupportSet& support) {
  if (support.union_indices.empty()) throw Error(ErrorCode::InvalidArgument, "support set is empty");
  const MatrixF& source = data.raw_label_probs ? *data.raw_label_probs : data.class_probs;

  PriorVector out;
  out.source = data.raw_label_probs ? PriorSource::RawLabelProbs : PriorSource::ClassProbs;
  out.prior.assign(data.c(), 0.0);
  for (auto r : support.union_indices) {
    auto row = source.row(r);
    for (std::size_t v = 0; v < row.size(); ++v) out.prior[v] += row[v];
  }
  const double count = static_cast<double>(support.union_indices.size());
  for (double& p : out.prior) p = std::max(p / count, kPriorFloor);
  return out;
}

CalibratedLabels calibrate(const DatasetMatrices& data, const PriorVector& prior) {
  const std::size_t n = data.n(), c = data.c();
  if (prior.prior.size() != c) throw Error(ErrorCode::InvalidArgument, "prior length differs from class count");
  for (double p : prior.prior) {
    if (!(p > 0.0)) throw Error(ErrorCode::InvalidArgument, "prior entries must be positive");
  }

  CalibratedLabels out{MatrixD(n, c)};
  parallel_for(n, 4096, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto p = data.class_probs.row(i);
      auto y = out.probs.row(i);
      double total = 0.0;
      for (std::size_t j = 0; j < c; ++j) {
        y[j] = static_cast<double>(p[j]) / prior.prior[j];
        total += y[j];
      }
      if (!(total > 0.0) || !std::isfinite(total)) {
        throw Error(ErrorCode::DegenerateRow, "calibration normalizer of row " + std::to_string(i) + " is not positive");
      }
      for (double& v : y) v /= total;
    }
  });
  return out;
}

std::vector<double> entropy(const CalibratedLabels& labels) {
  const std::size_t n = labels.probs.rows();
  const double upper = std::log(static_cast<double>(labels.probs.cols()));
  std::vector<double> u(n, 0.0);
  parallel_for(n, 4096, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      double h = 0.0;
      for (double y : labels.probs.row(i)) {
        if (y > 0.0) h -= y * std::log(y);
      }
      // rounding can push a near-uniform row a few ulps past ln c
      u[i] = std::clamp(h, 0.0, upper);
    }
  });
  return u;
}

}  // namespace patron
