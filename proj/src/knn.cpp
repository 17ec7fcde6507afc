#include "patron/knn.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <utility>

#include "patron/error.hpp"
#include "patron/parallel.hpp"

namespace patron {

namespace {

using Candidate = std::pair<double, std::size_t>;  // (distance, reference index)

std::atomic<std::size_t> g_certified{0};
std::atomic<std::size_t> g_fallback{0};

template <class RefT>
double squared_distance_impl(std::span<const float> a, std::span<const RefT> b) noexcept {
  constexpr std::size_t kLanes = 8;
  double acc[kLanes] = {};
  const std::size_t d = a.size();
  std::size_t j = 0;
  for (; j + kLanes <= d; j += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) {
      const double t = static_cast<double>(a[j + l]) - static_cast<double>(b[j + l]);
      acc[l] += t * t;
    }
  }
  for (std::size_t l = 0; j < d; ++j, ++l) {
    const double t = static_cast<double>(a[j]) - static_cast<double>(b[j]);
    acc[l] += t * t;
  }
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

// Bounded max-heap keeping the `capacity` smallest (distance, index) pairs.
class TopK {
 public:
  explicit TopK(std::size_t capacity) : capacity_(capacity) { items_.reserve(capacity); }

  void clear() { items_.clear(); }
  std::size_t size() const { return items_.size(); }
  const Candidate& worst() const { return items_.front(); }

  void offer(double dist, std::size_t idx) {
    if (items_.size() < capacity_) {
      items_.emplace_back(dist, idx);
      std::push_heap(items_.begin(), items_.end());
    } else if (Candidate{dist, idx} < items_.front()) {
      std::pop_heap(items_.begin(), items_.end());
      items_.back() = {dist, idx};
      std::push_heap(items_.begin(), items_.end());
    }
  }

  // Only valid while full: cheap rejection test for the hot loop.
  bool rejects(double dist) const { return items_.size() == capacity_ && dist > items_.front().first; }

  std::vector<Candidate>& items() { return items_; }

 private:
  std::size_t capacity_;
  std::vector<Candidate> items_;
};

template <class RefT>
void scan_row_direct(const MatrixF& queries, const Matrix<RefT>& refs, std::size_t i, bool exclude_self,
                     TopK& heap, std::size_t* out_index, double* out_dist, std::size_t k) {
  heap.clear();
  const auto q = queries.row(i);
  for (std::size_t j = 0; j < refs.rows(); ++j) {
    if (exclude_self && j == i) continue;
    const double e = squared_distance_impl(q, refs.row(j));
    if (!heap.rejects(e)) heap.offer(e, j);
  }
  auto& items = heap.items();
  std::sort(items.begin(), items.end());
  for (std::size_t t = 0; t < k; ++t) {
    out_index[t] = items[t].second;
    out_dist[t] = items[t].first;
  }
}

template <class RefT>
void knn_direct(const MatrixF& queries, const Matrix<RefT>& refs, bool exclude_self, NeighborTable& out) {
  const std::size_t k = out.k;
  parallel_for(queries.rows(), 64, [&](std::size_t begin, std::size_t end) {
    TopK heap(k);
    for (std::size_t i = begin; i < end; ++i) {
      scan_row_direct(queries, refs, i, exclude_self, heap, out.index.data() + i * k, out.sq_dist.data() + i * k, k);
    }
  });
}

using RowMajorF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Centers rows on `mean` in double, then rounds to float for the GEMM screen.
template <class T>
RowMajorF centered_float(const Matrix<T>& m, const std::vector<double>& mean) {
  RowMajorF out(static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          static_cast<float>(static_cast<double>(r[j]) - mean[j]);
    }
  }
  return out;
}

std::vector<double> squared_norms(const RowMajorF& m) {
  std::vector<double> norms(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      s += v * v;
    }
    norms[static_cast<std::size_t>(i)] = s;
  }
  return norms;
}

// Shortlists candidates with ||x||^2 + ||y||^2 - 2 x.y on centered float data,
// re-ranks them with squared_distance and accepts the row only when the
// shortlist provably contains the exact top-k. Otherwise the row is rescanned
// directly. The screen's absolute error is bounded by
//   |approx - exact| <= c_d * (||x_c|| + ||y_c||)^2,
// which covers float rounding of the centered inputs, the float dot product
// (gamma_d) and the double re-ranking.
template <class RefT>
void knn_screened(const MatrixF& queries, const Matrix<RefT>& refs, bool exclude_self, NeighborTable& out) {
  const std::size_t nq = queries.rows(), nr = refs.rows(), d = refs.cols(), k = out.k;
  const std::size_t shortlist = std::min(nr - (exclude_self ? 1 : 0), 2 * k + 8);

  std::vector<double> mean(d, 0.0);
  for (std::size_t j = 0; j < nr; ++j) {
    auto r = refs.row(j);
    for (std::size_t t = 0; t < d; ++t) mean[t] += static_cast<double>(r[t]);
  }
  for (double& m : mean) m /= static_cast<double>(nr);

  const RowMajorF ref_f = centered_float(refs, mean);
  RowMajorF query_storage;
  if (!exclude_self) query_storage = centered_float(queries, mean);
  const RowMajorF& query_f = exclude_self ? ref_f : query_storage;

  const std::vector<double> ref_norm2 = squared_norms(ref_f);
  const std::vector<double> query_norm2 = exclude_self ? ref_norm2 : squared_norms(query_f);
  double ref_radius = 0.0;
  for (double v : ref_norm2) ref_radius = std::max(ref_radius, std::sqrt(v));

  const double dd = static_cast<double>(d) + 8.0;
  const double bound_coeff = 2.1 * dd * std::ldexp(1.0, -24) + 4.0 * dd * std::ldexp(1.0, -53);

  constexpr std::size_t kQueryBlock = 256;
  constexpr std::size_t kRefBlock = 2048;
  std::atomic<std::size_t> certified{0}, fallback{0};

  parallel_for(nq, kQueryBlock, [&](std::size_t q0, std::size_t q1) {
    const auto qn = static_cast<Eigen::Index>(q1 - q0);
    std::vector<TopK> heaps(q1 - q0, TopK(shortlist));
    RowMajorF tile;
    for (std::size_t r0 = 0; r0 < nr; r0 += kRefBlock) {
      const std::size_t r1 = std::min(nr, r0 + kRefBlock);
      const auto rn = static_cast<Eigen::Index>(r1 - r0);
      tile.noalias() = query_f.middleRows(static_cast<Eigen::Index>(q0), qn) *
                       ref_f.middleRows(static_cast<Eigen::Index>(r0), rn).transpose();
      for (std::size_t i = q0; i < q1; ++i) {
        TopK& heap = heaps[i - q0];
        const double qi = query_norm2[i];
        const float* trow = tile.data() + (i - q0) * static_cast<std::size_t>(rn);
        for (std::size_t j = r0; j < r1; ++j) {
          const double approx = qi + ref_norm2[j] - 2.0 * static_cast<double>(trow[j - r0]);
          if (heap.rejects(approx)) continue;
          if (exclude_self && j == i) continue;
          heap.offer(approx, j);
        }
      }
    }

    TopK row_heap(k);
    std::vector<Candidate> exact;
    for (std::size_t i = q0; i < q1; ++i) {
      auto& items = heaps[i - q0].items();
      const double worst_approx = heaps[i - q0].worst().first;
      const auto q = queries.row(i);
      exact.clear();
      for (const auto& [approx, j] : items) exact.emplace_back(squared_distance_impl(q, refs.row(j)), j);
      std::sort(exact.begin(), exact.end());

      std::size_t* idx_out = out.index.data() + i * k;
      double* dist_out = out.sq_dist.data() + i * k;
      const double radius = std::sqrt(query_norm2[i]) + ref_radius;
      const double bound = bound_coeff * radius * radius;
      const bool complete = items.size() + (exclude_self ? 1 : 0) == nr;
      if (complete || worst_approx - bound > exact[k - 1].first) {
        for (std::size_t t = 0; t < k; ++t) {
          idx_out[t] = exact[t].second;
          dist_out[t] = exact[t].first;
        }
        certified.fetch_add(1, std::memory_order_relaxed);
      } else {
        scan_row_direct(queries, refs, i, exclude_self, row_heap, idx_out, dist_out, k);
        fallback.fetch_add(1, std::memory_order_relaxed);
      }
    }
  });
  g_certified.store(certified.load());
  g_fallback.store(fallback.load());
}

template <class RefT>
NeighborTable exact_knn_impl(const MatrixF& queries, const Matrix<RefT>& refs, std::size_t k, bool exclude_self,
                             KnnStrategy strategy) {
  if (queries.cols() != refs.cols()) throw Error(ErrorCode::InvalidArgument, "query/reference dimension mismatch");
  if (exclude_self && queries.rows() != refs.rows()) {
    throw Error(ErrorCode::InvalidArgument, "self-exclusion needs queries and references to be the same rows");
  }
  const std::size_t eligible = refs.rows() - (exclude_self && refs.rows() > 0 ? 1 : 0);
  if (k > eligible) {
    throw Error(ErrorCode::InvalidArgument, "k = " + std::to_string(k) + " exceeds the " +
                                                std::to_string(eligible) + " eligible references");
  }

  NeighborTable out;
  out.rows = queries.rows();
  out.k = k;
  out.index.assign(out.rows * k, 0);
  out.sq_dist.assign(out.rows * k, 0.0);
  if (k == 0 || out.rows == 0) return out;

  if (strategy == KnnStrategy::Automatic) {
    const double work = static_cast<double>(queries.rows()) * static_cast<double>(refs.rows()) *
                        static_cast<double>(refs.cols());
    const bool small = work < 2e8 || eligible <= 2 * k + 8;
    strategy = small ? KnnStrategy::Direct : KnnStrategy::Screened;
  }
  if (strategy == KnnStrategy::Direct) {
    knn_direct(queries, refs, exclude_self, out);
  } else {
    knn_screened(queries, refs, exclude_self, out);
  }
  return out;
}

}  // namespace

double squared_distance(std::span<const float> a, std::span<const float> b) noexcept {
  return squared_distance_impl(a, b);
}

double squared_distance(std::span<const float> a, std::span<const double> b) noexcept {
  return squared_distance_impl(a, b);
}

NeighborTable exact_knn(const MatrixF& queries, const MatrixF& refs, std::size_t k, bool exclude_self,
                        KnnStrategy strategy) {
  return exact_knn_impl(queries, refs, k, exclude_self, strategy);
}

NeighborTable exact_knn(const MatrixF& queries, const MatrixD& refs, std::size_t k, bool exclude_self,
                        KnnStrategy strategy) {
  return exact_knn_impl(queries, refs, k, exclude_self, strategy);
}

ScreeningStats last_screening_stats() noexcept { return {g_certified.load(), g_fallback.load()}; }

}  // namespace patron
