#include "patron/propagation.hpp"

#include <algorithm>
#include <cmath>

#include "patron/error.hpp"
#include "patron/parallel.hpp"

namespace patron {

KnnGraph knn_graph(const MatrixF& embeddings, std::size_t knn_size, KnnStrategy strategy) {
  const std::size_t n = embeddings.rows();
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "a kNN graph needs at least two samples");
  const std::size_t k = std::min(knn_size, n - 1);
  return KnnGraph{exact_knn(embeddings, embeddings, k, /*exclude_self=*/true, strategy)};
}

double rbf_kernel(double sq_distance, double rho) noexcept { return std::exp(-rho * sq_distance); }

UncertaintyVectors propagate(std::span<const double> raw_u, const KnnGraph& graph, double rho) {
  if (raw_u.size() != graph.size()) {
    throw Error(ErrorCode::InvalidArgument, "uncertainty vector and graph cover different sample counts");
  }
  UncertaintyVectors out;
  out.raw.assign(raw_u.begin(), raw_u.end());
  out.propagated.resize(raw_u.size());
  const double k = static_cast<double>(graph.k());
  parallel_for(raw_u.size(), 4096, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      double spread = 0.0;
      const auto nbrs = graph.neighbors(i);
      const auto dist = graph.sq_distances(i);
      for (std::size_t t = 0; t < nbrs.size(); ++t) spread += rbf_kernel(dist[t], rho) * raw_u[nbrs[t]];
      out.propagated[i] = raw_u[i] + (nbrs.empty() ? 0.0 : spread / k);
    }
  });
  return out;
}

MatrixF l2_normalized(const MatrixF& embeddings) {
  MatrixF out = embeddings;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    double s = 0.0;
    for (float v : r) s += static_cast<double>(v) * v;
    if (s == 0.0) continue;
    const double inv = 1.0 / std::sqrt(s);
    for (float& v : r) v = static_cast<float>(v * inv);
  }
  return out;
}

}  // namespace patron
