#include "patron/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "patron/error.hpp"

namespace patron {

namespace {

// Explicit transforms instead of <random> distributions, whose output is
// implementation-defined; the generator must give the same data everywhere.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : rng_(seed) {}

  double uniform() { return (static_cast<double>(rng_() >> 11) + 0.5) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double theta = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  std::size_t below(std::size_t bound) {
    return std::min(bound - 1, static_cast<std::size_t>(uniform() * static_cast<double>(bound)));
  }

 private:
  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

void softmax_into(std::vector<double>& logits, std::span<float> out) {
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double& v : logits) {
    v = std::exp(v - top);
    total += v;
  }
  for (std::size_t j = 0; j < logits.size(); ++j) out[j] = static_cast<float>(logits[j] / total);
}

}  // namespace

void validate(const SynthSpec& spec) {
  if (spec.n < 1 || spec.d < 1) throw Error(ErrorCode::InvalidArgument, "synthetic data needs n >= 1 and d >= 1");
  if (spec.c < 2) throw Error(ErrorCode::InvalidArgument, "synthetic data needs at least 2 classes");
  if (!(spec.cluster_separation > 0.0)) throw Error(ErrorCode::InvalidArgument, "cluster_separation must be positive");
  if (!(spec.blob_scale > 0.0)) throw Error(ErrorCode::InvalidArgument, "blob_scale must be positive");
  if (!(spec.label_noise >= 0.0 && spec.label_noise <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "label_noise must lie in [0, 1]");
  }
}

DatasetMatrices generate(const SynthSpec& spec) {
  validate(spec);
  const std::size_t n = spec.n, d = spec.d, c = spec.c;
  Stream stream(spec.seed);

  // Coordinates drawn from N(0, s^2 / 2d) put two centers about s apart.
  MatrixD centers(c, d);
  const double center_sd = spec.cluster_separation / std::sqrt(2.0 * static_cast<double>(d));
  for (std::size_t t = 0; t < c * d; ++t) centers.data()[t] = center_sd * stream.normal();

  DatasetMatrices data;
  data.embeddings = MatrixF(n, d);
  data.class_probs = MatrixF(n, c);
  data.gold_labels = std::vector<std::int32_t>(n);
  std::vector<double> point(d), logits(c);

  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t y = stream.below(c);
    (*data.gold_labels)[i] = static_cast<std::int32_t>(y);
    auto row = data.embeddings.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      point[j] = centers(y, j) + spec.blob_scale * stream.normal();
      row[j] = static_cast<float>(point[j]);
    }

    const bool noisy = spec.label_noise > 0.0 && stream.uniform() < spec.label_noise;
    if (noisy) {
      // normalized exponentials are uniform on the simplex
      for (double& v : logits) v = std::log(-std::log(stream.uniform()));
    } else {
      for (std::size_t k = 0; k < c; ++k) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          const double t = static_cast<double>(row[j]) - centers(k, j);
          s += t * t;
        }
        logits[k] = -std::sqrt(s);
      }
    }
    softmax_into(logits, data.class_probs.row(i));
  }

  if (spec.with_raw_probs) {
    // label words differ in base frequency: scale class k by a fixed factor in (0.1, 1]
    std::vector<double> bias(c);
    for (double& b : bias) b = 0.1 + 0.9 * stream.uniform();
    MatrixF raw(n, c);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < c; ++k) raw(i, k) = static_cast<float>(data.class_probs(i, k) * bias[k]);
    }
    data.raw_label_probs = std::move(raw);
  }
  return data;
}

}  // namespace patron
