#pragma once

#include <cstddef>
#include <cstdint>

#include "patron/dataset_io.hpp"

namespace patron {

struct SynthSpec {
  std::size_t n = 1000;
  std::size_t d = 8;
  std::size_t c = 4;
  double cluster_separation = 4.0;  // expected distance between blob centers
  double label_noise = 0.0;         // fraction of rows whose probabilities are resampled uniformly
  std::uint64_t seed = 0;
  double blob_scale = 1.0;          // per-coordinate standard deviation inside a blob
  bool with_raw_probs = false;      // also emit biased, unnormalized label-word probabilities
};

void validate(const SynthSpec& spec);

// Gaussian blobs with planted classes. class_probs are a softmax over the
// negative Euclidean distances to the blob centers; a `label_noise` fraction
// of rows is replaced by a uniformly drawn point of the simplex. Gold labels
// are always present. Identical specs give identical matrices.
DatasetMatrices generate(const SynthSpec& spec);

}  // namespace patron
