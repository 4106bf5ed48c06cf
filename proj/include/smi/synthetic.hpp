#pragma once

#include <cstdint>
#include <set>

#include "smi/baselines.hpp"
#include "smi/dataset.hpp"

namespace smi {

// Isotropic Gaussian clusters around random unit centers, projected back to
// the unit sphere. Point c * per_class + i belongs to class c.
struct SyntheticSpec {
  std::uint32_t classes = 10;
  std::size_t per_class = 2000;
  int dim = 16;
  double sigma = 0.1;  // per-coordinate standard deviation before projection
  std::uint64_t seed = 0;
};

struct SyntheticData {
  EmbeddingStore embeddings;
  LabelMap labels;
};

SyntheticData gaussian_clusters(const SyntheticSpec& spec);

// Stand-in classifier output: softmax(temperature * cos(x, mean_c)) over the
// `known` classes, with means taken over every point of that class.
ProbabilityTable nearest_mean_probabilities(const EmbeddingStore& store, const LabelMap& labels,
                                            const std::set<std::uint32_t>& known, double temperature = 10.0);

}  // namespace smi
