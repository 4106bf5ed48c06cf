#include "smi/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "smi/error.hpp"
#include "smi/rng.hpp"

namespace smi {

namespace {

// Box-Muller on the counter generator, so the data do not depend on the
// standard library's distribution implementation.
double gaussian(CounterRng& rng) {
  double u1 = rng.uniform();
  while (u1 <= 0.0) u1 = rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

SyntheticData gaussian_clusters(const SyntheticSpec& spec) {
  if (spec.classes == 0 || spec.per_class == 0 || spec.dim <= 0) {
    throw Error(ErrorKind::argument, "synthetic clusters need classes, per_class and dim >= 1");
  }
  if (!(spec.sigma >= 0.0) || !std::isfinite(spec.sigma)) throw Error(ErrorKind::argument, "sigma must be >= 0");
  CounterRng centers_rng(spec.seed, hash_name("centers"));
  Eigen::MatrixXd centers(spec.classes, spec.dim);
  for (std::uint32_t c = 0; c < spec.classes; ++c) {
    for (int d = 0; d < spec.dim; ++d) centers(c, d) = gaussian(centers_rng);
    centers.row(c).normalize();
  }
  const std::size_t n = spec.classes * spec.per_class;
  RowMatrix x(static_cast<Eigen::Index>(n), spec.dim);
  std::vector<PointId> ids(n);
  LabelMap labels;
  CounterRng noise(spec.seed, hash_name("noise"));
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<std::uint32_t>(i / spec.per_class);
    auto row = x.row(static_cast<Eigen::Index>(i));
    for (int d = 0; d < spec.dim; ++d) row(d) = centers(c, d) + spec.sigma * gaussian(noise);
    row.normalize();
    ids[i] = i;
    labels[i] = ConceptLabel{c, {}};
  }
  return {EmbeddingStore(std::move(ids), std::move(x), true), std::move(labels)};
}

ProbabilityTable nearest_mean_probabilities(const EmbeddingStore& store, const LabelMap& labels,
                                            const std::set<std::uint32_t>& known, double temperature) {
  if (known.empty()) throw Error(ErrorKind::argument, "need at least one known class");
  std::vector<std::uint32_t> classes(known.begin(), known.end());
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(classes.size()),
                                                static_cast<Eigen::Index>(store.dim()));
  for (std::size_t i = 0; i < store.size(); ++i) {
    auto it = labels.find(store.ids()[i]);
    if (it == labels.end()) continue;
    auto pos = std::lower_bound(classes.begin(), classes.end(), it->second.class_id);
    if (pos == classes.end() || *pos != it->second.class_id) continue;
    means.row(pos - classes.begin()) += store.row(i);
  }
  for (Eigen::Index c = 0; c < means.rows(); ++c) {
    const double norm = means.row(c).norm();
    if (norm == 0.0) {
      throw Error(ErrorKind::data, "known class " + std::to_string(classes[static_cast<std::size_t>(c)]) + " has no points");
    }
    means.row(c) /= norm;
  }
  Eigen::MatrixXd probs(static_cast<Eigen::Index>(store.size()), means.rows());
  for (std::size_t i = 0; i < store.size(); ++i) {
    Eigen::VectorXd logits = temperature * (means * store.row(i).transpose());
    logits.array() -= logits.maxCoeff();
    Eigen::VectorXd e = logits.array().exp();
    probs.row(static_cast<Eigen::Index>(i)) = (e / e.sum()).transpose();
  }
  return ProbabilityTable(store.ids(), std::move(probs));
}

}  // namespace smi
