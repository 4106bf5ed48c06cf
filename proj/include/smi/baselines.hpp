#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "smi/dataset.hpp"
#include "smi/maximizer.hpp"

namespace smi {

// Per-point class probabilities. Rows must lie on the simplex (sum 1 within
// 1e-6, entries in [0, 1]); violations are data errors naming the point.
class ProbabilityTable {
 public:
  ProbabilityTable() = default;
  ProbabilityTable(std::vector<PointId> ids, Eigen::MatrixXd probs);

  std::size_t size() const noexcept { return ids_.size(); }
  std::size_t classes() const noexcept { return static_cast<std::size_t>(probs_.cols()); }
  const std::vector<PointId>& ids() const noexcept { return ids_; }
  const Eigen::MatrixXd& probs() const noexcept { return probs_; }
  bool contains(PointId id) const { return index_.contains(id); }
  std::size_t index_of(PointId id) const;
  Eigen::VectorXd row(PointId id) const { return probs_.row(static_cast<Eigen::Index>(index_of(id))).transpose(); }

 private:
  std::vector<PointId> ids_;
  Eigen::MatrixXd probs_;
  std::unordered_map<PointId, std::size_t> index_;
};

// CSV `id,p0,...,p{C-1}` with a header row.
ProbabilityTable load_probabilities(const std::filesystem::path& path);
void save_probabilities(const ProbabilityTable& table, const std::filesystem::path& path);

// Scores: natural-log Shannon entropy, top1 - top2, max probability.
double entropy(const Eigen::Ref<const Eigen::VectorXd>& p);
double margin(const Eigen::Ref<const Eigen::VectorXd>& p);
double max_probability(const Eigen::Ref<const Eigen::VectorXd>& p);

// Top-B by score (entropy descending, margin and max probability ascending),
// ties to the smallest id. gains carry the scores. Lookup error for
// candidates outside the table.
SelectionResult entropy_select(const ProbabilityTable& table, std::span<const PointId> candidates, std::size_t budget);
SelectionResult margin_select(const ProbabilityTable& table, std::span<const PointId> candidates, std::size_t budget);
SelectionResult least_confidence_select(const ProbabilityTable& table, std::span<const PointId> candidates,
                                        std::size_t budget);

// Gradient embedding (p - onehot(argmax p)) (x) feature, then k-means++
// seeding: the first center is drawn with probability proportional to the
// squared norm, later ones proportional to the squared distance to the
// nearest chosen center. gains carry the sampling weights.
SelectionResult badge_select(const EmbeddingStore& features, const ProbabilityTable& table,
                             std::span<const PointId> candidates, std::size_t budget, std::uint64_t seed);
// Flattened C*D gradient embedding of one point.
Eigen::VectorXd badge_gradient(const Eigen::Ref<const Eigen::VectorXd>& probs,
                               const Eigen::Ref<const Eigen::VectorXd>& feature);
// k-means++ seeding over the rows of `points`; returns row indices.
std::vector<std::size_t> kmeanspp_seed(const Eigen::MatrixXd& points, std::size_t k, std::uint64_t seed);

// Uniform without replacement, in draw order.
SelectionResult random_select(std::span<const PointId> candidates, std::size_t budget, std::uint64_t seed);

}  // namespace smi
