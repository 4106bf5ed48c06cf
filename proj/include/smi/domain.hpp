#pragma once

#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "smi/dataset.hpp"
#include "smi/detection.hpp"
#include "smi/kernels.hpp"
#include "smi/submodular.hpp"

namespace smi {

// Which side a labeled row set plays. Embedding domains ignore it; detection
// domains use it to pick the known-class or unknown-class boxes of an image.
enum class SetRole { conditioning, query };

// Source of every similarity block the discovery loop needs. Columns are
// always candidate (unlabeled) points.
class SimilarityDomain {
 public:
  virtual ~SimilarityDomain() = default;

  virtual bool supports(Family f) const = 0;
  virtual KernelPtr ground(std::span<const PointId> u) const = 0;
  virtual KernelPtr cross(std::span<const PointId> rows, SetRole role, std::span<const PointId> u) const = 0;
  // rows x rows, for log-det kinds.
  virtual KernelPtr self(std::span<const PointId> rows, SetRole role) const;
  // a x b, for log-det conditional MI.
  virtual KernelPtr between(std::span<const PointId> a, SetRole ra, std::span<const PointId> b, SetRole rb) const;
  // Reductions of cross(rows, role, u) over rows; zeros when rows is empty.
  virtual std::vector<double> column_max(std::span<const PointId> rows, SetRole role, std::span<const PointId> u) const;
  virtual std::vector<double> column_sum(std::span<const PointId> rows, SetRole role, std::span<const PointId> u) const;
  virtual double block_sum(std::span<const PointId> a, SetRole ra, std::span<const PointId> b, SetRole rb) const;
};

using DomainPtr = std::shared_ptr<const SimilarityDomain>;

// Cosine similarities over one embedding store; all families.
class EmbeddingDomain final : public SimilarityDomain {
 public:
  EmbeddingDomain(std::shared_ptr<const EmbeddingStore> store, Rectify policy);

  bool supports(Family) const override { return true; }
  KernelPtr ground(std::span<const PointId> u) const override;
  KernelPtr cross(std::span<const PointId> rows, SetRole role, std::span<const PointId> u) const override;
  KernelPtr self(std::span<const PointId> rows, SetRole role) const override;
  KernelPtr between(std::span<const PointId> a, SetRole ra, std::span<const PointId> b, SetRole rb) const override;
  std::vector<double> column_max(std::span<const PointId> rows, SetRole role,
                                 std::span<const PointId> u) const override;
  std::vector<double> column_sum(std::span<const PointId> rows, SetRole role,
                                 std::span<const PointId> u) const override;
  double block_sum(std::span<const PointId> a, SetRole ra, std::span<const PointId> b, SetRole rb) const override;

  const EmbeddingStore& store() const noexcept { return *store_; }

 private:
  std::shared_ptr<const EmbeddingStore> store_;
  Rectify policy_;
};

// Object-level similarities between images. Labeled rows contribute their
// ground-truth boxes of known classes (conditioning, min-of-max) or of
// unknown classes (query, max); candidates contribute their proposals. FL and
// GC families only.
class DetectionDomain final : public SimilarityDomain {
 public:
  DetectionDomain(std::shared_ptr<const DetectionCorpus> corpus, std::set<std::uint32_t> known_classes,
                  Rectify policy);

  bool supports(Family f) const override { return f != Family::logdet; }
  KernelPtr ground(std::span<const PointId> u) const override;
  KernelPtr cross(std::span<const PointId> rows, SetRole role, std::span<const PointId> u) const override;
  // Ground-truth to ground-truth blocks are not defined for detection; the
  // graph-cut conditional MI only uses them in terms that cancel, so 0.
  double block_sum(std::span<const PointId>, SetRole, std::span<const PointId>, SetRole) const override {
    return 0.0;
  }

 private:
  std::vector<ObjectFeatureSet> gt_rows(std::span<const PointId> rows, SetRole role) const;
  std::vector<ObjectFeatureSet> proposals(std::span<const PointId> u) const;

  std::shared_ptr<const DetectionCorpus> corpus_;
  std::set<std::uint32_t> known_;
  Rectify policy_;
};

// Ground-truth concepts of every point, plus the initial known concepts.
// Classification points carry one concept; detection images carry the
// distinct classes of their ground-truth boxes.
struct Oracle {
  std::unordered_map<PointId, std::vector<ConceptKey>> concepts;  // sorted, unique
  ConceptSet known;

  // Lookup error for unknown ids.
  const std::vector<ConceptKey>& of(PointId id) const;
  bool has_known(PointId id) const;
  bool has_unknown(PointId id) const;
};

Oracle oracle_from_split(const DatasetSplit& split);
// Every image with ground truth; classes in `known` form the known concepts.
Oracle oracle_from_corpus(const DetectionCorpus& corpus, const std::set<std::uint32_t>& known);

// Labeled/unlabeled pools of a detection corpus; every image needs a pool,
// labeled images need ground truth, unlabeled images need proposals and
// ground truth (the oracle). Data error otherwise.
std::pair<std::vector<PointId>, std::vector<PointId>> detection_pools(const DetectionCorpus& corpus);

// Builds the acquisition function of `kind` over ground set u with
// conditioning set p and query set q.
AcquisitionPtr build_function(FunctionKind kind, const SimilarityDomain& domain, std::span<const PointId> p,
                              std::span<const PointId> q, std::span<const PointId> u, const Params& params);

}  // namespace smi
