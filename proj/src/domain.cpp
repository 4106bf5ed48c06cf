#include "smi/domain.hpp"

#include <algorithm>

#include "smi/error.hpp"

namespace smi {

namespace {

KernelPtr share(Kernel k) { return std::make_shared<const Kernel>(std::move(k)); }

}  // namespace

KernelPtr SimilarityDomain::self(std::span<const PointId>, SetRole) const {
  throw Error(ErrorKind::config, "log-det functions are not available for this similarity domain");
}

KernelPtr SimilarityDomain::between(std::span<const PointId>, SetRole, std::span<const PointId>, SetRole) const {
  throw Error(ErrorKind::config, "log-det functions are not available for this similarity domain");
}

std::vector<double> SimilarityDomain::column_max(std::span<const PointId> rows, SetRole role,
                                                 std::span<const PointId> u) const {
  if (rows.empty()) return std::vector<double>(u.size(), 0.0);
  return smi::column_max(*cross(rows, role, u));
}

std::vector<double> SimilarityDomain::column_sum(std::span<const PointId> rows, SetRole role,
                                                 std::span<const PointId> u) const {
  if (rows.empty()) return std::vector<double>(u.size(), 0.0);
  return smi::column_sum(*cross(rows, role, u));
}

double SimilarityDomain::block_sum(std::span<const PointId> a, SetRole ra, std::span<const PointId> b,
                                   SetRole rb) const {
  if (a.empty() || b.empty()) return 0.0;
  return between(a, ra, b, rb)->values.sum();
}

EmbeddingDomain::EmbeddingDomain(std::shared_ptr<const EmbeddingStore> store, Rectify policy)
    : store_(std::move(store)), policy_(policy) {
  if (!store_) throw Error(ErrorKind::argument, "embedding domain needs a store");
  if (!store_->normalized()) throw Error(ErrorKind::data, "embedding domain needs unit-normalized embeddings");
}

KernelPtr EmbeddingDomain::ground(std::span<const PointId> u) const {
  EmbeddingView v(*store_, u);
  return share(cosine_kernel(v, v, policy_));
}

KernelPtr EmbeddingDomain::cross(std::span<const PointId> rows, SetRole, std::span<const PointId> u) const {
  return share(cosine_kernel(EmbeddingView(*store_, rows), EmbeddingView(*store_, u), policy_));
}

KernelPtr EmbeddingDomain::self(std::span<const PointId> rows, SetRole) const {
  EmbeddingView v(*store_, rows);
  return share(cosine_kernel(v, v, policy_));
}

KernelPtr EmbeddingDomain::between(std::span<const PointId> a, SetRole, std::span<const PointId> b, SetRole) const {
  return share(cosine_kernel(EmbeddingView(*store_, a), EmbeddingView(*store_, b), policy_));
}

std::vector<double> EmbeddingDomain::column_max(std::span<const PointId> rows, SetRole,
                                                std::span<const PointId> u) const {
  return smi::column_max(EmbeddingView(*store_, rows), EmbeddingView(*store_, u), policy_);
}

std::vector<double> EmbeddingDomain::column_sum(std::span<const PointId> rows, SetRole,
                                                std::span<const PointId> u) const {
  return smi::column_sum(EmbeddingView(*store_, rows), EmbeddingView(*store_, u), policy_);
}

double EmbeddingDomain::block_sum(std::span<const PointId> a, SetRole, std::span<const PointId> b, SetRole) const {
  return smi::block_sum(EmbeddingView(*store_, a), EmbeddingView(*store_, b), policy_);
}

DetectionDomain::DetectionDomain(std::shared_ptr<const DetectionCorpus> corpus, std::set<std::uint32_t> known_classes,
                                 Rectify policy)
    : corpus_(std::move(corpus)), known_(std::move(known_classes)), policy_(policy) {
  if (!corpus_) throw Error(ErrorKind::argument, "detection domain needs a corpus");
}

std::vector<ObjectFeatureSet> DetectionDomain::gt_rows(std::span<const PointId> rows, SetRole role) const {
  std::vector<ObjectFeatureSet> out;
  out.reserve(rows.size());
  for (auto id : rows) {
    const auto& img = corpus_->image(id);
    if (!img.ground_truth) throw Error(ErrorKind::data, "image " + std::to_string(id) + " has no ground truth");
    auto boxes = img.ground_truth->select_boxes([&](std::uint32_t c) {
      return known_.contains(c) == (role == SetRole::conditioning);
    });
    if (boxes.box_count() == 0) {
      throw Error(ErrorKind::consistency, "image " + std::to_string(id) + " has no " +
                                              (role == SetRole::conditioning ? "known" : "unknown") +
                                              "-class boxes but sits in that set");
    }
    out.push_back(std::move(boxes));
  }
  return out;
}

std::vector<ObjectFeatureSet> DetectionDomain::proposals(std::span<const PointId> u) const {
  std::vector<ObjectFeatureSet> out;
  out.reserve(u.size());
  for (auto id : u) {
    const auto& img = corpus_->image(id);
    if (!img.proposals) throw Error(ErrorKind::data, "image " + std::to_string(id) + " has no region proposals");
    out.push_back(*img.proposals);
  }
  return out;
}

KernelPtr DetectionDomain::ground(std::span<const PointId> u) const {
  return share(proposal_ground_kernel(proposals(u), policy_));
}

KernelPtr DetectionDomain::cross(std::span<const PointId> rows, SetRole role, std::span<const PointId> u) const {
  const auto mode = role == SetRole::conditioning ? DetectionMode::conditioning : DetectionMode::query;
  return share(detection_kernel(gt_rows(rows, role), proposals(u), mode, policy_));
}

const std::vector<ConceptKey>& Oracle::of(PointId id) const {
  auto it = concepts.find(id);
  if (it == concepts.end()) throw Error(ErrorKind::lookup, "no ground-truth label for point " + std::to_string(id));
  return it->second;
}

bool Oracle::has_known(PointId id) const {
  const auto& c = of(id);
  return std::any_of(c.begin(), c.end(), [&](const ConceptKey& k) { return known.contains(k); });
}

bool Oracle::has_unknown(PointId id) const {
  const auto& c = of(id);
  return std::any_of(c.begin(), c.end(), [&](const ConceptKey& k) { return !known.contains(k); });
}

Oracle oracle_from_split(const DatasetSplit& split) {
  Oracle o;
  o.known = split.known;
  for (auto pool : {&split.labeled, &split.unlabeled}) {
    for (auto id : *pool) o.concepts[id] = {oracle_label(split, id)};
  }
  return o;
}

Oracle oracle_from_corpus(const DetectionCorpus& corpus, const std::set<std::uint32_t>& known) {
  Oracle o;
  for (auto c : known) o.known.insert(ConceptKey{c, {}});
  for (const auto& [id, img] : corpus.images) {
    if (!img.ground_truth) continue;
    std::set<ConceptKey> cs;
    for (auto c : img.ground_truth->box_classes) cs.insert(ConceptKey{c, {}});
    o.concepts[id].assign(cs.begin(), cs.end());
  }
  return o;
}

std::pair<std::vector<PointId>, std::vector<PointId>> detection_pools(const DetectionCorpus& corpus) {
  std::vector<PointId> labeled, unlabeled;
  for (const auto& [id, img] : corpus.images) {
    const std::string who = "image " + std::to_string(id);
    if (!img.pool) throw Error(ErrorKind::data, who + " has no pool");
    if (!img.ground_truth) throw Error(ErrorKind::data, who + " has no ground truth");
    if (*img.pool == Pool::labeled) {
      labeled.push_back(id);
    } else {
      if (!img.proposals) throw Error(ErrorKind::data, who + " is unlabeled but has no region proposals");
      unlabeled.push_back(id);
    }
  }
  return {labeled, unlabeled};
}

AcquisitionPtr build_function(FunctionKind kind, const SimilarityDomain& domain, std::span<const PointId> p,
                              std::span<const PointId> q, std::span<const PointId> u, const Params& params) {
  if (!domain.supports(family_of(kind))) {
    throw Error(ErrorKind::config, std::string(to_string(kind)) + " is not available for this similarity domain");
  }
  const auto C = SetRole::conditioning;
  const auto Q = SetRole::query;
  const std::vector<PointId> ground(u.begin(), u.end());
  switch (kind) {
    case FunctionKind::FLMI: return make_flmi(domain.cross(q, Q, u), params);
    case FunctionKind::GCMI: return make_gcmi(ground, domain.column_sum(q, Q, u), params);
    case FunctionKind::LOGDETMI: return make_logdetmi(domain.ground(u), domain.self(q, Q), domain.cross(q, Q, u), params);
    case FunctionKind::FLCG: return make_flcg(domain.ground(u), domain.column_max(p, C, u), params);
    case FunctionKind::GCCG: return make_gccg(domain.ground(u), domain.column_sum(p, C, u), params);
    case FunctionKind::LOGDETCG:
      return make_logdetcg(domain.ground(u), domain.self(p, C), domain.cross(p, C, u), params);
    case FunctionKind::FLCMI:
      return make_flcmi(domain.ground(u), domain.column_max(q, Q, u), domain.column_max(p, C, u), params);
    case FunctionKind::GCCMI: {
      GcCmiBlocks b{domain.column_sum(q, Q, u), domain.column_sum(p, C, u), domain.block_sum(q, Q, q, Q),
                    domain.block_sum(p, C, p, C), domain.block_sum(p, C, q, Q)};
      return make_gccmi(domain.ground(u), std::move(b), params);
    }
    case FunctionKind::LOGDETCMI:
      return make_logdetcmi(domain.ground(u), domain.self(p, C), domain.self(q, Q), domain.between(p, C, q, Q),
                            domain.cross(p, C, u), domain.cross(q, Q, u), params);
  }
  throw Error(ErrorKind::argument, "unhandled function kind");
}

}  // namespace smi
