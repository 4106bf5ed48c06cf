#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "smi/kernels.hpp"

namespace smi {

enum class FunctionKind { FLMI, GCMI, LOGDETMI, FLCG, GCCG, LOGDETCG, FLCMI, LOGDETCMI, GCCMI };
enum class Family { fl, gc, logdet };
enum class Role { smi, scg, scmi };

std::string_view to_string(FunctionKind k);
FunctionKind parse_function_kind(std::string_view name);
std::string_view to_string(Family f);
Family parse_family(std::string_view name);
FunctionKind kind_for(Family f, Role r);
Family family_of(FunctionKind k);
Role role_of(FunctionKind k);

struct Params {
  double eta = 1.0;          // query weight
  double nu = 1.0;           // conditioning weight
  double lambda = 1.0;       // graph-cut redundancy weight
  double epsilon_reg = 1e-4; // log-det diagonal regularizer

  // Config error on non-finite or negative values.
  void validate() const;
};

// Memo for one growing selection A over the local ground indices 0..n-1.
// gain/add are O(memo) rather than O(|A|) evaluations. Single owner;
// gain() is const and may be called concurrently.
class GainState {
 public:
  virtual ~GainState() = default;

  std::size_t size() const noexcept { return in_.size(); }
  // f(A + x) - f(A). Index error when x >= size(), argument error when x in A.
  double gain(std::size_t x) const;
  void add(std::size_t x);
  // f(A) as the running sum of committed gains.
  double value() const noexcept { return value_; }
  const std::vector<std::size_t>& selected() const noexcept { return selected_; }
  bool contains(std::size_t x) const { return x < in_.size() && in_[x]; }

 protected:
  explicit GainState(std::size_t n) : in_(n, false) {}
  virtual double compute_gain(std::size_t x) const = 0;
  virtual void apply(std::size_t x) = 0;

 private:
  void check(std::size_t x) const;

  std::vector<bool> in_;
  std::vector<std::size_t> selected_;
  double value_ = 0.0;
};

class AcquisitionFunction {
 public:
  virtual ~AcquisitionFunction() = default;

  FunctionKind kind() const noexcept { return kind_; }
  const Params& params() const noexcept { return params_; }
  std::size_t size() const noexcept { return ids_.size(); }
  const std::vector<PointId>& ground_ids() const noexcept { return ids_; }
  // Lookup error for ids outside the ground set.
  std::size_t index_of(PointId id) const;

  // From-scratch value on local indices; duplicates are ignored, indices
  // outside 0..size()-1 raise an index error.
  double evaluate(std::span<const std::size_t> a) const;
  double evaluate_ids(std::span<const PointId> a) const;
  virtual std::unique_ptr<GainState> start() const = 0;

 protected:
  AcquisitionFunction(FunctionKind kind, std::vector<PointId> ids, Params params);
  // `a` is sorted and unique.
  virtual double evaluate_set(std::span<const std::size_t> a) const = 0;

 private:
  FunctionKind kind_;
  std::vector<PointId> ids_;
  std::unordered_map<PointId, std::size_t> index_;
  Params params_;
};

using AcquisitionPtr = std::unique_ptr<AcquisitionFunction>;

// Ground-kernel arguments are |U| x |U| over the candidate set U and define
// the ground ids. Per-candidate vectors are indexed like the ground ids:
//   query_max[x] = max_{q in Q} S(q, x)    query_sum[x] = sum_{q in Q} S(q, x)
//   cond_max[x]  = max_{p in P} S(p, x)    cond_sum[x]  = sum_{p in P} S(p, x)
// Cross kernels are |Q| x |U| or |P| x |U| with columns equal to the ground
// ids (consistency error otherwise).

// sum_{q} max_{a} S(q, a) + eta * sum_{a} max_{q} S(q, a)
AcquisitionPtr make_flmi(KernelPtr query_cross, const Params& p);
// 2 lambda sum_{a, q} S(a, q)
AcquisitionPtr make_gcmi(std::vector<PointId> ground, std::vector<double> query_sum, const Params& p);
// logdet K_A - logdet(K_A - eta^2 K_AQ K_Q^-1 K_QA), K = S + eps I
AcquisitionPtr make_logdetmi(KernelPtr ground, KernelPtr query_self, KernelPtr query_cross, const Params& p);

// sum_{i in U} max(max_{a} S(i, a) - nu * cond_max[i], 0)
AcquisitionPtr make_flcg(KernelPtr ground, std::vector<double> cond_max, const Params& p);
// f(A) - 2 lambda nu sum_{a, p} S(a, p), f(A) = sum_{i in U, a} S - lambda sum_{a, b in A} S
AcquisitionPtr make_gccg(KernelPtr ground, std::vector<double> cond_sum, const Params& p);
// logdet(K_A - nu^2 K_AP K_P^-1 K_PA)
AcquisitionPtr make_logdetcg(KernelPtr ground, KernelPtr cond_self, KernelPtr cond_cross, const Params& p);

// sum_{i in U} max(min(max_{a} S(i, a), eta * query_max[i]) - nu * cond_max[i], 0)
AcquisitionPtr make_flcmi(KernelPtr ground, std::vector<double> query_max, std::vector<double> cond_max,
                          const Params& p);

// Graph-cut conditional MI straight from f(A+P) + f(Q+P) - f(A+Q+P) - f(P),
// with every term assembled from block sums. P, Q and U are disjoint.
struct GcCmiBlocks {
  std::vector<double> query_sum;
  std::vector<double> cond_sum;
  double sum_qq = 0.0;  // sum over Q x Q
  double sum_pp = 0.0;  // sum over P x P
  double sum_pq = 0.0;  // sum over P x Q
};
AcquisitionPtr make_gccmi(KernelPtr ground, GcCmiBlocks blocks, const Params& p);

// logdet_P(A) - logdet_{P+Q}(A), where logdet_Z(A) is the log-det of K_A
// conditioned on Z by Schur complement.
AcquisitionPtr make_logdetcmi(KernelPtr ground, KernelPtr cond_self, KernelPtr query_self, KernelPtr cond_query,
                              KernelPtr cond_cross, KernelPtr query_cross, const Params& p);

// Small-instance harness: `omega` is a similarity matrix over all points;
// ground/query/cond index into it (pairwise disjoint) and `a` indexes into
// `ground`. closed_form evaluates the kind's instantiation built from blocks
// of omega; four_term evaluates the set-function definition on an
// independently coded base function.
struct DefinitionInstance {
  Eigen::MatrixXd omega;
  std::vector<std::size_t> ground;
  std::vector<std::size_t> query;
  std::vector<std::size_t> cond;
};
struct DefinitionValues {
  double closed_form = 0.0;
  double four_term = 0.0;
};
DefinitionValues definition_check(FunctionKind kind, const DefinitionInstance& inst, std::span<const std::size_t> a,
                                  const Params& p);
// Builds the kind's acquisition function from the blocks of an instance.
AcquisitionPtr make_from_instance(FunctionKind kind, const DefinitionInstance& inst, const Params& p);

}  // namespace smi
