#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "smi/baselines.hpp"
#include "smi/domain.hpp"
#include "smi/maximizer.hpp"
#include "smi/submodular.hpp"

namespace smi {

enum class Strategy { scg_then_smi, scg_only, scg_then_scmi, baseline };
enum class BaselineKind { random, entropy, margin, least_confidence, badge };
// prose: switch when the batch shows no concept outside K.
// literal: switch when the batch shares no concept with K.
enum class SwitchRule { prose, literal };
enum class Phase { conditioning, targeting, baseline };

std::string_view to_string(BaselineKind b);
std::string_view to_string(SwitchRule r);
SwitchRule parse_switch_rule(std::string_view name);
std::string_view to_string(Phase p);
Phase parse_phase(std::string_view name);

struct StrategySpec {
  std::string name;  // report label; unique within a run
  Strategy strategy = Strategy::scg_then_smi;
  BaselineKind baseline = BaselineKind::random;
  Family family = Family::fl;
  Params params;
  std::size_t budget = 50;
  std::size_t rounds = 10;
  GreedyOptions greedy;
  std::size_t partitions = 0;               // 0: automatic from the threshold
  std::size_t partition_threshold = 20000;  // |U| above which the ground set is split
  MergePolicy merge = MergePolicy::reselect;
  Rectify rectify = Rectify::clamp;
  SwitchRule switch_rule = SwitchRule::prose;
  std::string provider;  // external embedding command; empty for static
  std::uint64_t seed = 0;

  // "scg_then_smi", "scg_only", "scg_then_scmi" or "baseline:<name>".
  std::string strategy_string() const;
  void set_strategy(std::string_view text);  // config error on unknown names
  // Config error on B = 0, N = 0, bad params or thresholds.
  void validate() const;
};

struct RoundRecord {
  std::size_t round = 0;  // 1-based
  Phase phase = Phase::conditioning;
  std::optional<FunctionKind> function;
  std::vector<PointId> selected;
  std::map<ConceptKey, std::size_t> concept_counts;
  std::size_t unknown_selected = 0;
  std::size_t cumulative_unknown = 0;
  double objective = 0.0;
  bool stopped_early = false;
  std::size_t truncated_partitions = 0;
  double wall_seconds = 0.0;
  std::vector<std::string> warnings;
};

struct DiscoveryState {
  std::set<PointId> labeled;          // L
  std::set<PointId> unlabeled;        // U
  std::vector<PointId> conditioning;  // P, in insertion order
  std::vector<PointId> query;         // Q, in insertion order
  ConceptSet coverage;                // K
  bool unknown_flag = true;           // true while unknown instances may remain
  std::size_t round = 0;
  std::size_t cumulative_unknown = 0;
  std::vector<RoundRecord> history;
};

// Initial state: P = L, Q empty, K = concepts of L plus the known concepts.
DiscoveryState initial_state(std::span<const PointId> labeled, std::span<const PointId> unlabeled,
                             const Oracle& oracle);

// True when the loop should move to targeting after a batch with concepts
// `selected`, given coverage before the batch.
bool phase_switch(const ConceptSet& prev_coverage, const ConceptSet& selected, SwitchRule rule = SwitchRule::prose);

// Inputs a round needs besides the state. domain is required for the
// submodular strategies; probabilities (and features for BADGE) for the
// uncertainty baselines.
struct RoundInputs {
  const SimilarityDomain* domain = nullptr;
  const Oracle* oracle = nullptr;
  const ProbabilityTable* probabilities = nullptr;
  const EmbeddingStore* features = nullptr;
};

// One round of the loop; nullopt once U is empty. The record is also
// appended to state.history.
std::optional<RoundRecord> run_round(DiscoveryState& state, const StrategySpec& spec, const RoundInputs& in);

// Called before rounds 2..N with the state so far; may repoint the inputs,
// for example at a refreshed embedding domain.
using RefreshHook = std::function<void(const DiscoveryState&, RoundInputs&)>;

// N rounds (fewer if U runs out). `refresh` runs before every round after
// the first.
std::vector<RoundRecord> run_experiment(DiscoveryState state, const StrategySpec& spec, RoundInputs in,
                                        const RefreshHook& refresh = {});

}  // namespace smi
