#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "smi/submodular.hpp"

namespace smi {

enum class GreedyMode { naive, lazy, stochastic };
enum class MergePolicy { reselect, quota };

GreedyMode parse_greedy_mode(std::string_view name);
std::string_view to_string(GreedyMode m);
MergePolicy parse_merge_policy(std::string_view name);
std::string_view to_string(MergePolicy m);

struct SelectionResult {
  std::vector<PointId> chosen;
  std::vector<double> gains;
  bool stopped_early = false;
  double objective = 0.0;
  std::size_t truncated_partitions = 0;  // partitions holding fewer than B candidates
};

struct GreedyOptions {
  GreedyMode mode = GreedyMode::lazy;
  double epsilon = 0.01;  // stochastic sample size s = ceil(n/B * ln(1/epsilon))
  std::uint64_t seed = 0;
  // Stop before the budget once the best gain is <= 0. Only meaningful for
  // graph-cut kinds; the default follows the function kind.
  enum class Stop { by_kind, never, on_nonpositive } stop = Stop::by_kind;
};

// Ties within 1e-12 of the best gain go to the smallest PointId.
inline constexpr double kTieTolerance = 1e-12;

// Greedy over `candidates` (ids of f's ground set). Argument error for an
// empty candidate list or zero budget; budget > |candidates| selects all.
SelectionResult greedy(const AcquisitionFunction& f, std::span<const PointId> candidates, std::size_t budget,
                       const GreedyOptions& opts = {});

// Builds the function restricted to one partition (ground set = that part).
using FunctionBuilder = std::function<AcquisitionPtr(std::span<const PointId>)>;

struct PartitionOptions {
  std::size_t parts = 1;
  MergePolicy merge = MergePolicy::reselect;
  GreedyOptions greedy;
};

// Partitions are selected independently (in parallel); reselect runs a final
// greedy over the union of the local picks, quota keeps B/parts per part.
SelectionResult partitioned_greedy(const FunctionBuilder& build, std::span<const PointId> candidates,
                                   std::size_t budget, const PartitionOptions& opts);

}  // namespace smi
