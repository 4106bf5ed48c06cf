#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "smi/dataset.hpp"
#include "smi/discovery.hpp"
#include "smi/metrics.hpp"

namespace smi {

struct EmbeddingSource {
  std::filesystem::path path;
  EmbeddingFormat format = EmbeddingFormat::csv;
  bool normalize = true;  // scale rows to unit norm on load
};

struct SplitConfig {
  ConceptSet known;
  ConceptSet unknown;
  double rho = 20.0;
  std::size_t per_known = 1000;
  std::size_t per_unknown = 50;
  std::size_t labeled_per_known = 0;
  std::optional<std::uint64_t> seed;  // defaults to the global seed
  std::optional<std::filesystem::path> manifest_dir;
};

struct KernelConfig {
  Rectify rectify = Rectify::clamp;
  std::size_t partition_threshold = 20000;
  std::size_t partitions = 0;
  MergePolicy merge = MergePolicy::reselect;
};

struct AblationConfig {
  std::string base;  // strategy name; empty picks the first submodular strategy
  std::vector<double> eta{1.0};
  std::vector<double> nu{1.0};
  std::size_t report_round = 3;
};

struct DetectionConfig {
  std::filesystem::path manifest;
  std::set<std::uint32_t> known_classes;
};

struct ExperimentConfig {
  std::optional<EmbeddingSource> embeddings;
  std::optional<std::filesystem::path> labels;
  std::optional<std::uint32_t> class_count;
  std::optional<std::filesystem::path> probabilities;
  std::optional<DetectionConfig> detection;
  SplitConfig split;
  KernelConfig kernel;
  std::vector<StrategySpec> strategies;
  AblationConfig ablation;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 0;

  std::uint64_t split_seed() const { return split.seed.value_or(seed); }
  ImbalanceSpec imbalance() const;
  // Canonical JSON of the whole config, echoed into every report.
  Json to_json() const;
};

Json strategy_to_json(const StrategySpec& s);

// Every field with its default, one example strategy per kind of strategy.
Json default_config();

// Strict: unknown keys, wrong types and invalid values are config errors
// naming the offending field. Relative paths resolve against base_dir.
ExperimentConfig parse_config(const Json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

// Cross-field checks run before any compute: referenced files exist, strategy
// names are unique and file-safe, families fit the data domain, baselines have
// the inputs they need. `need_strategies` is false for the split command.
void validate(const ExperimentConfig& cfg, bool need_strategies = true);

// Re-applies the global seed and kernel settings to every strategy, e.g.
// after --seed.
void apply_globals(ExperimentConfig& cfg);

}  // namespace smi
