#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "smi/config.hpp"
#include "smi/detection.hpp"
#include "smi/metrics.hpp"

namespace smi {

// Everything loaded from disk for one experiment.
struct Workspace {
  std::shared_ptr<const EmbeddingStore> embeddings;  // absent for detection
  std::shared_ptr<const DetectionCorpus> corpus;     // detection only
  std::optional<DatasetSplit> split;                 // classification only
  std::optional<ProbabilityTable> probabilities;
  Oracle oracle;
  std::vector<PointId> labeled;
  std::vector<PointId> unlabeled;
  DomainPtr domain;  // built with the configured rectify policy
};

// Loads data and builds (or reloads from split.manifest_dir) the split.
Workspace load_workspace(const ExperimentConfig& cfg);

// Classification split: read from manifest_dir when both manifests exist
// there, else built from the labels.
DatasetSplit make_split(const ExperimentConfig& cfg, const LabelMap& labels);

// Runs one strategy end to end; per-round progress goes to `log` when set.
// The embedding provider, if any, writes to work_dir.
DiscoveryReport run_strategy(const Workspace& ws, const StrategySpec& spec, const ExperimentConfig& cfg,
                             const std::filesystem::path& work_dir, std::ostream* log);

// Runs strategies on up to `jobs` threads; results keep the input order.
// The first failing strategy (in input order) is rethrown with its name, after
// the others have finished. `done` sees each successful report as it lands
// (serialized), so partial results survive a failure.
using ReportSink = std::function<void(const DiscoveryReport&)>;
std::vector<DiscoveryReport> run_all(const Workspace& ws, const std::vector<StrategySpec>& specs,
                                     const ExperimentConfig& cfg, const std::filesystem::path& work_dir,
                                     std::size_t jobs, std::ostream* log, const ReportSink& done = {});

// File name stem for a strategy name.
std::string report_stem(const std::string& name);

// Subcommands. Each validates first and writes under out_dir.
void cmd_split(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);
std::vector<DiscoveryReport> cmd_run(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                                     std::size_t jobs, std::ostream* log);

struct AblationCell {
  double eta = 1.0;
  double nu = 1.0;
  DiscoveryReport report;
};
// The strategies of the eta x nu grid around the base strategy.
std::vector<StrategySpec> ablation_grid(const ExperimentConfig& cfg);
std::vector<AblationCell> cmd_ablate(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                                     std::size_t jobs, std::ostream* log);
Comparison cmd_compare(const std::vector<std::filesystem::path>& reports, const std::filesystem::path& out_file);

// Full command line: smi-discover <split|run|ablate|compare> [options].
// Returns the process exit code: 0 ok, 2 config, 3 data, 4 numerical.
int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace smi
