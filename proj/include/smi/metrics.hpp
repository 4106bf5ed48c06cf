#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "smi/discovery.hpp"

namespace smi {

using Json = nlohmann::ordered_json;

inline constexpr int kReportSchemaVersion = 1;
// Placeholder for model-quality columns that need a trained model.
inline constexpr std::string_view kNotComputed = "not computed";

struct RoundSummary {
  std::size_t round = 0;
  Phase phase = Phase::conditioning;
  std::string function;  // empty for baselines
  std::size_t selected = 0;
  std::size_t unknown_selected = 0;
  std::size_t cumulative_unknown = 0;
  double objective = 0.0;
  bool stopped_early = false;
  std::map<std::string, std::size_t> concept_counts;  // concept key text -> points

  bool operator==(const RoundSummary&) const = default;
};

struct DiscoveryReport {
  std::string strategy;       // report label
  std::string strategy_kind;  // e.g. scg_then_smi or baseline:random
  std::string family;         // fl|gc|logdet, empty for baselines
  std::vector<std::uint64_t> seeds;
  std::size_t unknown_pool = 0;
  std::vector<RoundSummary> rounds;
  std::optional<std::size_t> full_discovery_round;
  Json config = Json::object();
  std::vector<std::string> warnings;

  std::vector<std::size_t> cumulative_curve() const;
  // Cumulative points of one concept per round.
  std::vector<std::size_t> concept_curve(const std::string& concept_key) const;
  // Cumulative unknowns after round r (1-based), clamped to the last round.
  std::size_t cumulative_at(std::size_t round) const;

  bool operator==(const DiscoveryReport&) const = default;
};

struct ReportInfo {
  std::string strategy;
  std::string strategy_kind;
  std::string family;
  std::vector<std::uint64_t> seeds;
  Json config = Json::object();
};

// Recounts every round from the oracle. Consistency error when a record
// selects a point outside `initial_unlabeled`, selects a point twice, or
// disagrees with the oracle's counts.
DiscoveryReport accumulate(std::span<const RoundRecord> records, const Oracle& oracle,
                           std::span<const PointId> initial_unlabeled, ReportInfo info);

enum class ReportFormat { csv, json };
ReportFormat parse_report_format(std::string_view name);
// From the extension: .csv or .json; config error otherwise.
ReportFormat report_format_for(const std::filesystem::path& path);

Json report_to_json(const DiscoveryReport& r);
DiscoveryReport report_from_json(const Json& j);

void export_report(const DiscoveryReport& r, const std::filesystem::path& path, ReportFormat format);
DiscoveryReport import_report(const std::filesystem::path& path, ReportFormat format);
DiscoveryReport import_report(const std::filesystem::path& path);

// Per-round cumulative unknowns side by side, with ratios against a
// reference report (the first baseline:random one, else the first report).
struct Comparison {
  std::string reference;
  std::vector<std::string> strategies;
  std::size_t rounds = 0;
  std::vector<std::vector<std::size_t>> cumulative;  // [strategy][round]
  std::vector<std::vector<double>> ratio;            // 0/0 = 1, x/0 = inf
  std::vector<std::string> warnings;
};

// Argument error on empty input; different round counts are cut to the
// shortest with a warning.
Comparison compare(std::span<const DiscoveryReport> reports);
// round,<strategy>,...,<strategy>/<reference>,...
void write_comparison(const Comparison& c, const std::filesystem::path& path);

}  // namespace smi
