#include "smi/discovery.hpp"

#include <algorithm>
#include <chrono>

#include "smi/error.hpp"
#include "smi/rng.hpp"

namespace smi {

namespace {

constexpr std::pair<BaselineKind, std::string_view> kBaselines[] = {
    {BaselineKind::random, "random"},
    {BaselineKind::entropy, "entropy"},
    {BaselineKind::margin, "margin"},
    {BaselineKind::least_confidence, "least_confidence"},
    {BaselineKind::badge, "badge"},
};

constexpr std::pair<Strategy, std::string_view> kStrategies[] = {
    {Strategy::scg_then_smi, "scg_then_smi"},
    {Strategy::scg_only, "scg_only"},
    {Strategy::scg_then_scmi, "scg_then_scmi"},
};

std::uint64_t round_seed(std::uint64_t seed, std::size_t round) { return splitmix64(seed ^ splitmix64(round)); }

SelectionResult select_baseline(const StrategySpec& spec, const RoundInputs& in, std::span<const PointId> u,
                                std::uint64_t seed) {
  if (spec.baseline == BaselineKind::random) return random_select(u, spec.budget, seed);
  if (!in.probabilities) {
    throw Error(ErrorKind::config, "baseline:" + std::string(to_string(spec.baseline)) + " needs a probability table");
  }
  const auto& t = *in.probabilities;
  switch (spec.baseline) {
    case BaselineKind::entropy: return entropy_select(t, u, spec.budget);
    case BaselineKind::margin: return margin_select(t, u, spec.budget);
    case BaselineKind::least_confidence: return least_confidence_select(t, u, spec.budget);
    case BaselineKind::badge:
      if (!in.features) throw Error(ErrorKind::config, "baseline:badge needs feature embeddings");
      return badge_select(*in.features, t, u, spec.budget, seed);
    case BaselineKind::random: break;
  }
  throw Error(ErrorKind::argument, "unhandled baseline");
}

}  // namespace

std::string_view to_string(BaselineKind b) {
  for (auto [k, n] : kBaselines) {
    if (k == b) return n;
  }
  return "?";
}

std::string_view to_string(SwitchRule r) { return r == SwitchRule::prose ? "prose" : "literal"; }

SwitchRule parse_switch_rule(std::string_view name) {
  if (name == "prose") return SwitchRule::prose;
  if (name == "literal") return SwitchRule::literal;
  throw Error(ErrorKind::config, "unknown switch rule '" + std::string(name) + "' (prose|literal)");
}

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::conditioning: return "conditioning";
    case Phase::targeting: return "targeting";
    case Phase::baseline: return "baseline";
  }
  return "?";
}

Phase parse_phase(std::string_view name) {
  for (auto p : {Phase::conditioning, Phase::targeting, Phase::baseline}) {
    if (to_string(p) == name) return p;
  }
  throw Error(ErrorKind::format, "unknown phase '" + std::string(name) + "'");
}

std::string StrategySpec::strategy_string() const {
  if (strategy == Strategy::baseline) return "baseline:" + std::string(to_string(baseline));
  for (auto [k, n] : kStrategies) {
    if (k == strategy) return std::string(n);
  }
  return "?";
}

void StrategySpec::set_strategy(std::string_view text) {
  constexpr std::string_view prefix = "baseline:";
  if (text.starts_with(prefix)) {
    const auto rest = text.substr(prefix.size());
    for (auto [k, n] : kBaselines) {
      if (n == rest) {
        strategy = Strategy::baseline;
        baseline = k;
        return;
      }
    }
    throw Error(ErrorKind::config, "unknown baseline '" + std::string(rest) +
                                       "' (random|entropy|margin|least_confidence|badge)");
  }
  for (auto [k, n] : kStrategies) {
    if (n == text) {
      strategy = k;
      return;
    }
  }
  throw Error(ErrorKind::config, "unknown strategy '" + std::string(text) +
                                     "' (scg_then_smi|scg_only|scg_then_scmi|baseline:<name>)");
}

void StrategySpec::validate() const {
  const std::string who = "strategy '" + name + "': ";
  if (name.empty()) throw Error(ErrorKind::config, "strategy name is empty");
  if (budget == 0) throw Error(ErrorKind::config, who + "budget must be >= 1");
  if (rounds == 0) throw Error(ErrorKind::config, who + "rounds must be >= 1");
  if (partition_threshold == 0) throw Error(ErrorKind::config, who + "partition_threshold must be >= 1");
  if (!(greedy.epsilon > 0.0 && greedy.epsilon < 1.0)) {
    throw Error(ErrorKind::config, who + "stochastic epsilon must lie in (0, 1)");
  }
  try {
    params.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::config, who + e.message());
  }
}

DiscoveryState initial_state(std::span<const PointId> labeled, std::span<const PointId> unlabeled,
                             const Oracle& oracle) {
  DiscoveryState s;
  s.labeled.insert(labeled.begin(), labeled.end());
  s.unlabeled.insert(unlabeled.begin(), unlabeled.end());
  if (s.labeled.size() != labeled.size() || s.unlabeled.size() != unlabeled.size()) {
    throw Error(ErrorKind::consistency, "duplicate ids in the labeled or unlabeled pool");
  }
  for (auto id : s.labeled) {
    if (s.unlabeled.contains(id)) {
      throw Error(ErrorKind::consistency, "point " + std::to_string(id) + " is both labeled and unlabeled");
    }
  }
  s.coverage = oracle.known;
  for (auto id : s.labeled) {
    if (oracle.has_unknown(id)) {
      throw Error(ErrorKind::consistency, "labeled point " + std::to_string(id) + " carries an unknown concept");
    }
    s.conditioning.push_back(id);
    const auto& c = oracle.of(id);
    s.coverage.insert(c.begin(), c.end());
  }
  for (auto id : s.unlabeled) oracle.of(id);  // every candidate needs an oracle label
  return s;
}

bool phase_switch(const ConceptSet& prev_coverage, const ConceptSet& selected, SwitchRule rule) {
  if (rule == SwitchRule::prose) {
    return std::includes(prev_coverage.begin(), prev_coverage.end(), selected.begin(), selected.end());
  }
  return std::none_of(selected.begin(), selected.end(), [&](const ConceptKey& c) { return prev_coverage.contains(c); });
}

std::optional<RoundRecord> run_round(DiscoveryState& state, const StrategySpec& spec, const RoundInputs& in) {
  if (state.unlabeled.empty()) return std::nullopt;
  if (!in.oracle) throw Error(ErrorKind::argument, "run_round needs a labeling oracle");
  const auto t0 = std::chrono::steady_clock::now();

  RoundRecord rec;
  rec.round = ++state.round;
  const std::vector<PointId> u(state.unlabeled.begin(), state.unlabeled.end());
  const auto seed = round_seed(spec.seed, rec.round);

  SelectionResult res;
  if (spec.strategy == Strategy::baseline) {
    rec.phase = Phase::baseline;
    res = select_baseline(spec, in, u, seed);
  } else {
    if (!in.domain) throw Error(ErrorKind::argument, "submodular strategies need a similarity domain");
    Role role = Role::scg;
    if (spec.strategy != Strategy::scg_only && !state.unknown_flag) {
      if (state.query.empty()) {
        rec.warnings.push_back("targeting phase has an empty query set; continuing with conditional gain");
      } else {
        role = spec.strategy == Strategy::scg_then_scmi ? Role::scmi : Role::smi;
      }
    }
    rec.phase = role == Role::scg ? Phase::conditioning : Phase::targeting;
    const FunctionKind kind = kind_for(spec.family, role);
    rec.function = kind;

    GreedyOptions opts = spec.greedy;
    opts.seed = seed;
    auto build = [&](std::span<const PointId> ids) {
      return build_function(kind, *in.domain, state.conditioning, state.query, ids, spec.params);
    };
    std::size_t parts = spec.partitions;
    if (parts == 0) parts = (u.size() + spec.partition_threshold - 1) / spec.partition_threshold;
    parts = std::clamp<std::size_t>(parts, 1, u.size());
    if (parts == 1) {
      const auto f = build(u);
      res = greedy(*f, u, spec.budget, opts);
    } else {
      PartitionOptions po;
      po.parts = parts;
      po.merge = spec.merge;
      po.greedy = opts;
      res = partitioned_greedy(build, u, spec.budget, po);
    }
  }

  // Label the batch and route it into P and Q.
  ConceptSet batch;
  for (auto id : res.chosen) {
    if (!state.unlabeled.erase(id)) {
      throw Error(ErrorKind::consistency, "selected point " + std::to_string(id) + " is not unlabeled");
    }
    state.labeled.insert(id);
    const auto& cs = in.oracle->of(id);
    for (const auto& c : cs) {
      ++rec.concept_counts[c];
      batch.insert(c);
    }
    if (in.oracle->has_known(id)) state.conditioning.push_back(id);
    if (in.oracle->has_unknown(id)) {
      state.query.push_back(id);
      ++rec.unknown_selected;
    }
  }
  if (state.unknown_flag && phase_switch(state.coverage, batch, spec.switch_rule)) state.unknown_flag = false;
  state.coverage.insert(batch.begin(), batch.end());
  state.cumulative_unknown += rec.unknown_selected;

  rec.selected = res.chosen;
  rec.cumulative_unknown = state.cumulative_unknown;
  rec.objective = res.objective;
  rec.stopped_early = res.stopped_early;
  rec.truncated_partitions = res.truncated_partitions;
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  state.history.push_back(rec);
  return rec;
}

std::vector<RoundRecord> run_experiment(DiscoveryState state, const StrategySpec& spec, RoundInputs in,
                                        const RefreshHook& refresh) {
  spec.validate();
  std::vector<RoundRecord> out;
  for (std::size_t r = 0; r < spec.rounds; ++r) {
    if (r > 0 && refresh && !state.unlabeled.empty()) refresh(state, in);
    auto rec = run_round(state, spec, in);
    if (!rec) break;
    out.push_back(std::move(*rec));
  }
  return out;
}

}  // namespace smi
