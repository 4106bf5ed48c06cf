#include "smi/maximizer.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <queue>
#include <string>

#include "smi/error.hpp"
#include "smi/rng.hpp"

namespace smi {

GreedyMode parse_greedy_mode(std::string_view name) {
  if (name == "naive") return GreedyMode::naive;
  if (name == "lazy") return GreedyMode::lazy;
  if (name == "stochastic") return GreedyMode::stochastic;
  throw Error(ErrorKind::config, "unknown greedy mode '" + std::string(name) + "' (naive, lazy, stochastic)");
}

std::string_view to_string(GreedyMode m) {
  switch (m) {
    case GreedyMode::naive: return "naive";
    case GreedyMode::lazy: return "lazy";
    case GreedyMode::stochastic: return "stochastic";
  }
  return "?";
}

MergePolicy parse_merge_policy(std::string_view name) {
  if (name == "reselect") return MergePolicy::reselect;
  if (name == "quota") return MergePolicy::quota;
  throw Error(ErrorKind::config, "unknown merge policy '" + std::string(name) + "' (reselect, quota)");
}

std::string_view to_string(MergePolicy m) { return m == MergePolicy::reselect ? "reselect" : "quota"; }

namespace {

struct Candidate {
  std::size_t local;
  PointId id;
};

bool stops_on_nonpositive(const AcquisitionFunction& f, const GreedyOptions& o) {
  switch (o.stop) {
    case GreedyOptions::Stop::never: return false;
    case GreedyOptions::Stop::on_nonpositive: return true;
    case GreedyOptions::Stop::by_kind: return family_of(f.kind()) == Family::gc;
  }
  return false;
}

// Stale bounds are only upper bounds when gains never grow. That holds for
// the FL kinds, LOGDETCG and (with nonnegative kernels) every graph-cut kind,
// but not for differences of log-dets.
bool gains_nonincreasing(FunctionKind k) { return k != FunctionKind::LOGDETMI && k != FunctionKind::LOGDETCMI; }

// Best of (gain, id) pairs: larger gain, ties within tolerance to smaller id.
std::size_t pick(const std::vector<double>& gains, const std::vector<Candidate>& pool,
                 const std::vector<std::size_t>& which) {
  double best = -std::numeric_limits<double>::infinity();
  for (auto k : which) best = std::max(best, gains[k]);
  std::size_t arg = which.front();
  bool found = false;
  for (auto k : which) {
    if (gains[k] >= best - kTieTolerance && (!found || pool[k].id < pool[arg].id)) {
      arg = k;
      found = true;
    }
  }
  return arg;
}

class Run {
 public:
  Run(const AcquisitionFunction& f, std::span<const PointId> candidates, std::size_t budget, const GreedyOptions& o)
      : f_(f), o_(o), state_(f.start()) {
    if (candidates.empty()) throw Error(ErrorKind::argument, "greedy needs at least one candidate");
    if (budget == 0) throw Error(ErrorKind::argument, "greedy budget must be >= 1");
    pool_.reserve(candidates.size());
    for (auto id : candidates) pool_.push_back({f.index_of(id), id});
    std::sort(pool_.begin(), pool_.end(), [](const Candidate& a, const Candidate& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < pool_.size(); ++i) {
      if (pool_[i].id == pool_[i - 1].id) throw Error(ErrorKind::argument, "duplicate candidate " + std::to_string(pool_[i].id));
    }
    budget_ = std::min(budget, pool_.size());
    stop_ = stops_on_nonpositive(f, o);
    taken_.assign(pool_.size(), false);
  }

  SelectionResult operator()() {
    switch (o_.mode) {
      case GreedyMode::naive: naive(); break;
      case GreedyMode::lazy: lazy(); break;
      case GreedyMode::stochastic: stochastic(); break;
    }
    double sum = 0.0;
    for (double g : out_.gains) sum += g;
    out_.objective = sum;
    return std::move(out_);
  }

 private:
  // Returns false when the run stops early.
  bool commit(std::size_t k, double gain) {
    if (stop_ && gain <= 0.0) {
      out_.stopped_early = true;
      return false;
    }
    state_->add(pool_[k].local);
    taken_[k] = true;
    out_.chosen.push_back(pool_[k].id);
    out_.gains.push_back(gain);
    return true;
  }

  void evaluate(const std::vector<std::size_t>& which, std::vector<double>& gains) const {
    const auto m = static_cast<std::ptrdiff_t>(which.size());
    const GainState& st = *state_;
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t t = 0; t < m; ++t) {
      const auto k = which[static_cast<std::size_t>(t)];
      try {
        gains[k] = st.gain(pool_[k].local);
      } catch (...) {
#pragma omp critical(smi_greedy_error)
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
  }

  std::vector<std::size_t> remaining() const {
    std::vector<std::size_t> r;
    for (std::size_t k = 0; k < pool_.size(); ++k) {
      if (!taken_[k]) r.push_back(k);
    }
    return r;
  }

  void naive() {
    std::vector<double> gains(pool_.size());
    for (std::size_t step = 0; step < budget_; ++step) {
      const auto rest = remaining();
      evaluate(rest, gains);
      const auto k = pick(gains, pool_, rest);
      if (!commit(k, gains[k])) return;
    }
  }

  // Max-heap of stale upper bounds. Once the top is fresh, every entry whose
  // bound could still tie it is refreshed so the tie rule matches naive.
  void lazy() {
    if (!gains_nonincreasing(f_.kind())) {
      naive();
      return;
    }
    using Entry = std::pair<double, std::size_t>;  // (bound, pool index)
    auto cmp = [this](const Entry& a, const Entry& b) {
      if (a.first != b.first) return a.first < b.first;
      return pool_[a.second].id > pool_[b.second].id;
    };
    std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> heap(cmp);
    std::vector<double> gains(pool_.size());
    std::vector<std::size_t> fresh_at(pool_.size(), 0);
    {
      std::vector<std::size_t> all(pool_.size());
      for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
      evaluate(all, gains);
      for (auto k : all) heap.push({gains[k], k});
    }
    for (std::size_t step = 0; step < budget_; ++step) {
      const std::size_t epoch = step;  // gains computed at this step count as fresh
      for (;;) {
        auto [bound, k] = heap.top();
        if (fresh_at[k] == epoch) break;
        heap.pop();
        gains[k] = state_->gain(pool_[k].local);
        fresh_at[k] = epoch;
        heap.push({gains[k], k});
      }
      const double best = heap.top().first;
      // Pop everything that might tie, refresh, and choose by the tie rule.
      std::vector<std::size_t> close;
      while (!heap.empty() && heap.top().first >= best - kTieTolerance) {
        auto [bound, k] = heap.top();
        heap.pop();
        if (fresh_at[k] != epoch) {
          gains[k] = state_->gain(pool_[k].local);
          fresh_at[k] = epoch;
        }
        close.push_back(k);
      }
      // Refreshed gains may have dropped below best; the fresh top is still in close.
      const auto k = pick(gains, pool_, close);
      for (auto c : close) {
        if (c != k) heap.push({gains[c], c});
      }
      if (!commit(k, gains[k])) return;
    }
  }

  void stochastic() {
    const double n = static_cast<double>(pool_.size());
    const auto s = static_cast<std::size_t>(
        std::ceil(n / static_cast<double>(budget_) * std::log(1.0 / o_.epsilon)));
    CounterRng rng(o_.seed, hash_name("stochastic-greedy"));
    std::vector<double> gains(pool_.size());
    for (std::size_t step = 0; step < budget_; ++step) {
      auto rest = remaining();
      if (s < rest.size()) {
        // Partial Fisher-Yates: first s entries are a uniform sample.
        for (std::size_t i = 0; i < s; ++i) std::swap(rest[i], rest[i + rng.below(rest.size() - i)]);
        rest.resize(s);
      }
      evaluate(rest, gains);
      const auto k = pick(gains, pool_, rest);
      if (!commit(k, gains[k])) return;
    }
  }

  const AcquisitionFunction& f_;
  GreedyOptions o_;
  std::unique_ptr<GainState> state_;
  std::vector<Candidate> pool_;
  std::vector<bool> taken_;
  std::size_t budget_ = 0;
  bool stop_ = false;
  SelectionResult out_;
};

}  // namespace

SelectionResult greedy(const AcquisitionFunction& f, std::span<const PointId> candidates, std::size_t budget,
                       const GreedyOptions& opts) {
  return Run(f, candidates, budget, opts)();
}

SelectionResult partitioned_greedy(const FunctionBuilder& build, std::span<const PointId> candidates,
                                   std::size_t budget, const PartitionOptions& opts) {
  if (candidates.empty()) throw Error(ErrorKind::argument, "greedy needs at least one candidate");
  if (budget == 0) throw Error(ErrorKind::argument, "greedy budget must be >= 1");
  if (opts.parts == 0) throw Error(ErrorKind::argument, "partition count must be >= 1");
  if (opts.parts == 1) {
    const auto f = build(candidates);
    return greedy(*f, candidates, budget, opts.greedy);
  }
  const auto parts = partition_ground_set(candidates, opts.parts, opts.greedy.seed);
  const std::size_t p = parts.size();
  std::vector<std::size_t> local_budget(p, budget);
  if (opts.merge == MergePolicy::quota) {
    for (std::size_t i = 0; i < p; ++i) local_budget[i] = budget / p + (i < budget % p ? 1 : 0);
  }

  std::vector<SelectionResult> local(p);
  std::vector<std::exception_ptr> errors(p);
  // Partitions build their own kernels; run them one per thread.
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(p); ++i) {
    const auto u = static_cast<std::size_t>(i);
    try {
      if (local_budget[u] == 0) continue;
      const auto f = build(parts[u]);
      GreedyOptions g = opts.greedy;
      g.seed = splitmix64(opts.greedy.seed ^ (u + 1));
      local[u] = greedy(*f, parts[u], local_budget[u], g);
    } catch (...) {
      errors[u] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  SelectionResult out;
  for (std::size_t i = 0; i < p; ++i) {
    if (parts[i].size() < local_budget[i]) ++out.truncated_partitions;
  }
  if (opts.merge == MergePolicy::quota) {
    for (auto& r : local) {
      out.chosen.insert(out.chosen.end(), r.chosen.begin(), r.chosen.end());
      out.gains.insert(out.gains.end(), r.gains.begin(), r.gains.end());
      out.stopped_early = out.stopped_early || r.stopped_early;
    }
    double sum = 0.0;
    for (double g : out.gains) sum += g;
    out.objective = sum;
    return out;
  }

  std::vector<PointId> pooled;
  for (auto& r : local) pooled.insert(pooled.end(), r.chosen.begin(), r.chosen.end());
  std::sort(pooled.begin(), pooled.end());
  if (pooled.empty()) {
    out.stopped_early = true;
    return out;
  }
  const auto f = build(pooled);
  const std::size_t truncated = out.truncated_partitions;
  out = greedy(*f, pooled, budget, opts.greedy);
  out.truncated_partitions = truncated;
  return out;
}

}  // namespace smi
