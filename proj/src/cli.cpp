#include "smi/cli.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

#include "smi/error.hpp"
#include "smi/provider.hpp"

namespace smi {

namespace fs = std::filesystem;

namespace {

std::mutex log_mutex;
std::mutex sink_mutex;

void log_line(std::ostream* log, const std::string& line) {
  if (!log) return;
  std::lock_guard lock(log_mutex);
  *log << line << '\n' << std::flush;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void export_both(const DiscoveryReport& r, const fs::path& dir) {
  fs::create_directories(dir);
  const auto stem = report_stem(r.strategy);
  export_report(r, dir / (stem + ".json"), ReportFormat::json);
  export_report(r, dir / (stem + ".csv"), ReportFormat::csv);
}

}  // namespace

std::string report_stem(const std::string& name) {
  std::string s = name;
  for (char& c : s) {
    if (c == ':') c = '_';
  }
  return s;
}

DatasetSplit make_split(const ExperimentConfig& cfg, const LabelMap& labels) {
  if (cfg.split.manifest_dir) {
    const auto& d = *cfg.split.manifest_dir;
    if (fs::exists(d / "labeled.csv") && fs::exists(d / "unlabeled.csv")) {
      return load_split_manifests(d, labels, cfg.imbalance());
    }
  }
  return build_discovery_split(labels, cfg.imbalance());
}

Workspace load_workspace(const ExperimentConfig& cfg) {
  Workspace ws;
  if (cfg.detection) {
    auto corpus = std::make_shared<DetectionCorpus>(load_detection_manifest(cfg.detection->manifest));
    std::tie(ws.labeled, ws.unlabeled) = detection_pools(*corpus);
    ws.oracle = oracle_from_corpus(*corpus, cfg.detection->known_classes);
    ws.corpus = corpus;
    ws.domain = std::make_shared<DetectionDomain>(corpus, cfg.detection->known_classes, cfg.kernel.rectify);
  } else {
    if (!cfg.labels || !cfg.embeddings) throw Error(ErrorKind::config, "labels and embeddings are required");
    const auto labels = load_labels(*cfg.labels, cfg.class_count);
    ws.split = make_split(cfg, labels);
    ws.labeled = ws.split->labeled;
    ws.unlabeled = ws.split->unlabeled;
    ws.oracle = oracle_from_split(*ws.split);
    auto store = load_embeddings(cfg.embeddings->path, cfg.embeddings->format);
    if (cfg.embeddings->normalize && !store.normalized()) store = normalize(store);
    for (const auto* pool : {&ws.labeled, &ws.unlabeled}) {
      for (auto id : *pool) {
        if (!store.contains(id)) {
          throw Error(ErrorKind::data, "point " + std::to_string(id) + " has no embedding in " +
                                           cfg.embeddings->path.string());
        }
      }
    }
    ws.embeddings = std::make_shared<const EmbeddingStore>(std::move(store));
    ws.domain = std::make_shared<EmbeddingDomain>(ws.embeddings, cfg.kernel.rectify);
  }
  if (cfg.probabilities) {
    ws.probabilities = load_probabilities(*cfg.probabilities);
    for (auto id : ws.unlabeled) {
      if (!ws.probabilities->contains(id)) {
        throw Error(ErrorKind::data, "point " + std::to_string(id) + " has no row in " + cfg.probabilities->string());
      }
    }
  }
  return ws;
}

DiscoveryReport run_strategy(const Workspace& ws, const StrategySpec& spec, const ExperimentConfig& cfg,
                             const fs::path& work_dir, std::ostream* log) {
  spec.validate();
  RoundInputs in{ws.domain.get(), &ws.oracle, ws.probabilities ? &*ws.probabilities : nullptr,
                 ws.embeddings.get()};
  // Embeddings refreshed by the external provider live here between rounds.
  std::shared_ptr<const EmbeddingStore> live_store;
  DomainPtr live_domain;

  auto state = initial_state(ws.labeled, ws.unlabeled, ws.oracle);
  std::vector<RoundRecord> records;
  for (std::size_t r = 0; r < spec.rounds; ++r) {
    if (r > 0 && !spec.provider.empty() && !state.unlabeled.empty()) {
      fs::create_directories(work_dir);
      const auto path = work_dir / (report_stem(spec.name) + "-round" + std::to_string(state.round + 1) + ".f32");
      const std::vector<PointId> labeled(state.labeled.begin(), state.labeled.end());
      live_store = std::make_shared<const EmbeddingStore>(refresh_embeddings(spec.provider, labeled, path));
      live_domain = std::make_shared<EmbeddingDomain>(live_store, spec.rectify);
      in.domain = live_domain.get();
      in.features = live_store.get();
    }
    auto rec = run_round(state, spec, in);
    if (!rec) break;
    std::string line = "[" + spec.name + "] round " + std::to_string(rec->round) + " " +
                       std::string(to_string(rec->phase));
    if (rec->function) line += " " + std::string(to_string(*rec->function));
    line += " selected=" + std::to_string(rec->selected.size()) + " unknown=" + std::to_string(rec->unknown_selected) +
            " cumulative=" + std::to_string(rec->cumulative_unknown) + fmt(" (%.2f s)", rec->wall_seconds);
    log_line(log, line);
    for (const auto& w : rec->warnings) log_line(log, "[" + spec.name + "] warning: " + w);
    records.push_back(std::move(*rec));
  }

  ReportInfo info;
  info.strategy = spec.name;
  info.strategy_kind = spec.strategy_string();
  info.family = spec.strategy == Strategy::baseline ? "" : std::string(to_string(spec.family));
  info.seeds = {spec.seed};
  Json experiment = cfg.to_json();
  experiment.erase("strategies");
  info.config = {{"experiment", experiment}, {"strategy", strategy_to_json(spec)}};
  return accumulate(records, ws.oracle, ws.unlabeled, std::move(info));
}

std::vector<DiscoveryReport> run_all(const Workspace& ws, const std::vector<StrategySpec>& specs,
                                     const ExperimentConfig& cfg, const fs::path& work_dir, std::size_t jobs,
                                     std::ostream* log, const ReportSink& done) {
  std::vector<std::optional<DiscoveryReport>> out(specs.size());
  std::vector<std::exception_ptr> errors(specs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < specs.size(); i = next++) {
      try {
        out[i] = run_strategy(ws, specs[i], cfg, work_dir, log);
        if (done) {
          std::lock_guard lock(sink_mutex);
          done(*out[i]);
        }
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(specs.size(), 1));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const Error& e) {
      throw Error(e.kind(), "strategy '" + specs[i].name + "': " + e.message());
    }
  }
  std::vector<DiscoveryReport> reports;
  for (auto& r : out) reports.push_back(std::move(*r));
  return reports;
}

void cmd_split(const ExperimentConfig& cfg, const fs::path& out_dir) {
  if (cfg.detection) {
    throw Error(ErrorKind::config, "split works on classification labels; detection pools come from the manifest");
  }
  validate(cfg, false);
  const auto labels = load_labels(*cfg.labels, cfg.class_count);
  const auto split = build_discovery_split(labels, cfg.imbalance());
  write_split_manifests(split, out_dir);
}

std::vector<DiscoveryReport> cmd_run(const ExperimentConfig& cfg, const fs::path& out_dir, std::size_t jobs,
                                     std::ostream* log) {
  validate(cfg);
  const auto ws = load_workspace(cfg);
  auto reports = run_all(ws, cfg.strategies, cfg, out_dir / "provider", jobs, log,
                         [&](const DiscoveryReport& r) { export_both(r, out_dir); });
  write_comparison(compare(reports), out_dir / "comparison.csv");
  return reports;
}

std::vector<StrategySpec> ablation_grid(const ExperimentConfig& cfg) {
  const StrategySpec* base = nullptr;
  for (const auto& s : cfg.strategies) {
    const bool match = cfg.ablation.base.empty() ? s.strategy != Strategy::baseline : s.name == cfg.ablation.base;
    if (match) {
      base = &s;
      break;
    }
  }
  if (!base) throw Error(ErrorKind::config, "ablation needs a submodular base strategy");
  if (base->strategy == Strategy::baseline) {
    throw Error(ErrorKind::config, "ablation base '" + base->name + "' is a baseline; eta and nu do not apply");
  }
  std::vector<StrategySpec> grid;
  std::set<std::string> names;
  for (double eta : cfg.ablation.eta) {
    for (double nu : cfg.ablation.nu) {
      StrategySpec s = *base;
      s.params.eta = eta;
      s.params.nu = nu;
      s.name = base->name + "_eta" + fmt("%g", eta) + "_nu" + fmt("%g", nu);
      if (!names.insert(s.name).second) throw Error(ErrorKind::config, "ablation grid repeats cell " + s.name);
      grid.push_back(std::move(s));
    }
  }
  return grid;
}

std::vector<AblationCell> cmd_ablate(const ExperimentConfig& cfg, const fs::path& out_dir, std::size_t jobs,
                                     std::ostream* log) {
  validate(cfg);
  const auto grid = ablation_grid(cfg);
  const auto ws = load_workspace(cfg);
  const auto dir = out_dir / "ablation";
  auto reports = run_all(ws, grid, cfg, out_dir / "provider", jobs, log,
                         [&](const DiscoveryReport& r) { export_both(r, dir); });
  std::vector<AblationCell> cells;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    cells.push_back({grid[i].params.eta, grid[i].params.nu, std::move(reports[i])});
  }
  std::ofstream sum(out_dir / "ablation_summary.csv", std::ios::binary);
  if (!sum) throw Error(ErrorKind::data, "cannot write " + (out_dir / "ablation_summary.csv").string());
  const auto r = cfg.ablation.report_round;
  sum << "strategy,eta,nu,cumulative_unknown_at_round_" << r << ",full_discovery_round\n";
  for (const auto& c : cells) {
    sum << c.report.strategy << ',' << fmt("%.17g", c.eta) << ',' << fmt("%.17g", c.nu) << ','
        << c.report.cumulative_at(r) << ','
        << (c.report.full_discovery_round ? std::to_string(*c.report.full_discovery_round) : "none") << '\n';
  }
  return cells;
}

Comparison cmd_compare(const std::vector<fs::path>& paths, const fs::path& out_file) {
  if (paths.empty()) throw Error(ErrorKind::config, "compare needs at least one report file");
  std::vector<DiscoveryReport> reports;
  for (const auto& p : paths) reports.push_back(import_report(p));
  auto c = compare(reports);
  if (!out_file.empty()) {
    if (out_file.has_parent_path()) fs::create_directories(out_file.parent_path());
    write_comparison(c, out_file);
  }
  return c;
}

}  // namespace smi
