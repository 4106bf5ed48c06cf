#include <CLI11.hpp>

#include <optional>

#include "smi/cli.hpp"
#include "smi/error.hpp"

namespace smi {

namespace fs = std::filesystem;

int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Active data discovery with submodular information measures", "smi-discover"};
  bool print_defaults = false;
  app.add_flag("--print-defaults", print_defaults, "Print the default configuration as JSON and exit");

  struct Common {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::size_t jobs = 1;
  };
  Common split_opts, run_opts, ablate_opts;
  auto common = [](CLI::App* sub, Common& c, bool jobs) {
    sub->add_option("--config", c.config, "Experiment config (JSON)")->required();
    sub->add_option("--out", c.out, "Output directory (default: output_dir from the config)");
    sub->add_option("--seed", c.seed, "Override the global seed");
    if (jobs) sub->add_option("--jobs", c.jobs, "Strategies run concurrently")->check(CLI::PositiveNumber);
  };
  auto* split = app.add_subcommand("split", "Build the discovery split and write its manifests");
  common(split, split_opts, false);
  auto* run = app.add_subcommand("run", "Run every configured strategy and write one report each");
  common(run, run_opts, true);
  auto* ablate = app.add_subcommand("ablate", "Run the eta x nu grid around the base strategy");
  common(ablate, ablate_opts, true);
  auto* cmp = app.add_subcommand("compare", "Tabulate cumulative discovery across report files");
  std::vector<std::string> report_files;
  std::string cmp_out;
  cmp->add_option("reports", report_files, "Report files (.json or .csv)");
  cmp->add_option("--out", cmp_out, "Comparison CSV to write (default: standard output)");
  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (print_defaults) {
      out << default_config().dump(2) << '\n';
      return 0;
    }
    auto load = [](const Common& c) {
      auto cfg = load_config(c.config);
      if (c.seed) {
        cfg.seed = *c.seed;
        apply_globals(cfg);
      }
      return cfg;
    };
    if (split->parsed()) {
      const auto cfg = load(split_opts);
      fs::path dir = split_opts.out;
      if (dir.empty()) dir = cfg.split.manifest_dir.value_or(cfg.output_dir);
      cmd_split(cfg, dir);
      err << "split manifests written to " << dir.string() << '\n';
    } else if (run->parsed()) {
      const auto cfg = load(run_opts);
      const fs::path dir = run_opts.out.empty() ? cfg.output_dir : fs::path(run_opts.out);
      const auto reports = cmd_run(cfg, dir, run_opts.jobs, &err);
      for (const auto& r : reports) {
        out << r.strategy << ": cumulative unknown " << (r.rounds.empty() ? 0 : r.rounds.back().cumulative_unknown)
            << "/" << r.unknown_pool << ", full discovery round "
            << (r.full_discovery_round ? std::to_string(*r.full_discovery_round) : "none") << '\n';
      }
    } else if (ablate->parsed()) {
      const auto cfg = load(ablate_opts);
      const fs::path dir = ablate_opts.out.empty() ? cfg.output_dir : fs::path(ablate_opts.out);
      const auto cells = cmd_ablate(cfg, dir, ablate_opts.jobs, &err);
      for (const auto& c : cells) {
        out << c.report.strategy << ": cumulative unknown at round " << cfg.ablation.report_round << " = "
            << c.report.cumulative_at(cfg.ablation.report_round) << '\n';
      }
    } else if (cmp->parsed()) {
      std::vector<fs::path> paths(report_files.begin(), report_files.end());
      const auto c = cmd_compare(paths, cmp_out);
      for (const auto& w : c.warnings) err << "warning: " << w << '\n';
      if (cmp_out.empty()) {
        out << "round";
        for (const auto& s : c.strategies) out << ',' << s;
        out << '\n';
        for (std::size_t k = 0; k < c.rounds; ++k) {
          out << k + 1;
          for (const auto& curve : c.cumulative) out << ',' << curve[k];
          out << '\n';
        }
      }
    } else {
      err << app.help();
      return 2;
    }
    return 0;
  } catch (const Error& e) {
    err << "smi-discover: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "smi-discover: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace smi
