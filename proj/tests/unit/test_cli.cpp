#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "doctest.h"
#include "smi/cli.hpp"
#include "smi/synthetic.hpp"

using namespace smi;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "smi-discover");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 5 classes x 60 points in 8 dimensions; classes 3 and 4 unknown.
struct Workdir {
  fs::path dir;
  Workdir() : dir(fs::temp_directory_path() / ("smi-cli-" + std::to_string(::getpid()))) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    SyntheticSpec s;
    s.classes = 5;
    s.per_class = 60;
    s.dim = 8;
    s.seed = 1;
    const auto d = gaussian_clusters(s);
    save_embeddings(d.embeddings, dir / "emb.f32", EmbeddingFormat::raw_f32);
    save_labels(d.labels, dir / "labels.csv");
    save_probabilities(nearest_mean_probabilities(d.embeddings, d.labels, {0, 1, 2}), dir / "probs.csv");
  }
  ~Workdir() { fs::remove_all(dir); }

  static Json base() {
    return Json::parse(R"({
      "embeddings": {"path": "emb.f32", "format": "raw-f32"},
      "labels": "labels.csv",
      "probabilities": "probs.csv",
      "split": {"known": [0, 1, 2], "unknown": [3, 4], "rho": 20, "per_known": 40, "per_unknown": 2,
                "labeled_per_known": 5},
      "strategies": [
        {"name": "smi", "strategy": "scg_then_smi", "budget": 5, "rounds": 4},
        {"name": "gc", "strategy": "scg_then_scmi", "family": "GC", "budget": 5, "rounds": 4},
        {"name": "random", "strategy": "baseline:random", "budget": 5, "rounds": 4},
        {"name": "entropy", "strategy": "baseline:entropy", "budget": 5, "rounds": 4},
        {"name": "badge", "strategy": "baseline:badge", "budget": 5, "rounds": 4}
      ],
      "ablation": {"eta": [0.5, 1.0], "nu": [1.0, 1.5]},
      "seed": 3
    })");
  }

  fs::path config(const Json& j, const std::string& name = "cfg.json") const {
    std::ofstream(dir / name) << j.dump(2);
    return dir / name;
  }
};

}  // namespace

TEST_CASE("help, usage errors and defaults") {
  CHECK(cli({"--help"}).code == 0);
  CHECK(cli({"run", "--help"}).code == 0);
  CHECK(cli({}).code == 2);
  CHECK(cli({"--bogus"}).code == 2);
  CHECK(cli({"run"}).code == 2);  // --config is required
  CHECK(cli({"run", "--config", "x.json", "--jobs", "0"}).code == 2);
  CHECK(cli({"launch"}).code == 2);
  const auto d = cli({"--print-defaults"});
  CHECK(d.code == 0);
  CHECK(Json::parse(d.out) == default_config());
}

TEST_CASE("exit codes follow the error class") {
  Workdir w;
  SUBCASE("config errors exit 2") {
    auto j = Workdir::base();
    j["unexpected"] = true;
    CHECK(cli({"run", "--config", w.config(j).string()}).code == 2);
    j = Workdir::base();
    j["labels"] = "missing.csv";
    const auto r = cli({"run", "--config", w.config(j).string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("labels") != std::string::npos);
    CHECK(cli({"run", "--config", (w.dir / "none.json").string()}).code == 2);
  }
  SUBCASE("data errors exit 3") {
    std::ofstream(w.dir / "broken.csv") << "id,class_id\n0,zero\n";
    auto j = Workdir::base();
    j["labels"] = "broken.csv";
    CHECK(cli({"run", "--config", w.config(j).string()}).code == 3);
    j = Workdir::base();
    j["split"]["per_known"] = 80;  // 60 points per class exist
    j["split"]["per_unknown"] = 4;
    CHECK(cli({"run", "--config", w.config(j).string()}).code == 3);
    j = Workdir::base();
    j["strategies"] = Json::array({{{"name", "p"}, {"strategy", "scg_only"}, {"rounds", 2}, {"provider", "false"}}});
    CHECK(cli({"run", "--config", w.config(j).string()}).code == 3);
  }
  SUBCASE("numerical errors exit 4") {
    // Clamped cosines of 8-dimensional data are far from positive definite.
    auto j = Workdir::base();
    j["strategies"] = Json::array({{{"name", "ld"}, {"strategy", "scg_only"}, {"family", "LOGDET"}}});
    const auto r = cli({"run", "--config", w.config(j).string()});
    CHECK(r.code == 4);
    CHECK(r.err.find("strategy 'ld'") != std::string::npos);
  }
}

TEST_CASE("run writes reports and is deterministic across job counts") {
  Workdir w;
  const auto cfg = w.config(Workdir::base()).string();
  const auto a = cli({"run", "--config", cfg, "--out", (w.dir / "a").string(), "--jobs", "1"});
  REQUIRE(a.code == 0);
  const auto b = cli({"run", "--config", cfg, "--out", (w.dir / "b").string(), "--jobs", "3"});
  REQUIRE(b.code == 0);
  for (const auto* name : {"smi", "gc", "random", "entropy", "badge"}) {
    CAPTURE(name);
    const auto ja = w.dir / "a" / (std::string(name) + ".json");
    const auto ca = w.dir / "a" / (std::string(name) + ".csv");
    REQUIRE(fs::exists(ja));
    REQUIRE(fs::exists(ca));
    CHECK(slurp(ja) == slurp(w.dir / "b" / (std::string(name) + ".json")));
    const auto rj = import_report(ja);
    CHECK(rj == import_report(ca));
    CHECK(rj.rounds.size() == 4);
    CHECK(rj.unknown_pool == 4);
    CHECK(rj.seeds == std::vector<std::uint64_t>{3});
    CHECK(rj.config["experiment"]["seed"] == 3);
    CHECK(rj.config["strategy"]["name"] == name);
  }
  CHECK(slurp(w.dir / "a" / "comparison.csv") == slurp(w.dir / "b" / "comparison.csv"));
  CHECK(slurp(w.dir / "a" / "comparison.csv").find("# reference=random") == 0);
  CHECK(a.err.find("[smi] round 1") != std::string::npos);

  // --seed overrides the configured seed.
  const auto c = cli({"run", "--config", cfg, "--out", (w.dir / "c").string(), "--seed", "77"});
  REQUIRE(c.code == 0);
  const auto rc = import_report(w.dir / "c" / "random.json");
  CHECK(rc.seeds == std::vector<std::uint64_t>{77});
  CHECK(rc.config["experiment"]["seed"] == 77);
}

TEST_CASE("split manifests pin the pools for later runs") {
  Workdir w;
  auto j = Workdir::base();
  j["split"]["manifest_dir"] = "manifests";
  const auto cfg = w.config(j).string();
  REQUIRE(cli({"split", "--config", cfg}).code == 0);
  CHECK(fs::exists(w.dir / "manifests" / "labeled.csv"));
  CHECK(fs::exists(w.dir / "manifests" / "unlabeled.csv"));
  REQUIRE(cli({"run", "--config", cfg, "--out", (w.dir / "m").string()}).code == 0);
  REQUIRE(cli({"run", "--config", w.config(Workdir::base(), "plain.json").string(), "--out",
               (w.dir / "p").string()})
              .code == 0);
  CHECK(import_report(w.dir / "m" / "smi.json").rounds == import_report(w.dir / "p" / "smi.json").rounds);
}

TEST_CASE("a provider returning the same embeddings reproduces the static run") {
  Workdir w;
  auto j = Workdir::base();
  j["strategies"] = Json::array({{{"name", "static"}, {"strategy", "scg_then_smi"}, {"budget", 5}, {"rounds", 4}},
                                 {{"name", "refreshed"},
                                  {"strategy", "scg_then_smi"},
                                  {"budget", 5},
                                  {"rounds", 4},
                                  {"provider", "cp " + (w.dir / "emb.f32").string()}}});
  const auto r = cli({"run", "--config", w.config(j).string()});
  REQUIRE(r.code == 0);
  const auto out = w.dir / "out";
  CHECK(import_report(out / "static.json").rounds == import_report(out / "refreshed.json").rounds);
  CHECK(fs::exists(out / "provider" / "refreshed-round2.f32"));
  CHECK(fs::exists(out / "provider" / "refreshed-round4.f32"));
}

TEST_CASE("ablate and compare") {
  Workdir w;
  const auto cfg = w.config(Workdir::base()).string();
  const auto r = cli({"ablate", "--config", cfg});
  REQUIRE(r.code == 0);
  const auto dir = w.dir / "out";
  for (const auto* cell : {"smi_eta0.5_nu1", "smi_eta0.5_nu1.5", "smi_eta1_nu1", "smi_eta1_nu1.5"}) {
    CHECK(fs::exists(dir / "ablation" / (std::string(cell) + ".json")));
  }
  const auto summary = slurp(dir / "ablation_summary.csv");
  CHECK(summary.find("strategy,eta,nu,cumulative_unknown_at_round_3,full_discovery_round\n") == 0);
  CHECK(std::count(summary.begin(), summary.end(), '\n') == 5);

  auto base_gc = Workdir::base();
  base_gc["ablation"]["base"] = "random";
  CHECK(cli({"ablate", "--config", w.config(base_gc, "bad.json").string()}).code == 2);

  const auto cmp = cli({"compare", (dir / "ablation" / "smi_eta1_nu1.json").string(),
                        (dir / "ablation" / "smi_eta1_nu1.5.csv").string()});
  REQUIRE(cmp.code == 0);
  CHECK(cmp.out.find("round,smi_eta1_nu1,smi_eta1_nu1.5\n1,") == 0);
  const auto to_file = cli({"compare", (dir / "ablation" / "smi_eta1_nu1.json").string(), "--out",
                            (dir / "cmp" / "table.csv").string()});
  CHECK(to_file.code == 0);
  CHECK(fs::exists(dir / "cmp" / "table.csv"));
  CHECK(cli({"compare"}).code == 2);
  CHECK(cli({"compare", (dir / "nothing.json").string()}).code == 3);
}
