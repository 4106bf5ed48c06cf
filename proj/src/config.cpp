#include "smi/config.hpp"

#include <cmath>
#include <fstream>

#include "smi/error.hpp"

namespace smi {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& why) {
  throw Error(ErrorKind::config, "config field '" + field + "': " + why);
}

void only_keys(const Json& j, const std::string& where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) bad(where.empty() ? "<root>" : where, "expected an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || a == k;
    if (!ok) bad(where.empty() ? k : where + "." + k, "unknown key");
  }
}

std::string join(const std::string& where, std::string_view key) {
  return where.empty() ? std::string(key) : where + "." + std::string(key);
}

template <class T>
T get(const Json& j, const std::string& field) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    bad(field, "wrong type (" + std::string(j.type_name()) + ")");
  }
}

std::size_t get_count(const Json& j, const std::string& field) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0)) {
    bad(field, "expected a nonnegative integer");
  }
  return j.get<std::size_t>();
}

double get_number(const Json& j, const std::string& field) {
  if (!j.is_number()) bad(field, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) bad(field, "must be finite");
  return v;
}

fs::path get_path(const Json& j, const std::string& field, const fs::path& base) {
  fs::path p = get<std::string>(j, field);
  if (p.empty()) bad(field, "empty path");
  return p.is_relative() && !base.empty() ? base / p : p;
}

ConceptSet get_concepts(const Json& j, const std::string& field) {
  if (!j.is_array()) bad(field, "expected an array of concept keys");
  ConceptSet out;
  for (const auto& v : j) {
    std::string text;
    if (v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0)) {
      text = std::to_string(v.get<std::uint64_t>());
    } else if (v.is_string()) {
      text = v.get<std::string>();
    } else {
      bad(field, "concept keys are class ids or \"class|attr;...\" strings");
    }
    try {
      if (!out.insert(ConceptLabel::parse(text)).second) bad(field, "duplicate concept '" + text + "'");
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::config) throw;
      bad(field, e.message());
    }
  }
  return out;
}

template <class F>
auto parse_enum(const Json& j, const std::string& field, F parse) {
  try {
    return parse(get<std::string>(j, field));
  } catch (const Error& e) {
    if (e.message().starts_with("config field")) throw;
    bad(field, e.message());
  }
}

std::vector<double> get_grid(const Json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) bad(field, "expected a nonempty array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const double v = get_number(j[i], field + "[" + std::to_string(i) + "]");
    if (v < 0) bad(field, "values must be >= 0");
    out.push_back(v);
  }
  return out;
}

StrategySpec parse_strategy(const Json& j, const std::string& where) {
  only_keys(j, where,
            {"name", "strategy", "family", "eta", "nu", "lambda", "epsilon_reg", "budget", "rounds", "greedy",
             "stochastic_epsilon", "switch_rule", "provider"});
  StrategySpec s;
  if (!j.contains("strategy")) bad(join(where, "strategy"), "required");
  try {
    s.set_strategy(get<std::string>(j["strategy"], join(where, "strategy")));
  } catch (const Error& e) {
    bad(join(where, "strategy"), e.message());
  }
  if (j.contains("family")) s.family = parse_enum(j["family"], join(where, "family"), parse_family);
  if (j.contains("eta")) s.params.eta = get_number(j["eta"], join(where, "eta"));
  if (j.contains("nu")) s.params.nu = get_number(j["nu"], join(where, "nu"));
  if (j.contains("lambda")) s.params.lambda = get_number(j["lambda"], join(where, "lambda"));
  if (j.contains("epsilon_reg")) s.params.epsilon_reg = get_number(j["epsilon_reg"], join(where, "epsilon_reg"));
  if (j.contains("budget")) s.budget = get_count(j["budget"], join(where, "budget"));
  if (j.contains("rounds")) s.rounds = get_count(j["rounds"], join(where, "rounds"));
  if (j.contains("greedy")) s.greedy.mode = parse_enum(j["greedy"], join(where, "greedy"), parse_greedy_mode);
  if (j.contains("stochastic_epsilon")) {
    s.greedy.epsilon = get_number(j["stochastic_epsilon"], join(where, "stochastic_epsilon"));
  }
  if (j.contains("switch_rule")) {
    s.switch_rule = parse_enum(j["switch_rule"], join(where, "switch_rule"), parse_switch_rule);
  }
  if (j.contains("provider") && !j["provider"].is_null()) {
    s.provider = get<std::string>(j["provider"], join(where, "provider"));
  }
  if (j.contains("name")) {
    s.name = get<std::string>(j["name"], join(where, "name"));
  } else if (s.strategy == Strategy::baseline) {
    s.name = "baseline-" + std::string(to_string(s.baseline));
  } else {
    s.name = s.strategy_string() + "-" + std::string(to_string(s.family));
  }
  return s;
}

}  // namespace

Json strategy_to_json(const StrategySpec& s) {
  Json j;
  j["name"] = s.name;
  j["strategy"] = s.strategy_string();
  j["family"] = to_string(s.family);
  j["eta"] = s.params.eta;
  j["nu"] = s.params.nu;
  j["lambda"] = s.params.lambda;
  j["epsilon_reg"] = s.params.epsilon_reg;
  j["budget"] = s.budget;
  j["rounds"] = s.rounds;
  j["greedy"] = to_string(s.greedy.mode);
  j["stochastic_epsilon"] = s.greedy.epsilon;
  j["switch_rule"] = to_string(s.switch_rule);
  j["provider"] = s.provider.empty() ? Json(nullptr) : Json(s.provider);
  return j;
}

namespace {

Json concepts_json(const ConceptSet& cs) {
  Json a = Json::array();
  for (const auto& c : cs) a.push_back(c.to_string());
  return a;
}

bool file_safe(const std::string& name) {
  if (name.empty() || name == "." || name == "..") return false;
  for (char c : name) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.' || c == ':';
    if (!ok) return false;
  }
  return true;
}

}  // namespace

ImbalanceSpec ExperimentConfig::imbalance() const {
  ImbalanceSpec s;
  s.known = split.known;
  s.unknown = split.unknown;
  s.rho = split.rho;
  s.per_known_count = split.per_known;
  s.per_unknown_count = split.per_unknown;
  s.labeled_per_known = split.labeled_per_known;
  s.seed = split_seed();
  return s;
}

Json ExperimentConfig::to_json() const {
  Json j;
  if (embeddings) {
    j["embeddings"] = {{"path", embeddings->path.string()},
                       {"format", embeddings->format == EmbeddingFormat::csv ? "csv" : "raw-f32"},
                       {"normalize", embeddings->normalize}};
  } else {
    j["embeddings"] = nullptr;
  }
  j["labels"] = labels ? Json(labels->string()) : Json(nullptr);
  j["class_count"] = class_count ? Json(*class_count) : Json(nullptr);
  j["probabilities"] = probabilities ? Json(probabilities->string()) : Json(nullptr);
  if (detection) {
    j["detection"] = {{"manifest", detection->manifest.string()}, {"known_classes", detection->known_classes}};
  } else {
    j["detection"] = nullptr;
  }
  j["split"] = {{"known", concepts_json(split.known)},
                {"unknown", concepts_json(split.unknown)},
                {"rho", split.rho},
                {"per_known", split.per_known},
                {"per_unknown", split.per_unknown},
                {"labeled_per_known", split.labeled_per_known},
                {"seed", split.seed ? Json(*split.seed) : Json(nullptr)},
                {"manifest_dir", split.manifest_dir ? Json(split.manifest_dir->string()) : Json(nullptr)}};
  j["kernel"] = {{"rectify", to_string(kernel.rectify)},
                 {"partition_threshold", kernel.partition_threshold},
                 {"partitions", kernel.partitions},
                 {"merge", to_string(kernel.merge)}};
  Json st = Json::array();
  for (const auto& s : strategies) st.push_back(strategy_to_json(s));
  j["strategies"] = st;
  j["ablation"] = {{"base", ablation.base},
                   {"eta", ablation.eta},
                   {"nu", ablation.nu},
                   {"report_round", ablation.report_round}};
  j["output_dir"] = output_dir.string();
  j["seed"] = seed;
  return j;
}

Json default_config() {
  ExperimentConfig c;
  c.embeddings = EmbeddingSource{"embeddings.csv", EmbeddingFormat::csv, true};
  c.labels = "labels.csv";
  for (std::uint32_t k = 0; k < 7; ++k) c.split.known.insert(ConceptLabel{k, {}});
  for (std::uint32_t k = 7; k < 10; ++k) c.split.unknown.insert(ConceptLabel{k, {}});
  StrategySpec add;
  add.name = "scg_then_smi-fl";
  StrategySpec random;
  random.set_strategy("baseline:random");
  random.name = "baseline-random";
  c.strategies = {add, random};
  c.ablation.eta = {0.5, 1.0, 2.0};
  c.ablation.nu = {1.0, 1.5, 1.7};
  return c.to_json();
}

ExperimentConfig parse_config(const Json& j, const fs::path& base) {
  only_keys(j, "",
            {"embeddings", "labels", "class_count", "probabilities", "detection", "split", "kernel", "strategies",
             "ablation", "output_dir", "seed"});
  ExperimentConfig c;
  if (j.contains("seed")) c.seed = get<std::uint64_t>(j["seed"], "seed");
  if (j.contains("embeddings") && !j["embeddings"].is_null()) {
    const auto& e = j["embeddings"];
    only_keys(e, "embeddings", {"path", "format", "normalize"});
    if (!e.contains("path")) bad("embeddings.path", "required");
    EmbeddingSource src;
    src.path = get_path(e["path"], "embeddings.path", base);
    if (e.contains("format")) src.format = parse_enum(e["format"], "embeddings.format", parse_embedding_format);
    if (e.contains("normalize")) src.normalize = get<bool>(e["normalize"], "embeddings.normalize");
    c.embeddings = src;
  }
  if (j.contains("labels") && !j["labels"].is_null()) c.labels = get_path(j["labels"], "labels", base);
  if (j.contains("class_count") && !j["class_count"].is_null()) {
    c.class_count = static_cast<std::uint32_t>(get_count(j["class_count"], "class_count"));
  }
  if (j.contains("probabilities") && !j["probabilities"].is_null()) {
    c.probabilities = get_path(j["probabilities"], "probabilities", base);
  }
  if (j.contains("detection") && !j["detection"].is_null()) {
    const auto& d = j["detection"];
    only_keys(d, "detection", {"manifest", "known_classes"});
    if (!d.contains("manifest")) bad("detection.manifest", "required");
    DetectionConfig dc;
    dc.manifest = get_path(d["manifest"], "detection.manifest", base);
    if (!d.contains("known_classes")) bad("detection.known_classes", "required");
    for (const auto& v : d["known_classes"]) dc.known_classes.insert(get<std::uint32_t>(v, "detection.known_classes"));
    c.detection = dc;
  }
  if (j.contains("split")) {
    const auto& s = j["split"];
    only_keys(s, "split",
              {"known", "unknown", "rho", "per_known", "per_unknown", "labeled_per_known", "seed", "manifest_dir"});
    if (s.contains("known")) c.split.known = get_concepts(s["known"], "split.known");
    if (s.contains("unknown")) c.split.unknown = get_concepts(s["unknown"], "split.unknown");
    if (s.contains("rho")) c.split.rho = get_number(s["rho"], "split.rho");
    if (s.contains("per_known")) c.split.per_known = get_count(s["per_known"], "split.per_known");
    if (s.contains("per_unknown")) c.split.per_unknown = get_count(s["per_unknown"], "split.per_unknown");
    if (s.contains("labeled_per_known")) {
      c.split.labeled_per_known = get_count(s["labeled_per_known"], "split.labeled_per_known");
    }
    if (s.contains("seed") && !s["seed"].is_null()) c.split.seed = get<std::uint64_t>(s["seed"], "split.seed");
    if (s.contains("manifest_dir") && !s["manifest_dir"].is_null()) {
      c.split.manifest_dir = get_path(s["manifest_dir"], "split.manifest_dir", base);
    }
  }
  if (j.contains("kernel")) {
    const auto& k = j["kernel"];
    only_keys(k, "kernel", {"rectify", "partition_threshold", "partitions", "merge"});
    if (k.contains("rectify")) c.kernel.rectify = parse_enum(k["rectify"], "kernel.rectify", parse_rectify);
    if (k.contains("partition_threshold")) {
      c.kernel.partition_threshold = get_count(k["partition_threshold"], "kernel.partition_threshold");
      if (c.kernel.partition_threshold == 0) bad("kernel.partition_threshold", "must be >= 1");
    }
    if (k.contains("partitions")) c.kernel.partitions = get_count(k["partitions"], "kernel.partitions");
    if (k.contains("merge")) c.kernel.merge = parse_enum(k["merge"], "kernel.merge", parse_merge_policy);
  }
  if (j.contains("strategies")) {
    const auto& st = j["strategies"];
    if (!st.is_array()) bad("strategies", "expected an array");
    for (std::size_t i = 0; i < st.size(); ++i) {
      c.strategies.push_back(parse_strategy(st[i], "strategies[" + std::to_string(i) + "]"));
    }
  }
  if (j.contains("ablation")) {
    const auto& a = j["ablation"];
    only_keys(a, "ablation", {"base", "eta", "nu", "report_round"});
    if (a.contains("base")) c.ablation.base = get<std::string>(a["base"], "ablation.base");
    if (a.contains("eta")) c.ablation.eta = get_grid(a["eta"], "ablation.eta");
    if (a.contains("nu")) c.ablation.nu = get_grid(a["nu"], "ablation.nu");
    if (a.contains("report_round")) {
      c.ablation.report_round = get_count(a["report_round"], "ablation.report_round");
      if (c.ablation.report_round == 0) bad("ablation.report_round", "must be >= 1");
    }
  }
  if (j.contains("output_dir")) {
    c.output_dir = get_path(j["output_dir"], "output_dir", base);
  } else if (!base.empty()) {
    c.output_dir = base / c.output_dir;
  }
  apply_globals(c);
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::config, "cannot open config " + path.string());
  Json j;
  try {
    j = Json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config, path.string() + ": not valid JSON: " + e.what());
  }
  return parse_config(j, path.parent_path());
}

void apply_globals(ExperimentConfig& cfg) {
  for (auto& s : cfg.strategies) {
    s.seed = cfg.seed;
    s.rectify = cfg.kernel.rectify;
    s.partition_threshold = cfg.kernel.partition_threshold;
    s.partitions = cfg.kernel.partitions;
    s.merge = cfg.kernel.merge;
  }
}

void validate(const ExperimentConfig& cfg, bool need_strategies) {
  auto must_exist = [](const fs::path& p, const std::string& field) {
    if (!fs::exists(p)) bad(field, "file not found: " + p.string());
  };
  if (cfg.detection) {
    must_exist(cfg.detection->manifest, "detection.manifest");
    if (cfg.detection->known_classes.empty()) bad("detection.known_classes", "must not be empty");
  } else {
    if (!cfg.embeddings && need_strategies) bad("embeddings", "required without a detection manifest");
    if (!cfg.labels) bad("labels", "required without a detection manifest");
    if (cfg.embeddings) must_exist(cfg.embeddings->path, "embeddings.path");
    must_exist(*cfg.labels, "labels");
    try {
      cfg.imbalance().validate();
    } catch (const Error& e) {
      bad("split", e.message());
    }
  }
  if (cfg.probabilities) must_exist(*cfg.probabilities, "probabilities");
  if (!need_strategies) return;
  if (cfg.strategies.empty()) bad("strategies", "at least one strategy is required");
  std::set<std::string> names;
  for (std::size_t i = 0; i < cfg.strategies.size(); ++i) {
    const auto& s = cfg.strategies[i];
    const std::string where = "strategies[" + std::to_string(i) + "]";
    if (!file_safe(s.name)) bad(where + ".name", "'" + s.name + "' must be nonempty [A-Za-z0-9._:-]");
    if (!names.insert(s.name).second) bad(where + ".name", "duplicate strategy name '" + s.name + "'");
    try {
      s.validate();
    } catch (const Error& e) {
      bad(where, e.message());
    }
    if (s.strategy == Strategy::baseline) {
      const bool needs_table = s.baseline != BaselineKind::random;
      if (needs_table && !cfg.probabilities) bad(where + ".strategy", s.strategy_string() + " needs 'probabilities'");
      if (s.baseline == BaselineKind::badge && cfg.detection) {
        bad(where + ".strategy", "baseline:badge needs per-point embeddings, not available for detection");
      }
    } else if (cfg.detection && s.family == Family::logdet) {
      bad(where + ".family", "log-det functions are not available for detection");
    }
    if (!s.provider.empty() && cfg.detection) bad(where + ".provider", "embedding providers need embeddings");
  }
  const bool has_base = cfg.ablation.base.empty() || names.contains(cfg.ablation.base);
  if (!has_base) bad("ablation.base", "no strategy named '" + cfg.ablation.base + "'");
}

}  // namespace smi
