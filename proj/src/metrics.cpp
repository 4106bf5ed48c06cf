#include "smi/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>

#include "smi/error.hpp"

namespace smi {

namespace fs = std::filesystem;

std::vector<std::size_t> DiscoveryReport::cumulative_curve() const {
  std::vector<std::size_t> c;
  for (const auto& r : rounds) c.push_back(r.cumulative_unknown);
  return c;
}

std::vector<std::size_t> DiscoveryReport::concept_curve(const std::string& concept_key) const {
  std::vector<std::size_t> c;
  std::size_t acc = 0;
  for (const auto& r : rounds) {
    auto it = r.concept_counts.find(concept_key);
    if (it != r.concept_counts.end()) acc += it->second;
    c.push_back(acc);
  }
  return c;
}

std::size_t DiscoveryReport::cumulative_at(std::size_t round) const {
  if (rounds.empty() || round == 0) return 0;
  return rounds[std::min(round, rounds.size()) - 1].cumulative_unknown;
}

DiscoveryReport accumulate(std::span<const RoundRecord> records, const Oracle& oracle,
                           std::span<const PointId> initial_unlabeled, ReportInfo info) {
  DiscoveryReport rep;
  rep.strategy = std::move(info.strategy);
  rep.strategy_kind = std::move(info.strategy_kind);
  rep.family = std::move(info.family);
  rep.seeds = std::move(info.seeds);
  rep.config = std::move(info.config);

  std::set<PointId> pool(initial_unlabeled.begin(), initial_unlabeled.end());
  for (auto id : pool) {
    if (oracle.has_unknown(id)) ++rep.unknown_pool;
  }
  std::size_t cumulative = 0;
  for (const auto& rec : records) {
    RoundSummary s;
    s.round = rec.round;
    s.phase = rec.phase;
    if (rec.function) s.function = std::string(to_string(*rec.function));
    s.selected = rec.selected.size();
    s.objective = rec.objective;
    s.stopped_early = rec.stopped_early;
    std::map<ConceptKey, std::size_t> counts;
    for (auto id : rec.selected) {
      if (!pool.erase(id)) {
        throw Error(ErrorKind::consistency, "round " + std::to_string(rec.round) + " selects point " +
                                                std::to_string(id) + " outside the remaining unlabeled pool");
      }
      for (const auto& c : oracle.of(id)) ++counts[c];
      if (oracle.has_unknown(id)) ++s.unknown_selected;
    }
    if (counts != rec.concept_counts || s.unknown_selected != rec.unknown_selected) {
      throw Error(ErrorKind::consistency, "round " + std::to_string(rec.round) + " counts disagree with the oracle");
    }
    for (const auto& [k, n] : counts) s.concept_counts[k.to_string()] = n;
    cumulative += s.unknown_selected;
    s.cumulative_unknown = cumulative;
    if (!rep.full_discovery_round && rep.unknown_pool > 0 && cumulative == rep.unknown_pool) {
      rep.full_discovery_round = s.round;
    }
    for (const auto& w : rec.warnings) rep.warnings.push_back("round " + std::to_string(rec.round) + ": " + w);
    rep.rounds.push_back(std::move(s));
  }
  return rep;
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "csv") return ReportFormat::csv;
  if (name == "json") return ReportFormat::json;
  throw Error(ErrorKind::config, "unknown report format '" + std::string(name) + "' (csv|json)");
}

ReportFormat report_format_for(const fs::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".csv") return ReportFormat::csv;
  if (ext == ".json") return ReportFormat::json;
  throw Error(ErrorKind::config, path.string() + ": cannot tell the report format from the extension");
}

Json report_to_json(const DiscoveryReport& r) {
  Json j;
  j["schema_version"] = kReportSchemaVersion;
  j["strategy"] = r.strategy;
  j["strategy_kind"] = r.strategy_kind;
  j["family"] = r.family;
  j["seeds"] = r.seeds;
  j["unknown_pool"] = r.unknown_pool;
  j["full_discovery_round"] = r.full_discovery_round ? Json(*r.full_discovery_round) : Json(nullptr);
  j["cumulative_unknown"] = r.cumulative_curve();
  Json rounds = Json::array();
  for (const auto& s : r.rounds) {
    Json o;
    o["round"] = s.round;
    o["phase"] = to_string(s.phase);
    o["function"] = s.function.empty() ? Json(nullptr) : Json(s.function);
    o["selected"] = s.selected;
    o["unknown_selected"] = s.unknown_selected;
    o["cumulative_unknown"] = s.cumulative_unknown;
    o["objective"] = s.objective;
    o["stopped_early"] = s.stopped_early;
    Json counts = Json::object();
    for (const auto& [k, n] : s.concept_counts) counts[k] = n;
    o["concept_counts"] = counts;
    o["accuracy"] = kNotComputed;
    o["average_precision"] = kNotComputed;
    rounds.push_back(std::move(o));
  }
  j["rounds"] = std::move(rounds);
  j["warnings"] = r.warnings;
  j["config"] = r.config;
  return j;
}

DiscoveryReport report_from_json(const Json& j) {
  try {
    if (j.at("schema_version").get<int>() != kReportSchemaVersion) {
      throw Error(ErrorKind::format, "unsupported report schema_version " + j.at("schema_version").dump());
    }
    DiscoveryReport r;
    r.strategy = j.at("strategy").get<std::string>();
    r.strategy_kind = j.at("strategy_kind").get<std::string>();
    r.family = j.at("family").get<std::string>();
    r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    r.unknown_pool = j.at("unknown_pool").get<std::size_t>();
    if (!j.at("full_discovery_round").is_null()) r.full_discovery_round = j["full_discovery_round"].get<std::size_t>();
    for (const auto& o : j.at("rounds")) {
      RoundSummary s;
      s.round = o.at("round").get<std::size_t>();
      s.phase = parse_phase(o.at("phase").get<std::string>());
      if (!o.at("function").is_null()) s.function = o["function"].get<std::string>();
      s.selected = o.at("selected").get<std::size_t>();
      s.unknown_selected = o.at("unknown_selected").get<std::size_t>();
      s.cumulative_unknown = o.at("cumulative_unknown").get<std::size_t>();
      s.objective = o.at("objective").get<double>();
      s.stopped_early = o.at("stopped_early").get<bool>();
      for (const auto& [k, n] : o.at("concept_counts").items()) s.concept_counts[k] = n.get<std::size_t>();
      r.rounds.push_back(std::move(s));
    }
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    r.config = j.at("config");
    if (j.at("cumulative_unknown").get<std::vector<std::size_t>>() != r.cumulative_curve()) {
      throw Error(ErrorKind::consistency, "report cumulative_unknown disagrees with its rounds");
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, std::string("malformed report: ") + e.what());
  }
}

namespace {

// Percent-encoding for the characters the CSV layout reserves.
std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '%' || c == ',' || c == '\n' || c == '\r' || c == ' ' || c == '=') {
      char buf[4];
      std::snprintf(buf, sizeof buf, "%%%02X", static_cast<unsigned char>(c));
      out += buf;
    } else {
      out += c;
    }
  }
  return out;
}

int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}

std::string unescape(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '%') {
      out += s[i];
      continue;
    }
    const int hi = i + 2 < s.size() ? hex_digit(s[i + 1]) : -1;
    const int lo = hi >= 0 ? hex_digit(s[i + 2]) : -1;
    if (lo < 0) throw Error(ErrorKind::format, "bad escape in report field");
    out += static_cast<char>(hi * 16 + lo);
    i += 2;
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

constexpr const char* kCsvColumns =
    "strategy,round,phase,function,selected,unknown_selected,cumulative_unknown,objective,stopped_early,accuracy,"
    "average_precision,concept_counts";

void write_csv(const DiscoveryReport& r, std::ostream& out) {
  out << "# schema_version=" << kReportSchemaVersion << '\n';
  out << "# strategy=" << escape(r.strategy) << '\n';
  out << "# strategy_kind=" << escape(r.strategy_kind) << '\n';
  out << "# family=" << escape(r.family) << '\n';
  out << "# seeds=";
  for (std::size_t i = 0; i < r.seeds.size(); ++i) out << (i ? ";" : "") << r.seeds[i];
  out << '\n';
  out << "# unknown_pool=" << r.unknown_pool << '\n';
  out << "# full_discovery_round=" << (r.full_discovery_round ? std::to_string(*r.full_discovery_round) : "none")
      << '\n';
  out << "# config=" << escape(r.config.dump()) << '\n';
  for (const auto& w : r.warnings) out << "# warning=" << escape(w) << '\n';
  out << kCsvColumns << '\n';
  for (const auto& s : r.rounds) {
    out << escape(r.strategy) << ',' << s.round << ',' << to_string(s.phase) << ',' << escape(s.function) << ','
        << s.selected << ',' << s.unknown_selected << ',' << s.cumulative_unknown << ',' << fmt_double(s.objective)
        << ',' << (s.stopped_early ? 1 : 0) << ',' << escape(kNotComputed) << ',' << escape(kNotComputed) << ',';
    bool first = true;
    for (const auto& [k, n] : s.concept_counts) {
      out << (first ? "" : " ") << escape(k) << '=' << n;
      first = false;
    }
    out << '\n';
  }
}

std::size_t parse_count(std::string_view s, std::string_view what) { return csv::parse_uint(s, what); }

DiscoveryReport read_csv(std::istream& in, const std::string& where) {
  DiscoveryReport r;
  std::string line;
  std::map<std::string, std::string> meta;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.starts_with("# ")) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw Error(ErrorKind::format, where + ": malformed metadata line");
      const auto key = line.substr(2, eq - 2);
      const auto value = unescape(line.substr(eq + 1));
      if (key == "warning") {
        r.warnings.push_back(value);
      } else {
        meta[key] = value;
      }
      continue;
    }
    if (!header_seen) {
      if (line != kCsvColumns) throw Error(ErrorKind::format, where + ": unexpected column header");
      header_seen = true;
      continue;
    }
    const auto f = csv::split(line);
    if (f.size() != 12) throw Error(ErrorKind::format, where + ": round row needs 12 fields");
    RoundSummary s;
    s.round = parse_count(f[1], "round");
    s.phase = parse_phase(f[2]);
    s.function = unescape(f[3]);
    s.selected = parse_count(f[4], "selected");
    s.unknown_selected = parse_count(f[5], "unknown_selected");
    s.cumulative_unknown = parse_count(f[6], "cumulative_unknown");
    s.objective = csv::parse_double(f[7], "objective");
    s.stopped_early = f[8] == "1";
    std::string_view counts = f[11];
    while (!counts.empty()) {
      const auto sp = counts.find(' ');
      const auto item = counts.substr(0, sp);
      const auto eq = item.rfind('=');
      if (eq == std::string_view::npos) throw Error(ErrorKind::format, where + ": malformed concept count");
      s.concept_counts[unescape(item.substr(0, eq))] = parse_count(item.substr(eq + 1), "concept count");
      counts = sp == std::string_view::npos ? std::string_view{} : counts.substr(sp + 1);
    }
    r.rounds.push_back(std::move(s));
  }
  if (!header_seen) throw Error(ErrorKind::format, where + ": no column header");
  auto need = [&](const std::string& k) -> const std::string& {
    auto it = meta.find(k);
    if (it == meta.end()) throw Error(ErrorKind::format, where + ": missing metadata '" + k + "'");
    return it->second;
  };
  if (need("schema_version") != std::to_string(kReportSchemaVersion)) {
    throw Error(ErrorKind::format, where + ": unsupported schema_version " + need("schema_version"));
  }
  r.strategy = need("strategy");
  r.strategy_kind = need("strategy_kind");
  r.family = need("family");
  for (auto part : csv::split(need("seeds"), ';')) {
    if (!part.empty()) r.seeds.push_back(csv::parse_uint(part, "seed"));
  }
  r.unknown_pool = parse_count(need("unknown_pool"), "unknown_pool");
  if (need("full_discovery_round") != "none") {
    r.full_discovery_round = parse_count(need("full_discovery_round"), "full_discovery_round");
  }
  try {
    r.config = Json::parse(need("config"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, where + ": config echo is not JSON: " + e.what());
  }
  return r;
}

}  // namespace

void export_report(const DiscoveryReport& r, const fs::path& path, ReportFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::data, "cannot write " + path.string());
  if (format == ReportFormat::json) {
    out << report_to_json(r).dump(2) << '\n';
  } else {
    write_csv(r, out);
  }
  if (!out) throw Error(ErrorKind::data, "write failed: " + path.string());
}

DiscoveryReport import_report(const fs::path& path, ReportFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::data, "cannot open " + path.string());
  if (format == ReportFormat::csv) return read_csv(in, path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, path.string() + ": " + e.what());
  }
  return report_from_json(j);
}

DiscoveryReport import_report(const fs::path& path) { return import_report(path, report_format_for(path)); }

Comparison compare(std::span<const DiscoveryReport> reports) {
  if (reports.empty()) throw Error(ErrorKind::argument, "compare needs at least one report");
  Comparison c;
  std::size_t ref = 0;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (reports[i].strategy_kind == "baseline:random") {
      ref = i;
      break;
    }
  }
  c.reference = reports[ref].strategy;
  c.rounds = reports.front().rounds.size();
  for (const auto& r : reports) c.rounds = std::min(c.rounds, r.rounds.size());
  for (const auto& r : reports) {
    if (r.rounds.size() != c.rounds) {
      c.warnings.push_back("'" + r.strategy + "' has " + std::to_string(r.rounds.size()) + " rounds; aligned to " +
                           std::to_string(c.rounds));
    }
  }
  const auto base = reports[ref].cumulative_curve();
  for (const auto& r : reports) {
    c.strategies.push_back(r.strategy);
    auto curve = r.cumulative_curve();
    curve.resize(c.rounds);
    std::vector<double> ratio(c.rounds);
    for (std::size_t k = 0; k < c.rounds; ++k) {
      if (base[k] == 0) {
        ratio[k] = curve[k] == 0 ? 1.0 : std::numeric_limits<double>::infinity();
      } else {
        ratio[k] = static_cast<double>(curve[k]) / static_cast<double>(base[k]);
      }
    }
    c.cumulative.push_back(std::move(curve));
    c.ratio.push_back(std::move(ratio));
  }
  return c;
}

void write_comparison(const Comparison& c, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::data, "cannot write " + path.string());
  out << "# reference=" << escape(c.reference) << '\n';
  for (const auto& w : c.warnings) out << "# warning=" << escape(w) << '\n';
  out << "round";
  for (const auto& s : c.strategies) out << ',' << escape(s);
  for (const auto& s : c.strategies) out << ',' << escape(s) << '/' << escape(c.reference);
  out << '\n';
  for (std::size_t k = 0; k < c.rounds; ++k) {
    out << k + 1;
    for (const auto& curve : c.cumulative) out << ',' << curve[k];
    for (const auto& ratio : c.ratio) out << ',' << (std::isinf(ratio[k]) ? "inf" : fmt_double(ratio[k]));
    out << '\n';
  }
}

}  // namespace smi
