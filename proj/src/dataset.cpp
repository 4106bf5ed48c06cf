#include "smi/dataset.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "smi/error.hpp"
#include "smi/rng.hpp"

namespace smi {

namespace csv {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

double parse_double(std::string_view field, std::string_view what) {
  double v = 0.0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    // from_chars rejects "inf"/"nan" spellings with a sign; fall back to strtod
    // so that such entries surface as data errors rather than format errors.
    std::string tmp(field);
    char* e = nullptr;
    v = std::strtod(tmp.c_str(), &e);
    if (tmp.empty() || e != tmp.c_str() + tmp.size()) {
      throw Error(ErrorKind::format, "cannot parse number '" + tmp + "' in " + std::string(what));
    }
  }
  return v;
}

std::uint64_t parse_uint(std::string_view field, std::string_view what) {
  std::uint64_t v = 0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || ptr != end || field.empty()) {
    throw Error(ErrorKind::format,
                "cannot parse unsigned integer '" + std::string(field) + "' in " + std::string(what));
  }
  return v;
}

}  // namespace csv

namespace {

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw Error(ErrorKind::data, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw Error(ErrorKind::data, "cannot write " + path.string());
  return out;
}

std::uint32_t read_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void write_u32_le(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                              static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b.data(), 4);
}

float load_f32_le(const unsigned char* p) {
  std::uint32_t bits = read_u32_le(p);
  return std::bit_cast<float>(bits);
}

EmbeddingStore load_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || csv::trim(line).empty()) {
    throw Error(ErrorKind::data, path.string() + " is empty");
  }
  const auto header = csv::split(line);
  if (header.size() < 2 || header[0] != "id") {
    throw Error(ErrorKind::format, path.string() + ": header must be id,f0,...,f{D-1}");
  }
  for (std::size_t j = 1; j < header.size(); ++j) {
    if (header[j] != "f" + std::to_string(j - 1)) {
      throw Error(ErrorKind::format, path.string() + ": unexpected header column '" +
                                         std::string(header[j]) + "'");
    }
  }
  const std::size_t dim = header.size() - 1;
  std::vector<PointId> ids;
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (csv::trim(line).empty()) continue;
    const auto fields = csv::split(line);
    if (fields.size() != dim + 1) {
      throw Error(ErrorKind::format, path.string() + ": row " + std::to_string(ids.size()) +
                                         " has " + std::to_string(fields.size()) + " fields, expected " +
                                         std::to_string(dim + 1));
    }
    ids.push_back(csv::parse_uint(fields[0], "id column"));
    for (std::size_t j = 1; j <= dim; ++j) values.push_back(csv::parse_double(fields[j], path.string()));
  }
  if (ids.empty()) throw Error(ErrorKind::data, path.string() + " has no rows");
  RowMatrix data = Eigen::Map<RowMatrix>(values.data(), static_cast<Eigen::Index>(ids.size()),
                                         static_cast<Eigen::Index>(dim));
  return EmbeddingStore(std::move(ids), std::move(data), false);
}

EmbeddingStore load_raw(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.empty()) throw Error(ErrorKind::data, path.string() + " is empty");
  if (bytes.size() < 16 || std::memcmp(bytes.data(), "SDE1", 4) != 0) {
    throw Error(ErrorKind::format, path.string() + ": missing SDE1 header");
  }
  const std::uint32_t n = read_u32_le(bytes.data() + 4);
  const std::uint32_t d = read_u32_le(bytes.data() + 8);
  const std::uint32_t flags = read_u32_le(bytes.data() + 12);
  if (d == 0) throw Error(ErrorKind::format, path.string() + ": D must be positive");
  const std::size_t expected = 16 + static_cast<std::size_t>(n) * d * 4;
  if (bytes.size() != expected) {
    throw Error(ErrorKind::format, path.string() + ": payload is " + std::to_string(bytes.size()) +
                                       " bytes, header implies " + std::to_string(expected));
  }
  if (n == 0) throw Error(ErrorKind::data, path.string() + " has no rows");
  RowMatrix data(n, d);
  const unsigned char* p = bytes.data() + 16;
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 0; j < d; ++j, p += 4) data(i, j) = load_f32_le(p);
  }
  std::vector<PointId> ids(n);
  for (std::uint32_t i = 0; i < n; ++i) ids[i] = i;
  return EmbeddingStore(std::move(ids), std::move(data), (flags & 1u) != 0);
}

}  // namespace

EmbeddingStore::EmbeddingStore(std::vector<PointId> ids, RowMatrix data, bool normalized)
    : ids_(std::move(ids)), data_(std::move(data)), normalized_(normalized) {
  if (static_cast<Eigen::Index>(ids_.size()) != data_.rows()) {
    throw Error(ErrorKind::shape, "embedding store has " + std::to_string(ids_.size()) + " ids but " +
                                      std::to_string(data_.rows()) + " rows");
  }
  if (!ids_.empty() && data_.cols() == 0) throw Error(ErrorKind::shape, "embedding dimension must be positive");
  index_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!data_.row(static_cast<Eigen::Index>(i)).allFinite()) {
      throw Error(ErrorKind::data, "non-finite value in embedding row " + std::to_string(i));
    }
    if (!index_.emplace(ids_[i], i).second) {
      throw Error(ErrorKind::data, "duplicate point id " + std::to_string(ids_[i]));
    }
    if (normalized_) {
      const double norm = data_.row(static_cast<Eigen::Index>(i)).norm();
      if (std::abs(norm - 1.0) > 1e-6) {
        throw Error(ErrorKind::data, "row " + std::to_string(i) + " flagged normalized but has norm " +
                                         std::to_string(norm));
      }
    }
  }
}

std::size_t EmbeddingStore::index_of(PointId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw Error(ErrorKind::lookup, "point id " + std::to_string(id) + " not in store");
  return it->second;
}

EmbeddingFormat parse_embedding_format(std::string_view name) {
  if (name == "csv") return EmbeddingFormat::csv;
  if (name == "raw-f32" || name == "raw_f32") return EmbeddingFormat::raw_f32;
  throw Error(ErrorKind::config, "unknown embedding format '" + std::string(name) + "'");
}

EmbeddingStore load_embeddings(const std::filesystem::path& path, EmbeddingFormat format) {
  return format == EmbeddingFormat::csv ? load_csv(path) : load_raw(path);
}

void save_embeddings(const EmbeddingStore& store, const std::filesystem::path& path, EmbeddingFormat format) {
  if (format == EmbeddingFormat::csv) {
    auto out = open_out(path);
    out << "id";
    for (std::size_t j = 0; j < store.dim(); ++j) out << ",f" << j;
    out << '\n';
    std::array<char, 32> buf{};
    for (std::size_t i = 0; i < store.size(); ++i) {
      out << store.ids()[i];
      for (std::size_t j = 0; j < store.dim(); ++j) {
        auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(),
                                       store.data()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        out << ',' << std::string_view(buf.data(), static_cast<std::size_t>(ptr - buf.data()));
      }
      out << '\n';
    }
    return;
  }
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (store.ids()[i] != i) {
      throw Error(ErrorKind::argument, "raw-f32 stores ids implicitly; ids must be 0..N-1 in order");
    }
  }
  auto out = open_out(path, std::ios::binary);
  out.write("SDE1", 4);
  write_u32_le(out, static_cast<std::uint32_t>(store.size()));
  write_u32_le(out, static_cast<std::uint32_t>(store.dim()));
  write_u32_le(out, store.normalized() ? 1u : 0u);
  for (Eigen::Index i = 0; i < store.data().rows(); ++i) {
    for (Eigen::Index j = 0; j < store.data().cols(); ++j) {
      write_u32_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(store.data()(i, j))));
    }
  }
}

EmbeddingStore normalize(const EmbeddingStore& store) {
  RowMatrix data = store.data();
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const double norm = data.row(i).norm();
    if (norm == 0.0) throw Error(ErrorKind::data, "cannot normalize zero-norm row " + std::to_string(i));
    data.row(i) /= norm;
  }
  return EmbeddingStore(store.ids(), std::move(data), true);
}

std::string ConceptLabel::to_string() const {
  std::string s = std::to_string(class_id);
  if (!attributes.empty()) {
    s += '|';
    for (std::size_t i = 0; i < attributes.size(); ++i) {
      if (i) s += ';';
      s += attributes[i];
    }
  }
  return s;
}

ConceptLabel ConceptLabel::parse(std::string_view text) {
  ConceptLabel c;
  const auto bar = text.find('|');
  c.class_id = static_cast<std::uint32_t>(csv::parse_uint(csv::trim(text.substr(0, bar)), "concept key"));
  if (bar != std::string_view::npos) {
    for (auto a : csv::split(text.substr(bar + 1), ';')) {
      if (a.empty()) throw Error(ErrorKind::format, "empty attribute in concept key '" + std::string(text) + "'");
      c.attributes.emplace_back(a);
    }
  }
  return c;
}

LabelMap load_labels(const std::filesystem::path& path, std::optional<std::uint32_t> class_count) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::data, path.string() + " is empty");
  const auto header = csv::split(line);
  if (header.size() < 2 || header[0] != "id" || header[1] != "class_id") {
    throw Error(ErrorKind::format, path.string() + ": header must start with id,class_id");
  }
  LabelMap labels;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (csv::trim(line).empty()) continue;
    const auto fields = csv::split(line);
    if (fields.size() < 2 || fields.size() > 3) {
      throw Error(ErrorKind::format, path.string() + ": row " + std::to_string(row) + " malformed");
    }
    const PointId id = csv::parse_uint(fields[0], "label id");
    ConceptLabel label;
    label.class_id = static_cast<std::uint32_t>(csv::parse_uint(fields[1], "class_id"));
    if (class_count && label.class_id >= *class_count) {
      throw Error(ErrorKind::data, "class id " + std::to_string(label.class_id) + " of point " +
                                       std::to_string(id) + " exceeds declared class count");
    }
    if (fields.size() == 3 && !fields[2].empty()) {
      for (auto a : csv::split(fields[2], ';')) {
        if (a.empty()) throw Error(ErrorKind::data, "empty attribute for point " + std::to_string(id));
        label.attributes.emplace_back(a);
      }
    }
    if (!labels.emplace(id, std::move(label)).second) {
      throw Error(ErrorKind::data, "duplicate label for point " + std::to_string(id));
    }
    ++row;
  }
  if (labels.empty()) throw Error(ErrorKind::data, path.string() + " has no rows");
  return labels;
}

void save_labels(const LabelMap& labels, const std::filesystem::path& path) {
  std::vector<PointId> ids;
  ids.reserve(labels.size());
  for (const auto& [id, _] : labels) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  auto out = open_out(path);
  out << "id,class_id,attributes\n";
  for (PointId id : ids) {
    const auto& l = labels.at(id);
    out << id << ',' << l.class_id << ',';
    for (std::size_t i = 0; i < l.attributes.size(); ++i) out << (i ? ";" : "") << l.attributes[i];
    out << '\n';
  }
}

void ImbalanceSpec::validate() const {
  for (const auto& k : known) {
    if (unknown.contains(k)) {
      throw Error(ErrorKind::config, "concept " + k.to_string() + " is both known and unknown");
    }
  }
  if (known.empty()) throw Error(ErrorKind::config, "at least one known concept is required");
  if (!(rho >= 1.0) || !std::isfinite(rho)) throw Error(ErrorKind::config, "imbalance factor rho must be >= 1");
  if (per_known_count == 0) throw Error(ErrorKind::config, "per_known_count must be positive");
  if (!unknown.empty() && per_unknown_count == 0) {
    throw Error(ErrorKind::config, "per_unknown_count must be positive");
  }
  if (!unknown.empty() &&
      std::abs(static_cast<double>(per_known_count) - rho * static_cast<double>(per_unknown_count)) >= 1.0) {
    throw Error(ErrorKind::config, "per_known_count (" + std::to_string(per_known_count) +
                                       ") must equal rho * per_unknown_count (" +
                                       std::to_string(rho * static_cast<double>(per_unknown_count)) + ")");
  }
}

std::size_t DatasetSplit::unknown_pool_size() const {
  std::size_t n = 0;
  for (PointId id : unlabeled) n += known.contains(concept_of.at(id)) ? 0 : 1;
  return n;
}

DatasetSplit build_discovery_split(const LabelMap& labels, const ImbalanceSpec& spec) {
  spec.validate();
  std::map<ConceptKey, std::vector<PointId>> by_concept;
  for (const auto& [id, label] : labels) {
    if (spec.known.contains(label) || spec.unknown.contains(label)) by_concept[label].push_back(id);
  }
  DatasetSplit split;
  split.known = spec.known;
  split.unknown = spec.unknown;
  const CounterRng root(spec.seed);

  auto draw = [&](const ConceptKey& key, std::size_t needed) {
    auto& pool = by_concept[key];
    if (pool.size() < needed) {
      throw Error(ErrorKind::capacity, "concept " + key.to_string() + " has " + std::to_string(pool.size()) +
                                           " points, " + std::to_string(needed) + " requested");
    }
    std::sort(pool.begin(), pool.end());
    auto rng = root.split(hash_name(key.to_string()));
    shuffle(std::span<PointId>(pool), rng);
    pool.resize(needed);
    return pool;
  };

  for (const auto& k : spec.known) {
    auto drawn = draw(k, spec.labeled_count() + spec.per_known_count);
    for (std::size_t i = 0; i < drawn.size(); ++i) {
      (i < spec.labeled_count() ? split.labeled : split.unlabeled).push_back(drawn[i]);
      split.concept_of.emplace(drawn[i], k);
    }
  }
  for (const auto& y : spec.unknown) {
    for (PointId id : draw(y, spec.per_unknown_count)) {
      split.unlabeled.push_back(id);
      split.concept_of.emplace(id, y);
    }
  }
  std::sort(split.labeled.begin(), split.labeled.end());
  std::sort(split.unlabeled.begin(), split.unlabeled.end());
  return split;
}

const ConceptLabel& oracle_label(const DatasetSplit& split, PointId id) {
  auto it = split.concept_of.find(id);
  if (it == split.concept_of.end()) {
    throw Error(ErrorKind::lookup, "point " + std::to_string(id) + " is not part of the dataset split");
  }
  return it->second;
}

namespace {

void write_ids(const std::vector<PointId>& ids, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "id\n";
  for (PointId id : ids) out << id << '\n';
}

std::vector<PointId> read_ids(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || csv::trim(line) != "id") {
    throw Error(ErrorKind::format, path.string() + ": expected header 'id'");
  }
  std::vector<PointId> ids;
  while (std::getline(in, line)) {
    if (csv::trim(line).empty()) continue;
    ids.push_back(csv::parse_uint(csv::trim(line), path.string()));
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace

void write_split_manifests(const DatasetSplit& split, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_ids(split.labeled, dir / "labeled.csv");
  write_ids(split.unlabeled, dir / "unlabeled.csv");
}

DatasetSplit load_split_manifests(const std::filesystem::path& dir, const LabelMap& labels,
                                  const ImbalanceSpec& spec) {
  DatasetSplit split;
  split.known = spec.known;
  split.unknown = spec.unknown;
  split.labeled = read_ids(dir / "labeled.csv");
  split.unlabeled = read_ids(dir / "unlabeled.csv");
  auto attach = [&](PointId id) {
    auto it = labels.find(id);
    if (it == labels.end()) throw Error(ErrorKind::data, "manifest id " + std::to_string(id) + " has no label");
    if (!split.concept_of.emplace(id, it->second).second) {
      throw Error(ErrorKind::data, "point " + std::to_string(id) + " appears in both manifests");
    }
    return it->second;
  };
  for (PointId id : split.labeled) {
    if (!spec.known.contains(attach(id))) {
      throw Error(ErrorKind::data, "labeled point " + std::to_string(id) + " has a concept outside the known set");
    }
  }
  for (PointId id : split.unlabeled) attach(id);
  return split;
}

}  // namespace smi
