#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace smi {

using PointId = std::uint64_t;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// N x D feature matrix with stable point identifiers.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  // Throws data error on non-finite entries or duplicate ids, shape error when
  // ids and rows disagree.
  EmbeddingStore(std::vector<PointId> ids, RowMatrix data, bool normalized = false);

  std::size_t size() const noexcept { return ids_.size(); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(data_.cols()); }
  bool normalized() const noexcept { return normalized_; }

  const std::vector<PointId>& ids() const noexcept { return ids_; }
  const RowMatrix& data() const noexcept { return data_; }
  auto row(std::size_t i) const { return data_.row(static_cast<Eigen::Index>(i)); }

  bool contains(PointId id) const { return index_.contains(id); }
  // Row index of `id`; lookup error if absent.
  std::size_t index_of(PointId id) const;

 private:
  std::vector<PointId> ids_;
  RowMatrix data_;
  bool normalized_ = false;
  std::unordered_map<PointId, std::size_t> index_;
};

enum class EmbeddingFormat { csv, raw_f32 };

EmbeddingFormat parse_embedding_format(std::string_view name);

// csv: header `id,f0,...,f{D-1}`, one row per point.
// raw-f32: magic "SDE1", N, D, flags (u32 LE each; flags bit 0 = normalized),
// then N*D little-endian float32 row-major. Ids are the row numbers 0..N-1.
EmbeddingStore load_embeddings(const std::filesystem::path& path, EmbeddingFormat format);
void save_embeddings(const EmbeddingStore& store, const std::filesystem::path& path,
                     EmbeddingFormat format);

// Rows scaled to unit Euclidean norm; data error naming the first zero row.
EmbeddingStore normalize(const EmbeddingStore& store);

// A class id plus optional attribute tags. Doubles as the concept key: plain
// class discovery uses an empty attribute list, slice discovery puts the
// slice attributes (e.g. a language tag) there.
struct ConceptLabel {
  std::uint32_t class_id = 0;
  std::vector<std::string> attributes;

  auto operator<=>(const ConceptLabel&) const = default;
  bool operator==(const ConceptLabel&) const = default;

  // "7" or "1|ka" or "1|ka;bold"
  std::string to_string() const;
  static ConceptLabel parse(std::string_view text);
};
using ConceptKey = ConceptLabel;
using ConceptSet = std::set<ConceptKey>;

using LabelMap = std::unordered_map<PointId, ConceptLabel>;

// CSV `id,class_id[,attr1;attr2;...]` with a header row. When class_count is
// given every class id must be below it.
LabelMap load_labels(const std::filesystem::path& path,
                     std::optional<std::uint32_t> class_count = std::nullopt);
void save_labels(const LabelMap& labels, const std::filesystem::path& path);

struct ImbalanceSpec {
  ConceptSet known;
  ConceptSet unknown;
  double rho = 1.0;
  std::size_t per_known_count = 0;    // unlabeled points per known concept
  std::size_t per_unknown_count = 0;  // unlabeled points per unknown concept
  std::size_t labeled_per_known = 0;  // labeled points per known concept; 0 means per_known_count
  std::uint64_t seed = 0;

  std::size_t labeled_count() const noexcept {
    return labeled_per_known == 0 ? per_known_count : labeled_per_known;
  }
  // Argument error on overlapping concept sets, rho < 1 or a count law violation.
  void validate() const;
};

struct DatasetSplit {
  std::vector<PointId> labeled;    // sorted
  std::vector<PointId> unlabeled;  // sorted
  std::unordered_map<PointId, ConceptLabel> concept_of;
  ConceptSet known;
  ConceptSet unknown;

  bool is_known(const ConceptKey& c) const { return known.contains(c); }
  std::size_t unknown_pool_size() const;
};

DatasetSplit build_discovery_split(const LabelMap& labels, const ImbalanceSpec& spec);

// Ground-truth label of any point in the split; lookup error otherwise.
const ConceptLabel& oracle_label(const DatasetSplit& split, PointId id);

// Manifests: one file per pool, header `id`, ids ascending.
void write_split_manifests(const DatasetSplit& split, const std::filesystem::path& dir);
DatasetSplit load_split_manifests(const std::filesystem::path& dir, const LabelMap& labels,
                                  const ImbalanceSpec& spec);

namespace csv {
// Splits one line on `sep`; no quoting.
std::vector<std::string_view> split(std::string_view line, char sep = ',');
double parse_double(std::string_view field, std::string_view what);
std::uint64_t parse_uint(std::string_view field, std::string_view what);
std::string_view trim(std::string_view s);
}  // namespace csv

}  // namespace smi
