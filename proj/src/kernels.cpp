#include "smi/kernels.hpp"

#include <algorithm>
#include <string>

#include "smi/error.hpp"
#include "smi/rng.hpp"

namespace smi {

namespace {

constexpr Eigen::Index kColBlock = 256;
constexpr Eigen::Index kRowChunk = 512;

Eigen::Index block_count(Eigen::Index n) { return (n + kColBlock - 1) / kColBlock; }

}  // namespace

Rectify parse_rectify(std::string_view name) {
  if (name == "clamp") return Rectify::clamp;
  if (name == "shift") return Rectify::shift;
  throw Error(ErrorKind::config, "unknown rectify policy '" + std::string(name) + "'");
}

std::string_view to_string(Rectify r) { return r == Rectify::clamp ? "clamp" : "shift"; }

EmbeddingView::EmbeddingView(const EmbeddingStore& store) : store_(&store), rows_(store.size()) {
  for (std::size_t i = 0; i < rows_.size(); ++i) rows_[i] = i;
}

EmbeddingView::EmbeddingView(const EmbeddingStore& store, std::span<const PointId> ids) : store_(&store) {
  rows_.reserve(ids.size());
  for (PointId id : ids) rows_.push_back(store.index_of(id));
}

std::vector<PointId> EmbeddingView::ids() const {
  std::vector<PointId> out(rows_.size());
  for (std::size_t i = 0; i < rows_.size(); ++i) out[i] = store_->ids()[rows_[i]];
  return out;
}

RowMatrix EmbeddingView::gather() const {
  RowMatrix out(static_cast<Eigen::Index>(rows_.size()), static_cast<Eigen::Index>(dim()));
  for (std::size_t i = 0; i < rows_.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = store_->row(rows_[i]);
  return out;
}

namespace detail {

void check_compatible(const EmbeddingView& rows, const EmbeddingView& cols) {
  if (rows.size() > 0 && cols.size() > 0 && rows.dim() != cols.dim()) {
    throw Error(ErrorKind::shape, "embedding dimensions differ: " + std::to_string(rows.dim()) + " vs " +
                                      std::to_string(cols.dim()));
  }
  if ((rows.size() > 0 && !rows.normalized()) || (cols.size() > 0 && !cols.normalized())) {
    throw Error(ErrorKind::argument, "cosine kernels require normalized embeddings");
  }
}

}  // namespace detail

Kernel cosine_kernel(const EmbeddingView& rows, const EmbeddingView& cols, Rectify policy) {
  detail::check_compatible(rows, cols);
  Kernel k;
  k.row_ids = rows.ids();
  k.col_ids = cols.ids();
  k.symmetric = k.row_ids == k.col_ids;
  const RowMatrix r = rows.gather();
  const RowMatrix c = cols.gather();
  const Eigen::Index m = r.rows();
  const Eigen::Index n = c.rows();
  k.values.resize(m, n);
  if (m == 0 || n == 0) return k;

  const Eigen::Index blocks = block_count(n);
#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const Eigen::Index c0 = b * kColBlock;
    const Eigen::Index w = std::min(kColBlock, n - c0);
    auto out = k.values.middleCols(c0, w);
    out.noalias() = r * c.middleRows(c0, w).transpose();
    for (Eigen::Index j = 0; j < w; ++j) {
      for (Eigen::Index i = 0; i < m; ++i) out(i, j) = rectify(out(i, j), policy);
    }
  }
  if (k.symmetric) {
#pragma omp parallel for schedule(dynamic, 64)
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = j + 1; i < m; ++i) k.values(i, j) = k.values(j, i);
    }
  }
  return k;
}

namespace {

// Calls sink(col, chunk) for every column block with the cosine chunk
// rows x width; each column block is owned by exactly one thread.
template <class Init, class Fold>
std::vector<double> reduce_columns(const EmbeddingView& rows, const EmbeddingView& cols, Init init, Fold fold) {
  detail::check_compatible(rows, cols);
  const RowMatrix r = rows.gather();
  const RowMatrix c = cols.gather();
  const Eigen::Index m = r.rows();
  const Eigen::Index n = c.rows();
  std::vector<double> out(static_cast<std::size_t>(n), init);
  if (m == 0 || n == 0) return out;
  const Eigen::Index blocks = block_count(n);
#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const Eigen::Index c0 = b * kColBlock;
    const Eigen::Index w = std::min(kColBlock, n - c0);
    Eigen::MatrixXd chunk;
    for (Eigen::Index r0 = 0; r0 < m; r0 += kRowChunk) {
      const Eigen::Index h = std::min(kRowChunk, m - r0);
      chunk.noalias() = r.middleRows(r0, h) * c.middleRows(c0, w).transpose();
      for (Eigen::Index j = 0; j < w; ++j) {
        double acc = out[static_cast<std::size_t>(c0 + j)];
        for (Eigen::Index i = 0; i < h; ++i) acc = fold(acc, chunk(i, j));
        out[static_cast<std::size_t>(c0 + j)] = acc;
      }
    }
  }
  return out;
}

}  // namespace

std::vector<double> column_max(const EmbeddingView& rows, const EmbeddingView& cols, Rectify policy) {
  return reduce_columns(rows, cols, 0.0,
                        [policy](double acc, double cosine) { return std::max(acc, rectify(cosine, policy)); });
}

std::vector<double> column_sum(const EmbeddingView& rows, const EmbeddingView& cols, Rectify policy) {
  return reduce_columns(rows, cols, 0.0, [policy](double acc, double cosine) { return acc + rectify(cosine, policy); });
}

double block_sum(const EmbeddingView& rows, const EmbeddingView& cols, Rectify policy) {
  double total = 0.0;
  for (double v : column_sum(rows, cols, policy)) total += v;
  return total;
}

std::vector<double> column_max(const Kernel& k) {
  std::vector<double> out(k.cols(), 0.0);
  for (Eigen::Index j = 0; j < k.values.cols(); ++j) {
    if (k.values.rows() > 0) out[static_cast<std::size_t>(j)] = k.values.col(j).maxCoeff();
  }
  return out;
}

std::vector<double> column_sum(const Kernel& k) {
  std::vector<double> out(k.cols(), 0.0);
  for (Eigen::Index j = 0; j < k.values.cols(); ++j) out[static_cast<std::size_t>(j)] = k.values.col(j).sum();
  return out;
}

std::vector<std::vector<PointId>> partition_ground_set(std::span<const PointId> ids, std::size_t parts,
                                                       std::uint64_t seed) {
  if (parts == 0 || parts > ids.size()) {
    throw Error(ErrorKind::argument, "cannot split " + std::to_string(ids.size()) + " ids into " +
                                         std::to_string(parts) + " partitions");
  }
  std::vector<PointId> order(ids.begin(), ids.end());
  CounterRng rng(seed, hash_name("partition"));
  shuffle(std::span<PointId>(order), rng);
  std::vector<std::vector<PointId>> out(parts);
  const std::size_t base = order.size() / parts;
  const std::size_t extra = order.size() % parts;
  std::size_t pos = 0;
  for (std::size_t p = 0; p < parts; ++p) {
    const std::size_t len = base + (p < extra ? 1 : 0);
    out[p].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                  order.begin() + static_cast<std::ptrdiff_t>(pos + len));
    std::sort(out[p].begin(), out[p].end());
    pos += len;
  }
  return out;
}

}  // namespace smi
