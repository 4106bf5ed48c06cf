#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "smi/dataset.hpp"

namespace smi {

// How a cosine in [-1, 1] becomes a similarity in [0, 1].
enum class Rectify {
  clamp,  // max(0, cos)
  shift,  // (1 + cos) / 2
};

Rectify parse_rectify(std::string_view name);
std::string_view to_string(Rectify r);

inline double rectify(double cosine, Rectify policy) noexcept {
  const double s = policy == Rectify::clamp ? cosine : 0.5 * (1.0 + cosine);
  return s < 0.0 ? 0.0 : (s > 1.0 ? 1.0 : s);
}

// Dense similarity block between two ordered id lists.
struct Kernel {
  std::vector<PointId> row_ids;
  std::vector<PointId> col_ids;
  Eigen::MatrixXd values;  // rows x cols, entries in [0, 1]
  bool symmetric = false;

  std::size_t rows() const noexcept { return row_ids.size(); }
  std::size_t cols() const noexcept { return col_ids.size(); }
  double operator()(std::size_t i, std::size_t j) const {
    return values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
};

using KernelPtr = std::shared_ptr<const Kernel>;

// An ordered selection of rows from an EmbeddingStore.
class EmbeddingView {
 public:
  explicit EmbeddingView(const EmbeddingStore& store);
  // Lookup error for ids missing from the store.
  EmbeddingView(const EmbeddingStore& store, std::span<const PointId> ids);

  std::size_t size() const noexcept { return rows_.size(); }
  std::size_t dim() const noexcept { return store_->dim(); }
  bool normalized() const noexcept { return store_->normalized(); }
  PointId id(std::size_t i) const { return store_->ids()[rows_[i]]; }
  auto row(std::size_t i) const { return store_->row(rows_[i]); }
  std::vector<PointId> ids() const;
  // Contiguous copy of the selected rows.
  RowMatrix gather() const;

 private:
  const EmbeddingStore* store_;
  std::vector<std::size_t> rows_;
};

// values[i][j] = rectify(<row_i, col_j>). Both views must be normalized and
// share a dimension (shape error otherwise). When the two views list the same
// ids the result is exactly symmetric.
Kernel cosine_kernel(const EmbeddingView& rows, const EmbeddingView& cols, Rectify policy);

// Column-wise reductions of cosine_kernel(rows, cols) computed without
// materializing the block. Empty `rows` gives zeros.
std::vector<double> column_max(const EmbeddingView& rows, const EmbeddingView& cols, Rectify policy);
std::vector<double> column_sum(const EmbeddingView& rows, const EmbeddingView& cols, Rectify policy);
double block_sum(const EmbeddingView& rows, const EmbeddingView& cols, Rectify policy);

// Reference implementations: plain loops, one thread. Kept for tests and the
// benchmark.
namespace serial {
Kernel cosine_kernel(const EmbeddingView& rows, const EmbeddingView& cols, Rectify policy);
std::vector<double> column_max(const EmbeddingView& rows, const EmbeddingView& cols, Rectify policy);
std::vector<double> column_sum(const EmbeddingView& rows, const EmbeddingView& cols, Rectify policy);
double block_sum(const EmbeddingView& rows, const EmbeddingView& cols, Rectify policy);
}  // namespace serial

// Reductions over an already materialized kernel.
std::vector<double> column_max(const Kernel& k);
std::vector<double> column_sum(const Kernel& k);

// Seeded shuffle followed by a balanced split: sizes differ by at most one,
// larger parts first. Argument error when parts is 0 or exceeds ids.size().
std::vector<std::vector<PointId>> partition_ground_set(std::span<const PointId> ids, std::size_t parts,
                                                       std::uint64_t seed);

namespace detail {
void check_compatible(const EmbeddingView& rows, const EmbeddingView& cols);
}

}  // namespace smi
