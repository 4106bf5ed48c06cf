#include <algorithm>

#include "smi/kernels.hpp"

namespace smi::serial {

namespace {

double dot(const EmbeddingView& a, std::size_t i, const EmbeddingView& b, std::size_t j) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.dim(); ++d) {
    s += a.row(i)(static_cast<Eigen::Index>(d)) * b.row(j)(static_cast<Eigen::Index>(d));
  }
  return s;
}

}  // namespace

Kernel cosine_kernel(const EmbeddingView& rows, const EmbeddingView& cols, Rectify policy) {
  detail::check_compatible(rows, cols);
  Kernel k;
  k.row_ids = rows.ids();
  k.col_ids = cols.ids();
  k.symmetric = k.row_ids == k.col_ids;
  k.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      if (k.symmetric && j < i) {
        k.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            k.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
      } else {
        k.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rectify(dot(rows, i, cols, j), policy);
      }
    }
  }
  return k;
}

std::vector<double> column_max(const EmbeddingView& rows, const EmbeddingView& cols, Rectify policy) {
  detail::check_compatible(rows, cols);
  std::vector<double> out(cols.size(), 0.0);
  for (std::size_t j = 0; j < cols.size(); ++j) {
    for (std::size_t i = 0; i < rows.size(); ++i) out[j] = std::max(out[j], rectify(dot(rows, i, cols, j), policy));
  }
  return out;
}

std::vector<double> column_sum(const EmbeddingView& rows, const EmbeddingView& cols, Rectify policy) {
  detail::check_compatible(rows, cols);
  std::vector<double> out(cols.size(), 0.0);
  for (std::size_t j = 0; j < cols.size(); ++j) {
    for (std::size_t i = 0; i < rows.size(); ++i) out[j] += rectify(dot(rows, i, cols, j), policy);
  }
  return out;
}

double block_sum(const EmbeddingView& rows, const EmbeddingView& cols, Rectify policy) {
  double total = 0.0;
  for (double v : serial::column_sum(rows, cols, policy)) total += v;
  return total;
}

}  // namespace smi::serial
