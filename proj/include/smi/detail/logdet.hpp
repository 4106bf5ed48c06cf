#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace smi::detail {

// Lower Cholesky factor of a symmetric matrix. A pivot <= 0 raises a
// numerical error naming `what`, the pivot index and its value.
Eigen::MatrixXd cholesky(const Eigen::MatrixXd& a, const std::string& what);
// log det via cholesky; 0 for an empty matrix.
double logdet_pd(const Eigen::MatrixXd& a, const std::string& what);

// Principal log-determinants of
//   M = G + eps*I - scale * W^T W,   W = L_Z^{-1} C_{Z,ground}
// i.e. G conditioned on a block Z through a Schur complement. scale = 0 (or an
// empty Z) gives the plain regularized kernel.
class ConditionedLogDet {
 public:
  // z_self: |Z|x|Z| block (eps is added here too); z_cross: |Z| x n.
  ConditionedLogDet(const Eigen::MatrixXd* ground, double eps, const Eigen::MatrixXd& z_self,
                    const Eigen::MatrixXd& z_cross, double scale, std::string name);
  explicit ConditionedLogDet(const Eigen::MatrixXd* ground, double eps, std::string name);

  std::size_t size() const noexcept { return static_cast<std::size_t>(ground_->cols()); }
  double entry(std::size_t i, std::size_t j) const;
  // M restricted to idx x idx.
  Eigen::MatrixXd principal(std::span<const std::size_t> idx) const;
  double logdet(std::span<const std::size_t> idx) const { return logdet_pd(principal(idx), name_); }
  // Column j of M over the whole ground set.
  Eigen::VectorXd column(std::size_t j) const;
  const std::string& name() const noexcept { return name_; }

  // Incremental factor of M_A: per candidate x the partial Cholesky row c_x
  // against the selected pivots and the residual d2_x. gain(x) = log d2_x.
  class Memo {
   public:
    explicit Memo(const ConditionedLogDet& engine);
    double gain(std::size_t x) const;
    void add(std::size_t x);

   private:
    const ConditionedLogDet* e_;
    Eigen::MatrixXd c_;  // n x k
    Eigen::VectorXd d2_;
  };

 private:
  const Eigen::MatrixXd* ground_;
  double eps_;
  Eigen::MatrixXd w_;  // r x n, already multiplied by sqrt(scale)
  std::string name_;
};

}  // namespace smi::detail
