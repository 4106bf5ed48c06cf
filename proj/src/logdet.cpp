#include "smi/detail/logdet.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "smi/error.hpp"

namespace smi::detail {

namespace {

[[noreturn]] void bad_pivot(const std::string& what, std::size_t k, double v) {
  std::ostringstream os;
  os.precision(17);
  os << what << ": matrix not positive definite at pivot " << k << " (value " << v << ")";
  throw Error(ErrorKind::numerical, os.str());
}

}  // namespace

Eigen::MatrixXd cholesky(const Eigen::MatrixXd& a, const std::string& what) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n) throw Error(ErrorKind::shape, what + ": cholesky of a non-square matrix");
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = a(j, j) - l.row(j).head(j).squaredNorm();
    if (!(d > 0.0) || !std::isfinite(d)) bad_pivot(what, static_cast<std::size_t>(j), d);
    const double r = std::sqrt(d);
    l(j, j) = r;
    if (j + 1 < n) {
      const Eigen::Index m = n - j - 1;
      l.col(j).tail(m) = (a.col(j).tail(m) - l.bottomLeftCorner(m, j) * l.row(j).head(j).transpose()) / r;
    }
  }
  return l;
}

double logdet_pd(const Eigen::MatrixXd& a, const std::string& what) {
  if (a.rows() == 0) return 0.0;
  const Eigen::MatrixXd l = cholesky(a, what);
  return 2.0 * l.diagonal().array().log().sum();
}

ConditionedLogDet::ConditionedLogDet(const Eigen::MatrixXd* ground, double eps, std::string name)
    : ground_(ground), eps_(eps), w_(0, ground->cols()), name_(std::move(name)) {}

ConditionedLogDet::ConditionedLogDet(const Eigen::MatrixXd* ground, double eps, const Eigen::MatrixXd& z_self,
                                     const Eigen::MatrixXd& z_cross, double scale, std::string name)
    : ground_(ground), eps_(eps), name_(std::move(name)) {
  if (z_cross.cols() != ground->cols() || z_cross.rows() != z_self.rows()) {
    throw Error(ErrorKind::shape, name_ + ": conditioning block shapes disagree with the ground kernel");
  }
  if (z_self.rows() == 0 || scale == 0.0) {
    w_.resize(0, ground->cols());
    return;
  }
  Eigen::MatrixXd reg = z_self;
  reg.diagonal().array() += eps;
  const Eigen::MatrixXd l = cholesky(reg, name_ + " conditioning block");
  w_ = l.triangularView<Eigen::Lower>().solve(z_cross);
  w_ *= std::sqrt(scale);
}

double ConditionedLogDet::entry(std::size_t i, std::size_t j) const {
  const auto a = static_cast<Eigen::Index>(i);
  const auto b = static_cast<Eigen::Index>(j);
  double v = (*ground_)(a, b) + (i == j ? eps_ : 0.0);
  if (w_.rows() > 0) v -= w_.col(a).dot(w_.col(b));
  return v;
}

Eigen::MatrixXd ConditionedLogDet::principal(std::span<const std::size_t> idx) const {
  const auto k = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd m(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) m(a, b) = entry(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
  }
  return m;
}

Eigen::VectorXd ConditionedLogDet::column(std::size_t j) const {
  const auto b = static_cast<Eigen::Index>(j);
  Eigen::VectorXd c = ground_->col(b);
  c(b) += eps_;
  if (w_.rows() > 0) c.noalias() -= w_.transpose() * w_.col(b);
  return c;
}

ConditionedLogDet::Memo::Memo(const ConditionedLogDet& engine) : e_(&engine) {
  const auto n = static_cast<Eigen::Index>(engine.size());
  c_.resize(n, 0);
  d2_.resize(n);
  for (Eigen::Index x = 0; x < n; ++x) d2_(x) = engine.entry(static_cast<std::size_t>(x), static_cast<std::size_t>(x));
}

double ConditionedLogDet::Memo::gain(std::size_t x) const {
  const double d = d2_(static_cast<Eigen::Index>(x));
  if (!(d > 0.0)) bad_pivot(e_->name() + " candidate " + std::to_string(x), static_cast<std::size_t>(c_.cols()), d);
  return std::log(d);
}

void ConditionedLogDet::Memo::add(std::size_t x) {
  const auto j = static_cast<Eigen::Index>(x);
  const double d = d2_(j);
  if (!(d > 0.0)) bad_pivot(e_->name(), static_cast<std::size_t>(c_.cols()), d);
  Eigen::VectorXd e = e_->column(x);
  if (c_.cols() > 0) e.noalias() -= c_ * c_.row(j).transpose();
  e /= std::sqrt(d);
  const Eigen::Index k = c_.cols();
  c_.conservativeResize(Eigen::NoChange, k + 1);
  c_.col(k) = e;
  d2_.array() -= e.array().square();
}

}  // namespace smi::detail
