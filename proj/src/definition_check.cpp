#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "smi/error.hpp"
#include "smi/submodular.hpp"

namespace smi {

namespace {

using Index = std::vector<std::size_t>;

KernelPtr block(const Eigen::MatrixXd& omega, const Index& rows, const Index& cols) {
  auto k = std::make_shared<Kernel>();
  k->row_ids.assign(rows.begin(), rows.end());
  k->col_ids.assign(cols.begin(), cols.end());
  k->values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      k->values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          omega(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(cols[j]));
    }
  }
  k->symmetric = rows == cols;
  return k;
}

std::vector<double> col_reduce(const Eigen::MatrixXd& omega, const Index& rows, const Index& cols, bool take_max) {
  std::vector<double> out(cols.size(), 0.0);
  for (std::size_t j = 0; j < cols.size(); ++j) {
    for (auto r : rows) {
      const double v = omega(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(cols[j]));
      out[j] = take_max ? std::max(out[j], v) : out[j] + v;
    }
  }
  return out;
}

double total(const Eigen::MatrixXd& omega, const Index& a, const Index& b) {
  double s = 0.0;
  for (auto i : a) {
    for (auto j : b) s += omega(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  return s;
}

Index join(const Index& a, const Index& b) {
  Index out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

// Base set functions over omega indices.

// Facility location with the candidate rows U as the represented set.
double fl(const Eigen::MatrixXd& omega, const Index& rows, const Index& x) {
  double v = 0.0;
  for (auto i : rows) {
    double m = 0.0;
    for (auto j : x) m = std::max(m, omega(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    v += m;
  }
  return v;
}

// Facility location on U + Q where only cross-block similarities count and
// every point represents itself fully.
double fl_bipartite(const Eigen::MatrixXd& omega, const Index& u, const Index& q, const Index& x) {
  auto in = [](const Index& s, std::size_t v) { return std::find(s.begin(), s.end(), v) != s.end(); };
  double v = 0.0;
  for (auto i : join(u, q)) {
    double m = 0.0;
    for (auto j : x) {
      double s;
      if (i == j) {
        s = 1.0;
      } else if (in(u, i) != in(u, j)) {
        s = omega(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      } else {
        s = 0.0;
      }
      m = std::max(m, s);
    }
    v += m;
  }
  return v;
}

double gc(const Eigen::MatrixXd& omega, const Index& u, const Index& x, double lambda) {
  return total(omega, u, x) - lambda * total(omega, x, x);
}

double logdet(const Eigen::MatrixXd& omega, const Index& x, double eps) {
  if (x.empty()) return 0.0;
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      m(i, j) = omega(static_cast<Eigen::Index>(x[static_cast<std::size_t>(i)]),
                      static_cast<Eigen::Index>(x[static_cast<std::size_t>(j)]));
    }
    m(i, i) += eps;
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw Error(ErrorKind::numerical, "definition check: kernel block not positive definite");
  }
  return ldlt.vectorD().array().log().sum();
}

}  // namespace

AcquisitionPtr make_from_instance(FunctionKind kind, const DefinitionInstance& inst, const Params& p) {
  const auto& o = inst.omega;
  const Index& u = inst.ground;
  const Index& q = inst.query;
  const Index& c = inst.cond;
  switch (kind) {
    case FunctionKind::FLMI: return make_flmi(block(o, q, u), p);
    case FunctionKind::GCMI:
      return make_gcmi(std::vector<PointId>(u.begin(), u.end()), col_reduce(o, q, u, false), p);
    case FunctionKind::LOGDETMI: return make_logdetmi(block(o, u, u), block(o, q, q), block(o, q, u), p);
    case FunctionKind::FLCG: return make_flcg(block(o, u, u), col_reduce(o, c, u, true), p);
    case FunctionKind::GCCG: return make_gccg(block(o, u, u), col_reduce(o, c, u, false), p);
    case FunctionKind::LOGDETCG: return make_logdetcg(block(o, u, u), block(o, c, c), block(o, c, u), p);
    case FunctionKind::FLCMI:
      return make_flcmi(block(o, u, u), col_reduce(o, q, u, true), col_reduce(o, c, u, true), p);
    case FunctionKind::GCCMI: {
      GcCmiBlocks b{col_reduce(o, q, u, false), col_reduce(o, c, u, false), total(o, q, q), total(o, c, c),
                    total(o, c, q)};
      return make_gccmi(block(o, u, u), std::move(b), p);
    }
    case FunctionKind::LOGDETCMI:
      return make_logdetcmi(block(o, u, u), block(o, c, c), block(o, q, q), block(o, c, q), block(o, c, u),
                            block(o, q, u), p);
  }
  throw Error(ErrorKind::argument, "unhandled function kind");
}

DefinitionValues definition_check(FunctionKind kind, const DefinitionInstance& inst, std::span<const std::size_t> a,
                                  const Params& p) {
  const auto& o = inst.omega;
  const Index& u = inst.ground;
  const Index& q = inst.query;
  const Index& c = inst.cond;
  Index sel;
  for (auto i : a) {
    if (i >= u.size()) throw Error(ErrorKind::index, "selection index outside ground set");
    sel.push_back(u[i]);
  }

  DefinitionValues out;
  out.closed_form = make_from_instance(kind, inst, p)->evaluate(a);

  // I(A;Q) = f(A) + f(Q) - f(A+Q);  f(A|P) = f(A+P) - f(P);
  // I(A;Q|P) = f(A+P) + f(Q+P) - f(A+Q+P) - f(P)
  auto mi = [&](auto f) { return f(sel) + f(q) - f(join(sel, q)); };
  auto cg = [&](auto f) { return f(join(sel, c)) - f(c); };
  auto cmi = [&](auto f) { return (f(join(sel, c)) - f(c)) + (f(join(q, c)) - f(join(join(sel, q), c))); };

  auto flf = [&](const Index& x) { return fl(o, u, x); };
  auto gcf = [&](const Index& x) { return gc(o, u, x, p.lambda); };
  auto ldf = [&](const Index& x) { return logdet(o, x, p.epsilon_reg); };

  switch (kind) {
    case FunctionKind::FLMI: out.four_term = mi([&](const Index& x) { return fl_bipartite(o, u, q, x); }); break;
    case FunctionKind::GCMI: out.four_term = mi(gcf); break;
    case FunctionKind::LOGDETMI: out.four_term = mi(ldf); break;
    case FunctionKind::FLCG: out.four_term = cg(flf); break;
    case FunctionKind::GCCG: out.four_term = cg(gcf); break;
    case FunctionKind::LOGDETCG: out.four_term = cg(ldf); break;
    case FunctionKind::FLCMI: out.four_term = cmi(flf); break;
    case FunctionKind::GCCMI: out.four_term = cmi(gcf); break;
    case FunctionKind::LOGDETCMI: out.four_term = cmi(ldf); break;
  }
  return out;
}

}  // namespace smi
