#include "smi/submodular.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "smi/detail/logdet.hpp"
#include "smi/error.hpp"

namespace smi {

namespace {

constexpr std::string_view kKindNames[] = {"FLMI", "GCMI", "LOGDETMI", "FLCG", "GCCG",
                                           "LOGDETCG", "FLCMI", "LOGDETCMI", "GCCMI"};

}  // namespace

std::string_view to_string(FunctionKind k) { return kKindNames[static_cast<int>(k)]; }

FunctionKind parse_function_kind(std::string_view name) {
  std::string up(name);
  std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
  for (int i = 0; i < 9; ++i) {
    if (kKindNames[i] == up) return static_cast<FunctionKind>(i);
  }
  throw Error(ErrorKind::config, "unknown function kind '" + std::string(name) + "'");
}

std::string_view to_string(Family f) {
  switch (f) {
    case Family::fl: return "FL";
    case Family::gc: return "GC";
    case Family::logdet: return "LOGDET";
  }
  return "?";
}

Family parse_family(std::string_view name) {
  std::string up(name);
  std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
  if (up == "FL") return Family::fl;
  if (up == "GC") return Family::gc;
  if (up == "LOGDET") return Family::logdet;
  throw Error(ErrorKind::config, "unknown function family '" + std::string(name) + "' (FL, GC, LOGDET)");
}

FunctionKind kind_for(Family f, Role r) {
  static constexpr FunctionKind table[3][3] = {
      {FunctionKind::FLMI, FunctionKind::FLCG, FunctionKind::FLCMI},
      {FunctionKind::GCMI, FunctionKind::GCCG, FunctionKind::GCCMI},
      {FunctionKind::LOGDETMI, FunctionKind::LOGDETCG, FunctionKind::LOGDETCMI},
  };
  return table[static_cast<int>(f)][static_cast<int>(r)];
}

Family family_of(FunctionKind k) {
  switch (k) {
    case FunctionKind::FLMI: case FunctionKind::FLCG: case FunctionKind::FLCMI: return Family::fl;
    case FunctionKind::GCMI: case FunctionKind::GCCG: case FunctionKind::GCCMI: return Family::gc;
    default: return Family::logdet;
  }
}

Role role_of(FunctionKind k) {
  switch (k) {
    case FunctionKind::FLMI: case FunctionKind::GCMI: case FunctionKind::LOGDETMI: return Role::smi;
    case FunctionKind::FLCG: case FunctionKind::GCCG: case FunctionKind::LOGDETCG: return Role::scg;
    default: return Role::scmi;
  }
}

void Params::validate() const {
  auto ok = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (!ok(eta)) throw Error(ErrorKind::config, "eta must be finite and >= 0");
  if (!ok(nu)) throw Error(ErrorKind::config, "nu must be finite and >= 0");
  if (!ok(lambda)) throw Error(ErrorKind::config, "lambda must be finite and >= 0");
  if (!ok(epsilon_reg)) throw Error(ErrorKind::config, "epsilon_reg must be finite and >= 0");
}

void GainState::check(std::size_t x) const {
  if (x >= in_.size()) {
    throw Error(ErrorKind::index, "candidate " + std::to_string(x) + " outside ground set of " +
                                      std::to_string(in_.size()));
  }
  if (in_[x]) throw Error(ErrorKind::argument, "candidate " + std::to_string(x) + " already selected");
}

double GainState::gain(std::size_t x) const {
  check(x);
  return compute_gain(x);
}

void GainState::add(std::size_t x) {
  check(x);
  value_ += compute_gain(x);
  apply(x);
  in_[x] = true;
  selected_.push_back(x);
}

AcquisitionFunction::AcquisitionFunction(FunctionKind kind, std::vector<PointId> ids, Params params)
    : kind_(kind), ids_(std::move(ids)), params_(params) {
  params_.validate();
  index_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!index_.emplace(ids_[i], i).second) {
      throw Error(ErrorKind::data, "duplicate ground id " + std::to_string(ids_[i]));
    }
  }
}

std::size_t AcquisitionFunction::index_of(PointId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw Error(ErrorKind::lookup, "id " + std::to_string(id) + " not in ground set");
  return it->second;
}

double AcquisitionFunction::evaluate(std::span<const std::size_t> a) const {
  std::vector<std::size_t> s(a.begin(), a.end());
  for (auto x : s) {
    if (x >= size()) {
      throw Error(ErrorKind::index, "index " + std::to_string(x) + " outside ground set of " + std::to_string(size()));
    }
  }
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return evaluate_set(s);
}

double AcquisitionFunction::evaluate_ids(std::span<const PointId> a) const {
  std::vector<std::size_t> local;
  local.reserve(a.size());
  for (auto id : a) local.push_back(index_of(id));
  return evaluate(local);
}

namespace {

void require(const KernelPtr& k, const char* what) {
  if (!k) throw Error(ErrorKind::argument, std::string(what) + " kernel missing");
}

void check_columns(const Kernel& k, const std::vector<PointId>& ground, const char* what) {
  if (k.col_ids != ground) {
    throw Error(ErrorKind::consistency, std::string(what) + " kernel columns do not match the ground set");
  }
}

void check_vector(const std::vector<double>& v, std::size_t n, const char* what) {
  if (v.size() != n) {
    throw Error(ErrorKind::shape, std::string(what) + " has " + std::to_string(v.size()) + " entries for " +
                                      std::to_string(n) + " ground points");
  }
}

std::vector<PointId> ground_of(const KernelPtr& g) {
  require(g, "ground");
  if (g->row_ids != g->col_ids) throw Error(ErrorKind::consistency, "ground kernel must be square over U");
  return g->col_ids;
}

// ---------------------------------------------------------------- FLMI

class FlMi final : public AcquisitionFunction {
 public:
  FlMi(KernelPtr sq, const Params& p) : AcquisitionFunction(FunctionKind::FLMI, sq->col_ids, p), sq_(std::move(sq)) {
    qmax_ = column_max(*sq_);
  }

  std::unique_ptr<GainState> start() const override { return std::make_unique<State>(*this); }

 protected:
  double evaluate_set(std::span<const std::size_t> a) const override {
    if (a.empty()) return 0.0;
    double first = 0.0;
    for (std::size_t i = 0; i < sq_->rows(); ++i) {
      double m = 0.0;
      for (auto x : a) m = std::max(m, (*sq_)(i, x));
      first += m;
    }
    double second = 0.0;
    for (auto x : a) second += qmax_[x];
    return first + params().eta * second;
  }

 private:
  class State final : public GainState {
   public:
    explicit State(const FlMi& f) : GainState(f.size()), f_(f), cur_(f.sq_->rows(), 0.0) {}

   protected:
    double compute_gain(std::size_t x) const override {
      double g = 0.0;
      const auto col = f_.sq_->values.col(static_cast<Eigen::Index>(x));
      for (std::size_t i = 0; i < cur_.size(); ++i) g += std::max(0.0, col(static_cast<Eigen::Index>(i)) - cur_[i]);
      return g + f_.params().eta * f_.qmax_[x];
    }
    void apply(std::size_t x) override {
      const auto col = f_.sq_->values.col(static_cast<Eigen::Index>(x));
      for (std::size_t i = 0; i < cur_.size(); ++i) cur_[i] = std::max(cur_[i], col(static_cast<Eigen::Index>(i)));
    }

   private:
    const FlMi& f_;
    std::vector<double> cur_;
  };

  KernelPtr sq_;
  std::vector<double> qmax_;
};

// ---------------------------------------------------------------- GCMI

class GcMi final : public AcquisitionFunction {
 public:
  GcMi(std::vector<PointId> ids, std::vector<double> qsum, const Params& p)
      : AcquisitionFunction(FunctionKind::GCMI, std::move(ids), p), qsum_(std::move(qsum)) {}

  std::unique_ptr<GainState> start() const override { return std::make_unique<State>(*this); }

 protected:
  double evaluate_set(std::span<const std::size_t> a) const override {
    double s = 0.0;
    for (auto x : a) s += qsum_[x];
    return 2.0 * params().lambda * s;
  }

 private:
  class State final : public GainState {
   public:
    explicit State(const GcMi& f) : GainState(f.size()), f_(f) {}

   protected:
    double compute_gain(std::size_t x) const override { return 2.0 * f_.params().lambda * f_.qsum_[x]; }
    void apply(std::size_t) override {}

   private:
    const GcMi& f_;
  };

  std::vector<double> qsum_;
};

// ------------------------------------------------- FLCG / FLCMI
// Per ground row i: term_i = max(min(maxA_i, cap_i), floor_i) - floor_i.
// FLCG: cap = inf, floor = nu * cond_max. FLCMI: cap = eta * query_max.

class FlConditional final : public AcquisitionFunction {
 public:
  FlConditional(FunctionKind kind, KernelPtr ground, std::vector<double> cap, std::vector<double> floor,
                const Params& p)
      : AcquisitionFunction(kind, ground_of(ground), p), g_(std::move(ground)), cap_(std::move(cap)),
        floor_(std::move(floor)) {}

  std::unique_ptr<GainState> start() const override { return std::make_unique<State>(*this); }

 protected:
  double evaluate_set(std::span<const std::size_t> a) const override {
    if (a.empty()) return 0.0;
    double v = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
      double m = 0.0;
      for (auto x : a) m = std::max(m, (*g_)(i, x));
      v += std::max(std::min(m, cap_[i]), floor_[i]) - floor_[i];
    }
    return v;
  }

 private:
  class State final : public GainState {
   public:
    explicit State(const FlConditional& f) : GainState(f.size()), f_(f), lo_(f.size()) {
      for (std::size_t i = 0; i < lo_.size(); ++i) lo_[i] = std::max(std::min(0.0, f.cap_[i]), f.floor_[i]);
    }

   protected:
    double compute_gain(std::size_t x) const override {
      const double* col = f_.g_->values.col(static_cast<Eigen::Index>(x)).data();
      double g = 0.0;
      for (std::size_t i = 0; i < lo_.size(); ++i) g += std::max(std::min(col[i], f_.cap_[i]) - lo_[i], 0.0);
      return g;
    }
    void apply(std::size_t x) override {
      const double* col = f_.g_->values.col(static_cast<Eigen::Index>(x)).data();
      for (std::size_t i = 0; i < lo_.size(); ++i) lo_[i] = std::max(lo_[i], std::min(col[i], f_.cap_[i]));
    }

   private:
    const FlConditional& f_;
    std::vector<double> lo_;
  };

  KernelPtr g_;
  std::vector<double> cap_;
  std::vector<double> floor_;
};

// ---------------------------------------------------------------- GC base
// f(X) = sum_{i in U, j in X} S_ij - lambda sum_{i, j in X} S_ij

std::vector<double> ground_colsum(const Kernel& g) { return column_sum(g); }

double pair_sum(const Kernel& g, std::span<const std::size_t> a) {
  double s = 0.0;
  for (auto x : a) {
    for (auto y : a) s += g(x, y);
  }
  return s;
}

// One incremental graph-cut world on top of a fixed block B (P, or Q+P):
// gain(x) = colsum_x - lambda (S_xx + 2 sum_{a in A} S_xa + 2 extra_x), with
// extra_x = sum_{b in B} S_xb.
class GcWorld {
 public:
  GcWorld(const Kernel* g, const std::vector<double>* colsum, std::vector<double> extra, double lambda)
      : g_(g), colsum_(colsum), extra_(std::move(extra)), inner_(g->cols(), 0.0), lambda_(lambda) {}

  double gain(std::size_t x) const {
    return (*colsum_)[x] - lambda_ * ((*g_)(x, x) + 2.0 * inner_[x] + 2.0 * extra_[x]);
  }
  void add(std::size_t x) {
    const double* col = g_->values.col(static_cast<Eigen::Index>(x)).data();
    for (std::size_t i = 0; i < inner_.size(); ++i) inner_[i] += col[i];
  }

 private:
  const Kernel* g_;
  const std::vector<double>* colsum_;
  std::vector<double> extra_;
  std::vector<double> inner_;
  double lambda_;
};

class GcCg final : public AcquisitionFunction {
 public:
  GcCg(KernelPtr ground, std::vector<double> psum, const Params& p)
      : AcquisitionFunction(FunctionKind::GCCG, ground_of(ground), p), g_(std::move(ground)), psum_(std::move(psum)) {
    colsum_ = ground_colsum(*g_);
  }

  std::unique_ptr<GainState> start() const override { return std::make_unique<State>(*this); }

 protected:
  double evaluate_set(std::span<const std::size_t> a) const override {
    const double lambda = params().lambda;
    double lin = 0.0, cond = 0.0;
    for (auto x : a) {
      lin += colsum_[x];
      cond += psum_[x];
    }
    return lin - lambda * pair_sum(*g_, a) - 2.0 * lambda * params().nu * cond;
  }

 private:
  class State final : public GainState {
   public:
    explicit State(const GcCg& f) : GainState(f.size()), world_(f.g_.get(), &f.colsum_, scaled(f), f.params().lambda) {}

   protected:
    double compute_gain(std::size_t x) const override { return world_.gain(x); }
    void apply(std::size_t x) override { world_.add(x); }

   private:
    static std::vector<double> scaled(const GcCg& f) {
      std::vector<double> e = f.psum_;
      for (auto& v : e) v *= f.params().nu;
      return e;
    }
    GcWorld world_;
  };

  KernelPtr g_;
  std::vector<double> psum_;
  std::vector<double> colsum_;
};

class GcCmi final : public AcquisitionFunction {
 public:
  GcCmi(KernelPtr ground, GcCmiBlocks b, const Params& p)
      : AcquisitionFunction(FunctionKind::GCCMI, ground_of(ground), p), g_(std::move(ground)), b_(std::move(b)) {
    colsum_ = ground_colsum(*g_);
    for (std::size_t x = 0; x < size(); ++x) {
      col_p_ += b_.cond_sum[x];
      col_q_ += b_.query_sum[x];
    }
  }

  std::unique_ptr<GainState> start() const override { return std::make_unique<State>(*this); }

 protected:
  double evaluate_set(std::span<const std::size_t> a) const override {
    const double l = params().lambda;
    double lin_a = 0.0, qa = 0.0, pa = 0.0;
    for (auto x : a) {
      lin_a += colsum_[x];
      qa += b_.query_sum[x];
      pa += b_.cond_sum[x];
    }
    const double aa = pair_sum(*g_, a);
    // Blocks A, Q, P are summed in one fixed order in every term so that
    // the empty-A case cancels exactly.
    auto f = [&](bool has_a, bool has_q) {
      const double lin = (has_a ? lin_a : 0.0) + (has_q ? col_q_ : 0.0) + col_p_;
      const double quad = (has_a ? aa : 0.0) + (has_q ? b_.sum_qq : 0.0) + b_.sum_pp +
                          2.0 * ((has_a && has_q ? qa : 0.0) + (has_a ? pa : 0.0) + (has_q ? b_.sum_pq : 0.0));
      return lin - l * quad;
    };
    const double f_ap = f(true, false);
    const double f_qp = f(false, true);
    const double f_aqp = f(true, true);
    const double f_p = f(false, false);
    return (f_ap - f_p) + (f_qp - f_aqp);
  }

 private:
  // Gain = [f(A+P+x) - f(A+P)] - [f(A+Q+P+x) - f(A+Q+P)].
  class State final : public GainState {
   public:
    explicit State(const GcCmi& f)
        : GainState(f.size()),
          with_p_(f.g_.get(), &f.colsum_, f.b_.cond_sum, f.params().lambda),
          with_qp_(f.g_.get(), &f.colsum_, summed(f), f.params().lambda) {}

   protected:
    double compute_gain(std::size_t x) const override { return with_p_.gain(x) - with_qp_.gain(x); }
    void apply(std::size_t x) override {
      with_p_.add(x);
      with_qp_.add(x);
    }

   private:
    static std::vector<double> summed(const GcCmi& f) {
      std::vector<double> e = f.b_.cond_sum;
      for (std::size_t i = 0; i < e.size(); ++i) e[i] += f.b_.query_sum[i];
      return e;
    }
    GcWorld with_p_;
    GcWorld with_qp_;
  };

  KernelPtr g_;
  GcCmiBlocks b_;
  std::vector<double> colsum_;
  double col_p_ = 0.0;
  double col_q_ = 0.0;
};

// ---------------------------------------------------------------- log-det
// value = sum_k sign_k * logdet(engine_k restricted to A)

class LogDetFunction final : public AcquisitionFunction {
 public:
  struct Term {
    std::unique_ptr<detail::ConditionedLogDet> engine;
    double sign;
  };

  LogDetFunction(FunctionKind kind, KernelPtr ground, const Params& p)
      : AcquisitionFunction(kind, ground_of(ground), p), g_(std::move(ground)) {}

  void add_term(double sign, std::unique_ptr<detail::ConditionedLogDet> e) {
    terms_.push_back({std::move(e), sign});
  }
  const Eigen::MatrixXd* ground_matrix() const { return &g_->values; }

  std::unique_ptr<GainState> start() const override { return std::make_unique<State>(*this); }

 protected:
  double evaluate_set(std::span<const std::size_t> a) const override {
    double v = 0.0;
    for (const auto& t : terms_) v += t.sign * t.engine->logdet(a);
    return v;
  }

 private:
  class State final : public GainState {
   public:
    explicit State(const LogDetFunction& f) : GainState(f.size()), f_(f) {
      for (const auto& t : f.terms_) memos_.emplace_back(*t.engine);
    }

   protected:
    double compute_gain(std::size_t x) const override {
      double g = 0.0;
      for (std::size_t k = 0; k < memos_.size(); ++k) g += f_.terms_[k].sign * memos_[k].gain(x);
      return g;
    }
    void apply(std::size_t x) override {
      for (auto& m : memos_) m.add(x);
    }

   private:
    const LogDetFunction& f_;
    std::vector<detail::ConditionedLogDet::Memo> memos_;
  };

  KernelPtr g_;
  std::vector<Term> terms_;
};

Eigen::MatrixXd stack_rows(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd m(a.rows() + b.rows(), a.cols());
  m << a, b;
  return m;
}

void check_square(const KernelPtr& k, std::size_t n, const char* what) {
  require(k, what);
  if (k->rows() != n || k->cols() != n) {
    throw Error(ErrorKind::shape, std::string(what) + " block must be " + std::to_string(n) + "x" + std::to_string(n));
  }
}

}  // namespace

AcquisitionPtr make_flmi(KernelPtr query_cross, const Params& p) {
  require(query_cross, "query");
  return std::make_unique<FlMi>(std::move(query_cross), p);
}

AcquisitionPtr make_gcmi(std::vector<PointId> ground, std::vector<double> query_sum, const Params& p) {
  check_vector(query_sum, ground.size(), "query_sum");
  return std::make_unique<GcMi>(std::move(ground), std::move(query_sum), p);
}

AcquisitionPtr make_flcg(KernelPtr ground, std::vector<double> cond_max, const Params& p) {
  require(ground, "ground");
  check_vector(cond_max, ground->cols(), "cond_max");
  std::vector<double> cap(cond_max.size(), std::numeric_limits<double>::infinity());
  for (auto& v : cond_max) v *= p.nu;
  return std::make_unique<FlConditional>(FunctionKind::FLCG, std::move(ground), std::move(cap), std::move(cond_max), p);
}

AcquisitionPtr make_flcmi(KernelPtr ground, std::vector<double> query_max, std::vector<double> cond_max,
                          const Params& p) {
  require(ground, "ground");
  check_vector(query_max, ground->cols(), "query_max");
  check_vector(cond_max, ground->cols(), "cond_max");
  for (auto& v : query_max) v *= p.eta;
  for (auto& v : cond_max) v *= p.nu;
  return std::make_unique<FlConditional>(FunctionKind::FLCMI, std::move(ground), std::move(query_max),
                                         std::move(cond_max), p);
}

AcquisitionPtr make_gccg(KernelPtr ground, std::vector<double> cond_sum, const Params& p) {
  require(ground, "ground");
  check_vector(cond_sum, ground->cols(), "cond_sum");
  return std::make_unique<GcCg>(std::move(ground), std::move(cond_sum), p);
}

AcquisitionPtr make_gccmi(KernelPtr ground, GcCmiBlocks blocks, const Params& p) {
  require(ground, "ground");
  check_vector(blocks.query_sum, ground->cols(), "query_sum");
  check_vector(blocks.cond_sum, ground->cols(), "cond_sum");
  return std::make_unique<GcCmi>(std::move(ground), std::move(blocks), p);
}

AcquisitionPtr make_logdetmi(KernelPtr ground, KernelPtr query_self, KernelPtr query_cross, const Params& p) {
  auto f = std::make_unique<LogDetFunction>(FunctionKind::LOGDETMI, ground, p);
  require(query_cross, "query");
  check_columns(*query_cross, f->ground_ids(), "query");
  check_square(query_self, query_cross->rows(), "query self-similarity");
  const double eps = p.epsilon_reg;
  f->add_term(1.0, std::make_unique<detail::ConditionedLogDet>(f->ground_matrix(), eps, "LOGDETMI K_A"));
  f->add_term(-1.0, std::make_unique<detail::ConditionedLogDet>(f->ground_matrix(), eps, query_self->values,
                                                                query_cross->values, p.eta * p.eta,
                                                                "LOGDETMI K_A|Q"));
  return f;
}

AcquisitionPtr make_logdetcg(KernelPtr ground, KernelPtr cond_self, KernelPtr cond_cross, const Params& p) {
  auto f = std::make_unique<LogDetFunction>(FunctionKind::LOGDETCG, ground, p);
  require(cond_cross, "conditioning");
  check_columns(*cond_cross, f->ground_ids(), "conditioning");
  check_square(cond_self, cond_cross->rows(), "conditioning self-similarity");
  f->add_term(1.0, std::make_unique<detail::ConditionedLogDet>(f->ground_matrix(), p.epsilon_reg, cond_self->values,
                                                               cond_cross->values, p.nu * p.nu, "LOGDETCG K_A|P"));
  return f;
}

AcquisitionPtr make_logdetcmi(KernelPtr ground, KernelPtr cond_self, KernelPtr query_self, KernelPtr cond_query,
                              KernelPtr cond_cross, KernelPtr query_cross, const Params& p) {
  auto f = std::make_unique<LogDetFunction>(FunctionKind::LOGDETCMI, ground, p);
  require(cond_cross, "conditioning");
  require(query_cross, "query");
  check_columns(*cond_cross, f->ground_ids(), "conditioning");
  check_columns(*query_cross, f->ground_ids(), "query");
  const std::size_t np = cond_cross->rows(), nq = query_cross->rows();
  check_square(cond_self, np, "conditioning self-similarity");
  check_square(query_self, nq, "query self-similarity");
  require(cond_query, "conditioning-query");
  if (cond_query->rows() != np || cond_query->cols() != nq) {
    throw Error(ErrorKind::shape, "conditioning-query block must be |P| x |Q|");
  }
  const auto npi = static_cast<Eigen::Index>(np), nqi = static_cast<Eigen::Index>(nq);
  Eigen::MatrixXd z(npi + nqi, npi + nqi);
  z.topLeftCorner(npi, npi) = cond_self->values;
  z.topRightCorner(npi, nqi) = cond_query->values;
  z.bottomLeftCorner(nqi, npi) = cond_query->values.transpose();
  z.bottomRightCorner(nqi, nqi) = query_self->values;
  const double eps = p.epsilon_reg;
  f->add_term(1.0, std::make_unique<detail::ConditionedLogDet>(f->ground_matrix(), eps, cond_self->values,
                                                               cond_cross->values, 1.0, "LOGDETCMI K_A|P"));
  f->add_term(-1.0, std::make_unique<detail::ConditionedLogDet>(
                        f->ground_matrix(), eps, z, stack_rows(cond_cross->values, query_cross->values), 1.0,
                        "LOGDETCMI K_A|P+Q"));
  return f;
}

}  // namespace smi
