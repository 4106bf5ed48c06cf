#include "smi/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include "smi/error.hpp"
#include "smi/rng.hpp"

namespace smi {

ProbabilityTable::ProbabilityTable(std::vector<PointId> ids, Eigen::MatrixXd probs)
    : ids_(std::move(ids)), probs_(std::move(probs)) {
  if (static_cast<Eigen::Index>(ids_.size()) != probs_.rows()) {
    throw Error(ErrorKind::shape, "probability table has " + std::to_string(ids_.size()) + " ids but " +
                                      std::to_string(probs_.rows()) + " rows");
  }
  if (!ids_.empty() && probs_.cols() == 0) throw Error(ErrorKind::shape, "probability table has no classes");
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    const auto r = probs_.row(static_cast<Eigen::Index>(i));
    const bool entries_ok = r.allFinite() && r.minCoeff() >= 0.0 && r.maxCoeff() <= 1.0;
    if (!entries_ok || std::abs(r.sum() - 1.0) > 1e-6) {
      throw Error(ErrorKind::data, "probability row of point " + std::to_string(ids_[i]) + " is off the simplex");
    }
    if (!index_.emplace(ids_[i], i).second) {
      throw Error(ErrorKind::data, "duplicate probability row for point " + std::to_string(ids_[i]));
    }
  }
}

std::size_t ProbabilityTable::index_of(PointId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw Error(ErrorKind::lookup, "point " + std::to_string(id) + " has no probability row");
  return it->second;
}

ProbabilityTable load_probabilities(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::data, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::data, path.string() + " is empty");
  const auto header = csv::split(line);
  if (header.size() < 2 || header[0] != "id") {
    throw Error(ErrorKind::format, path.string() + ": header must be id,p0,...,p{C-1}");
  }
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (header[c] != "p" + std::to_string(c - 1)) {
      throw Error(ErrorKind::format, path.string() + ": unexpected header column '" + std::string(header[c]) + "'");
    }
  }
  const std::size_t classes = header.size() - 1;
  std::vector<PointId> ids;
  std::vector<double> flat;
  while (std::getline(in, line)) {
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != classes + 1) {
      throw Error(ErrorKind::format, path.string() + ": row " + std::to_string(ids.size()) + " has " +
                                         std::to_string(f.size()) + " fields, expected " + std::to_string(classes + 1));
    }
    ids.push_back(csv::parse_uint(f[0], "probability id"));
    for (std::size_t c = 1; c < f.size(); ++c) flat.push_back(csv::parse_double(f[c], "probability"));
  }
  if (ids.empty()) throw Error(ErrorKind::data, path.string() + " has no rows");
  Eigen::MatrixXd probs = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      flat.data(), static_cast<Eigen::Index>(ids.size()), static_cast<Eigen::Index>(classes));
  return ProbabilityTable(std::move(ids), std::move(probs));
}

void save_probabilities(const ProbabilityTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::data, "cannot write " + path.string());
  out.precision(17);
  out << "id";
  for (std::size_t c = 0; c < table.classes(); ++c) out << ",p" << c;
  out << '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.ids()[i];
    for (std::size_t c = 0; c < table.classes(); ++c) {
      out << ',' << table.probs()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
    }
    out << '\n';
  }
}

double entropy(const Eigen::Ref<const Eigen::VectorXd>& p) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) > 0.0) h -= p(i) * std::log(p(i));
  }
  return h;
}

double margin(const Eigen::Ref<const Eigen::VectorXd>& p) {
  double top1 = -1.0, top2 = -1.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) > top1) {
      top2 = top1;
      top1 = p(i);
    } else if (p(i) > top2) {
      top2 = p(i);
    }
  }
  return p.size() < 2 ? top1 : top1 - top2;
}

double max_probability(const Eigen::Ref<const Eigen::VectorXd>& p) { return p.maxCoeff(); }

namespace {

std::vector<PointId> sorted_unique(std::span<const PointId> candidates) {
  std::vector<PointId> c(candidates.begin(), candidates.end());
  std::sort(c.begin(), c.end());
  if (std::adjacent_find(c.begin(), c.end()) != c.end()) throw Error(ErrorKind::argument, "duplicate candidates");
  return c;
}

void check_budget(std::span<const PointId> candidates, std::size_t budget) {
  if (candidates.empty()) throw Error(ErrorKind::argument, "no candidates to select from");
  if (budget == 0) throw Error(ErrorKind::argument, "budget must be >= 1");
}

template <class Score>
SelectionResult rank_select(const ProbabilityTable& table, std::span<const PointId> candidates, std::size_t budget,
                            bool descending, Score score) {
  check_budget(candidates, budget);
  const auto ids = sorted_unique(candidates);
  std::vector<double> s(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) s[i] = score(table.row(ids[i]));
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), 0);
  // ids are ascending, so a stable sort keeps ties in id order
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return descending ? s[a] > s[b] : s[a] < s[b]; });
  SelectionResult r;
  const std::size_t take = std::min(budget, ids.size());
  for (std::size_t k = 0; k < take; ++k) {
    r.chosen.push_back(ids[order[k]]);
    r.gains.push_back(s[order[k]]);
    r.objective += s[order[k]];
  }
  return r;
}

}  // namespace

SelectionResult entropy_select(const ProbabilityTable& table, std::span<const PointId> candidates, std::size_t budget) {
  return rank_select(table, candidates, budget, true, [](const Eigen::VectorXd& p) { return entropy(p); });
}

SelectionResult margin_select(const ProbabilityTable& table, std::span<const PointId> candidates, std::size_t budget) {
  return rank_select(table, candidates, budget, false, [](const Eigen::VectorXd& p) { return margin(p); });
}

SelectionResult least_confidence_select(const ProbabilityTable& table, std::span<const PointId> candidates,
                                        std::size_t budget) {
  return rank_select(table, candidates, budget, false, [](const Eigen::VectorXd& p) { return max_probability(p); });
}

Eigen::VectorXd badge_gradient(const Eigen::Ref<const Eigen::VectorXd>& probs,
                               const Eigen::Ref<const Eigen::VectorXd>& feature) {
  Eigen::Index label = 0;
  probs.maxCoeff(&label);
  Eigen::VectorXd delta = probs;
  delta(label) -= 1.0;
  Eigen::VectorXd g(probs.size() * feature.size());
  for (Eigen::Index c = 0; c < probs.size(); ++c) g.segment(c * feature.size(), feature.size()) = delta(c) * feature;
  return g;
}

std::vector<std::size_t> kmeanspp_seed(const Eigen::MatrixXd& points, std::size_t k, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(points.rows());
  k = std::min(k, n);
  CounterRng rng(seed, hash_name("badge"));
  // Distances to the nearest center; the origin acts as the initial center.
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = points.row(static_cast<Eigen::Index>(i)).squaredNorm();
  std::vector<bool> taken(n, false);
  std::vector<std::size_t> centers;
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!taken[i]) total += d2[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      const double u = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (taken[i] || d2[i] <= 0.0) continue;
        acc += d2[i];
        pick = i;
        if (acc > u) break;
      }
    } else {
      // every remaining point sits on a center: uniform among them
      std::vector<std::size_t> rest;
      for (std::size_t i = 0; i < n; ++i) {
        if (!taken[i]) rest.push_back(i);
      }
      pick = rest[rng.below(rest.size())];
    }
    taken[pick] = true;
    centers.push_back(pick);
    const auto c = points.row(static_cast<Eigen::Index>(pick));
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (points.row(static_cast<Eigen::Index>(i)) - c).squaredNorm());
    }
  }
  return centers;
}

SelectionResult badge_select(const EmbeddingStore& features, const ProbabilityTable& table,
                             std::span<const PointId> candidates, std::size_t budget, std::uint64_t seed) {
  check_budget(candidates, budget);
  if (features.dim() == 0) throw Error(ErrorKind::shape, "BADGE needs feature vectors of positive dimension");
  const auto ids = sorted_unique(candidates);
  const auto d = static_cast<Eigen::Index>(features.dim());
  Eigen::MatrixXd grads(static_cast<Eigen::Index>(ids.size()), d * static_cast<Eigen::Index>(table.classes()));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const Eigen::VectorXd x = features.row(features.index_of(ids[i])).transpose();
    grads.row(static_cast<Eigen::Index>(i)) = badge_gradient(table.row(ids[i]), x).transpose();
  }
  const auto centers = kmeanspp_seed(grads, budget, seed);
  SelectionResult r;
  Eigen::VectorXd d2 = grads.rowwise().squaredNorm();
  for (auto c : centers) {
    r.chosen.push_back(ids[c]);
    r.gains.push_back(d2(static_cast<Eigen::Index>(c)));
    r.objective += d2(static_cast<Eigen::Index>(c));
    for (Eigen::Index i = 0; i < grads.rows(); ++i) {
      d2(i) = std::min(d2(i), (grads.row(i) - grads.row(static_cast<Eigen::Index>(c))).squaredNorm());
    }
  }
  return r;
}

SelectionResult random_select(std::span<const PointId> candidates, std::size_t budget, std::uint64_t seed) {
  check_budget(candidates, budget);
  auto ids = sorted_unique(candidates);
  CounterRng rng(seed, hash_name("random"));
  const std::size_t take = std::min(budget, ids.size());
  for (std::size_t i = 0; i < take; ++i) std::swap(ids[i], ids[i + rng.below(ids.size() - i)]);
  SelectionResult r;
  r.chosen.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(take));
  r.gains.assign(take, 0.0);
  return r;
}

}  // namespace smi
