#include <algorithm>
#include <memory>

#include "doctest.h"
#include "gen.hpp"
#include "smi/discovery.hpp"
#include "smi/domain.hpp"
#include "smi/error.hpp"

using namespace smi;

namespace {

std::shared_ptr<const EmbeddingStore> random_store(gen::Rng& rng, int n, int dim) {
  std::vector<PointId> ids;
  for (int i = 0; i < n; ++i) ids.push_back(100 + 3 * i);
  return std::make_shared<const EmbeddingStore>(ids, gen::unit_rows(rng, n, dim), true);
}

double cos_of(const EmbeddingStore& s, PointId a, PointId b, Rectify r) {
  return rectify(s.row(s.index_of(a)).dot(s.row(s.index_of(b))), r);
}

ObjectFeatureSet boxes(gen::Rng& rng, PointId image, int n, int dim, BoxSetKind kind,
                       std::vector<std::uint32_t> classes = {}) {
  ObjectFeatureSet s;
  s.image_id = image;
  s.boxes = gen::unit_rows(rng, n, dim);
  s.kind = kind;
  s.box_classes = std::move(classes);
  return s;
}

// Images 0..3 labeled, 4..19 unlabeled. Classes 0..2 known, 3 unknown;
// every fourth unlabeled image also holds a class-3 box.
std::shared_ptr<DetectionCorpus> corpus(gen::Rng& rng) {
  auto c = std::make_shared<DetectionCorpus>();
  c->dim = 6;
  for (PointId id = 0; id < 20; ++id) {
    DetectionImage img;
    img.image_id = id;
    std::vector<std::uint32_t> cls = {static_cast<std::uint32_t>(id % 3)};
    if (id >= 4 && id % 4 == 0) cls.push_back(3);
    img.ground_truth = boxes(rng, id, static_cast<int>(cls.size()), 6, BoxSetKind::ground_truth, cls);
    img.pool = id < 4 ? Pool::labeled : Pool::unlabeled;
    if (id >= 4) img.proposals = boxes(rng, id, 3, 6, BoxSetKind::proposal);
    c->images[id] = std::move(img);
  }
  return c;
}

}  // namespace

TEST_CASE("streaming reductions equal reductions of the materialized kernel") {
  gen::Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto store = random_store(rng, 40, 5);
    const auto policy = trial % 2 ? Rectify::shift : Rectify::clamp;
    EmbeddingDomain dom(store, policy);
    std::vector<PointId> rows, u;
    for (auto i : gen::subset(rng, 40, 0.3)) rows.push_back(store->ids()[i]);
    for (auto id : store->ids()) {
      if (!std::count(rows.begin(), rows.end(), id)) u.push_back(id);
    }
    const auto base_max = dom.SimilarityDomain::column_max(rows, SetRole::conditioning, u);
    const auto base_sum = dom.SimilarityDomain::column_sum(rows, SetRole::query, u);
    const auto fast_max = dom.column_max(rows, SetRole::conditioning, u);
    const auto fast_sum = dom.column_sum(rows, SetRole::query, u);
    REQUIRE(fast_max.size() == u.size());
    for (std::size_t j = 0; j < u.size(); ++j) {
      double m = 0.0, s = 0.0;
      for (auto r : rows) {
        m = std::max(m, cos_of(*store, r, u[j], policy));
        s += cos_of(*store, r, u[j], policy);
      }
      CHECK(fast_max[j] == doctest::Approx(m).epsilon(1e-12));
      CHECK(base_max[j] == doctest::Approx(m).epsilon(1e-12));
      CHECK(fast_sum[j] == doctest::Approx(s).epsilon(1e-12));
      CHECK(base_sum[j] == doctest::Approx(s).epsilon(1e-12));
    }
    double total = 0.0;
    for (auto a : rows) {
      for (auto b : u) total += cos_of(*store, a, b, policy);
    }
    CHECK(dom.block_sum(rows, SetRole::conditioning, u, SetRole::query) == doctest::Approx(total).epsilon(1e-12));
    CHECK(dom.SimilarityDomain::block_sum(rows, SetRole::conditioning, u, SetRole::query) ==
          doctest::Approx(total).epsilon(1e-12));
  }
}

TEST_CASE("empty row sets reduce to zeros") {
  gen::Rng rng(1);
  const auto store = random_store(rng, 6, 3);
  EmbeddingDomain dom(store, Rectify::clamp);
  const std::vector<PointId> none;
  const auto& u = store->ids();
  CHECK(dom.column_max(none, SetRole::conditioning, u) == std::vector<double>(6, 0.0));
  CHECK(dom.column_sum(none, SetRole::query, u) == std::vector<double>(6, 0.0));
  CHECK(dom.block_sum(none, SetRole::query, u, SetRole::query) == 0.0);
}

TEST_CASE("embedding domain needs unit rows") {
  RowMatrix m(2, 2);
  m << 3, 4, 1, 0;
  auto raw = std::make_shared<const EmbeddingStore>(std::vector<PointId>{0, 1}, m);
  CHECK_THROWS_AS(EmbeddingDomain(raw, Rectify::clamp), Error);
  auto unit = std::make_shared<const EmbeddingStore>(normalize(*raw));
  CHECK_NOTHROW(EmbeddingDomain(unit, Rectify::clamp));
}

TEST_CASE("built functions match formulas evaluated from raw cosines") {
  gen::Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const auto store = random_store(rng, 24, 4);
    EmbeddingDomain dom(store, Rectify::clamp);
    const auto& ids = store->ids();
    const std::vector<PointId> p(ids.begin(), ids.begin() + 5);
    const std::vector<PointId> q(ids.begin() + 5, ids.begin() + 8);
    const std::vector<PointId> u(ids.begin() + 8, ids.end());
    Params prm;
    prm.eta = 0.5 + trial % 3;
    prm.nu = 0.5 + trial % 2;
    prm.lambda = 0.75;
    std::vector<PointId> a;
    for (auto i : gen::subset(rng, u.size(), 0.3)) a.push_back(u[i]);
    auto s = [&](PointId x, PointId y) { return cos_of(*store, x, y, Rectify::clamp); };

    double flmi = 0.0;
    for (auto i : q) {
      double m = 0.0;
      for (auto j : a) m = std::max(m, s(i, j));
      flmi += m;
    }
    for (auto j : a) {
      double m = 0.0;
      for (auto i : q) m = std::max(m, s(i, j));
      flmi += prm.eta * m;
    }
    CHECK(build_function(FunctionKind::FLMI, dom, p, q, u, prm)->evaluate_ids(a) ==
          doctest::Approx(flmi).epsilon(1e-10));

    double flcg = 0.0;
    for (auto i : u) {
      double ma = 0.0, mp = 0.0;
      for (auto j : a) ma = std::max(ma, s(i, j));
      for (auto j : p) mp = std::max(mp, s(i, j));
      flcg += std::max(ma - prm.nu * mp, 0.0);
    }
    CHECK(build_function(FunctionKind::FLCG, dom, p, q, u, prm)->evaluate_ids(a) ==
          doctest::Approx(flcg).epsilon(1e-10));

    double gcmi = 0.0;
    for (auto i : a) {
      for (auto j : q) gcmi += 2.0 * prm.lambda * s(i, j);
    }
    CHECK(build_function(FunctionKind::GCMI, dom, p, q, u, prm)->evaluate_ids(a) ==
          doctest::Approx(gcmi).epsilon(1e-10));

    double gccg = 0.0;
    for (auto j : a) {
      for (auto i : u) gccg += s(i, j);
      for (auto k : a) gccg -= prm.lambda * s(j, k);
      for (auto k : p) gccg -= 2.0 * prm.lambda * prm.nu * s(j, k);
    }
    CHECK(build_function(FunctionKind::GCCG, dom, p, q, u, prm)->evaluate_ids(a) ==
          doctest::Approx(gccg).epsilon(1e-10));
  }
}

TEST_CASE("every kind builds over an embedding domain") {
  gen::Rng rng(4);
  const auto store = random_store(rng, 30, 12);
  EmbeddingDomain dom(store, Rectify::shift);
  const auto& ids = store->ids();
  const std::vector<PointId> p(ids.begin(), ids.begin() + 4);
  const std::vector<PointId> q(ids.begin() + 4, ids.begin() + 6);
  const std::vector<PointId> u(ids.begin() + 6, ids.end());
  for (auto k : {FunctionKind::FLMI, FunctionKind::GCMI, FunctionKind::LOGDETMI, FunctionKind::FLCG,
                 FunctionKind::GCCG, FunctionKind::LOGDETCG, FunctionKind::FLCMI, FunctionKind::LOGDETCMI,
                 FunctionKind::GCCMI}) {
    CAPTURE(to_string(k));
    const auto f = build_function(k, dom, p, q, u, Params{});
    CHECK(f->kind() == k);
    CHECK(f->ground_ids() == u);
    const std::vector<PointId> one{u[0]};
    CHECK(std::isfinite(f->evaluate_ids(one)));
  }
}

TEST_CASE("detection domain") {
  gen::Rng rng(9);
  const auto c = corpus(rng);
  const std::set<std::uint32_t> known{0, 1, 2};
  DetectionDomain dom(c, known, Rectify::clamp);
  CHECK(dom.supports(Family::fl));
  CHECK(dom.supports(Family::gc));
  CHECK_FALSE(dom.supports(Family::logdet));

  const auto [labeled, unlabeled] = detection_pools(*c);
  CHECK(labeled == std::vector<PointId>{0, 1, 2, 3});
  CHECK(unlabeled.size() == 16);

  SUBCASE("cross kernels use the role's boxes and reduction") {
    const std::vector<PointId> rows{4, 8};  // both hold a known and an unknown box
    const auto kc = dom.cross(rows, SetRole::conditioning, unlabeled);
    const auto kq = dom.cross(rows, SetRole::query, unlabeled);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto& gt = *c->image(rows[r]).ground_truth;
      const auto known_boxes = gt.select_boxes([](std::uint32_t k) { return k < 3; });
      const auto unk_boxes = gt.select_boxes([](std::uint32_t k) { return k == 3; });
      for (std::size_t j = 0; j < unlabeled.size(); ++j) {
        const auto& props = *c->image(unlabeled[j]).proposals;
        CHECK(kc->values(r, j) ==
              detection_similarity(known_boxes, props, DetectionMode::conditioning, Rectify::clamp));
        CHECK(kq->values(r, j) == detection_similarity(unk_boxes, props, DetectionMode::query, Rectify::clamp));
      }
    }
    // Image 1 has no unknown-class box.
    const std::vector<PointId> bad{1};
    try {
      dom.cross(bad, SetRole::query, unlabeled);
      FAIL("expected a consistency error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::consistency);
    }
    CHECK_THROWS_AS(dom.column_max(bad, SetRole::query, unlabeled), Error);
  }

  SUBCASE("log-det and GCCMI inputs") {
    CHECK_THROWS_AS(build_function(FunctionKind::LOGDETMI, dom, labeled, {}, unlabeled, Params{}), Error);
    CHECK(dom.block_sum(labeled, SetRole::conditioning, labeled, SetRole::conditioning) == 0.0);
  }

  SUBCASE("discovery loop over images") {
    const auto oracle = oracle_from_corpus(*c, known);
    CHECK(oracle.has_unknown(8));
    CHECK(oracle.has_known(8));
    CHECK_FALSE(oracle.has_unknown(5));
    for (auto fam : {Family::fl, Family::gc}) {
      StrategySpec spec;
      spec.name = "det";
      spec.family = fam;
      spec.budget = 3;
      spec.rounds = 6;
      auto recs = run_experiment(initial_state(labeled, unlabeled, oracle), spec, {&dom, &oracle});
      std::size_t total = 0;
      std::set<PointId> chosen;
      for (const auto& r : recs) {
        total += r.unknown_selected;
        chosen.insert(r.selected.begin(), r.selected.end());
      }
      CHECK(chosen.size() == 16);  // 6 rounds x 3 exhaust the pool
      CHECK(total == 4);           // images 4, 8, 12, 16
    }
  }

  SUBCASE("pool validation") {
    auto broken = *c;
    broken.images[10].proposals.reset();
    CHECK_THROWS_AS(detection_pools(broken), Error);
    broken = *c;
    broken.images[2].pool.reset();
    CHECK_THROWS_AS(detection_pools(broken), Error);
  }
}
