#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/QR>

#include "ooskit/detectors.hpp"
#include "ooskit/rng.hpp"
#include "test_helpers.hpp"

using namespace ooskit;
using ooskit::testing::pt;

namespace {

PrototypeContext one_class(const Point& g1) {
  PrototypeContext c;
  c.prototypes = {{1, g1}};
  return c;
}

Point random_point(CounterRng& rng, Index d, double scale = 1.0) {
  Point p(d);
  for (Index j = 0; j < d; ++j) p[j] = scale * rng.normal();
  return p;
}

PrototypeContext random_context(CounterRng& rng, Index d, int k) {
  PrototypeContext c;
  for (int i = 1; i <= k; ++i) c.prototypes.emplace(i, random_point(rng, d, 2.0));
  c.generic = random_point(rng, d);
  c.background_constant = 0.5 + 3.0 * rng.uniform();
  return c;
}

// Plain ReLU forward pass written out independently of LcboScorer.
double reference_mlp(const std::vector<DenseLayer>& layers, Eigen::VectorXd x) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Eigen::VectorXd y(layers[l].w.rows());
    for (Index r = 0; r < y.size(); ++r) {
      double s = layers[l].b[r];
      for (Index c = 0; c < x.size(); ++c) s += layers[l].w(r, c) * x[c];
      y[r] = (l + 1 < layers.size()) ? std::max(0.0, s) : s;
    }
    x = y;
  }
  return x[0];
}

}  // namespace

TEST_CASE("detector names round-trip") {
  for (auto d : {Detector::min_dist, Detector::lcbo, Detector::background, Detector::groos,
                 Detector::centered_groos}) {
    CHECK(parse_detector(detector_name(d)) == d);
  }
  CHECK_THROWS_AS(parse_detector("knn"), InvalidArgument);
}

TEST_CASE("min dist examples") {
  CHECK(score_min_dist(pt({0, 0}), one_class(pt({0, 0}))) == 0.0);
  PrototypeContext c;
  c.prototypes = {{1, pt({0, 0})}, {2, pt({3, 4})}};
  CHECK(score_min_dist(pt({3, 0}), c) == doctest::Approx(-3.0).epsilon(1e-15));
  c.prototypes = {{1, pt({1, 1})}, {2, pt({5, 5})}};
  CHECK(score_min_dist(pt({1, 1}), c) == 0.0);
  CHECK_THROWS_AS(score_min_dist(pt({1, 1, 1}), c), DimensionMismatch);
}

TEST_CASE("lcbo examples") {
  PrototypeContext c;
  c.prototypes = {{1, pt({0, 0})}, {2, pt({1, 0})}};
  const LcboScorer zero = LcboScorer::zero(2);
  CHECK(score_lcbo(pt({3, -2}), c, zero) == 0.0);

  std::vector<DenseLayer> lin(1);
  lin[0].w = Eigen::MatrixXd::Zero(1, 4);
  lin[0].b = Eigen::VectorXd::Constant(1, 5.0);
  const LcboScorer constant(lin);
  CHECK(score_lcbo(pt({0.3, 7}), c, constant) == 5.0);
  CHECK(score_lcbo(pt({-9, 1}), c, constant) == 5.0);

  // 0.7 * gamma_x + 0.2 gives 0.2 for gamma_1 and 0.9 for gamma_2.
  std::vector<DenseLayer> two(1);
  two[0].w = Eigen::MatrixXd::Zero(1, 4);
  two[0].w(0, 0) = 0.7;
  two[0].b = Eigen::VectorXd::Constant(1, 0.2);
  const LcboScorer pairwise(two);
  const Point q = pt({0.25, -1});
  CHECK(pairwise(c.prototypes.at(1), q) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(pairwise(c.prototypes.at(2), q) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(score_lcbo(q, c, pairwise) == doctest::Approx(0.9).epsilon(1e-15));

  CHECK_THROWS_AS(score_lcbo(pt({1, 2, 3}), c, pairwise), DimensionMismatch);
}

TEST_CASE("lcbo forward matches an independent per-pair evaluation") {
  CounterRng rng(5, 0);
  for (int t = 0; t < 50; ++t) {
    const Index d = 1 + static_cast<Index>(rng.uniform_index(5));
    const int k = 1 + static_cast<int>(rng.uniform_index(6));
    const LcboScorer s = LcboScorer::random(d, 100 + t, {8, 5});
    const PrototypeContext ctx = random_context(rng, d, k);
    const Point q = random_point(rng, d);
    double best = -INFINITY;
    for (const auto& [id, g] : ctx.prototypes) {
      Eigen::VectorXd in(2 * d);
      in << g, q;
      best = std::max(best, reference_mlp(s.layers(), in));
    }
    CHECK(score_lcbo(q, ctx, s) == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("lcbo input encodings") {
  const Point g = pt({1, 2}), q = pt({4, 8});
  CHECK(LcboScorer::zero(2, {3}, LcboInput::concat).encode(g, q) == pt({1, 2, 4, 8}));
  CHECK(LcboScorer::zero(2, {3}, LcboInput::difference).encode(g, q) == pt({-3, -6}));
  CHECK(LcboScorer::zero(2, {3}, LcboInput::both).encode(g, q).size() == 6);
  CHECK(LcboScorer::zero(3).dims() == std::vector<Index>{6, 64, 1});
}

TEST_CASE("background examples") {
  PrototypeContext c = one_class(pt({1, 0}));
  c.background_constant = 1.0;
  CHECK(score_background(pt({0, 0}), c) == doctest::Approx(0.5).epsilon(1e-15));

  c.prototypes = {{1, pt({1, 0})}, {2, pt({2, 0})}};
  CHECK(score_background(pt({0, 0}), c) == doctest::Approx(0.422318798251518197).epsilon(1e-14));

  c.background_constant = 1e6;
  CHECK(score_background(pt({0, 0}), c) < 1e-300);

  c.background_constant.reset();
  CHECK_THROWS(score_background(pt({0, 0}), c));
}

TEST_CASE("groos examples") {
  PrototypeContext c = one_class(pt({2, 0}));
  c.generic = pt({0, 0});
  CHECK(score_groos(pt({1, 5}), c) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(score_groos(pt({0.5, 0}), c) == doctest::Approx(0.731058578630004879).epsilon(1e-14));
  CHECK(score_groos(pt({2, 0}), c) == doctest::Approx(0.119202922022117556).epsilon(1e-14));
  c.generic.reset();
  CHECK_THROWS(score_groos(pt({0, 0}), c));
}

TEST_CASE("centered groos examples") {
  PrototypeContext c = one_class(pt({2, 0}));
  const Point p = pt({-1, 3});
  std::vector<Point> same(4, p);
  CHECK(score_centered_groos(p, same, c) > 0.5);

  std::vector<Point> pair{pt({1, 0}), pt({-1, 0})};
  PrototypeContext fixed = c;
  fixed.generic = pt({0, 0});
  CounterRng rng(9, 0);
  for (int t = 0; t < 20; ++t) {
    const Point q = random_point(rng, 2, 3.0);
    CHECK(score_centered_groos(q, pair, c) == doctest::Approx(score_groos(q, fixed)).epsilon(1e-15));
  }
  CHECK_THROWS(score_centered_groos(p, std::vector<Point>{}, c));
}

TEST_CASE("predict examples") {
  PrototypeContext c = one_class(pt({2, 0}));
  c.generic = pt({0, 0});
  const Verdict v = predict(pt({0.5, 0}), c, Detector::groos, 0.5);
  CHECK(v.is_oos_pred);
  CHECK_FALSE(v.class_pred.has_value());
  CHECK(v.score == doctest::Approx(0.731058578630004879).epsilon(1e-14));

  PrototypeContext far = one_class(pt({2, 0}));
  far.generic = pt({100, 100});
  const Verdict in = predict(pt({2, 0}), far, Detector::groos, 0.5);
  CHECK_FALSE(in.is_oos_pred);
  REQUIRE(in.class_pred.has_value());
  CHECK(*in.class_pred == 1);
  REQUIRE(in.class_probs.has_value());
  CHECK(in.class_probs->size() == 1);

  PrototypeContext md;
  md.prototypes = {{1, pt({0, 0})}, {2, pt({3, 4})}};
  const Verdict m = predict(pt({3, 0}), md, Detector::min_dist, -2.0);
  CHECK(m.raw_score == doctest::Approx(-3.0));
  CHECK(m.score == doctest::Approx(3.0));
  CHECK(m.is_oos_pred);
  CHECK_FALSE(m.class_probs.has_value());
  CHECK_FALSE(predict(pt({3, 0}), md, Detector::min_dist, -4.0).is_oos_pred);

  CHECK_THROWS_AS(predict(pt({3, 0}), md, Detector::groos, 1.5), InvalidArgument);
  CHECK_THROWS(predict(pt({3, 0}), md, Detector::lcbo, 0.0));
}

TEST_CASE("predict breaks argmin ties by lowest class id") {
  PrototypeContext c;
  c.prototypes = {{4, pt({1, 0})}, {2, pt({-1, 0})}, {7, pt({0, 1})}};
  CHECK(nearest_class(pt({0, -5}), c) == 2);
  const Verdict v = predict(pt({0, -5}), c, Detector::min_dist, -100.0);
  REQUIRE(v.class_pred.has_value());
  CHECK(*v.class_pred == 2);
  c.prototypes = {{3, pt({0, 0})}, {5, pt({0, 0})}};
  CHECK(nearest_class(pt({0, 0}), c) == 3);
}

TEST_CASE("verdict invariants on random queries") {
  CounterRng rng(21, 0);
  const LcboScorer scorer = LcboScorer::random(3, 4);
  for (int t = 0; t < 200; ++t) {
    const int k = 1 + static_cast<int>(rng.uniform_index(5));
    const PrototypeContext ctx = random_context(rng, 3, k);
    std::vector<Point> ep;
    for (int i = 0; i < 6; ++i) ep.push_back(random_point(rng, 3, 2.0));
    const Point q = random_point(rng, 3, 2.0);
    DetectorInputs aux{&scorer, ep};
    for (auto d : {Detector::min_dist, Detector::lcbo, Detector::background, Detector::groos,
                   Detector::centered_groos}) {
      const double thr = is_softmax_detector(d) ? rng.uniform() : -2.0 * rng.uniform();
      const Verdict v = predict(q, ctx, d, thr, aux);
      CHECK(v.is_oos_pred == !v.class_pred.has_value());
      if (v.class_pred) CHECK(ctx.prototypes.count(*v.class_pred) == 1);
      if (v.class_probs) CHECK(std::abs(v.class_probs->sum() - 1.0) < 1e-12);
      CHECK(v.class_probs.has_value() == is_softmax_detector(d));
    }
  }
}

TEST_CASE("canonical orientation ranks like the native rule") {
  CounterRng rng(31, 0);
  const LcboScorer scorer = LcboScorer::random(2, 8);
  for (int t = 0; t < 20; ++t) {
    const PrototypeContext ctx = random_context(rng, 2, 4);
    std::vector<Point> qs;
    for (int i = 0; i < 30; ++i) qs.push_back(random_point(rng, 2, 3.0));
    DetectorInputs aux{&scorer, qs};
    for (auto d : {Detector::min_dist, Detector::lcbo, Detector::background, Detector::groos,
                   Detector::centered_groos}) {
      for (std::size_t a = 0; a < qs.size(); ++a) {
        for (std::size_t b = a + 1; b < qs.size(); ++b) {
          const double ra = raw_score(d, qs[a], ctx, aux), rb = raw_score(d, qs[b], ctx, aux);
          // Native rule: low raw score means OOS for MinDist/LCBO, high for the rest.
          const bool native = (d == Detector::min_dist || d == Detector::lcbo) ? ra < rb : ra > rb;
          CHECK((canonical_score(d, ra) > canonical_score(d, rb)) == native);
        }
      }
    }
  }
}

TEST_CASE("groos decreases strictly in d_oos") {
  PrototypeContext c;
  c.prototypes = {{1, pt({3, 0})}, {2, pt({0, 3})}};
  double prev = 2.0;
  for (double r = 0.0; r < 6.0; r += 0.25) {
    c.generic = pt({-r, 0});
    const double s = score_groos(pt({0, 0}), c);
    CHECK(s < prev);
    prev = s;
  }
}

TEST_CASE("softmax scores ignore class relabelling") {
  CounterRng rng(41, 0);
  for (int t = 0; t < 50; ++t) {
    const PrototypeContext ctx = random_context(rng, 3, 5);
    PrototypeContext perm = ctx;
    perm.prototypes.clear();
    const int shift = 1 + static_cast<int>(rng.uniform_index(4));
    for (const auto& [id, g] : ctx.prototypes) perm.prototypes.emplace(((id - 1 + shift) % 5) * 10 + 3, g);
    const Point q = random_point(rng, 3, 2.0);
    CHECK(score_groos(q, perm) == doctest::Approx(score_groos(q, ctx)).epsilon(1e-14));
    CHECK(score_background(q, perm) == doctest::Approx(score_background(q, ctx)).epsilon(1e-14));
  }
}

TEST_CASE("min dist survives rigid motions") {
  CounterRng rng(51, 0);
  for (int t = 0; t < 50; ++t) {
    const PrototypeContext ctx = random_context(rng, 3, 4);
    Eigen::MatrixXd A(3, 3);
    for (Index i = 0; i < 9; ++i) A.data()[i] = rng.normal();
    const Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(A).householderQ();
    const Point shift = random_point(rng, 3, 5.0);
    PrototypeContext moved;
    for (const auto& [id, g] : ctx.prototypes) moved.prototypes.emplace(id, Q * g + shift);
    const Point q = random_point(rng, 3, 2.0);
    CHECK(score_min_dist(Q * q + shift, moved) == doctest::Approx(score_min_dist(q, ctx)).epsilon(1e-12));
  }
}

TEST_CASE("centered groos is translation invariant, fixed groos is not") {
  CounterRng rng(61, 0);
  for (int t = 0; t < 50; ++t) {
    PrototypeContext ctx = random_context(rng, 2, 3);
    std::vector<Point> ep;
    for (int i = 0; i < 10; ++i) ep.push_back(random_point(rng, 2, 2.0));
    const Point q = random_point(rng, 2, 2.0);
    const Point v = random_point(rng, 2, 4.0);
    PrototypeContext moved;
    moved.generic = ctx.generic;
    for (const auto& [id, g] : ctx.prototypes) moved.prototypes.emplace(id, g + v);
    std::vector<Point> ep_moved;
    for (const auto& p : ep) ep_moved.push_back(p + v);
    CHECK(score_centered_groos(q + v, ep_moved, moved) ==
          doctest::Approx(score_centered_groos(q, ep, ctx)).epsilon(1e-12));
  }
  PrototypeContext c = one_class(pt({2, 0}));
  c.generic = pt({0, 0});
  PrototypeContext shifted = one_class(pt({7, 0}));
  shifted.generic = pt({0, 0});
  CHECK(std::abs(score_groos(pt({5.5, 0}), shifted) - score_groos(pt({0.5, 0}), c)) > 0.1);
}

TEST_CASE("json round-trip") {
  const LcboScorer s = LcboScorer::random(3, 77, {5, 4}, LcboInput::both);
  const LcboScorer back = lcbo_from_json(nlohmann::json::parse(to_json(s).dump()));
  CHECK(back.input_mode() == LcboInput::both);
  REQUIRE(back.layers().size() == s.layers().size());
  for (std::size_t l = 0; l < s.layers().size(); ++l) {
    CHECK(back.layers()[l].w == s.layers()[l].w);
    CHECK(back.layers()[l].b == s.layers()[l].b);
  }
  const auto j = to_json(s);
  CHECK(j["dims"] == nlohmann::json({9, 5, 4, 1}));

  AffineHead h = AffineHead::identity(3);
  h.W(0, 2) = 0.1234567890123;
  h.b << 1, -2, 3.5;
  const AffineHead hb = head_from_json(nlohmann::json::parse(to_json(h).dump()));
  CHECK(hb.W == h.W);
  CHECK(hb.b == h.b);

  CHECK_THROWS(lcbo_from_json(nlohmann::json::parse(R"({"dims":[4,1],"layers":[{"w":[[1,2]],"b":[0]}]})")));
}
