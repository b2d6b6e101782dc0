#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ooskit/metric_core.hpp"
#include "ooskit/rng.hpp"
#include "test_helpers.hpp"

using namespace ooskit;
using ooskit::testing::pt;

TEST_CASE("euclidean distance") {
  CHECK(euclidean_distance(pt({0, 0}), pt({0, 0})) == 0.0);
  CHECK(euclidean_distance(pt({0, 0}), pt({3, 4})) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(euclidean_distance(pt({1, 0}), pt({0.5, 0})) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(euclidean_distance(pt({1, 0}), pt({1, 0, 0})), DimensionMismatch);
}

TEST_CASE("triangle inequality and symmetry on random triples") {
  CounterRng rng(11, 0);
  for (int t = 0; t < 500; ++t) {
    const Index d = 1 + static_cast<Index>(rng.uniform_index(6));
    Point a(d), b(d), c(d);
    for (Index j = 0; j < d; ++j) {
      a[j] = rng.normal();
      b[j] = rng.normal();
      c[j] = rng.normal();
    }
    CHECK(euclidean_distance(a, c) <= euclidean_distance(a, b) + euclidean_distance(b, c) + 1e-9);
    CHECK(euclidean_distance(a, b) == euclidean_distance(b, a));
  }
}

TEST_CASE("apply_affine") {
  AffineHead id = AffineHead::identity(2);
  const Point x = pt({2, 3});
  CHECK(apply_affine(id, x) == x);

  AffineHead constant{Eigen::MatrixXd::Zero(2, 2), pt({1, 1})};
  CHECK(apply_affine(constant, pt({9, 9})) == pt({1, 1}));

  AffineHead scale{Eigen::MatrixXd(2, 2), pt({1, 0})};
  scale.W << 2, 0, 0, 2;
  // Independent row-by-column evaluation.
  const Point in = pt({1, 1});
  Point expect(2);
  for (int r = 0; r < 2; ++r) {
    expect[r] = scale.b[r];
    for (int c = 0; c < 2; ++c) expect[r] += scale.W(r, c) * in[c];
  }
  CHECK(expect == pt({3, 2}));
  CHECK(apply_affine(scale, in) == expect);

  CHECK_THROWS_AS(apply_affine(id, pt({1, 2, 3})), DimensionMismatch);
}

TEST_CASE("identity head is exact on random inputs") {
  CounterRng rng(3, 0);
  for (int t = 0; t < 100; ++t) {
    Point x(5);
    for (Index j = 0; j < 5; ++j) x[j] = 1e6 * rng.normal();
    CHECK(apply_affine(AffineHead::identity(5), x) == x);
  }
}

TEST_CASE("compute_prototypes") {
  auto single = compute_prototypes({{1, {pt({2, 2})}}});
  CHECK(single.at(1) == pt({2, 2}));

  auto mid = compute_prototypes({{1, {pt({0, 0}), pt({2, 0})}}});
  CHECK(mid.at(1) == pt({1, 0}));

  std::map<ClassId, std::vector<Point>> support{{1, {pt({0, 0}), pt({1, 1}), pt({2, 2})}},
                                                {2, {pt({4, 0}), pt({0, 4})}}};
  auto protos = compute_prototypes(support);
  // Oracle: plain scalar sums per coordinate.
  for (const auto& [id, pts] : support) {
    for (Index j = 0; j < 2; ++j) {
      double s = 0.0;
      for (const auto& p : pts) s += p[j];
      CHECK(protos.at(id)[j] == doctest::Approx(s / static_cast<double>(pts.size())).epsilon(1e-15));
    }
  }
  CHECK(protos.at(1).isApprox(pt({1, 1})));
  CHECK(protos.at(2).isApprox(pt({2, 2})));

  CHECK_THROWS_AS(compute_prototypes({{1, {}}}), InvalidArgument);
  CHECK_THROWS_AS(compute_prototypes({{1, {pt({0, 0}), pt({1, 1, 1})}}}), DimensionMismatch);
}

TEST_CASE("compute_prototypes is invariant to point order") {
  CounterRng rng(5, 0);
  std::vector<Point> pts;
  for (int i = 0; i < 9; ++i) pts.push_back(pt({rng.normal(), rng.normal(), rng.normal()}));
  const Point ref = compute_prototypes({{0, pts}}).at(0);
  for (int t = 0; t < 20; ++t) {
    for (std::size_t i = pts.size(); i > 1; --i) std::swap(pts[i - 1], pts[rng.uniform_index(i)]);
    CHECK((compute_prototypes({{0, pts}}).at(0) - ref).norm() < 1e-14);
  }
}

TEST_CASE("distance_vector modes") {
  PrototypeContext ctx;
  ctx.prototypes = {{1, pt({3, 4})}};
  CHECK(distance_vector(pt({0, 0}), ctx, DistanceMode::standard) == pt({5}));

  ctx.prototypes = {{1, pt({2, 0})}};
  ctx.generic = pt({0, 0});
  const auto g = distance_vector(pt({0.5, 0}), ctx, DistanceMode::generic);
  CHECK(g.size() == 2);
  CHECK(g[0] == doctest::Approx(1.5));
  CHECK(g[1] == doctest::Approx(0.5));

  ctx.prototypes = {{1, pt({1, 0})}};
  ctx.background_constant = 1.0;
  CHECK(distance_vector(pt({0, 0}), ctx, DistanceMode::background) == pt({1, 1}));

  PrototypeContext bare;
  bare.prototypes = {{1, pt({1, 0})}};
  CHECK_THROWS_AS(distance_vector(pt({0, 0}), bare, DistanceMode::generic), InvalidArgument);
  CHECK_THROWS_AS(distance_vector(pt({0, 0}), bare, DistanceMode::background), InvalidArgument);
}

TEST_CASE("distance_vector orders slots by ascending class id") {
  PrototypeContext ctx;
  ctx.prototypes = {{7, pt({7, 0})}, {2, pt({2, 0})}, {5, pt({5, 0})}};
  CHECK(distance_vector(pt({0, 0}), ctx, DistanceMode::standard) == pt({2, 5, 7}));
}

TEST_CASE("softmax_neg examples") {
  const auto u = softmax_neg(pt({1, 1, 1}));
  for (Index i = 0; i < 3; ++i) CHECK(u[i] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(softmax_neg(pt({0, 0})) == pt({0.5, 0.5}));
  // 1 / (1 + e^-1), 30-digit reference.
  const auto s = softmax_neg(pt({0.5, 1.5}));
  CHECK(s[0] == doctest::Approx(0.731058578630004879).epsilon(1e-14));
  CHECK(s[1] == doctest::Approx(1.0 - 0.731058578630004879).epsilon(1e-14));
  CHECK_THROWS_AS(softmax_neg(Eigen::VectorXd()), InvalidArgument);
}

TEST_CASE("softmax_neg properties") {
  CounterRng rng(9, 0);
  for (int t = 0; t < 300; ++t) {
    const Index n = 1 + static_cast<Index>(rng.uniform_index(8));
    Eigen::VectorXd d(n);
    for (Index i = 0; i < n; ++i) d[i] = 20.0 * rng.uniform();
    const auto p = softmax_neg(d);
    CHECK(std::abs(p.sum() - 1.0) <= 1e-12);
    for (Index i = 0; i < n; ++i) CHECK((p[i] > 0.0 && p[i] <= 1.0));
    const double shift = 100.0 * rng.normal();
    CHECK((softmax_neg((d.array() + shift).matrix()) - p).cwiseAbs().maxCoeff() < 1e-12);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j)
        if (d[i] < d[j]) CHECK(p[i] > p[j]);
  }
}

TEST_CASE("softmax_neg stays finite for huge distances") {
  const auto p = softmax_neg(pt({1e6, 1e6 + 1.0}));
  CHECK(p[0] == doctest::Approx(0.731058578630004879));
}

TEST_CASE("context validation") {
  PrototypeContext ctx;
  CHECK_THROWS_AS(ctx.validate(), InvalidArgument);
  ctx.prototypes = {{1, pt({0, 0})}, {2, pt({0, 0, 0})}};
  CHECK_THROWS_AS(ctx.validate(), DimensionMismatch);
  ctx.prototypes = {{1, pt({0, NAN})}};
  CHECK_THROWS_AS(ctx.validate(), InvalidArgument);
  ctx.prototypes = {{1, pt({0, 0})}};
  ctx.background_constant = -1.0;
  CHECK_THROWS_AS(ctx.validate(), InvalidArgument);
}
