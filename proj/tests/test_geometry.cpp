#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "feec/geometry.hpp"

using namespace feec;

namespace {

double dist(const Point& a, const Point& b) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

double clipped_volume(const AffineSimplex& s, const std::vector<HalfSpace>& hs) {
  double v = 0.0;
  for (const auto& t : clip_simplex(s, hs)) v += parameter_measure(t, s.m);
  double det = std::abs(Eigen::Map<const Eigen::Matrix3d>(s.M.data()).determinant());
  return v * det;
}

}  // namespace

TEST_CASE("crossed bricks: faces between bricks are interior") {
  auto g = DomainGeometry::make("crossed_bricks", 0.25);
  CHECK(g.has_flattening());
  CHECK(g.in_domain({0.5, 0.0, -0.5}));
  CHECK(g.in_domain({0.0, 0.5, -0.5}));
  CHECK(g.in_domain({0.5, -0.5, 0.0}));
  CHECK_FALSE(g.in_domain({0.5, 0.5, 0.5}));
  CHECK_FALSE(g.in_domain({-0.5, -0.5, -0.5}));
  // the chart fixes the shared corner
  Point o = g.flatten({0.0, 0.0, 0.0});
  CHECK(dist(o, {0.0, 0.0, 0.0}) < 1e-14);
}

TEST_CASE("flattening round trip") {
  auto g = DomainGeometry::make("crossed_bricks", 0.25);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  for (int t = 0; t < 200; ++t) {
    Point z{u(rng), u(rng), u(rng)};
    CHECK(dist(g.unflatten(g.flatten(z)), z) < 1e-12);
  }
}

TEST_CASE("reflection: involution, gauge flip, boundary fixed") {
  for (const char* name : {"unit_square", "l_shape", "unit_cube", "crossed_bricks"}) {
    auto g = DomainGeometry::make(name, 0.25);
    std::mt19937_64 rng(5);
    for (int t = 0; t < 50; ++t) {
      Point z = g.sample_exterior_collar(rng);
      Point r = g.reflect(z);
      CHECK(std::abs(g.gauge(r) - (2.0 - g.gauge(z))) < 1e-10);
      CHECK(dist(g.reflect(r), z) < 1e-10);
      Point x = g.sample_boundary(rng);
      CHECK(dist(g.reflect(x), x) < 1e-10);
      CHECK(dist(g.reflect_pl(x), x) < 1e-10);
      CHECK(g.find_piece(z) >= 0);
      CHECK(g.in_closure(g.reflect_pl(z), 1e-10));
    }
  }
}

TEST_CASE("collar width limits") {
  CHECK_THROWS_AS(DomainGeometry::make("unit_square", 0.0), CollarTooWide);
  CHECK_THROWS_AS(DomainGeometry::make("unit_square", 1.0), CollarTooWide);
  CHECK_THROWS_AS(DomainGeometry::make("crossed_bricks", 0.6), CollarTooWide);
  CHECK_NOTHROW(DomainGeometry::make("crossed_bricks", 0.5));
}

TEST_CASE("reflection at the centre is rejected") {
  auto g = DomainGeometry::make("unit_square", 0.25);
  CHECK_THROWS_AS(g.reflect(g.center()), EvaluationOutsideExtendedDomain);
}

TEST_CASE("convex domains have inner metric constant 1") {
  auto g = DomainGeometry::make("unit_square", 0.25);
  CHECK(inner_metric_constant(g) == doctest::Approx(1.0));
  auto l = DomainGeometry::make("l_shape", 0.25);
  CHECK(inner_metric_constant(l) >= 1.0);
}

TEST_CASE("clipping a tet by a plane through one of its faces keeps the volume") {
  // regression: the face lying in the plane must not produce a duplicate cap
  std::vector<Point> tet{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  auto s = affine_simplex_from_vertices(tet, 3);
  HalfSpace below{{0, 0, -1}, 0.0};  // z >= 0 contains the whole tet, z = 0 holds a face
  CHECK(clipped_volume(s, {below}) == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
  HalfSpace half{{0, 0, 1}, 0.5};
  CHECK(clipped_volume(s, {half}) == doctest::Approx(1.0 / 6.0 - 1.0 / 48.0).epsilon(1e-13));
  CHECK(clipped_volume(s, {half, HalfSpace{{0, 0, -1}, -0.5}}) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("parallel_reject tie-break claims a shared facet once") {
  std::vector<Point> tri{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  auto s = affine_simplex_from_vertices(tri, 3);
  HalfSpace up{{0, 0, 1}, 0.0}, down{{0, 0, -1}, 0.0};
  bool ru = parallel_reject(s, up), rd = parallel_reject(s, down);
  CHECK(ru != rd);
  CHECK(clip_simplex(s, {up}).empty() == ru);
  CHECK(clip_simplex(s, {down}).empty() == rd);
  CHECK(parallel_reject(s, HalfSpace{{0, 0, 1}, -1.0}));
  CHECK_FALSE(parallel_reject(s, HalfSpace{{0, 0, 1}, 1.0}));
}

TEST_CASE("pullback of a covector") {
  Eigen::Matrix3d J = Eigen::Matrix3d::Identity();
  J(0, 0) = 2.0;
  J(1, 1) = 3.0;
  auto w = pullback_covector(J, 2, 2, {1.0});
  CHECK(w[0] == doctest::Approx(6.0));
  auto v = pullback_covector(J, 2, 1, {1.0, 1.0});
  CHECK(v[0] == doctest::Approx(2.0));
  CHECK(v[1] == doctest::Approx(3.0));
}
