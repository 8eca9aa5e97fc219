#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "feec/mollify.hpp"

using namespace feec;

namespace {

struct Fixture {
  Triangulation mesh = generate_domain_mesh("unit_square", 1);
  DomainGeometry geom = DomainGeometry::make("unit_square", 0.25);
  double eps_h = neighborhood_constant(mesh, geom);
  MeshSizeField field{mesh, geom, eps_h};
};

std::vector<Point> interior_points(int count, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 0.95);
  std::vector<Point> pts;
  for (int i = 0; i < count; ++i) pts.push_back({u(rng), u(rng), 0.0});
  return pts;
}

Eigen::VectorXd random_vector(int m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd x(m);
  for (int i = 0; i < m; ++i) x[i] = u(rng);
  return x;
}

}  // namespace

TEST_CASE("mollifier weights are normalised") {
  Fixture f;
  auto cfg = MollifierConfig::make(0.02, f.field, 8);
  double s = 0.0;
  for (double w : cfg.weights) s += w;
  CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(cfg.nodes.size() == cfg.weights.size());
  for (const auto& y : cfg.nodes) CHECK(y[0] * y[0] + y[1] * y[1] < 1.0);
}

TEST_CASE("flow map Jacobian matches finite differences") {
  Fixture f;
  auto cfg = MollifierConfig::make(0.05, f.field, 6);
  const Point x{0.31, 0.62, 0.0}, y{0.3, -0.4, 0.0};
  auto F = flow_map(cfg, x, y);
  const double h = 1e-6;
  for (int j = 0; j < 2; ++j) {
    Point xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    auto a = flow_map(cfg, xp, y).x, b = flow_map(cfg, xm, y).x;
    for (int i = 0; i < 2; ++i) CHECK(F.J(i, j) == doctest::Approx((a[i] - b[i]) / (2 * h)).epsilon(1e-6));
  }
}

TEST_CASE("smoothing radius limit") {
  Fixture f;
  CHECK(f.field.rho() < f.field.rho_limit());
  CHECK_THROWS_AS(MeshSizeField(f.mesh, f.geom, f.eps_h, 2.0 * f.field.rho_limit()), RadiusTooLarge);
}

TEST_CASE("R reproduces constants and commutes with d") {
  Fixture f;
  std::mt19937_64 rng(11);
  auto cfg = MollifierConfig::make(0.02, f.field, 8);
  auto pts = interior_points(30, rng);
  const auto one = ExtendedForm::global(f.mesh, f.geom, DForm::basic(2, 0u, DPoly::constant(2, 1.0)));
  for (const auto& x : pts) CHECK(mollify_eval(cfg, one, x)[0] == doctest::Approx(1.0).epsilon(1e-12));

  const auto cx = parse_complex("P1-minus", 2);
  for (int k = 0; k < 2; ++k) {
    const FESpace V(f.mesh, cx.spaces[k]);
    const auto w = ExtendedForm::from_fe(V, f.geom, random_vector(V.dim(), rng));
    CHECK(mollify_commutation_residual(cfg, w, pts) < 1e-8);
  }
}

TEST_CASE("R is local") {
  Fixture f;
  std::mt19937_64 rng(13);
  auto cfg = MollifierConfig::make(0.02, f.field, 8);
  const auto cx = parse_complex("P1-minus", 2);
  const FESpace V(f.mesh, cx.spaces[1]);
  const auto w = ExtendedForm::from_fe(V, f.geom, random_vector(V.dim(), rng));
  const Point c{0.5, 0.5, 0.0};
  const BallMaskedForm masked(w, c, 0.2);
  CHECK(mollify_eval(cfg, masked, {0.52, 0.47, 0.0}) == mollify_eval(cfg, w, {0.52, 0.47, 0.0}));
  for (double v : mollify_eval(cfg, masked, {0.9, 0.9, 0.0})) CHECK(v == 0.0);
}

TEST_CASE("extension is continuous across the boundary") {
  Fixture f;
  std::mt19937_64 rng(17);
  const auto cx = parse_complex("P1-minus", 2);
  const FESpace V(f.mesh, cx.spaces[0]);
  const auto w = ExtendedForm::from_fe(V, f.geom, random_vector(V.dim(), rng));
  for (double s : {0.1, 0.37, 0.8}) {
    double in = 0.0, out = 0.0;
    w.eval({s, 1.0 - 1e-9, 0.0}, &in, nullptr);
    w.eval({s, 1.0 + 1e-9, 0.0}, &out, nullptr);
    CHECK(in == doctest::Approx(out).epsilon(1e-7));
  }
}

TEST_CASE("exterior derivative from a Jacobian") {
  // w = -y dx + x dy: dw = 2 dx^dy
  std::vector<double> jac{0.0, -1.0, 1.0, 0.0};
  auto dw = exterior_derivative_from_jacobian(2, 1, jac);
  REQUIRE(dw.size() == 1);
  CHECK(dw[0] == doctest::Approx(2.0));
  // gradient of a 0-form
  auto g = exterior_derivative_from_jacobian(2, 0, {3.0, -4.0});
  CHECK(g[0] == doctest::Approx(3.0));
  CHECK(g[1] == doctest::Approx(-4.0));
}
