#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "feec/quadrature.hpp"

using namespace feec;

namespace {

double fact(int k) { return k <= 1 ? 1.0 : k * fact(k - 1); }

// int over the reference m-simplex of prod x_i^a_i = prod a_i! / (m + sum a)!
double simplex_monomial(int m, const int* a) {
  double num = 1.0;
  int s = 0;
  for (int i = 0; i < m; ++i) {
    num *= fact(a[i]);
    s += a[i];
  }
  return num / fact(m + s);
}

}  // namespace

TEST_CASE("simplex rules integrate monomials up to their degree") {
  for (int m = 1; m <= 3; ++m)
    for (int deg = 0; deg <= 10; ++deg) {
      const auto rule = simplex_rule(m, deg);
      CHECK(rule.weight_sum() == doctest::Approx(1.0 / fact(m)).epsilon(1e-13));
      int a[3] = {0, 0, 0};
      for (a[0] = 0; a[0] <= deg; ++a[0])
        for (a[1] = 0; a[1] <= (m > 1 ? deg - a[0] : 0); ++a[1])
          for (a[2] = 0; a[2] <= (m > 2 ? deg - a[0] - a[1] : 0); ++a[2]) {
            double q = 0.0;
            for (int r = 0; r < rule.size(); ++r) {
              double v = rule.weights[r];
              for (int i = 0; i < m; ++i) v *= std::pow(rule.points[r][i], a[i]);
              q += v;
            }
            CHECK(q == doctest::Approx(simplex_monomial(m, a)).epsilon(1e-12));
          }
    }
}

TEST_CASE("simplex rule weights are positive") {
  for (int m = 1; m <= 3; ++m)
    for (int deg = 0; deg <= 20; deg += 4)
      for (double w : simplex_rule(m, deg).weights) CHECK(w > 0.0);
}

TEST_CASE("ball rules are exact on even moments") {
  for (int n = 1; n <= 3; ++n) {
    const auto rule = ball_rule(n, 8);
    CHECK(rule.weight_sum() == doctest::Approx(ball_volume(n)).epsilon(1e-12));
    double r2 = 0.0, x4 = 0.0, odd = 0.0;
    for (int q = 0; q < rule.size(); ++q) {
      const auto& y = rule.points[q];
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += y[i] * y[i];
      r2 += rule.weights[q] * s;
      x4 += rule.weights[q] * std::pow(y[0], 4);
      odd += rule.weights[q] * y[0] * s;
    }
    // int_B |y|^2 = n |B| / (n + 2); int_B y_1^4 = 3 |B| / ((n + 2)(n + 4))
    CHECK(r2 == doctest::Approx(n * ball_volume(n) / (n + 2)).epsilon(1e-12));
    CHECK(x4 == doctest::Approx(3.0 * ball_volume(n) / ((n + 2) * (n + 4))).epsilon(1e-12));
    CHECK(std::abs(odd) < 1e-14);
  }
}

TEST_CASE("the normalised mollifier has unit mass") {
  for (int n = 1; n <= 3; ++n) {
    const auto rule = graded_ball_rule(n, 12, 4);
    double mass = 0.0;
    for (int q = 0; q < rule.size(); ++q) mass += rule.weights[q] * mollifier(n, rule.points[q].data());
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
    const double outside[3] = {1.0, 0.0, 0.0};
    CHECK(mollifier(n, outside) == 0.0);
  }
}

TEST_CASE("mollifier gradient matches finite differences") {
  const double y[3] = {0.2, -0.3, 0.1};
  for (int n = 1; n <= 3; ++n) {
    double g[3];
    mollifier_gradient(n, y, g);
    for (int i = 0; i < n; ++i) {
      double yp[3] = {y[0], y[1], y[2]}, ym[3] = {y[0], y[1], y[2]};
      yp[i] += 1e-6;
      ym[i] -= 1e-6;
      CHECK(g[i] == doctest::Approx((mollifier(n, yp) - mollifier(n, ym)) / 2e-6).epsilon(1e-6));
    }
  }
}

TEST_CASE("gauss-legendre is exact to degree 2q-1") {
  auto [x, w] = gauss_legendre(4, -1.0, 2.0);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * std::pow(x[i], 7);
  CHECK(s == doctest::Approx((std::pow(2.0, 8) - 1.0) / 8.0).epsilon(1e-13));
}

TEST_CASE("unsupported requests throw") {
  CHECK_THROWS_AS(simplex_rule(4, 2), UnsupportedDegree);
  CHECK_THROWS_AS(simplex_rule(2, 21), UnsupportedDegree);
  CHECK_THROWS_AS(ball_rule(0, 2), UnsupportedDegree);
  CHECK_THROWS_AS(gauss_jacobi01(0, 0.0, 0.0), UnsupportedDegree);
}
