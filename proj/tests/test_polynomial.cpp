#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "feec/polynomial.hpp"

using namespace feec;

namespace {

Rational q(int a, int b = 1) {
  Rational r(a, b);
  r.canonicalize();
  return r;
}

QPoly random_homogeneous(int n, int r, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> c(-3, 3);
  QPoly p(n);
  for (const auto& e : monomials(n, r, true)) p.add_term(e, q(c(rng), 2));
  return p;
}

QForm random_form(int n, int k, int r, std::mt19937_64& rng) {
  QForm w(n, k);
  for (unsigned s : alternators(k, n)) w.add(s, random_homogeneous(n, r, rng));
  return w;
}

}  // namespace

TEST_CASE("alternators are ordered lexicographically") {
  const auto& a = alternators(2, 3);
  REQUIRE(a.size() == 3);
  CHECK(a[0] == 0b011u);
  CHECK(a[1] == 0b101u);
  CHECK(a[2] == 0b110u);
  CHECK(alternator_index(0b101u, 3) == 1);
  CHECK(binomial(3, 2) == 3);
  CHECK(wedge_sign(0b010u, 0b001u) == -1);
  CHECK(wedge_sign(0b001u, 0b001u) == 0);
}

TEST_CASE("polynomial arithmetic and derivatives") {
  const QPoly x = QPoly::variable(2, 0), y = QPoly::variable(2, 1);
  const QPoly p = x * x * y + y.scaled(q(3));
  CHECK(p.degree() == 3);
  CHECK(p.derivative(0) == (x * y).scaled(q(2)));
  CHECK(p.derivative(1) == x * x + QPoly::constant(2, q(3)));
  const Rational pt[2] = {q(1, 2), q(2)};
  CHECK(p.evaluate(pt) == q(13, 2));
  CHECK((p - p).is_zero());
}

TEST_CASE("d d = 0 and the Leibniz rule hold exactly") {
  std::mt19937_64 rng(3);
  for (int n = 1; n <= 3; ++n)
    for (int k = 0; k <= n; ++k)
      for (int l = 0; k + l < n; ++l) {
        const QForm a = random_form(n, k, 2, rng), b = random_form(n, l, 3, rng);
        if (k + 2 <= n) CHECK(a.exterior_derivative().exterior_derivative().is_zero());
        const QForm lhs = a.wedge(b).exterior_derivative();
        const QForm rhs =
            a.exterior_derivative().wedge(b) + a.wedge(b.exterior_derivative()).scaled(q(k % 2 ? -1 : 1));
        CHECK(lhs == rhs);
      }
}

TEST_CASE("wedge is graded commutative") {
  std::mt19937_64 rng(5);
  const QForm a = random_form(3, 1, 1, rng), b = random_form(3, 2, 1, rng), c = random_form(3, 1, 2, rng);
  CHECK(a.wedge(b) == b.wedge(a));
  CHECK(a.wedge(c) == c.wedge(a).scaled(q(-1)));
  CHECK(a.wedge(a).is_zero());
}

TEST_CASE("Koszul homotopy: (d kappa + kappa d) w = (r + k) w on homogeneous forms") {
  std::mt19937_64 rng(9);
  for (int n = 1; n <= 3; ++n)
    for (int k = 0; k <= n; ++k)
      for (int r = 0; r <= 3; ++r) {
        const QForm w = random_form(n, k, r, rng);
        QForm lhs(n, k);
        if (k > 0) lhs += w.koszul().exterior_derivative();
        if (k < n) lhs += w.exterior_derivative().koszul();
        CHECK(lhs == w.scaled(q(r + k)));
        if (k > 1) CHECK(w.koszul().koszul().is_zero());
      }
}

TEST_CASE("pullback is functorial and commutes with d") {
  std::mt19937_64 rng(11);
  const std::vector<Rational> G{q(1), q(2), q(-1), q(1, 3), q(0), q(1), q(2), q(1), q(1)};  // 3x3
  const std::vector<Rational> gb{q(1), q(0), q(-2)};
  const std::vector<Rational> F{q(1), q(-1), q(2), q(1), q(0), q(3)};  // 3x2
  const std::vector<Rational> fb{q(0), q(1, 2), q(1)};
  std::vector<Rational> GF(6, q(0)), b = gb;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      for (int t = 0; t < 2; ++t) GF[i * 2 + t] += G[i * 3 + j] * F[j * 2 + t];
      b[i] += G[i * 3 + j] * fb[j];
    }
  for (int k = 0; k <= 2; ++k) {
    const QForm w = random_form(3, k, 2, rng);
    CHECK(w.pullback(G, gb, 3).pullback(F, fb, 2) == w.pullback(GF, b, 2));
    if (k < 2) CHECK(w.exterior_derivative().pullback(F, fb, 2) == w.pullback(F, fb, 2).exterior_derivative());
  }
}

TEST_CASE("exact integration on the reference simplex") {
  // int_T x y over the unit triangle = 1/24
  const QPoly xy = QPoly::variable(2, 0) * QPoly::variable(2, 1);
  CHECK(integrate_reference(xy) == q(1, 24));
  CHECK(integrate_reference(QPoly::constant(3, q(1))) == q(1, 6));
  const QForm top = QForm::basic(2, 0b11u, xy);
  CHECK(integrate_top_form(top) == q(1, 24));
}

TEST_CASE("double conversion and evaluation") {
  const QForm w = QForm::basic(2, 0b01u, QPoly::variable(2, 1).scaled(q(1, 2)));
  const DForm d = w.convert<double>();
  const double x[2] = {0.3, 0.8};
  const auto v = d.evaluate_double(x);
  REQUIRE(v.size() == 2);
  CHECK(v[0] == doctest::Approx(0.4));
  CHECK(v[1] == 0.0);
}

TEST_CASE("mismatched dimensions throw") {
  CHECK_THROWS_AS(QPoly::variable(2, 0) + QPoly::variable(3, 0), DimensionMismatch);
  CHECK_THROWS_AS(QForm::basic(2, 0u, QPoly::constant(2, q(1))).koszul(), ZeroFormContraction);
  QForm w(2, 1);
  CHECK_THROWS_AS(w.add(0b11u, QPoly::constant(2, q(1))), DimensionMismatch);
}
