#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "feec/spaces.hpp"

using namespace feec;

namespace {

long choose(int n, int k) {
  if (k < 0 || k > n) return 0;
  long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

DForm random_poly_form(int n, int k, int deg, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  DForm w(n, k);
  for (unsigned s : alternators(k, n)) {
    DPoly p(n);
    for (const auto& e : monomials(n, deg)) p.add_term(e, u(rng));
    w.add(s, p);
  }
  return w;
}

}  // namespace

TEST_CASE("local dimensions match the closed forms") {
  for (int n = 1; n <= 3; ++n)
    for (int r = 1; r <= (n == 3 ? 2 : 3); ++r)
      for (int k = 0; k <= n; ++k) {
        const SpaceSpec full{Family::Full, r, k}, minus{Family::Minus, r, k};
        CHECK(space_dimension(full, n) == choose(r + n, r + k) * choose(r + k, k));
        CHECK(space_dimension(minus, n) == choose(r + n, r + k) * choose(r + k - 1, k));
        CHECK(int(local_space_basis(full, n).size()) == space_dimension(full, n));
        CHECK(int(local_space_basis(minus, n).size()) == space_dimension(minus, n));
      }
}

TEST_CASE("reference DOFs are exactly dual to the basis") {
  for (int n = 1; n <= 3; ++n)
    for (int k = 0; k <= n; ++k)
      for (auto fam : {Family::Full, Family::Minus}) {
        const auto& el = reference_element({fam, 2, k}, n);
        for (int i = 0; i < el.size(); ++i)
          for (int j = 0; j < el.size(); ++j) CHECK(reference_dof(el.dofs[i], el.basis[j], n) == Rational(i == j));
      }
}

TEST_CASE("exact linear algebra") {
  QMatrix a{{Rational(2), Rational(1)}, {Rational(4), Rational(2)}};
  CHECK(exact_rank(a) == 1);
  CHECK_THROWS_AS(exact_inverse(a), UnisolvenceFailure);
  QMatrix b{{Rational(2), Rational(1)}, {Rational(1), Rational(1)}};
  const auto inv = exact_inverse(b);
  CHECK(inv[0][0] == Rational(1));
  CHECK(inv[0][1] == Rational(-1));
  CHECK(inv[1][1] == Rational(2));
}

TEST_CASE("global spaces: continuity, interpolation and the derivative") {
  std::mt19937_64 rng(17);
  for (const char* dom : {"unit_square", "l_shape", "crossed_bricks"}) {
    const auto mesh = generate_domain_mesh(dom, 0);
    const int n = mesh.dim();
    const std::string full = "P" + std::to_string(n) + "-full";
    for (const std::string& name : {std::string("P1-minus"), std::string("P2-minus"), full}) {
      const auto cx = parse_complex(name, n);
      std::vector<FESpace> V;
      for (const auto& s : cx.spaces) V.emplace_back(mesh, s);
      for (int k = 0; k <= n; ++k) {
        CHECK(V[k].check_tangential_continuity());
        // interpolation reproduces the FE function it came from
        const DForm w = random_poly_form(n, k, cx.spaces[k].family == Family::Full ? cx.spaces[k].r : cx.spaces[k].r - 1, rng);
        const Eigen::VectorXd x = V[k].interpolate(w);
        Eigen::VectorXd y(V[k].dim());
        for (int g = 0; g < V[k].dim(); ++g) {
          const auto& d = V[k].dofs()[g];
          y[g] = V[k].dof_apply(g, V[k].cell_form(x, mesh.cells_of(d.face_dim, d.face_id)[0]));
        }
        CHECK((x - y).cwiseAbs().maxCoeff() < 1e-11);
        if (k == n) continue;
        const Eigen::MatrixXd D = derivative_matrix(V[k], V[k + 1]);
        const DForm u = random_poly_form(n, k, cx.spaces[k].r + 2, rng);
        CHECK((D * V[k].interpolate(u) - V[k + 1].interpolate(u.exterior_derivative())).cwiseAbs().maxCoeff() < 1e-10);
        if (k + 1 < n) CHECK((derivative_matrix(V[k + 1], V[k + 2]) * D).cwiseAbs().maxCoeff() < 1e-12);
      }
    }
  }
}

TEST_CASE("Gram matrices are symmetric positive definite") {
  const auto mesh = generate_domain_mesh("unit_square", 1);
  for (int k = 0; k <= 2; ++k) {
    const FESpace V(mesh, {Family::Minus, 1, k});
    const Eigen::MatrixXd G = V.gram();
    CHECK((G - G.transpose()).cwiseAbs().maxCoeff() < 1e-14);
    Eigen::LLT<Eigen::MatrixXd> llt(G);
    CHECK(llt.info() == Eigen::Success);
  }
}

TEST_CASE("complex parsing and compatibility") {
  const auto c = parse_complex("P1-minus", 2);
  REQUIRE(c.spaces.size() == 3);
  CHECK(c.spaces[2].k == 2);
  const auto mixed = parse_complex("full2,full1,minus1", 2);
  CHECK(mixed.spaces[0].family == Family::Full);
  CHECK_THROWS_AS(parse_complex("P1-sideways", 2), IncompatibleComplex);
  CHECK_THROWS_AS(parse_complex("full1,full1,minus3", 2), IncompatibleComplex);
}

TEST_CASE("inverse constants are finite and at least one") {
  const auto ic = measure_inverse_constants({Family::Minus, 1, 1}, 2, 100, 7);
  CHECK(ic.C_flat_2 >= 1.0);
  CHECK(ic.C_flat_inf >= 1.0);
  CHECK(std::isfinite(ic.C_interp));
  CHECK(ic.C_boundary > 0.0);
}
