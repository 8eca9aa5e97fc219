#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "feec/chains.hpp"
#include "feec/spaces.hpp"

using namespace feec;

namespace {

WeightedChain random_chain(int n, int k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  WeightedChain c;
  c.k = k;
  c.n = n;
  for (int t = 0; t < 3; ++t) {
    ChainTerm term;
    term.weight = u(rng);
    for (int v = 0; v <= k; ++v) {
      Point x{0, 0, 0};
      for (int i = 0; i < n; ++i) x[i] = u(rng);
      term.verts.push_back(x);
    }
    c.terms.push_back(term);
  }
  return c;
}

DForm random_form(int n, int k, int deg, std::mt19937_64& rng) {
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

TEST_CASE("Stokes on random chains") {
  std::mt19937_64 rng(1);
  for (int n = 1; n <= 3; ++n)
    for (int k = 0; k < n; ++k)
      for (int trial = 0; trial < 10; ++trial) {
        const auto c = random_chain(n, k + 1, rng);
        const auto w = random_form(n, k, 3, rng);
        CHECK(integrate_chain(boundary(c), w) ==
              doctest::Approx(integrate_chain(c, w.exterior_derivative())).epsilon(1e-11).scale(1.0));
      }
}

TEST_CASE("the boundary of a boundary cancels") {
  std::mt19937_64 rng(2);
  for (int n = 2; n <= 3; ++n)
    for (int k = 2; k <= n; ++k) {
      auto bb = boundary(boundary(random_chain(n, k, rng)));
      bb.canonicalize(1e-15);
      CHECK(bb.terms.empty());
    }
}

TEST_CASE("canonicalize merges reordered simplices with the orientation sign") {
  WeightedChain c;
  c.k = 1;
  c.n = 2;
  c.terms.push_back({1.0, {{0, 0, 0}, {1, 0, 0}}});
  c.terms.push_back({1.0, {{1, 0, 0}, {0, 0, 0}}});
  c.canonicalize();
  CHECK(c.terms.empty());
  c.terms.push_back({2.0, {{0, 0, 0}, {0, 3, 0}}});
  CHECK(mass(c) == doctest::Approx(6.0));
}

TEST_CASE("mass bound |int_c w| <= M(c) max|w|") {
  std::mt19937_64 rng(3);
  for (int n = 1; n <= 3; ++n)
    for (int k = 0; k <= n; ++k)
      for (int trial = 0; trial < 10; ++trial) {
        const auto c = random_chain(n, k, rng);
        const auto w = random_form(n, k, 2, rng);
        CHECK(std::abs(integrate_chain(c, w)) <= mass(c) * chain_node_max(c, w) * (1.0 + 1e-9));
      }
}

TEST_CASE("pushforward is dual to pullback") {
  std::mt19937_64 rng(4);
  const std::vector<double> M{1.0, 0.5, -0.2, 0.3, 2.0, 0.1, 0.0, -0.4, 1.5}, b{0.1, -0.2, 0.3};
  for (int k = 0; k <= 3; ++k) {
    const auto c = random_chain(3, k, rng);
    const auto w = random_form(3, k, 2, rng);
    CHECK(integrate_chain(pushforward_affine(M, b, c), w) ==
          doctest::Approx(integrate_chain(c, w.pullback(M, b, 3))).epsilon(1e-12));
  }
}

TEST_CASE("simplex volumes") {
  CHECK(simplex_k_volume({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, 3) == doctest::Approx(0.5));
  CHECK(simplex_k_volume({{0, 0, 0}, {2, 0, 0}}, 2) == doctest::Approx(2.0));
  CHECK(simplex_k_volume({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, 3) == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("DOF chains have finite mass and boundary mass") {
  const auto mesh = generate_domain_mesh("unit_square", 1);
  const FESpace V(mesh, {Family::Minus, 2, 1});
  for (int g = 0; g < V.dim(); ++g) {
    const auto m = dof_as_chain_pair(V, g);
    CHECK(m.mass_k > 0.0);
    CHECK(std::isfinite(m.boundary_mass));
  }
}
