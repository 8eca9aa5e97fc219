#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "feec/projection.hpp"

using namespace feec;

namespace {

MeasuredConstants unit_constants(int n, double eps_h) {
  MeasuredConstants m;
  m.n = n;
  m.C_mesh = m.C_N = m.c_M = m.C_M = m.L_Psi = m.C_h = m.L_Omega = 1.0;
  m.lip_A = m.lip_A_inv = 1.0;
  m.L_h = 0.0;
  m.eps_h = eps_h;
  m.C_I.assign(n + 1, 1.0);
  m.C_bd.assign(n + 1, 1.0);
  m.C_flat_2.assign(n + 1, 1.0);
  m.C_flat_inf.assign(n + 1, 1.0);
  return m;
}

const LevelSetup& square_setup() {
  static const LevelSetup s("unit_square", 1, parse_complex("P1-minus", 2), 0.25, 7);
  return s;
}

}  // namespace

TEST_CASE("admissible epsilon: collar constraint binds on ties") {
  auto e = admissible_epsilon(unit_constants(2, 0.1), 2.0);
  CHECK(e.bound[0] == doctest::Approx(0.1));
  CHECK(e.bound[3] == doctest::Approx(1.0));
  CHECK(e.binding == 2);
  CHECK(e.name[e.binding] == "L_Psi C_M C_h eps < eps_h");
  CHECK(e.eps_max == doctest::Approx(0.05));
}

TEST_CASE("admissible epsilon: a large C_e binds") {
  auto m = unit_constants(2, 0.1);
  m.C_I.assign(3, 1e6);
  auto e = admissible_epsilon(m, 2.0);
  const double C_e = derive_constants(m, 0, 2.0, 0.0).C_e;
  CHECK(C_e == doctest::Approx(2e6));
  CHECK(e.binding == 3);
  CHECK(e.eps_max == doctest::Approx(1.0 / C_e).epsilon(1e-9));
}

TEST_CASE("admissible epsilon shrinks as constants grow") {
  auto m = unit_constants(3, 0.2);
  double prev = admissible_epsilon(m, 2.0).eps_max;
  for (double c : {1.5, 2.0, 4.0, 10.0}) {
    m.C_h = c;
    double cur = admissible_epsilon(m, 2.0).eps_max;
    CHECK(cur < prev);
    prev = cur;
  }
  m.eps_h = 0.0;
  CHECK_THROWS_AS(admissible_epsilon(m, 2.0), EmptyAdmissibleRange);
}

TEST_CASE("ledger at eps_max") {
  auto L = build_ledger(unit_constants(2, 0.1), 2.0);
  CHECK(L.epsilon == L.eps.eps_max);
  CHECK(L.per_k.size() == 3);
  for (const auto& d : L.per_k) CHECK(d.C_pi == doctest::Approx(2.0 * d.C_Q));
}

TEST_CASE("Neumann series diverges when the defect is not small") {
  Eigen::MatrixXd G = Eigen::MatrixXd::Identity(3, 3);
  Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(3, 3);
  CHECK_THROWS_AS(build_projection(Z, Z, G), NeumannDivergence);
  Eigen::MatrixXd Q = 0.9 * Eigen::MatrixXd::Identity(3, 3);
  auto P = build_projection(Q, Q, G);
  CHECK(P.defect_norm == doctest::Approx(0.1));
  CHECK((P.J * Q - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-12);
}

TEST_CASE("gram operator norm") {
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(2, 2);
  A(1, 1) = 3.0;
  Eigen::MatrixXd G = Eigen::MatrixXd::Identity(2, 2);
  CHECK(gram_operator_norm(A, G, G) == doctest::Approx(3.0));
  CHECK(gram_operator_norm(A, 4.0 * G, G) == doctest::Approx(6.0));
}

TEST_CASE("prolongation commutes with d") {
  const auto& S = square_setup();
  for (int k = 0; k < 2; ++k) {
    auto P0 = prolongation(S.spaces[k], S.fine_spaces[k]);
    auto P1 = prolongation(S.spaces[k + 1], S.fine_spaces[k + 1]);
    Eigen::MatrixXd lhs = derivative_matrix(S.fine_spaces[k], S.fine_spaces[k + 1]) * P0;
    Eigen::MatrixXd rhs = P1 * derivative_matrix(S.spaces[k], S.spaces[k + 1]);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("serial and parallel assembly agree bitwise; callable application matches columns") {
  const auto& S = square_setup();
  auto L = build_ledger(S.measured, 2.0);
  const auto cfg = MollifierConfig::make(0.5 * L.eps.eps_max, *S.field, 8);
  const ExtendedPartition part(S.mesh, S.geom);
  for (int k = 0; k < 3; ++k) {
    const auto& V = S.spaces[k];
    auto Qp = assemble_Q(V, V, part, S.geom, cfg, true);
    auto Qs = assemble_Q(V, V, part, S.geom, cfg, false);
    CHECK((Qp - Qs).cwiseAbs().maxCoeff() == 0.0);
    for (int j : {0, V.dim() / 2, V.dim() - 1}) {
      Eigen::VectorXd e = Eigen::VectorXd::Unit(V.dim(), j);
      const auto w = ExtendedForm::from_fe(V, S.geom, e);
      auto col = apply_Q_callable(V, part, cfg, w, 2 * reference_element(V.spec(), 2).degree + 4);
      CHECK((col - Qp.col(j)).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("projection on a coarse square") {
  const auto& S = square_setup();
  auto L = build_ledger(S.measured, 2.0);
  auto run = run_projection(S, L.eps.eps_max, 8);
  CHECK(run.idempotency < 1e-9);
  CHECK(run.commutation < 1e-8);
  CHECK(run.q_commutation < 1e-8);
  for (const auto& d : run.degrees) {
    CHECK(d.proj.defect_norm < 0.5);
    CHECK(d.norm <= L.per_k[d.k].C_pi * std::pow(L.epsilon, -1.0));
  }
}
