#pragma once

#include <array>
#include <stdexcept>
#include <utility>
#include <vector>

namespace feec {

struct UnsupportedDegree : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class DomainKind { Simplex, Ball };

/// Points and weights on the reference simplex or on the unit ball.
struct QuadratureRule {
  DomainKind kind = DomainKind::Simplex;
  int dim = 0;
  int exact_degree = 0;
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;

  int size() const { return int(weights.size()); }
  double weight_sum() const;
};

/// Gauss-Jacobi rule on [0,1] for the weight (1-u)^alpha u^beta.
std::pair<std::vector<double>, std::vector<double>> gauss_jacobi01(int q, double alpha, double beta);
/// Gauss-Legendre rule on [a,b].
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int q, double a, double b);

/// Conical product rule on the reference simplex, exact up to `degree`.
QuadratureRule simplex_rule(int m, int degree);
/// Cached copy of simplex_rule; thread-safe.
const QuadratureRule& cached_simplex_rule(int m, int degree);
/// Radial Gauss-Jacobi times sphere rule, exact for polynomials up to `degree` on B_1(0).
QuadratureRule ball_rule(int n, int degree);
/// Ball rule whose radial direction is split geometrically towards |y| = 1.
QuadratureRule graded_ball_rule(int n, int degree, int levels, double factor = 0.5);

double simplex_volume(int m);
double ball_volume(int n);
double sphere_area(int n);

/// Integral of exp(-1/(1-|y|^2)) over B_1(0) in R^n.
double integrate_mollifier(int n, int rule_degree);
/// Normalisation C_mu making the standard mollifier a probability density.
double mollifier_constant(int n);

//---------------------------------------------------------------------------
// Standard mollifier and its derivatives in R^n

double mollifier(int n, const double* y);
void mollifier_gradient(int n, const double* y, double* grad);
void mollifier_hessian(int n, const double* y, double* hess);

}  // namespace feec
