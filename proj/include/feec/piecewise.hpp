#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "feec/mesh.hpp"
#include "feec/polynomial.hpp"
#include "feec/spaces.hpp"

namespace feec {

/// Polynomial k-form on each of a list of n-simplices, coefficients in physical coordinates.
struct PiecewiseForm {
  int n = 0;
  int k = 0;
  std::vector<std::vector<Point>> pieces;
  std::vector<DForm> forms;
  bool tangential = false;

  void add(const std::vector<Point>& simplex, const DForm& f) {
    pieces.push_back(simplex);
    forms.push_back(f);
  }
};

PiecewiseForm piecewise_on_mesh(const Triangulation& mesh, const DForm& omega);
PiecewiseForm piecewise_from_fe(const FESpace& space, const Eigen::VectorXd& coeffs);
/// Cellwise exterior derivative.
PiecewiseForm piecewise_d(const PiecewiseForm& f);

/// L^p norm by quadrature; p = infinity uses the node maximum of a degree (2r+6) rule plus vertices.
double lp_norm(const PiecewiseForm& f, double p, int quad_degree = -1);

/// Tangential traces agree on shared facets of a mesh-based piecewise form (coefficientwise, tol).
bool tangentially_continuous(const Triangulation& mesh, const PiecewiseForm& f, double tol);

/// Sum over pieces of the integral of f ^ eta over piece and box.
double integrate_against(const PiecewiseForm& f, const DForm& eta, const double* lo, const double* hi);

/// Product of squared distances to the faces of a box, scaled to peak value 1.
DPoly box_bump(int n, const double* lo, const double* hi);

/// max over random box-supported test forms of |int xi ^ eta - (-1)^(k+1) int omega ^ d eta|.
/// Boxes are drawn inside the pieces' bounding box and accepted by `box_ok`.
double weak_derivative_residual(const PiecewiseForm& omega, const PiecewiseForm& xi, int trials, std::uint64_t seed,
                                const std::function<bool(const double*, const double*)>& box_ok);

}  // namespace feec
