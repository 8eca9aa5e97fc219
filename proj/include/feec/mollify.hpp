#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

#include "feec/geometry.hpp"
#include "feec/meshsize.hpp"
#include "feec/polynomial.hpp"
#include "feec/quadrature.hpp"
#include "feec/spaces.hpp"

namespace feec {

/// Pointwise k-form field: components in lex alternator order, optional Jacobian (comps x n, row-major).
class FormEvaluator {
 public:
  virtual ~FormEvaluator() = default;
  virtual int dim() const = 0;
  virtual int degree() const = 0;
  virtual void eval(const Point& z, double* vals, double* jac) const = 0;
};

/// Piecewise polynomial form on mesh cells, extended to the exterior collar by pullback along the
/// reflection (piecewise affine by default, analytic on request; the analytic branch has no Jacobian).
class ExtendedForm : public FormEvaluator {
 public:
  enum class Reflection { PiecewiseAffine, Analytic };

  ExtendedForm(const Triangulation& mesh, const DomainGeometry& geom, std::vector<DForm> cell_forms,
               Reflection mode = Reflection::PiecewiseAffine);
  static ExtendedForm from_fe(const FESpace& space, const DomainGeometry& geom, const Eigen::VectorXd& coeffs,
                              Reflection mode = Reflection::PiecewiseAffine);
  static ExtendedForm global(const Triangulation& mesh, const DomainGeometry& geom, const DForm& omega,
                             Reflection mode = Reflection::PiecewiseAffine);

  int dim() const override { return mesh_->dim(); }
  int degree() const override { return k_; }
  void eval(const Point& z, double* vals, double* jac) const override;

  /// Cellwise exterior derivative with the same extension.
  ExtendedForm d() const;
  const std::vector<DForm>& cell_forms() const { return forms_; }

 private:
  void eval_cell(int c, const Point& x, double* vals, double* jac) const;

  const Triangulation* mesh_;
  const DomainGeometry* geom_;
  int k_ = 0;
  Reflection mode_;
  std::vector<DForm> forms_;
  std::vector<std::vector<DForm>> partials_;
};

struct MollifierConfig {
  double epsilon = 0.0;
  const MeshSizeField* field = nullptr;
  /// Ball nodes and normalised weights w_q mu(y_q) / sum(w mu).
  std::vector<Point> nodes;
  std::vector<double> weights;
  /// Sum of raw w_q mu(y_q) (the quadrature value of the unit integral).
  double raw_mass = 0.0;

  static MollifierConfig make(double epsilon, const MeshSizeField& field, int degree, int levels = 3);
};

struct FlowMap {
  Point x;
  Eigen::Matrix3d J;
};

/// x + eps h(x) y and its Jacobian Id + eps y (grad h)^T.
FlowMap flow_map(const MollifierConfig& cfg, const Point& x, const Point& y);

/// R omega at x (components in lex alternator order).
std::vector<double> mollify_eval(const MollifierConfig& cfg, const FormEvaluator& omega, const Point& x);
/// d(R omega) at x by exact differentiation of the quadrature sum (needs Jacobians of omega).
std::vector<double> mollify_d_eval(const MollifierConfig& cfg, const FormEvaluator& omega, const Point& x);

/// max over points of |d(R omega) - R(d omega)|.
double mollify_commutation_residual(const MollifierConfig& cfg, const ExtendedForm& omega,
                                    const std::vector<Point>& points);

/// omega restricted to a ball (zero outside), for locality checks.
class BallMaskedForm : public FormEvaluator {
 public:
  BallMaskedForm(const FormEvaluator& inner, const Point& c, double r) : inner_(&inner), c_(c), r_(r) {}
  int dim() const override { return inner_->dim(); }
  int degree() const override { return inner_->degree(); }
  void eval(const Point& z, double* vals, double* jac) const override;

 private:
  const FormEvaluator* inner_;
  Point c_;
  double r_;
};

/// Exterior derivative components from the Jacobian of a k-form's components.
std::vector<double> exterior_derivative_from_jacobian(int n, int k, const std::vector<double>& jac);

}  // namespace feec
