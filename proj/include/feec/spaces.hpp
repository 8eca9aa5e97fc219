#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "feec/mesh.hpp"
#include "feec/polynomial.hpp"
#include "feec/quadrature.hpp"

namespace feec {

struct UnisolvenceFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IncompatibleComplex : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonIntegrableTrace : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Family { Full, Minus };

struct SpaceSpec {
  Family family = Family::Minus;
  int r = 1;
  int k = 0;
  std::string name() const;
  bool operator==(const SpaceSpec&) const = default;
};

/// Closed-form dimension of the local space on an n-simplex.
int space_dimension(const SpaceSpec& spec, int n);

//---------------------------------------------------------------------------
// Exact linear algebra over the rationals

using QMatrix = std::vector<std::vector<Rational>>;
int exact_rank(QMatrix rows);
/// Inverse of a square matrix; throws UnisolvenceFailure if singular.
QMatrix exact_inverse(const QMatrix& a);

/// Coefficient vectors of forms in a shared (alternator, monomial) coordinate system.
QMatrix form_coordinates(const std::vector<QForm>& forms);
/// Indices of a maximal linearly independent subsequence (greedy, in order).
std::vector<int> independent_subset(const std::vector<QForm>& forms);
/// True if every form in `candidates` lies in span(`space`).
bool in_span(const std::vector<QForm>& space, const std::vector<QForm>& candidates);

//---------------------------------------------------------------------------
// Reference element

/// Basis of P_r Lambda^k or P_r^- Lambda^k on the reference n-simplex.
std::vector<QForm> local_space_basis(const SpaceSpec& spec, int n);
/// Span set before reduction (monomials x alternators, or P_{r-1} + Koszul P_{r-1}).
std::vector<QForm> local_space_spanning_set(const SpaceSpec& spec, int n);

/// Weight-form space attached to an m-face for the given space.
std::vector<QForm> dof_weight_basis(const SpaceSpec& spec, int m);

struct LocalDof {
  int face_dim = 0;
  std::vector<int> face_vertices;  // local reference vertex indices, sorted
  int weight_index = 0;
  QForm weight;  // (m - k)-form on the reference m-simplex
};

/// Affine embedding of the reference m-simplex onto a face of the reference n-simplex.
void reference_face_embedding(const std::vector<int>& face_vertices, int n, std::vector<Rational>& M,
                              std::vector<Rational>& b);

/// Exact DOF value of a reference form.
Rational reference_dof(const LocalDof& dof, const QForm& omega, int n);

struct ReferenceElement {
  SpaceSpec spec;
  int n = 0;
  std::vector<LocalDof> dofs;
  std::vector<QForm> basis;     // dual to dofs
  std::vector<DForm> basis_d;   // same, double coefficients
  std::vector<DForm> dbasis_d;  // exterior derivatives
  int degree = 0;               // max polynomial degree of the basis
  int size() const { return int(basis.size()); }
};

/// Cached; thread-safe.
const ReferenceElement& reference_element(const SpaceSpec& spec, int n);

/// k-th compound matrix (minors in alternator order), row-major C(n,k) x C(n,k).
std::vector<double> compound_matrix(const Eigen::MatrixXd& A, int k);

//---------------------------------------------------------------------------
// Global space

struct GlobalDof {
  int face_dim = 0;
  int face_id = 0;
  int weight_index = 0;
};

struct CellGeometry {
  Eigen::MatrixXd M, M_inv;
  Eigen::VectorXd b;
  double abs_det = 0.0;
  std::vector<double> pull;  // compound of M_inv: ref components -> physical components
};

class FESpace {
 public:
  FESpace(const Triangulation& mesh, const SpaceSpec& spec);

  const Triangulation& mesh() const { return *mesh_; }
  const SpaceSpec& spec() const { return spec_; }
  const ReferenceElement& reference() const { return *ref_; }
  int dim() const { return int(dofs_.size()); }
  int n() const { return mesh_->dim(); }
  int ncomp() const { return binomial(n(), spec_.k); }
  const std::vector<GlobalDof>& dofs() const { return dofs_; }
  const std::vector<int>& cell_dofs(int c) const { return cell_dofs_[c]; }
  const CellGeometry& geometry(int c) const { return geom_[c]; }

  /// Physical components of local basis function i of cell c at reference point t.
  void eval_local(int c, int i, const double* t, double* out) const;
  /// Physical components of a global FE function on cell c at reference point t.
  void eval_ref(const Eigen::VectorXd& coeffs, int c, const double* t, double* out) const;
  /// Evaluate at a physical point; returns false if outside the mesh.
  bool eval(const Eigen::VectorXd& coeffs, const double* x, double* out, double tol = 1e-12) const;
  /// Physical-coordinate polynomial form of local basis function i on cell c.
  DForm cell_form(int c, int i) const;
  DForm cell_form(const Eigen::VectorXd& coeffs, int c) const;

  /// Physical chart of the sorted-vertex parametrisation of a face.
  void face_chart(int m, int face, std::vector<double>& M, std::vector<double>& b) const;
  /// Weight form of a global DOF in face reference coordinates.
  const QForm& dof_weight(int g) const;

  /// Exact DOF of an arbitrary polynomial form given in physical coordinates.
  double dof_apply(int g, const DForm& omega) const;
  /// DOF of a callable (physical point -> physical components) by face quadrature.
  double dof_apply(int g, const std::function<void(const double*, double*)>& omega, int quad_degree) const;

  Eigen::VectorXd interpolate(const DForm& omega) const;
  Eigen::VectorXd interpolate(const std::function<void(const double*, double*)>& omega, int quad_degree) const;

  Eigen::MatrixXd gram(int quad_degree = -1) const;
  /// Exact tangential continuity check of the global basis across interior facets.
  bool check_tangential_continuity() const;

 private:
  const Triangulation* mesh_;
  SpaceSpec spec_;
  const ReferenceElement* ref_;
  std::vector<GlobalDof> dofs_;
  std::vector<std::vector<int>> cell_dofs_;
  std::vector<int> local_of_dof_;  // reference dof index for each global dof (via its first cell)
  std::vector<CellGeometry> geom_;
};

/// Exact derivative matrix: DOFs of the (k+1)-space applied to d of the k-space basis.
Eigen::MatrixXd derivative_matrix(const FESpace& from, const FESpace& to);
/// Same on the reference element, exactly.
QMatrix reference_derivative_matrix(const ReferenceElement& from, const ReferenceElement& to);

struct ComplexSpec {
  std::vector<SpaceSpec> spaces;  // k = 0..n
  std::string name;
};
/// Parses "P<r>-minus", "P<r>-full" or a comma list like "full2,minus2,minus1".
ComplexSpec parse_complex(const std::string& text, int n);
/// Throws IncompatibleComplex if consecutive spaces violate the FEEC rule.
void check_complex(const ComplexSpec& c, int n);

struct InverseConstants {
  double C_flat_2 = 0.0;
  double C_flat_inf = 0.0;
  double C_boundary = 0.0;
  double C_interp = 0.0;
};
/// Reference-element measurements; depend only on (spec, n) and the rng seed.
InverseConstants measure_inverse_constants(const SpaceSpec& spec, int n, int samples, std::uint64_t seed);

/// Nodes used for node-max sup estimates on the reference simplex.
std::vector<std::array<double, 3>> sup_nodes(int n, int degree);

}  // namespace feec
