#pragma once

#include <Eigen/Dense>

#include <array>
#include <memory>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "feec/boxgrid.hpp"
#include "feec/geometry.hpp"
#include "feec/meshsize.hpp"
#include "feec/mollify.hpp"
#include "feec/piecewise.hpp"
#include "feec/spaces.hpp"

namespace feec {

struct EmptyAdmissibleRange : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NeumannDivergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SingularDOF : std::runtime_error {
  using std::runtime_error::runtime_error;
};

//---------------------------------------------------------------------------
// Assembly

/// Simplices covering the extended domain: source cells, and exterior pieces on which the
/// piecewise affine reflection is affine and lands in a single source cell.
class ExtendedPartition {
 public:
  struct Piece {
    std::vector<Point> simplex;
    std::vector<HalfSpace> region;
    int cell = -1;
    int reflect = -1;  // -1 for interior cells
    std::array<double, 6> box{};
  };

  ExtendedPartition(const Triangulation& source, const DomainGeometry& geom);

  const std::vector<Piece>& pieces() const { return pieces_; }
  /// Physical simplices tiling piece p.
  std::vector<std::vector<Point>> piece_simplices(int p) const;
  const BoxGrid& grid() const { return grid_; }

 private:
  std::vector<Piece> pieces_;
  BoxGrid grid_;
};

/// The extension by the piecewise affine reflection as a piecewise polynomial form on the partition
/// (cell forms given per source cell). `exterior_only` keeps the collar pieces alone.
PiecewiseForm extend_piecewise(const ExtendedPartition& part, const DomainGeometry& geom,
                               const std::vector<DForm>& cell_forms, bool exterior_only = false);

/// Q = I R E from `source` into `target` with the ball nodes of cfg and the flow
/// x -> x + eps h_pl(x) y, h_pl the affine interpolant of h on the target mesh. DOF integrals are
/// exact: images of DOF faces are clipped against the extended partition.
Eigen::MatrixXd assemble_Q(const FESpace& target, const FESpace& source, const ExtendedPartition& part,
                           const DomainGeometry& geom, const MollifierConfig& cfg, bool parallel = true);

/// I R omega for an evaluator defined on the extended domain, with the flow of assemble_Q. Flowed faces
/// are split along the partition, so piecewise smooth inputs on it integrate to quadrature accuracy.
Eigen::VectorXd apply_Q_callable(const FESpace& target, const ExtendedPartition& part, const MollifierConfig& cfg,
                                 const FormEvaluator& omega, int quad_degree, bool parallel = true);

/// DOFs of I R omega by plain face quadrature of mollify_eval (smooth h). Only O(eps) accurate for
/// inputs that are not smooth across cells.
Eigen::VectorXd apply_Q_sampled(const FESpace& target, const MollifierConfig& cfg, const FormEvaluator& omega,
                                int quad_degree, bool parallel = true);

/// Coefficients in `fine` of the basis of `coarse` (nested meshes).
Eigen::MatrixXd prolongation(const FESpace& coarse, const FESpace& fine);

/// sqrt of the largest generalised eigenvalue of A^T G_to A v = lambda G_from v.
double gram_operator_norm(const Eigen::MatrixXd& A, const Eigen::MatrixXd& G_to, const Eigen::MatrixXd& G_from);

struct Projection {
  Eigen::MatrixXd J;           // inverse of Q on the FE space
  Eigen::MatrixXd pi;          // J * Q_source
  double defect_norm = 0.0;    // |Id - Q_fe| in the Gram norm
  double neumann_gap = 0.0;    // max |sum_{i<=20} (Id-Q)^i - J|
};

/// Throws NeumannDivergence when |Id - Q_fe|_G >= 1.
Projection build_projection(const Eigen::MatrixXd& Q_fe, const Eigen::MatrixXd& Q_source, const Eigen::MatrixXd& gram);

//---------------------------------------------------------------------------
// Constants

struct MeasuredConstants {
  int n = 0;
  double C_mesh = 0.0, C_N = 0.0, eps_h = 0.0, c_M = 0.0, C_M = 0.0;
  double L_Psi = 0.0, L_h = 0.0, C_h = 0.0, L_Omega = 0.0;
  double lip_A = 0.0, lip_A_inv = 0.0;
  // per form degree k = 0..n
  std::vector<double> C_I, C_bd, C_flat_2, C_flat_inf;
};

struct DegreeConstants {
  int k = 0;
  double C_A = 0.0, C_E = 0.0, C_E_inf = 0.0, C_flat = 0.0, C_Q = 0.0, C_e = 0.0, C_pi = 0.0;
};

struct EpsilonBounds {
  std::array<double, 4> bound{};
  std::array<std::string, 4> name{};
  int binding = 0;
  double eps_max = 0.0;
};

struct ConstantLedger {
  MeasuredConstants measured;
  double p = 2.0;
  double epsilon = 0.0;  // epsilon at which derived constants are evaluated
  std::vector<DegreeConstants> per_k;
  double C_Q = 0.0, C_e = 0.0, C_pi = 0.0;  // max over k
  EpsilonBounds eps;
};

/// Measures every input constant on a mesh, geometry, mesh-size field and complex.
MeasuredConstants measure_constants(const Triangulation& mesh, const DomainGeometry& geom, const MeshSizeField& field,
                                    const ComplexSpec& complex, std::uint64_t seed);

DegreeConstants derive_constants(const MeasuredConstants& m, int k, double p, double epsilon);
/// Half the minimum of the four admissibility bounds; ties go to the later (more specific) condition.
EpsilonBounds admissible_epsilon(const MeasuredConstants& m, double p);
/// epsilon <= 0 selects eps_max.
ConstantLedger build_ledger(const MeasuredConstants& m, double p, double epsilon = -1.0);

//---------------------------------------------------------------------------
// Studies

/// Everything needed to run Q and pi on one mesh level for one complex.
struct LevelSetup {
  Triangulation mesh, fine;
  DomainGeometry geom;
  ComplexSpec complex;
  double eps_h = 0.0;
  std::unique_ptr<MeshSizeField> field;
  MeasuredConstants measured;
  std::vector<FESpace> spaces, fine_spaces;

  LevelSetup(const std::string& domain, int level, const ComplexSpec& complex, double collar_width,
             std::uint64_t seed, const Triangulation* mesh_override = nullptr);
  LevelSetup(const LevelSetup&) = delete;
  LevelSetup& operator=(const LevelSetup&) = delete;
};

struct DegreeProjection {
  int k = 0;
  Eigen::MatrixXd Q_fe, Q_src, P, gram, gram_fine;
  Projection proj;
  double norm = 0.0;
};

struct ProjectionRun {
  double epsilon = 0.0;
  std::vector<DegreeProjection> degrees;
  std::vector<Eigen::MatrixXd> D, D_fine;  // coarse and fine derivative matrices
  double idempotency = 0.0;      // max_k |pi P - Id|
  double commutation = 0.0;      // max_k |D pi_k - pi_{k+1} D_fine|
  double q_commutation = 0.0;    // max_k |D Q_k - Q_{k+1} D| on the FE space
};

ProjectionRun run_projection(const LevelSetup& setup, double epsilon, int ball_degree, bool parallel = true);

struct ScalingPoint {
  double epsilon = 0.0, ratio = 0.0, ceiling = 0.0;
};
/// Worst local ratio |w - Q w|_T / |w|_patch(T) over the basis and random FE forms of degree k.
std::vector<ScalingPoint> interpolation_error_study(const LevelSetup& setup, int k, const std::vector<double>& epsilons,
                                                   int ball_degree, int random_forms, std::uint64_t seed);
double loglog_slope(const std::vector<ScalingPoint>& pts);

struct RefinementRow {
  int level = 0;
  double epsilon = 0.0;
  std::vector<double> norm, ceiling;  // per k
};
/// Gram norms of pi on levels first..last at one epsilon; epsilon <= 0 takes the smallest eps_max.
std::vector<RefinementRow> refinement_study(const std::string& domain, const ComplexSpec& complex, int first, int last,
                                            double epsilon, double collar_width, int ball_degree,
                                            std::uint64_t seed);

}  // namespace feec
