#pragma once

#include <Eigen/Dense>

#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "feec/boxgrid.hpp"
#include "feec/clip.hpp"
#include "feec/mesh.hpp"

namespace feec {

struct GeometryMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NotStarShaped : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CollarTooWide : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EvaluationOutsideExtendedDomain : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// x -> A x + t in R^n; unused rows/columns of A are identity.
struct AffineMap {
  int n = 3;
  Eigen::Matrix3d A = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();

  Point apply(const Point& x) const;
  AffineMap inverse() const;
  /// (*this) o inner
  AffineMap after(const AffineMap& inner) const;
  /// Row-major n x n copy of A, and t, for the polynomial pullback routines.
  std::vector<double> matrix() const;
  std::vector<double> offset() const;
};

/// Affine map restricted to a simplex.
struct PLPiece {
  std::vector<Point> simplex;
  std::vector<HalfSpace> region;
  AffineMap map;
  Point lo{0, 0, 0}, hi{0, 0, 0};
};

struct CollarConstants {
  double lip_reflect = 0.0;      // Lip of the reflection actually used (max of PL and analytic)
  double lip_reflect_inv = 0.0;
  double lip_reflect_pl = 0.0;
  double lip_reflect_inv_pl = 0.0;
  double lip_reflect_sampled = 0.0;
  double psi_upper = 0.0;        // L_Psi: |Psi(x,t)-Psi(x',t')| <= L (|x-x'| + |t-t'|)
  double psi_lower = 0.0;        // sampled, halved
  int samples = 0;
};

class DomainGeometry {
 public:
  /// Known domains: unit_interval, unit_square, unit_cube, l_shape, crossed_bricks.
  static DomainGeometry make(const std::string& name, double width);

  const std::string& name() const { return name_; }
  int dim() const { return n_; }
  double width() const { return w_; }
  double volume() const { return volume_; }
  /// Star center in flattened coordinates.
  const Point& center() const { return x0_; }
  bool has_flattening() const { return regions_.size() > 1; }

  Point flatten(const Point& z) const;
  Point unflatten(const Point& y) const;
  Eigen::Matrix3d flatten_jacobian(const Point& z) const;
  double lip_flatten() const { return lip_phi_; }
  double lip_unflatten() const { return lip_phi_inv_; }

  /// Gauge of the flattened domain about the center, evaluated at Phi(z).
  double gauge(const Point& z) const;
  /// Gradient of z -> gauge(z) in physical coordinates.
  Eigen::Vector3d gauge_gradient(const Point& z) const;
  /// min over facets of the distance from the center to the facet plane (flattened coordinates).
  double gauge_margin() const { return margin_; }

  bool in_domain(const Point& z) const { return gauge(z) < 1.0; }
  bool in_closure(const Point& z, double tol = 1e-12) const { return gauge(z) <= 1.0 + tol; }
  bool in_extended(const Point& z) const { return gauge(z) < 1.0 + w_; }

  /// Collar Psi(x,t), x on the boundary, t in [-1,1].
  Point collar(const Point& x, double t) const;
  /// Analytic reflection: gauge g -> 2 - g along rays from the center (conjugated by Phi).
  Point reflect(const Point& z) const;
  Eigen::Matrix3d reflect_jacobian(const Point& z) const;

  /// Piecewise affine reflection of the exterior collar {1 <= g <= 1+w} onto the interior one.
  const std::vector<PLPiece>& reflection_pieces() const { return pieces_; }
  /// Index of a reflection piece containing z, or -1.
  int find_piece(const Point& z, double tol = 1e-10) const;
  Point reflect_pl(const Point& z) const;

  /// Physical boundary simplices of Omega and of the outer collar boundary {g = 1+w}.
  const std::vector<std::vector<Point>>& boundary_simplices() const { return boundary_; }
  const std::vector<std::vector<Point>>& outer_boundary_simplices() const { return outer_; }

  Point sample_boundary(std::mt19937_64& rng) const;
  /// Uniform sample of the exterior collar by rejection from its bounding box.
  Point sample_exterior_collar(std::mt19937_64& rng) const;

  const CollarConstants& constants() const { return consts_; }
  void bounding_box(double* lo, double* hi, bool extended) const;

 private:
  struct Region {
    std::vector<HalfSpace> hs;  // physical
    std::vector<HalfSpace> image_hs;  // flattened
    AffineMap phi, phi_inv;
  };
  struct Facet {
    std::vector<Point> verts;  // flattened
    std::vector<int> ids;
    Eigen::Matrix3d cone_inv;  // coordinates of y - x0 in the cone basis
  };

  int region_of(const Point& z) const;
  int image_region_of(const Point& y) const;
  double flat_gauge(const Point& y, Eigen::Vector3d* grad) const;
  void build(const Triangulation& base);
  void estimate_constants();

  std::string name_;
  int n_ = 0;
  double w_ = 0.0;
  double volume_ = 0.0;
  Point x0_{0, 0, 0};
  double margin_ = 0.0;
  double radius_ = 0.0;
  double lip_phi_ = 1.0, lip_phi_inv_ = 1.0;
  std::vector<Region> regions_;
  std::vector<Facet> facets_;
  std::vector<double> facet_cum_measure_;
  std::vector<PLPiece> pieces_;
  BoxGrid piece_grid_;
  std::vector<std::vector<Point>> boundary_, outer_;
  Point box_lo_{0, 0, 0}, box_hi_{0, 0, 0}, ebox_lo_{0, 0, 0}, ebox_hi_{0, 0, 0};
  CollarConstants consts_;
};

/// Pullback of a constant-coefficient k-covector through a linear map (components in lex alternator order).
std::vector<double> pullback_covector(const Eigen::Matrix3d& J, int n, int k, const std::vector<double>& w);

/// epsilon_h: min over simplices S of dim >= 1 of min(dist(S, outer collar boundary),
/// dist(S, cells sharing no vertex with S)) / diam(S).
double neighborhood_constant(const Triangulation& mesh, const DomainGeometry& geom);

/// Inner-metric comparability constant by grid shortest paths, normalised by the same stencil on the
/// unobstructed box (exactly 1 for convex domains). Heuristic.
double inner_metric_constant(const DomainGeometry& geom, int cells_per_unit = 4);

}  // namespace feec
