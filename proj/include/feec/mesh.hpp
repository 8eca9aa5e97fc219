#pragma once

#include <Eigen/Dense>

#include <array>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "feec/boxgrid.hpp"

namespace feec {

struct NonConformingMesh : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateCell : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MeshFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Point = std::array<double, 3>;

struct Simplex {
  int id = 0;
  int dim = 0;
  std::vector<int> vertex_ids;  // strictly increasing
  int orientation = 1;          // sign relative to the sorted order
};

struct ReferenceChart {
  int cell_id = 0;
  Eigen::MatrixXd M;      // columns: v_i - v_0 in sorted vertex order
  Eigen::VectorXd b;
  Eigen::MatrixXd M_inv;
  double det_M = 0.0;
};

struct Location {
  int cell_id = -1;
  std::vector<double> bary;
};

class Triangulation {
 public:
  Triangulation() = default;

  int dim() const { return n_; }
  int num_vertices() const { return int(coords_.size()); }
  int num_simplices(int m) const { return int(simplices_[m].size()); }
  int num_cells() const { return num_simplices(n_); }
  const Point& vertex(int v) const { return coords_[v]; }
  const std::vector<Point>& vertices() const { return coords_; }
  const Simplex& simplex(int m, int id) const { return simplices_[m][id]; }
  const std::vector<Simplex>& simplices(int m) const { return simplices_[m]; }
  /// Cell vertex tuples in the order they were given (used by refinement).
  const std::vector<std::vector<int>>& input_cells() const { return input_cells_; }

  /// Id of the simplex with the given vertex set, or -1.
  int find(std::vector<int> vertex_ids) const;

  /// Ids of the m-dimensional faces of simplex (dim, id), sorted.
  std::vector<int> faces(int dim, int id, int m) const;
  /// n-cells containing a given simplex.
  const std::vector<int>& cells_of(int dim, int id) const { return cofaces_[dim][id]; }
  /// n-cells sharing at least one vertex with the simplex.
  std::vector<int> star_cells(int dim, int id) const;
  /// All simplices (any dimension) sharing a vertex with the simplex, as (dim, id) pairs.
  std::vector<std::pair<int, int>> star(int dim, int id) const;

  double diameter(int dim, int id) const;
  /// m-dimensional volume of a simplex.
  double volume(int dim, int id) const;
  double cell_volume(int c) const { return cell_volume_[c]; }
  double cell_diameter(int c) const { return cell_diam_[c]; }
  /// Mean diameter of the n-cells adjacent to vertex v.
  double vertex_size(int v) const { return vertex_size_[v]; }
  double total_volume() const;
  double h_min() const;
  double h_max() const;

  ReferenceChart chart(int cell_id) const;
  std::vector<double> barycentric(int cell_id, const double* x) const;
  std::optional<Location> locate(const double* x, double tol) const;

  /// Boundary facets: (n-1)-simplices with exactly one adjacent cell.
  std::vector<int> boundary_facets() const;
  std::vector<bool> boundary_vertex_mask() const;

  void bounding_box(int cell_id, double* lo, double* hi) const;

  friend Triangulation build_triangulation(int n, const std::vector<Point>& vertices,
                                           const std::vector<std::vector<int>>& cells);

 private:
  int n_ = 0;
  std::vector<Point> coords_;
  std::vector<std::vector<int>> input_cells_;
  std::array<std::vector<Simplex>, 4> simplices_;
  std::array<std::map<std::vector<int>, int>, 4> index_;
  std::array<std::vector<std::vector<int>>, 4> cofaces_;
  std::vector<std::vector<int>> vertex_cells_;
  std::vector<double> cell_volume_, cell_diam_, vertex_size_;
  double h_max_ = 0.0;
  std::vector<std::array<double, 6>> cell_box_;
  std::vector<Eigen::Matrix3d> cell_inv_;
  BoxGrid grid_;
};

Triangulation build_triangulation(int n, const std::vector<Point>& vertices,
                                  const std::vector<std::vector<int>>& cells);

/// Smallest constant satisfying the flatness and neighbour comparability conditions.
double shape_constant(const Triangulation& mesh);
struct ShapeBreakdown {
  double flatness = 0.0;
  double comparability = 0.0;
};
ShapeBreakdown shape_breakdown(const Triangulation& mesh);
/// Largest number of simplices sharing a vertex with a simplex.
int neighbor_count_constant(const Triangulation& mesh);
/// max over cells of ||M_T|| / h_T and ||M_T^{-1}|| h_T (spectral norms).
std::pair<double, double> chart_constants(const Triangulation& mesh);

/// Uniform red refinement (Bey's rule for tetrahedra).
Triangulation refine_uniform(const Triangulation& mesh);

/// Named domains: unit_square, unit_cube, l_shape, crossed_bricks, unit_interval.
Triangulation generate_domain_mesh(const std::string& domain, int level);

std::string mesh_to_json(const Triangulation& mesh);
Triangulation mesh_from_json(const std::string& text);

/// Euclidean distance between two simplices given by vertex coordinates.
double simplex_distance(const std::vector<Point>& a, const std::vector<Point>& b, int n);

}  // namespace feec
