#pragma once

#include <vector>

#include "feec/mesh.hpp"

namespace feec {

/// Closed half-space { x : a . x <= c }.
struct HalfSpace {
  Point a{0.0, 0.0, 0.0};
  double c = 0.0;
};

/// Half-spaces of a nondegenerate n-simplex, normals of unit length.
std::vector<HalfSpace> simplex_halfspaces(const std::vector<Point>& verts, int n);
/// Axis-aligned box [lo, hi].
std::vector<HalfSpace> box_halfspaces(const double* lo, const double* hi, int n);

/// Affine image x = M t + b (M row-major n x m) of the reference m-simplex.
struct AffineSimplex {
  int m = 0, n = 0;
  std::vector<double> M, b;
  Point map(const Point& t) const;
};

AffineSimplex affine_simplex_from_vertices(const std::vector<Point>& verts, int n);
/// Reparametrisation of a sub-simplex given by vertices in the parameter space of `s`.
AffineSimplex sub_simplex(const AffineSimplex& s, const std::vector<Point>& tverts);

/// Intersects the image of the reference simplex with the half-spaces and triangulates the
/// result. Returned simplices are vertex lists in parameter coordinates t. A piece lying
/// inside one of the bounding planes is kept iff a . d < 0 for a fixed generic direction d,
/// so that pieces on shared facets are claimed by exactly one side.
std::vector<std::vector<Point>> clip_simplex(const AffineSimplex& s, const std::vector<HalfSpace>& hs,
                                             double tol = 1e-12);

/// True when a half-space parallel to the simplex excludes it: outside, or inside the bounding
/// plane and rejected by the tie-break. clip_simplex returns nothing in exactly these cases.
bool parallel_reject(const AffineSimplex& s, const HalfSpace& h, double tol = 1e-12);

/// Measure of an m-simplex given in m-dimensional coordinates.
double parameter_measure(const std::vector<Point>& verts, int m);

}  // namespace feec
