#pragma once

#include <vector>

#include "feec/mesh.hpp"
#include "feec/polynomial.hpp"
#include "feec/spaces.hpp"

namespace feec {

/// Weighted oriented simplex; orientation is the order of `verts`.
struct ChainTerm {
  double weight = 0.0;
  std::vector<Point> verts;
};

struct WeightedChain {
  int k = 0;  // simplex dimension
  int n = 0;  // ambient dimension
  std::vector<ChainTerm> terms;

  /// Sorts vertices (tracking the sign), merges equal supports, drops zero weights.
  void canonicalize(double zero_tol = 0.0);
};

double simplex_k_volume(const std::vector<Point>& verts, int n);
double mass(const WeightedChain& c);
WeightedChain boundary(const WeightedChain& c);
/// x -> M x + b with M row-major n x n.
WeightedChain pushforward_affine(const std::vector<double>& M, const std::vector<double>& b,
                                 const WeightedChain& c);
/// Exact (up to roundoff) integral of a polynomial k-form over the chain.
double integrate_chain(const WeightedChain& c, const DForm& omega);
/// Maximum of |omega| over the nodes of the rule used by integrate_chain plus the vertices.
double chain_node_max(const WeightedChain& c, const DForm& omega);

double deformation_bound(const WeightedChain& c, double displacement_sup, double lip);

struct ChainMasses {
  double mass_k = 0.0;
  double boundary_mass = 0.0;
};

/// Mass of the chain of a DOF with weight eta (an (m-k)-form on the reference m-simplex)
/// on the face with the given vertices, and the mass of its boundary.
ChainMasses dof_chain_masses(const std::vector<Point>& face, int n, int k, const DForm& eta);
ChainMasses dof_as_chain_pair(const FESpace& space, int g);

/// Pointwise norm of an (m-k)-form at parameter t for the metric induced by face chart M.
double induced_norm(const std::vector<double>& M, int n, int m, const std::vector<double>& comps, int degree);

}  // namespace feec
