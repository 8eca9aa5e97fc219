#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <shared_mutex>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "feec/geometry.hpp"
#include "feec/mesh.hpp"

namespace feec {

struct RadiusTooLarge : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Piecewise affine mesh size H (vertex values = mean adjacent cell diameter), its extension by
/// the piecewise affine reflection, and a smooth field h obtained by a normalised kernel average of
/// E H over a lattice of spacing rho/4.
class MeshSizeField {
 public:
  /// rho <= 0 selects 0.25 * h_min * eps_h / (1 + Lip A).
  MeshSizeField(const Triangulation& mesh, const DomainGeometry& geom, double eps_h, double rho = -1.0);

  const Triangulation& mesh() const { return *mesh_; }
  const DomainGeometry& geometry() const { return *geom_; }
  double rho() const { return rho_; }
  /// Strict upper limit h_min * eps_h / (1 + Lip A) for rho.
  double rho_limit() const { return rho_limit_; }
  double eps_h() const { return eps_h_; }

  /// H on the closed domain; throws EvaluationOutsideExtendedDomain elsewhere.
  double H(const Point& x) const;
  /// E^0 H on the extended domain.
  double EH(const Point& x) const;
  double h(const Point& x) const;
  /// Value, gradient and (optionally) Hessian of h.
  double h_derivs(const Point& x, Eigen::Vector3d& grad, Eigen::Matrix3d* hess = nullptr) const;

  /// h at mesh vertices and the cellwise gradient of its piecewise affine interpolant.
  const std::vector<double>& vertex_h() const { return vertex_h_; }
  const std::vector<Eigen::Vector3d>& cell_grad_h_pl() const { return cell_grad_pl_; }

  /// C_h = C_mesh^2 and its sampled counterpart max(h/h_F, h_F/h).
  double C_h() const { return C_h_; }
  double C_h_sampled() const { return C_h_sampled_; }
  /// L_h: 1.1 * sampled max |grad h| (sample count in lh_samples()).
  double L_h() const { return L_h_; }
  double grad_h_sampled() const { return grad_sampled_; }
  int lh_samples() const { return lh_samples_; }
  /// max_T |grad H|_T.
  double grad_H_max() const { return grad_H_max_; }

 private:
  double lattice_value(std::int64_t i, std::int64_t j, std::int64_t k) const;
  void estimate();

  const Triangulation* mesh_;
  const DomainGeometry* geom_;
  double eps_h_ = 0.0, rho_ = 0.0, rho_limit_ = 0.0, spacing_ = 0.0;
  double C_h_ = 1.0, C_h_sampled_ = 1.0, L_h_ = 0.0, grad_sampled_ = 0.0, grad_H_max_ = 0.0;
  int lh_samples_ = 0;
  std::vector<double> vertex_H_, vertex_h_;
  std::vector<Eigen::Vector3d> cell_grad_pl_;
  mutable std::unique_ptr<std::shared_mutex> mutex_;
  mutable std::unordered_map<std::uint64_t, double> cache_;
};

}  // namespace feec
