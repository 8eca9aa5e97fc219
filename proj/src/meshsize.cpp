#include "feec/meshsize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <random>

namespace feec {

namespace {

std::uint64_t lattice_key(std::int64_t i, std::int64_t j, std::int64_t k) {
  const std::int64_t off = 1 << 20;
  return (std::uint64_t(i + off) << 42) | (std::uint64_t(j + off) << 21) | std::uint64_t(k + off);
}

}  // namespace

MeshSizeField::MeshSizeField(const Triangulation& mesh, const DomainGeometry& geom, double eps_h, double rho)
    : mesh_(&mesh), geom_(&geom), eps_h_(eps_h), mutex_(std::make_unique<std::shared_mutex>()) {
  if (mesh.dim() != geom.dim()) throw GeometryMismatch("mesh and geometry dimensions differ");
  rho_limit_ = mesh.h_min() * eps_h / (1.0 + geom.constants().lip_reflect);
  rho_ = rho > 0.0 ? rho : 0.25 * rho_limit_;
  if (!(rho_ < rho_limit_)) throw RadiusTooLarge("smoothing radius must satisfy rho (1 + Lip A) < h_min eps_h");
  spacing_ = rho_ / 4.0;
  const int n = mesh.dim();
  vertex_H_.resize(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) vertex_H_[v] = mesh.vertex_size(v);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    auto ch = mesh.chart(c);
    const auto& ids = mesh.simplex(n, c).vertex_ids;
    Eigen::VectorXd dv(n);
    for (int j = 0; j < n; ++j) dv(j) = vertex_H_[ids[j + 1]] - vertex_H_[ids[0]];
    Eigen::VectorXd g = ch.M_inv.transpose() * dv;
    grad_H_max_ = std::max(grad_H_max_, g.norm());
  }
  vertex_h_.resize(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) vertex_h_[v] = h(mesh.vertex(v));
  cell_grad_pl_.resize(mesh.num_cells());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    auto ch = mesh.chart(c);
    const auto& ids = mesh.simplex(n, c).vertex_ids;
    Eigen::VectorXd dv(n);
    for (int j = 0; j < n; ++j) dv(j) = vertex_h_[ids[j + 1]] - vertex_h_[ids[0]];
    Eigen::VectorXd g = ch.M_inv.transpose() * dv;
    cell_grad_pl_[c].setZero();
    cell_grad_pl_[c].head(n) = g;
  }
  estimate();
}

double MeshSizeField::H(const Point& x) const {
  auto loc = mesh_->locate(x.data(), 1e-9);
  if (!loc) throw EvaluationOutsideExtendedDomain("mesh size requested outside the mesh");
  const auto& ids = mesh_->simplex(mesh_->dim(), loc->cell_id).vertex_ids;
  double s = 0.0;
  for (std::size_t j = 0; j < ids.size(); ++j) s += loc->bary[j] * vertex_H_[ids[j]];
  return s;
}

double MeshSizeField::EH(const Point& x) const {
  if (auto loc = mesh_->locate(x.data(), 1e-12)) {
    const auto& ids = mesh_->simplex(mesh_->dim(), loc->cell_id).vertex_ids;
    double s = 0.0;
    for (std::size_t j = 0; j < ids.size(); ++j) s += loc->bary[j] * vertex_H_[ids[j]];
    return s;
  }
  int p = geom_->find_piece(x);
  if (p < 0) throw EvaluationOutsideExtendedDomain("point outside the extended domain");
  return H(geom_->reflection_pieces()[p].map.apply(x));
}

double MeshSizeField::lattice_value(std::int64_t i, std::int64_t j, std::int64_t k) const {
  const std::uint64_t key = lattice_key(i, j, k);
  {
    std::shared_lock lock(*mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  Point p{double(i) * spacing_, double(j) * spacing_, double(k) * spacing_};
  double v = EH(p);
  std::unique_lock lock(*mutex_);
  cache_.emplace(key, v);
  return v;
}

double MeshSizeField::h(const Point& x) const {
  Eigen::Vector3d g;
  return h_derivs(x, g, nullptr);
}

double MeshSizeField::h_derivs(const Point& x, Eigen::Vector3d& grad, Eigen::Matrix3d* hess) const {
  const int n = mesh_->dim();
  std::int64_t lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
  for (int i = 0; i < n; ++i) {
    lo[i] = std::int64_t(std::floor((x[i] - rho_) / spacing_));
    hi[i] = std::int64_t(std::ceil((x[i] + rho_) / spacing_));
  }
  double N = 0.0, D = 0.0;
  Eigen::Vector3d gN = Eigen::Vector3d::Zero(), gD = Eigen::Vector3d::Zero();
  Eigen::Matrix3d HN = Eigen::Matrix3d::Zero(), HD = Eigen::Matrix3d::Zero();
  for (std::int64_t a = lo[0]; a <= hi[0]; ++a)
    for (std::int64_t b = lo[1]; b <= hi[1]; ++b)
      for (std::int64_t c = lo[2]; c <= hi[2]; ++c) {
        Eigen::Vector3d u(0, 0, 0);
        const std::int64_t idx[3] = {a, b, c};
        double r2 = 0.0;
        for (int i = 0; i < n; ++i) {
          u[i] = (x[i] - double(idx[i]) * spacing_) / rho_;
          r2 += u[i] * u[i];
        }
        if (r2 >= 1.0) continue;
        const double s = 1.0 - r2;
        const double mu = std::exp(-1.0 / s);
        const double f = lattice_value(a, b, c);
        N += mu * f;
        D += mu;
        Eigen::Vector3d gmu = (-2.0 * mu / (s * s * rho_)) * u;
        gN += f * gmu;
        gD += gmu;
        if (hess) {
          Eigen::Matrix3d Hmu = (mu * (4.0 / (s * s * s * s) - 8.0 / (s * s * s))) * (u * u.transpose());
          for (int i = 0; i < n; ++i) Hmu(i, i) -= 2.0 * mu / (s * s);
          Hmu /= rho_ * rho_;
          HN += f * Hmu;
          HD += Hmu;
        }
      }
  if (!(D > 0.0)) throw EvaluationOutsideExtendedDomain("empty smoothing stencil");
  const double val = N / D;
  grad = (gN - val * gD) / D;
  if (hess) *hess = (HN - val * HD - grad * gD.transpose() - gD * grad.transpose()) / D;
  return val;
}

void MeshSizeField::estimate() {
  const int n = mesh_->dim();
  // C_h = C_mesh^2; the sampled ratio over points of random simplices of every dimension
  C_h_ = std::pow(shape_constant(*mesh_), 2);
  std::mt19937_64 rng(977);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  double ratio = 1.0, gmax = 0.0;
  const int samples = 1000;
  for (int s = 0; s < samples; ++s) {
    int m = int(uni(rng) * (n + 1)) % (n + 1);
    int id = int(uni(rng) * mesh_->num_simplices(m)) % mesh_->num_simplices(m);
    const auto& ids = mesh_->simplex(m, id).vertex_ids;
    std::vector<double> lam(ids.size());
    double tot = 0.0;
    for (auto& l : lam) tot += (l = -std::log(1.0 - uni(rng)));
    Point x{0, 0, 0};
    for (std::size_t j = 0; j < ids.size(); ++j)
      for (int i = 0; i < n; ++i) x[i] += lam[j] / tot * mesh_->vertex(ids[j])[i];
    const double hF = m == 0 ? mesh_->vertex_size(ids[0]) : mesh_->diameter(m, id);
    Eigen::Vector3d g;
    const double hv = h_derivs(x, g);
    ratio = std::max({ratio, hv / hF, hF / hv});
    gmax = std::max(gmax, g.norm());
  }
  C_h_sampled_ = ratio;
  grad_sampled_ = gmax;
  lh_samples_ = samples;
  L_h_ = 1.1 * gmax;
}

}  // namespace feec
