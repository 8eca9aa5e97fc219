#include "feec/mollify.hpp"

#include <algorithm>
#include <cmath>

namespace feec {

namespace {

// Jacobi's formula by multilinearity: d det(B)[dB] = sum_c det(B with column c from dB).
double minor_det_derivative(const double* B, const double* dB, int n, const std::vector<int>& rows,
                            const std::vector<int>& cols) {
  const std::size_t k = rows.size();
  if (k == 0) return 0.0;
  double total = 0.0;
  double tmp[9];
  for (std::size_t c = 0; c < k; ++c) {
    std::copy(B, B + n * n, tmp);
    for (std::size_t r = 0; r < k; ++r) tmp[rows[r] * n + cols[c]] = dB[rows[r] * n + cols[c]];
    total += minor_det(tmp, n, rows, cols);
  }
  return total;
}

}  // namespace

//---------------------------------------------------------------------------

ExtendedForm::ExtendedForm(const Triangulation& mesh, const DomainGeometry& geom, std::vector<DForm> cell_forms,
                           Reflection mode)
    : mesh_(&mesh), geom_(&geom), mode_(mode), forms_(std::move(cell_forms)) {
  if (int(forms_.size()) != mesh.num_cells()) throw DimensionMismatch("one form per cell expected");
  if (mesh.dim() != geom.dim()) throw GeometryMismatch("mesh and geometry dimensions differ");
  k_ = forms_.empty() ? 0 : forms_[0].degree();
  const int n = mesh.dim();
  partials_.resize(forms_.size());
  for (std::size_t c = 0; c < forms_.size(); ++c) {
    for (int i = 0; i < n; ++i) {
      DForm p(n, k_);
      for (const auto& [s, poly] : forms_[c].coeffs()) p.add(s, poly.derivative(i));
      partials_[c].push_back(p);
    }
  }
}

ExtendedForm ExtendedForm::from_fe(const FESpace& space, const DomainGeometry& geom, const Eigen::VectorXd& coeffs,
                                   Reflection mode) {
  std::vector<DForm> forms;
  for (int c = 0; c < space.mesh().num_cells(); ++c) forms.push_back(space.cell_form(coeffs, c));
  ExtendedForm f(space.mesh(), geom, std::move(forms), mode);
  f.k_ = space.spec().k;
  return f;
}

ExtendedForm ExtendedForm::global(const Triangulation& mesh, const DomainGeometry& geom, const DForm& omega,
                                  Reflection mode) {
  ExtendedForm f(mesh, geom, std::vector<DForm>(mesh.num_cells(), omega), mode);
  f.k_ = omega.degree();
  return f;
}

ExtendedForm ExtendedForm::d() const {
  std::vector<DForm> df;
  for (const auto& w : forms_) df.push_back(w.exterior_derivative());
  ExtendedForm out(*mesh_, *geom_, std::move(df), mode_);
  out.k_ = k_ + 1;
  return out;
}

void ExtendedForm::eval_cell(int c, const Point& x, double* vals, double* jac) const {
  const int n = mesh_->dim();
  const int N = binomial(n, k_);
  auto v = forms_[c].evaluate_double(x.data());
  for (int s = 0; s < N; ++s) vals[s] = v.empty() ? 0.0 : v[s];
  if (!jac) return;
  for (int j = 0; j < n; ++j) {
    auto dv = partials_[c][j].evaluate_double(x.data());
    for (int s = 0; s < N; ++s) jac[s * n + j] = dv.empty() ? 0.0 : dv[s];
  }
}

void ExtendedForm::eval(const Point& z, double* vals, double* jac) const {
  const int n = mesh_->dim();
  const int N = binomial(n, k_);
  if (auto loc = mesh_->locate(z.data(), 1e-12)) {
    eval_cell(loc->cell_id, z, vals, jac);
    return;
  }
  Eigen::Matrix3d A;
  Point u;
  if (mode_ == Reflection::PiecewiseAffine) {
    int p = geom_->find_piece(z);
    if (p < 0) throw EvaluationOutsideExtendedDomain("form evaluated outside the extended domain");
    const auto& map = geom_->reflection_pieces()[p].map;
    A = map.A;
    u = map.apply(z);
  } else {
    double g = geom_->gauge(z);
    if (!(g < 1.0 + geom_->width())) throw EvaluationOutsideExtendedDomain("form evaluated outside the extended domain");
    if (jac) throw EvaluationOutsideExtendedDomain("analytic extension provides no Jacobian");
    A = geom_->reflect_jacobian(z);
    u = geom_->reflect(z);
  }
  auto loc = mesh_->locate(u.data(), 1e-9);
  if (!loc) throw EvaluationOutsideExtendedDomain("reflected point missed the mesh");
  std::vector<double> inner(N), ij(jac ? N * n : 0);
  eval_cell(loc->cell_id, u, inner.data(), jac ? ij.data() : nullptr);
  auto pulled = pullback_covector(A, n, k_, inner);
  for (int s = 0; s < N; ++s) vals[s] = pulled[s];
  if (!jac) return;
  std::vector<double> col(N);
  for (int j = 0; j < n; ++j) {
    for (int s = 0; s < N; ++s) {
      col[s] = 0.0;
      for (int i = 0; i < n; ++i) col[s] += ij[s * n + i] * A(i, j);
    }
    auto pc = pullback_covector(A, n, k_, col);
    for (int s = 0; s < N; ++s) jac[s * n + j] = pc[s];
  }
}

//---------------------------------------------------------------------------

void BallMaskedForm::eval(const Point& z, double* vals, double* jac) const {
  const int n = dim();
  double r2 = 0.0;
  for (int i = 0; i < n; ++i) r2 += (z[i] - c_[i]) * (z[i] - c_[i]);
  if (r2 < r_ * r_) {
    inner_->eval(z, vals, jac);
    return;
  }
  const int N = binomial(n, degree());
  std::fill(vals, vals + N, 0.0);
  if (jac) std::fill(jac, jac + N * n, 0.0);
}

//---------------------------------------------------------------------------

MollifierConfig MollifierConfig::make(double epsilon, const MeshSizeField& field, int degree, int levels) {
  MollifierConfig cfg;
  cfg.epsilon = epsilon;
  cfg.field = &field;
  const int n = field.mesh().dim();
  QuadratureRule rule = graded_ball_rule(n, degree, levels);
  double total = 0.0;
  for (int q = 0; q < rule.size(); ++q) {
    double w = rule.weights[q] * mollifier(n, rule.points[q].data());
    if (w == 0.0) continue;
    cfg.nodes.push_back(rule.points[q]);
    cfg.weights.push_back(w);
    total += w;
  }
  for (auto& w : cfg.weights) w /= total;
  cfg.raw_mass = total;
  return cfg;
}

FlowMap flow_map(const MollifierConfig& cfg, const Point& x, const Point& y) {
  const int n = cfg.field->mesh().dim();
  Eigen::Vector3d g;
  const double h = cfg.field->h_derivs(x, g);
  FlowMap f;
  f.J = Eigen::Matrix3d::Identity();
  for (int i = 0; i < 3; ++i) f.x[i] = i < n ? x[i] + cfg.epsilon * h * y[i] : 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) f.J(i, j) += cfg.epsilon * y[i] * g[j];
  return f;
}

std::vector<double> mollify_eval(const MollifierConfig& cfg, const FormEvaluator& omega, const Point& x) {
  const int n = omega.dim(), k = omega.degree();
  const int N = binomial(n, k);
  Eigen::Vector3d g;
  const double h = cfg.field->h_derivs(x, g);
  std::vector<double> out(N, 0.0), vals(N);
  for (std::size_t q = 0; q < cfg.nodes.size(); ++q) {
    const Point& y = cfg.nodes[q];
    Point z{0, 0, 0};
    Eigen::Matrix3d J = Eigen::Matrix3d::Identity();
    for (int i = 0; i < n; ++i) {
      z[i] = x[i] + cfg.epsilon * h * y[i];
      for (int j = 0; j < n; ++j) J(i, j) += cfg.epsilon * y[i] * g[j];
    }
    omega.eval(z, vals.data(), nullptr);
    auto p = k == 0 ? vals : pullback_covector(J, n, k, vals);
    for (int s = 0; s < N; ++s) out[s] += cfg.weights[q] * p[s];
  }
  return out;
}

std::vector<double> exterior_derivative_from_jacobian(int n, int k, const std::vector<double>& jac) {
  const auto& out_alts = alternators(k + 1, n);
  std::vector<double> out(out_alts.size(), 0.0);
  for (std::size_t r = 0; r < out_alts.size(); ++r) {
    const unsigned rho = out_alts[r];
    for (int j : mask_indices(rho)) {
      const unsigned rest = rho & ~(1u << j);
      out[r] += wedge_sign(1u << j, rest) * jac[alternator_index(rest, n) * n + j];
    }
  }
  return out;
}

std::vector<double> mollify_d_eval(const MollifierConfig& cfg, const FormEvaluator& omega, const Point& x) {
  const int n = omega.dim(), k = omega.degree();
  const int N = binomial(n, k);
  if (k >= n) return {};
  Eigen::Vector3d g;
  Eigen::Matrix3d H;
  const double h = cfg.field->h_derivs(x, g, &H);
  const auto& alts = alternators(k, n);
  std::vector<std::vector<int>> idx;
  for (unsigned a : alts) idx.push_back(mask_indices(a));
  std::vector<double> jac_total(N * n, 0.0), vals(N), jac(N * n);
  double B[9], dB[9];
  for (std::size_t q = 0; q < cfg.nodes.size(); ++q) {
    const Point& y = cfg.nodes[q];
    Point z{0, 0, 0};
    for (int i = 0; i < n; ++i) z[i] = x[i] + cfg.epsilon * h * y[i];
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) B[a * n + b] = (a == b ? 1.0 : 0.0) + cfg.epsilon * y[a] * g[b];
    omega.eval(z, vals.data(), jac.data());
    for (int j = 0; j < n; ++j) {
      // d/dx_j of omega_tau(Phi(x)) is sum_i d_i omega_tau * B_ij; d/dx_j of B is eps y (H e_j)^T
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) dB[a * n + b] = cfg.epsilon * y[a] * H(b, j);
      for (int s = 0; s < N; ++s) {
        double acc = 0.0;
        for (int t = 0; t < N; ++t) {
          double dw = 0.0;
          for (int i = 0; i < n; ++i) dw += jac[t * n + i] * B[i * n + j];
          acc += dw * minor_det(B, n, idx[t], idx[s]) + vals[t] * minor_det_derivative(B, dB, n, idx[t], idx[s]);
        }
        jac_total[s * n + j] += cfg.weights[q] * acc;
      }
    }
  }
  return exterior_derivative_from_jacobian(n, k, jac_total);
}

double mollify_commutation_residual(const MollifierConfig& cfg, const ExtendedForm& omega,
                                    const std::vector<Point>& points) {
  if (omega.degree() >= omega.dim()) return 0.0;
  ExtendedForm dw = omega.d();
  double worst = 0.0;
  for (const auto& x : points) {
    auto a = mollify_d_eval(cfg, omega, x);
    auto b = mollify_eval(cfg, dw, x);
    for (std::size_t s = 0; s < a.size(); ++s) worst = std::max(worst, std::abs(a[s] - b[s]));
  }
  return worst;
}

}  // namespace feec
