#include "feec/spaces.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <cmath>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

namespace feec {

std::string SpaceSpec::name() const {
  std::ostringstream os;
  os << "P" << r << (family == Family::Minus ? "-" : "") << "L" << k;
  return os.str();
}

int space_dimension(const SpaceSpec& s, int n) {
  if (s.family == Family::Full) return binomial(s.r + n, s.r + s.k) * binomial(s.r + s.k, s.k);
  if (s.r < 1) return 0;
  return binomial(s.r + n, s.r + s.k) * binomial(s.r + s.k - 1, s.k);
}

//---------------------------------------------------------------------------
// Exact linear algebra

namespace {

// Reduce v against echelon rows (pivot columns piv); returns the pivot of the remainder or -1.
int reduce(std::vector<Rational>& v, const QMatrix& rows, const std::vector<int>& piv) {
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Rational& f = v[piv[r]];
    if (f == 0) continue;
    Rational c = f;
    for (std::size_t j = 0; j < v.size(); ++j)
      if (rows[r][j] != 0) v[j] -= c * rows[r][j];
  }
  for (std::size_t j = 0; j < v.size(); ++j)
    if (v[j] != 0) return int(j);
  return -1;
}

void add_row(std::vector<Rational> v, int p, QMatrix& rows, std::vector<int>& piv) {
  Rational s = v[p];
  for (auto& x : v) x /= s;
  // keep rows fully reduced so that reduce() works in any order
  for (auto& row : rows) {
    Rational c = row[p];
    if (c == 0) continue;
    for (std::size_t j = 0; j < v.size(); ++j)
      if (v[j] != 0) row[j] -= c * v[j];
  }
  rows.push_back(std::move(v));
  piv.push_back(p);
}

}  // namespace

int exact_rank(QMatrix rows) {
  QMatrix ech;
  std::vector<int> piv;
  for (auto& r : rows) {
    int p = reduce(r, ech, piv);
    if (p >= 0) add_row(r, p, ech, piv);
  }
  return int(ech.size());
}

QMatrix exact_inverse(const QMatrix& a) {
  const std::size_t N = a.size();
  QMatrix m(N, std::vector<Rational>(2 * N));
  for (std::size_t i = 0; i < N; ++i) {
    if (a[i].size() != N) throw UnisolvenceFailure("exact_inverse: matrix not square");
    for (std::size_t j = 0; j < N; ++j) m[i][j] = a[i][j];
    m[i][N + i] = 1;
  }
  for (std::size_t c = 0; c < N; ++c) {
    std::size_t p = c;
    while (p < N && m[p][c] == 0) ++p;
    if (p == N) throw UnisolvenceFailure("DOF matrix is singular");
    std::swap(m[p], m[c]);
    Rational s = m[c][c];
    for (auto& x : m[c]) x /= s;
    for (std::size_t r = 0; r < N; ++r) {
      if (r == c || m[r][c] == 0) continue;
      Rational f = m[r][c];
      for (std::size_t j = c; j < 2 * N; ++j)
        if (m[c][j] != 0) m[r][j] -= f * m[c][j];
    }
  }
  QMatrix inv(N, std::vector<Rational>(N));
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j) inv[i][j] = m[i][N + j];
  return inv;
}

QMatrix form_coordinates(const std::vector<QForm>& forms) {
  std::map<std::pair<unsigned, Exponent>, int> keys;
  for (const auto& f : forms)
    for (const auto& [s, p] : f.coeffs())
      for (const auto& [e, c] : p.terms()) keys.emplace(std::make_pair(s, e), 0);
  int idx = 0;
  for (auto& [k, v] : keys) v = idx++;
  QMatrix rows(forms.size(), std::vector<Rational>(keys.size()));
  for (std::size_t i = 0; i < forms.size(); ++i)
    for (const auto& [s, p] : forms[i].coeffs())
      for (const auto& [e, c] : p.terms()) rows[i][keys[{s, e}]] = c;
  return rows;
}

std::vector<int> independent_subset(const std::vector<QForm>& forms) {
  QMatrix rows = form_coordinates(forms), ech;
  std::vector<int> piv, out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    int p = reduce(rows[i], ech, piv);
    if (p >= 0) {
      add_row(rows[i], p, ech, piv);
      out.push_back(int(i));
    }
  }
  return out;
}

bool in_span(const std::vector<QForm>& space, const std::vector<QForm>& candidates) {
  std::vector<QForm> all = space;
  all.insert(all.end(), candidates.begin(), candidates.end());
  QMatrix rows = form_coordinates(all);
  QMatrix base(rows.begin(), rows.begin() + space.size());
  return exact_rank(rows) == exact_rank(base);
}

//---------------------------------------------------------------------------
// Local spaces

std::vector<QForm> local_space_spanning_set(const SpaceSpec& s, int n) {
  std::vector<QForm> out;
  if (s.k < 0 || s.k > n) return out;
  auto full = [&](int r, int k) {
    std::vector<QForm> f;
    if (r < 0 || k > n) return f;
    for (unsigned sigma : alternators(k, n))
      for (const auto& e : monomials(n, r)) f.push_back(QForm::basic(n, sigma, QPoly::monomial(n, e, 1)));
    return f;
  };
  if (s.family == Family::Full || s.k == 0) {
    int r = s.r;
    if (s.family == Family::Minus && s.r < 1) return out;
    return full(r, s.k);
  }
  if (s.r < 1) return out;
  out = full(s.r - 1, s.k);
  if (s.k + 1 <= n)
    for (const auto& f : full(s.r - 1, s.k + 1)) {
      QForm kf = f.koszul();
      if (!kf.is_zero()) out.push_back(kf);
    }
  return out;
}

std::vector<QForm> local_space_basis(const SpaceSpec& s, int n) {
  auto span = local_space_spanning_set(s, n);
  std::vector<QForm> out;
  for (int i : independent_subset(span)) out.push_back(span[i]);
  return out;
}

std::vector<QForm> dof_weight_basis(const SpaceSpec& s, int m) {
  std::vector<QForm> out;
  const int j = m - s.k;
  if (j < 0) return out;
  if (s.family == Family::Full) {
    const int deg = s.r + s.k - m;
    if (deg < 0) return out;
    if (j == 0) {
      // homogeneous barycentric monomials of degree deg span P_deg on the face
      auto lam = barycentric_reference(m);
      std::vector<int> alpha(m + 1, 0);
      std::function<void(int, int)> rec = [&](int pos, int left) {
        if (pos == m) {
          alpha[m] = left;
          QPoly p = QPoly::constant(m, 1);
          for (int i = 0; i <= m; ++i)
            for (int q = 0; q < alpha[i]; ++q) p = p * lam[i];
          out.push_back(QForm::basic(m, 0u, p));
          return;
        }
        for (int a = left; a >= 0; --a) {
          alpha[pos] = a;
          rec(pos + 1, left - a);
        }
      };
      rec(0, deg);
      return out;
    }
    if (deg < 1) return out;
    return local_space_basis({Family::Minus, deg, j}, m);
  }
  const int deg = s.r + s.k - m - 1;
  if (deg < 0) return out;
  auto lam = barycentric_reference(m);
  std::vector<int> alpha(m + 1, 0);
  std::vector<QPoly> polys;
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == m) {
      alpha[m] = left;
      QPoly p = QPoly::constant(m, 1);
      for (int i = 0; i <= m; ++i)
        for (int q = 0; q < alpha[i]; ++q) p = p * lam[i];
      polys.push_back(p);
      return;
    }
    for (int a = left; a >= 0; --a) {
      alpha[pos] = a;
      rec(pos + 1, left - a);
    }
  };
  rec(0, deg);
  for (unsigned sigma : alternators(j, m))
    for (const auto& p : polys) out.push_back(QForm::basic(m, sigma, p));
  return out;
}

void reference_face_embedding(const std::vector<int>& fv, int n, std::vector<Rational>& M, std::vector<Rational>& b) {
  const int m = int(fv.size()) - 1;
  auto vert = [&](int v, int i) { return Rational(v > 0 && v - 1 == i ? 1 : 0); };
  M.assign(n * m, 0);
  b.assign(n, 0);
  for (int i = 0; i < n; ++i) {
    b[i] = vert(fv[0], i);
    for (int j = 0; j < m; ++j) M[i * m + j] = vert(fv[j + 1], i) - vert(fv[0], i);
  }
}

Rational reference_dof(const LocalDof& dof, const QForm& omega, int n) {
  std::vector<Rational> M, b;
  reference_face_embedding(dof.face_vertices, n, M, b);
  const int m = dof.face_dim;
  if (omega.degree() > m) return 0;
  QForm tr = omega.pullback(M, b, m);
  return integrate_top_form(tr.wedge(dof.weight));
}

namespace {

ReferenceElement build_reference(const SpaceSpec& spec, int n) {
  if (spec.k < 0 || spec.k > n) throw UnisolvenceFailure("form degree out of range for " + spec.name());
  ReferenceElement el;
  el.spec = spec;
  el.n = n;
  std::vector<int> verts(n + 1);
  for (int i = 0; i <= n; ++i) verts[i] = i;
  for (int m = spec.k; m <= n; ++m) {
    auto weights = dof_weight_basis(spec, m);
    if (weights.empty()) continue;
    // faces in lexicographic order of their vertex tuples
    std::vector<std::vector<int>> faces;
    for (unsigned mask = 0; mask < (1u << (n + 1)); ++mask)
      if (popcount(mask) == m + 1) faces.push_back(mask_indices(mask));
    std::sort(faces.begin(), faces.end());
    for (const auto& f : faces)
      for (std::size_t w = 0; w < weights.size(); ++w) el.dofs.push_back({m, f, int(w), weights[w]});
  }
  auto cand = local_space_basis(spec, n);
  if (int(cand.size()) != space_dimension(spec, n) || cand.size() != el.dofs.size())
    throw UnisolvenceFailure("dimension mismatch for " + spec.name() + " in dimension " + std::to_string(n));
  const std::size_t N = cand.size();
  QMatrix A(N, std::vector<Rational>(N));
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j) A[i][j] = reference_dof(el.dofs[i], cand[j], n);
  QMatrix Ainv = exact_inverse(A);
  for (std::size_t j = 0; j < N; ++j) {
    QForm phi(n, spec.k);
    for (std::size_t l = 0; l < N; ++l)
      if (Ainv[l][j] != 0) phi += cand[l].scaled(Ainv[l][j]);
    el.basis.push_back(phi);
    el.basis_d.push_back(phi.convert<double>());
    el.dbasis_d.push_back(spec.k < n ? phi.exterior_derivative().convert<double>() : DForm(n, n));
    el.degree = std::max(el.degree, phi.poly_degree());
  }
  return el;
}

}  // namespace

const ReferenceElement& reference_element(const SpaceSpec& spec, int n) {
  static std::mutex mu;
  static std::map<std::tuple<int, int, int, int>, std::unique_ptr<ReferenceElement>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_tuple(int(spec.family), spec.r, spec.k, n);
  auto it = cache.find(key);
  if (it != cache.end()) return *it->second;
  auto el = std::make_unique<ReferenceElement>(build_reference(spec, n));
  return *cache.emplace(key, std::move(el)).first->second;
}

std::vector<double> compound_matrix(const Eigen::MatrixXd& A, int k) {
  const int n = int(A.rows());
  const auto& sig = alternators(k, n);
  const int N = int(sig.size());
  std::vector<double> out(N * N);
  std::vector<double> a(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a[i * n + j] = A(i, j);
  for (int r = 0; r < N; ++r)
    for (int c = 0; c < N; ++c) out[r * N + c] = minor_det(a.data(), n, mask_indices(sig[r]), mask_indices(sig[c]));
  return out;
}

//---------------------------------------------------------------------------
// Global space

FESpace::FESpace(const Triangulation& mesh, const SpaceSpec& spec)
    : mesh_(&mesh), spec_(spec), ref_(&reference_element(spec, mesh.dim())) {
  const int n = mesh.dim();
  // dofs per face dimension
  std::vector<int> per_face(n + 1, 0);
  {
    std::map<std::vector<int>, int> count;
    for (const auto& d : ref_->dofs) count[d.face_vertices]++;
    for (const auto& [f, c] : count) per_face[int(f.size()) - 1] = c;
  }
  std::vector<std::vector<int>> offset(n + 1);
  for (int m = 0; m <= n; ++m) {
    offset[m].resize(mesh.num_simplices(m));
    for (int f = 0; f < mesh.num_simplices(m); ++f) {
      offset[m][f] = int(dofs_.size());
      for (int w = 0; w < per_face[m]; ++w) dofs_.push_back({m, f, w});
    }
  }
  local_of_dof_.assign(dofs_.size(), -1);
  cell_dofs_.resize(mesh.num_cells());
  geom_.resize(mesh.num_cells());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& cv = mesh.simplex(n, c).vertex_ids;
    for (int i = 0; i < ref_->size(); ++i) {
      const auto& d = ref_->dofs[i];
      std::vector<int> gv;
      for (int lv : d.face_vertices) gv.push_back(cv[lv]);
      int g = offset[d.face_dim][mesh.find(gv)] + d.weight_index;
      cell_dofs_[c].push_back(g);
      if (local_of_dof_[g] < 0) local_of_dof_[g] = i;
    }
    auto ch = mesh.chart(c);
    CellGeometry& G = geom_[c];
    G.M = ch.M;
    G.M_inv = ch.M_inv;
    G.b = ch.b;
    G.abs_det = std::abs(ch.det_M);
    G.pull = compound_matrix(ch.M_inv, spec.k);
  }
}

void FESpace::eval_local(int c, int i, const double* t, double* out) const {
  const int nc = ncomp();
  auto ref = ref_->basis_d[i].evaluate_double(t);
  const auto& P = geom_[c].pull;
  for (int s = 0; s < nc; ++s) {
    double v = 0.0;
    for (int r = 0; r < nc; ++r) v += ref[r] * P[r * nc + s];
    out[s] = v;
  }
}

void FESpace::eval_ref(const Eigen::VectorXd& coeffs, int c, const double* t, double* out) const {
  const int nc = ncomp();
  std::vector<double> tmp(nc);
  for (int s = 0; s < nc; ++s) out[s] = 0.0;
  for (int i = 0; i < ref_->size(); ++i) {
    double a = coeffs[cell_dofs_[c][i]];
    if (a == 0.0) continue;
    eval_local(c, i, t, tmp.data());
    for (int s = 0; s < nc; ++s) out[s] += a * tmp[s];
  }
}

bool FESpace::eval(const Eigen::VectorXd& coeffs, const double* x, double* out, double tol) const {
  auto loc = mesh_->locate(x, tol);
  if (!loc) return false;
  const int n = this->n();
  double t[3];
  for (int i = 0; i < n; ++i) t[i] = loc->bary[i + 1];
  eval_ref(coeffs, loc->cell_id, t, out);
  return true;
}

DForm FESpace::cell_form(int c, int i) const {
  const int n = this->n();
  const auto& G = geom_[c];
  std::vector<double> M(n * n), b(n);
  Eigen::VectorXd shift = -G.M_inv * G.b;
  for (int r = 0; r < n; ++r) {
    b[r] = shift(r);
    for (int s = 0; s < n; ++s) M[r * n + s] = G.M_inv(r, s);
  }
  return ref_->basis_d[i].pullback(M, b, n);
}

DForm FESpace::cell_form(const Eigen::VectorXd& coeffs, int c) const {
  DForm out(n(), spec_.k);
  for (int i = 0; i < ref_->size(); ++i) {
    double a = coeffs[cell_dofs_[c][i]];
    if (a != 0.0) out += cell_form(c, i).scaled(a);
  }
  return out;
}

void FESpace::face_chart(int m, int face, std::vector<double>& M, std::vector<double>& b) const {
  const int n = this->n();
  const auto& v = mesh_->simplex(m, face).vertex_ids;
  M.assign(n * m, 0.0);
  b.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    b[i] = mesh_->vertex(v[0])[i];
    for (int j = 0; j < m; ++j) M[i * m + j] = mesh_->vertex(v[j + 1])[i] - mesh_->vertex(v[0])[i];
  }
}

const QForm& FESpace::dof_weight(int g) const { return ref_->dofs[local_of_dof_[g]].weight; }

double FESpace::dof_apply(int g, const DForm& omega) const {
  const auto& d = dofs_[g];
  std::vector<double> M, b;
  face_chart(d.face_dim, d.face_id, M, b);
  DForm tr = omega.pullback(M, b, d.face_dim);
  DForm top = tr.wedge(dof_weight(g).convert<double>());
  return integrate_reference(top.coeff((1u << d.face_dim) - 1u));
}

double FESpace::dof_apply(int g, const std::function<void(const double*, double*)>& omega, int quad_degree) const {
  const auto& d = dofs_[g];
  const int n = this->n(), m = d.face_dim, k = spec_.k;
  std::vector<double> M, b;
  face_chart(m, d.face_id, M, b);
  const auto& rule = cached_simplex_rule(m, quad_degree);
  const DForm w = dof_weight(g).convert<double>();
  const auto& sig_n = alternators(k, n);
  const auto& sig_m = alternators(k, m);
  const auto& sig_w = alternators(m - k, m);
  const unsigned full = (1u << m) - 1u;
  // minors of the face chart
  std::vector<double> minors(sig_n.size() * sig_m.size());
  for (std::size_t a = 0; a < sig_n.size(); ++a)
    for (std::size_t c = 0; c < sig_m.size(); ++c)
      minors[a * sig_m.size() + c] = minor_det(M.data(), m, mask_indices(sig_n[a]), mask_indices(sig_m[c]));
  std::vector<double> val(sig_n.size());
  double total = 0.0;
  for (int q = 0; q < rule.size(); ++q) {
    const double* t = rule.points[q].data();
    double x[3] = {0, 0, 0};
    for (int i = 0; i < n; ++i) {
      x[i] = b[i];
      for (int j = 0; j < m; ++j) x[i] += M[i * m + j] * t[j];
    }
    omega(x, val.data());
    for (double v : val)
      if (!std::isfinite(v)) throw NonIntegrableTrace("non-finite form value on DOF face");
    auto wv = w.evaluate_double(t);
    double acc = 0.0;
    for (std::size_t c = 0; c < sig_m.size(); ++c) {
      double tr = 0.0;
      for (std::size_t a = 0; a < sig_n.size(); ++a) tr += val[a] * minors[a * sig_m.size() + c];
      for (std::size_t e = 0; e < sig_w.size(); ++e) {
        if ((sig_m[c] | sig_w[e]) != full) continue;
        int s = wedge_sign(sig_m[c], sig_w[e]);
        if (s) acc += s * tr * wv[e];
      }
    }
    total += rule.weights[q] * acc;
  }
  return total;
}

Eigen::VectorXd FESpace::interpolate(const DForm& omega) const {
  Eigen::VectorXd out(dim());
  for (int g = 0; g < dim(); ++g) out[g] = dof_apply(g, omega);
  return out;
}

Eigen::VectorXd FESpace::interpolate(const std::function<void(const double*, double*)>& omega, int quad_degree) const {
  Eigen::VectorXd out(dim());
  for (int g = 0; g < dim(); ++g) out[g] = dof_apply(g, omega, quad_degree);
  return out;
}

Eigen::MatrixXd FESpace::gram(int quad_degree) const {
  if (quad_degree < 0) quad_degree = 2 * ref_->degree;
  const int N = dim(), nc = ncomp(), L = ref_->size();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(N, N);
  const auto& rule = cached_simplex_rule(n(), quad_degree);
  std::vector<double> vals(L * nc);
  for (int c = 0; c < mesh_->num_cells(); ++c) {
    Eigen::MatrixXd loc = Eigen::MatrixXd::Zero(L, L);
    for (int q = 0; q < rule.size(); ++q) {
      for (int i = 0; i < L; ++i) eval_local(c, i, rule.points[q].data(), &vals[i * nc]);
      double w = rule.weights[q] * geom_[c].abs_det;
      for (int i = 0; i < L; ++i)
        for (int j = 0; j < L; ++j) {
          double s = 0.0;
          for (int a = 0; a < nc; ++a) s += vals[i * nc + a] * vals[j * nc + a];
          loc(i, j) += w * s;
        }
    }
    for (int i = 0; i < L; ++i)
      for (int j = 0; j < L; ++j) G(cell_dofs_[c][i], cell_dofs_[c][j]) += loc(i, j);
  }
  return G;
}

bool FESpace::check_tangential_continuity() const {
  const int n = this->n();
  if (spec_.k > n - 1) return true;
  for (int f : std::vector<int>([&] {
         std::vector<int> ids;
         for (int i = 0; i < mesh_->num_simplices(n - 1); ++i)
           if (mesh_->cells_of(n - 1, i).size() == 2) ids.push_back(i);
         return ids;
       }())) {
    const auto& fv = mesh_->simplex(n - 1, f).vertex_ids;
    std::map<int, QForm> traces[2];
    const auto& cells = mesh_->cells_of(n - 1, f);
    for (int side = 0; side < 2; ++side) {
      int c = cells[side];
      const auto& cv = mesh_->simplex(n, c).vertex_ids;
      std::vector<int> local;
      for (int v : fv) local.push_back(int(std::find(cv.begin(), cv.end(), v) - cv.begin()));
      std::vector<Rational> M, b;
      reference_face_embedding(local, n, M, b);
      for (int i = 0; i < ref_->size(); ++i) {
        QForm tr = ref_->basis[i].pullback(M, b, n - 1);
        if (!tr.is_zero()) traces[side][cell_dofs_[c][i]] = tr;
      }
    }
    if (traces[0].size() != traces[1].size()) return false;
    for (const auto& [g, tr] : traces[0]) {
      auto it = traces[1].find(g);
      if (it == traces[1].end() || !(it->second == tr)) return false;
    }
  }
  return true;
}

QMatrix reference_derivative_matrix(const ReferenceElement& from, const ReferenceElement& to) {
  QMatrix D(to.size(), std::vector<Rational>(from.size()));
  for (int j = 0; j < from.size(); ++j) {
    QForm d = from.basis[j].exterior_derivative();
    for (int i = 0; i < to.size(); ++i) D[i][j] = reference_dof(to.dofs[i], d, from.n);
  }
  return D;
}

Eigen::MatrixXd derivative_matrix(const FESpace& from, const FESpace& to) {
  QMatrix Dr = reference_derivative_matrix(from.reference(), to.reference());
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(to.dim(), from.dim());
  for (int c = 0; c < from.mesh().num_cells(); ++c)
    for (std::size_t i = 0; i < Dr.size(); ++i)
      for (std::size_t j = 0; j < Dr[i].size(); ++j)
        if (Dr[i][j] != 0) D(to.cell_dofs(c)[i], from.cell_dofs(c)[j]) = Dr[i][j].get_d();
  return D;
}

//---------------------------------------------------------------------------
// Complexes

ComplexSpec parse_complex(const std::string& text, int n) {
  ComplexSpec c;
  c.name = text;
  int r = 0;
  char fam[16] = {0};
  if (std::sscanf(text.c_str(), "P%d-%15s", &r, fam) == 2) {
    std::string f = fam;
    if (f == "minus") {
      for (int k = 0; k <= n; ++k) c.spaces.push_back({Family::Minus, r, k});
    } else if (f == "full") {
      for (int k = 0; k <= n; ++k) c.spaces.push_back({Family::Full, r - k, k});
    } else {
      throw IncompatibleComplex("unknown complex family '" + f + "'");
    }
  } else {
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      SpaceSpec s;
      if (item.rfind("full", 0) == 0) {
        s.family = Family::Full;
        s.r = std::stoi(item.substr(4));
      } else if (item.rfind("minus", 0) == 0) {
        s.family = Family::Minus;
        s.r = std::stoi(item.substr(5));
      } else {
        throw IncompatibleComplex("cannot parse complex entry '" + item + "'");
      }
      s.k = int(c.spaces.size());
      c.spaces.push_back(s);
    }
  }
  check_complex(c, n);
  return c;
}

void check_complex(const ComplexSpec& c, int n) {
  if (int(c.spaces.size()) != n + 1) throw IncompatibleComplex("complex needs n+1 spaces");
  for (int k = 0; k <= n; ++k) {
    const auto& s = c.spaces[k];
    if (s.k != k) throw IncompatibleComplex("form degrees out of order");
    if (s.family == Family::Minus && s.r < 1) throw IncompatibleComplex("minus family needs r >= 1");
    if (s.family == Family::Full && s.r < (k < n ? 1 : 0)) throw IncompatibleComplex("full family degree too low");
    if (k == n) break;
    const auto& t = c.spaces[k + 1];
    bool ok = (t.family == Family::Full && t.r == s.r - 1) || (t.family == Family::Minus && t.r == s.r);
    if (!ok) throw IncompatibleComplex("spaces " + s.name() + " -> " + t.name() + " do not form a FEEC complex");
  }
}

std::vector<std::array<double, 3>> sup_nodes(int n, int degree) {
  const auto& rule = cached_simplex_rule(n, std::min(degree, 20));
  std::vector<std::array<double, 3>> out = rule.points;
  // vertices and edge midpoints of the reference simplex
  std::vector<std::array<double, 3>> verts(n + 1, {0.0, 0.0, 0.0});
  for (int i = 0; i < n; ++i) verts[i + 1][i] = 1.0;
  for (int a = 0; a <= n; ++a) {
    out.push_back(verts[a]);
    for (int b = a + 1; b <= n; ++b) {
      std::array<double, 3> m{};
      for (int i = 0; i < 3; ++i) m[i] = 0.5 * (verts[a][i] + verts[b][i]);
      out.push_back(m);
    }
  }
  return out;
}

}  // namespace feec
