#include "feec/piecewise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "feec/clip.hpp"
#include "feec/quadrature.hpp"

namespace feec {

namespace {

void simplex_chart(const std::vector<Point>& v, int n, std::vector<double>& M, std::vector<double>& b) {
  const int m = int(v.size()) - 1;
  M.assign(n * m, 0.0);
  b.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    b[i] = v[0][i];
    for (int j = 0; j < m; ++j) M[i * m + j] = v[j + 1][i] - v[0][i];
  }
}

double abs_det(const std::vector<double>& M, int n) {
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = M[i * n + j];
  return std::abs(A.determinant());
}

}  // namespace

PiecewiseForm piecewise_on_mesh(const Triangulation& mesh, const DForm& omega) {
  PiecewiseForm f;
  f.n = mesh.dim();
  f.k = omega.degree();
  f.tangential = true;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    std::vector<Point> v;
    for (int id : mesh.simplex(f.n, c).vertex_ids) v.push_back(mesh.vertex(id));
    f.add(v, omega);
  }
  return f;
}

PiecewiseForm piecewise_from_fe(const FESpace& space, const Eigen::VectorXd& coeffs) {
  PiecewiseForm f;
  f.n = space.n();
  f.k = space.spec().k;
  f.tangential = true;
  for (int c = 0; c < space.mesh().num_cells(); ++c) {
    std::vector<Point> v;
    for (int id : space.mesh().simplex(f.n, c).vertex_ids) v.push_back(space.mesh().vertex(id));
    f.add(v, space.cell_form(coeffs, c));
  }
  return f;
}

PiecewiseForm piecewise_d(const PiecewiseForm& f) {
  PiecewiseForm g;
  g.n = f.n;
  g.k = f.k + 1;
  g.pieces = f.pieces;
  for (const auto& w : f.forms) g.forms.push_back(w.exterior_derivative());
  return g;
}

double lp_norm(const PiecewiseForm& f, double p, int quad_degree) {
  int deg = 0;
  for (const auto& w : f.forms) deg = std::max(deg, w.poly_degree());
  const bool sup = std::isinf(p);
  if (quad_degree < 0) quad_degree = sup ? 2 * deg + 6 : 2 * deg + 4;
  quad_degree = std::min(quad_degree, 20);
  const auto& rule = cached_simplex_rule(f.n, quad_degree);
  double total = 0.0;
  for (std::size_t i = 0; i < f.pieces.size(); ++i) {
    std::vector<double> M, b;
    simplex_chart(f.pieces[i], f.n, M, b);
    const double det = abs_det(M, f.n);
    std::vector<Point> nodes;
    for (const auto& t : rule.points) {
      Point x{0, 0, 0};
      for (int r = 0; r < f.n; ++r) {
        x[r] = b[r];
        for (int c = 0; c < f.n; ++c) x[r] += M[r * f.n + c] * t[c];
      }
      nodes.push_back(x);
    }
    if (sup) nodes.insert(nodes.end(), f.pieces[i].begin(), f.pieces[i].end());
    for (std::size_t q = 0; q < nodes.size(); ++q) {
      auto v = f.forms[i].evaluate_double(nodes[q].data());
      double s = 0.0;
      for (double a : v) s += a * a;
      s = std::sqrt(s);
      if (sup) total = std::max(total, s);
      else total += rule.weights[q] * det * std::pow(s, p);
    }
  }
  return sup ? total : std::pow(total, 1.0 / p);
}

bool tangentially_continuous(const Triangulation& mesh, const PiecewiseForm& f, double tol) {
  const int n = mesh.dim();
  if (f.k > n - 1) return true;
  for (int face = 0; face < mesh.num_simplices(n - 1); ++face) {
    const auto& cells = mesh.cells_of(n - 1, face);
    if (cells.size() != 2) continue;
    std::vector<Point> v;
    for (int id : mesh.simplex(n - 1, face).vertex_ids) v.push_back(mesh.vertex(id));
    std::vector<double> M, b;
    simplex_chart(v, n, M, b);
    DForm diff = f.forms[cells[0]].pullback(M, b, n - 1) - f.forms[cells[1]].pullback(M, b, n - 1);
    for (const auto& [s, p] : diff.coeffs())
      for (const auto& [e, c] : p.terms())
        if (std::abs(c) > tol) return false;
  }
  return true;
}

DPoly box_bump(int n, const double* lo, const double* hi) {
  DPoly p = DPoly::constant(n, 1.0);
  for (int i = 0; i < n; ++i) {
    double L = hi[i] - lo[i];
    double s = 4.0 / (L * L);  // peak of (x-a)(b-x) is L^2/4
    DPoly a = DPoly::variable(n, i) - DPoly::constant(n, lo[i]);
    DPoly c = DPoly::constant(n, hi[i]) - DPoly::variable(n, i);
    DPoly q = (a * c).scaled(s);
    p = p * q * q;
  }
  return p;
}

double integrate_against(const PiecewiseForm& f, const DForm& eta, const double* lo, const double* hi) {
  const int n = f.n;
  auto box = box_halfspaces(lo, hi, n);
  const unsigned full = (1u << n) - 1u;
  double total = 0.0;
  for (std::size_t i = 0; i < f.pieces.size(); ++i) {
    bool overlap = true;
    for (int r = 0; r < n && overlap; ++r) {
      double mn = std::numeric_limits<double>::infinity(), mx = -mn;
      for (const auto& p : f.pieces[i]) {
        mn = std::min(mn, p[r]);
        mx = std::max(mx, p[r]);
      }
      overlap = mx > lo[r] && mn < hi[r];
    }
    if (!overlap) continue;
    const DForm& fi = f.forms[i];
    if (fi.is_zero()) continue;
    // top coefficient of fi ^ eta, evaluated pointwise: symbolic pullback of the high degree product is slow
    std::vector<std::pair<unsigned, unsigned>> pairs;
    std::vector<int> signs;
    for (const auto& [a, pa] : fi.coeffs())
      for (const auto& [b, pb] : eta.coeffs())
        if ((a & b) == 0 && (a | b) == full) {
          pairs.push_back({a, b});
          signs.push_back(wedge_sign(a, b));
        }
    if (pairs.empty()) continue;
    const auto& rule = cached_simplex_rule(n, fi.poly_degree() + eta.poly_degree());
    AffineSimplex s = affine_simplex_from_vertices(f.pieces[i], n);
    for (const auto& tv : clip_simplex(s, box)) {
      AffineSimplex sub = sub_simplex(s, tv);
      Eigen::MatrixXd A(n, n);
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) A(r, c) = sub.M[r * n + c];
      const double jac = std::abs(A.determinant());
      double acc = 0.0;
      for (int q = 0; q < rule.size(); ++q) {
        double x[3];
        for (int r = 0; r < n; ++r) {
          x[r] = sub.b[r];
          for (int c = 0; c < n; ++c) x[r] += sub.M[r * n + c] * rule.points[q][c];
        }
        double v = 0.0;
        for (std::size_t t = 0; t < pairs.size(); ++t)
          v += signs[t] * fi.coeffs().at(pairs[t].first).evaluate_double(x) *
               eta.coeffs().at(pairs[t].second).evaluate_double(x);
        acc += rule.weights[q] * v;
      }
      total += jac * acc;
    }
  }
  return total;
}

double weak_derivative_residual(const PiecewiseForm& omega, const PiecewiseForm& xi, int trials, std::uint64_t seed,
                                const std::function<bool(const double*, const double*)>& box_ok) {
  const int n = omega.n, k = omega.k;
  if (k >= n) throw DimensionMismatch("weak derivative of a top form");
  double lo_all[3], hi_all[3];
  for (int r = 0; r < n; ++r) {
    lo_all[r] = std::numeric_limits<double>::infinity();
    hi_all[r] = -lo_all[r];
    for (const auto& piece : omega.pieces)
      for (const auto& p : piece) {
        lo_all[r] = std::min(lo_all[r], p[r]);
        hi_all[r] = std::max(hi_all[r], p[r]);
      }
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int j = n - k - 1;
  double worst = 0.0;
  int done = 0;
  for (int attempt = 0; done < trials && attempt < 200 * trials; ++attempt) {
    double lo[3], hi[3];
    for (int r = 0; r < n; ++r) {
      double L = hi_all[r] - lo_all[r];
      double w = L * (0.2 + 0.4 * uni(rng));
      lo[r] = lo_all[r] + (L - w) * uni(rng);
      hi[r] = lo[r] + w;
    }
    if (!box_ok(lo, hi)) continue;
    ++done;
    DPoly bump = box_bump(n, lo, hi);
    DForm poly(n, j);
    double centre[3];
    for (int r = 0; r < n; ++r) centre[r] = 0.5 * (lo[r] + hi[r]);
    for (unsigned sigma : alternators(j, n)) {
      DPoly c = DPoly::constant(n, normal(rng));
      for (int r = 0; r < n; ++r)
        c += (DPoly::variable(n, r) - DPoly::constant(n, centre[r])).scaled(normal(rng));
      poly.add(sigma, c);
    }
    DForm eta = poly.times(bump);
    double lhs = integrate_against(xi, eta, lo, hi);
    double rhs = integrate_against(omega, eta.exterior_derivative(), lo, hi);
    double sign = ((k + 1) % 2 == 0) ? 1.0 : -1.0;
    worst = std::max(worst, std::abs(lhs - sign * rhs));
  }
  return worst;
}

}  // namespace feec
