#include "feec/quadrature.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace feec {

double QuadratureRule::weight_sum() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

// Golub-Welsch on the monic Jacobi recurrence, mapped from [-1,1] to [0,1].
std::pair<std::vector<double>, std::vector<double>> gauss_jacobi01(int q, double alpha, double beta) {
  if (q < 1) throw UnsupportedDegree("gauss_jacobi01: need at least one point");
  const double ab = alpha + beta;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(q, q);
  for (int k = 0; k < q; ++k) {
    double denom = (2.0 * k + ab) * (2.0 * k + ab + 2.0);
    J(k, k) = (k == 0) ? (beta - alpha) / (ab + 2.0) : (beta * beta - alpha * alpha) / denom;
    if (k > 0) {
      double kk = k;
      double c = 2.0 * kk + ab;
      double b = 4.0 * kk * (kk + alpha) * (kk + beta) * (kk + ab) / (c * c * (c + 1.0) * (c - 1.0));
      if (k == 1 && std::abs(ab + 1.0) < 1e-14) b = 4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab) * (2.0 + ab) * (3.0 + ab));
      J(k, k - 1) = J(k - 1, k) = std::sqrt(b);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  const double mu0 = std::pow(2.0, ab + 1.0) * std::tgamma(alpha + 1.0) * std::tgamma(beta + 1.0) /
                     std::tgamma(ab + 2.0);
  const double scale = std::pow(2.0, -(ab + 1.0));
  std::vector<double> x(q), w(q);
  for (int i = 0; i < q; ++i) {
    x[i] = 0.5 * (es.eigenvalues()(i) + 1.0);
    double v = es.eigenvectors()(0, i);
    w[i] = mu0 * v * v * scale;
  }
  return {x, w};
}

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int q, double a, double b) {
  auto [x, w] = gauss_jacobi01(q, 0.0, 0.0);
  for (int i = 0; i < q; ++i) {
    x[i] = a + (b - a) * x[i];
    w[i] *= (b - a);
  }
  return {x, w};
}

double simplex_volume(int m) {
  double f = 1.0;
  for (int i = 2; i <= m; ++i) f *= i;
  return 1.0 / f;
}

double ball_volume(int n) { return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0); }

double sphere_area(int n) { return n * ball_volume(n); }

QuadratureRule simplex_rule(int m, int degree) {
  if (m < 0 || m > 3) throw UnsupportedDegree("simplex_rule: dimension must be in [0,3]");
  if (degree < 0 || degree > 20) throw UnsupportedDegree("simplex_rule: degree must be in [0,20]");
  QuadratureRule rule;
  rule.kind = DomainKind::Simplex;
  rule.dim = m;
  rule.exact_degree = degree;
  if (m == 0) {
    rule.points.push_back({0.0, 0.0, 0.0});
    rule.weights.push_back(1.0);
    return rule;
  }
  const int q = degree / 2 + 1;
  // collapsed coordinates: x1 = u1, x2 = (1-u1) u2, x3 = (1-u1)(1-u2) u3
  std::vector<std::pair<std::vector<double>, std::vector<double>>> g;
  for (int d = 0; d < m; ++d) g.push_back(gauss_jacobi01(q, double(m - 1 - d), 0.0));
  if (m == 1) {
    for (int i = 0; i < q; ++i) {
      rule.points.push_back({g[0].first[i], 0.0, 0.0});
      rule.weights.push_back(g[0].second[i]);
    }
  } else if (m == 2) {
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < q; ++j) {
        double u = g[0].first[i], v = g[1].first[j];
        rule.points.push_back({u, (1.0 - u) * v, 0.0});
        rule.weights.push_back(g[0].second[i] * g[1].second[j]);
      }
  } else {
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < q; ++j)
        for (int l = 0; l < q; ++l) {
          double u = g[0].first[i], v = g[1].first[j], s = g[2].first[l];
          rule.points.push_back({u, (1.0 - u) * v, (1.0 - u) * (1.0 - v) * s});
          rule.weights.push_back(g[0].second[i] * g[1].second[j] * g[2].second[l]);
        }
  }
  return rule;
}

const QuadratureRule& cached_simplex_rule(int m, int degree) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, QuadratureRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find({m, degree});
  if (it == cache.end()) it = cache.emplace(std::make_pair(m, degree), simplex_rule(m, degree)).first;
  return it->second;
}

namespace {

// Unit-sphere directions and weights exact for polynomials up to `degree`,
// symmetric under y -> -y.
void sphere_rule(int n, int degree, std::vector<std::array<double, 3>>& dirs, std::vector<double>& w) {
  dirs.clear();
  w.clear();
  if (n == 1) {
    dirs.push_back({1.0, 0.0, 0.0});
    dirs.push_back({-1.0, 0.0, 0.0});
    w = {1.0, 1.0};
    return;
  }
  int M = degree + 1;
  if (M % 2) ++M;
  if (M < 4) M = 4;
  const double pi = std::numbers::pi;
  if (n == 2) {
    for (int i = 0; i < M; ++i) {
      double a = (i + 0.5) * 2.0 * pi / M;
      dirs.push_back({std::cos(a), std::sin(a), 0.0});
      w.push_back(2.0 * pi / M);
    }
    return;
  }
  auto [z, wz] = gauss_legendre(degree / 2 + 1, -1.0, 1.0);
  for (std::size_t a = 0; a < z.size(); ++a) {
    double s = std::sqrt(std::max(0.0, 1.0 - z[a] * z[a]));
    for (int i = 0; i < M; ++i) {
      double phi = (i + 0.5) * 2.0 * pi / M;
      dirs.push_back({s * std::cos(phi), s * std::sin(phi), z[a]});
      w.push_back(wz[a] * 2.0 * pi / M);
    }
  }
}

}  // namespace

QuadratureRule ball_rule(int n, int degree) {
  if (n < 1 || n > 3) throw UnsupportedDegree("ball_rule: dimension must be in [1,3]");
  if (degree < 0 || degree > 40) throw UnsupportedDegree("ball_rule: degree must be in [0,40]");
  QuadratureRule rule;
  rule.kind = DomainKind::Ball;
  rule.dim = n;
  rule.exact_degree = degree;
  auto [r, wr] = gauss_jacobi01(degree / 2 + 1, 0.0, double(n - 1));
  std::vector<std::array<double, 3>> dirs;
  std::vector<double> ws;
  sphere_rule(n, degree, dirs, ws);
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = 0; j < dirs.size(); ++j) {
      rule.points.push_back({r[i] * dirs[j][0], r[i] * dirs[j][1], r[i] * dirs[j][2]});
      rule.weights.push_back(wr[i] * ws[j]);
    }
  return rule;
}

QuadratureRule graded_ball_rule(int n, int degree, int levels, double factor) {
  if (n < 1 || n > 3) throw UnsupportedDegree("graded_ball_rule: dimension must be in [1,3]");
  if (degree < 0 || degree > 40) throw UnsupportedDegree("graded_ball_rule: degree must be in [0,40]");
  QuadratureRule rule;
  rule.kind = DomainKind::Ball;
  rule.dim = n;
  rule.exact_degree = degree;
  std::vector<double> breaks{0.0};
  double gap = 1.0;
  for (int l = 0; l < levels; ++l) {
    gap *= factor;
    breaks.push_back(1.0 - gap);
  }
  breaks.push_back(1.0);
  std::vector<std::array<double, 3>> dirs;
  std::vector<double> ws;
  sphere_rule(n, degree, dirs, ws);
  const int q = (degree + n) / 2 + 1;
  for (std::size_t b = 0; b + 1 < breaks.size(); ++b) {
    auto [r, wr] = gauss_legendre(q, breaks[b], breaks[b + 1]);
    for (std::size_t i = 0; i < r.size(); ++i) {
      double radial = wr[i] * std::pow(r[i], n - 1);
      for (std::size_t j = 0; j < dirs.size(); ++j) {
        rule.points.push_back({r[i] * dirs[j][0], r[i] * dirs[j][1], r[i] * dirs[j][2]});
        rule.weights.push_back(radial * ws[j]);
      }
    }
  }
  return rule;
}

//---------------------------------------------------------------------------
// Mollifier

double integrate_mollifier(int n, int rule_degree) {
  const int levels = 8;
  const double factor = 0.5;
  double total = 0.0, lo = 0.0, gap = 1.0;
  const int q = rule_degree / 2 + 1;
  for (int l = 0; l <= levels; ++l) {
    double hi;
    if (l < levels) {
      gap *= factor;
      hi = 1.0 - gap;
    } else {
      hi = 1.0;
    }
    auto [r, w] = gauss_legendre(q, lo, hi);
    for (int i = 0; i < q; ++i) {
      double s = 1.0 - r[i] * r[i];
      if (s <= 0.0) continue;
      total += w[i] * std::exp(-1.0 / s) * std::pow(r[i], n - 1);
    }
    lo = hi;
  }
  return sphere_area(n) * total;
}

double mollifier_constant(int n) {
  static std::once_flag flag;
  static double c[4];
  std::call_once(flag, [] {
    for (int d = 1; d <= 3; ++d) c[d] = 1.0 / integrate_mollifier(d, 40);
  });
  if (n < 1 || n > 3) throw UnsupportedDegree("mollifier_constant: dimension must be in [1,3]");
  return c[n];
}

double mollifier(int n, const double* y) {
  double r2 = 0.0;
  for (int i = 0; i < n; ++i) r2 += y[i] * y[i];
  if (r2 >= 1.0) return 0.0;
  return mollifier_constant(n) * std::exp(-1.0 / (1.0 - r2));
}

void mollifier_gradient(int n, const double* y, double* grad) {
  double r2 = 0.0;
  for (int i = 0; i < n; ++i) r2 += y[i] * y[i];
  if (r2 >= 1.0) {
    for (int i = 0; i < n; ++i) grad[i] = 0.0;
    return;
  }
  double s = 1.0 - r2;
  double mu = mollifier_constant(n) * std::exp(-1.0 / s);
  for (int i = 0; i < n; ++i) grad[i] = -2.0 * mu * y[i] / (s * s);
}

void mollifier_hessian(int n, const double* y, double* hess) {
  double r2 = 0.0;
  for (int i = 0; i < n; ++i) r2 += y[i] * y[i];
  if (r2 >= 1.0) {
    for (int i = 0; i < n * n; ++i) hess[i] = 0.0;
    return;
  }
  double s = 1.0 - r2;
  double mu = mollifier_constant(n) * std::exp(-1.0 / s);
  double s2 = s * s, s3 = s2 * s, s4 = s2 * s2;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      hess[i * n + j] = mu * (4.0 * y[i] * y[j] / s4 - 8.0 * y[i] * y[j] / s3 - (i == j ? 2.0 / s2 : 0.0));
}

}  // namespace feec
