#include "feec/clip.hpp"

#include <algorithm>
#include <cmath>

namespace feec {

namespace {

const Point kTieBreak{0.5772156649015329, 0.3183098861837907, 0.2718281828459045};

struct TPlane {
  Point a{0.0, 0.0, 0.0};  // in parameter space
  double c = 0.0;
};

double dot(const Point& a, const Point& b, int m) {
  double s = 0.0;
  for (int i = 0; i < m; ++i) s += a[i] * b[i];
  return s;
}

Point lerp(const Point& p, const Point& q, double s) {
  Point r;
  for (int i = 0; i < 3; ++i) r[i] = p[i] + s * (q[i] - p[i]);
  return r;
}

bool close(const Point& p, const Point& q, double tol) {
  return std::abs(p[0] - q[0]) <= tol && std::abs(p[1] - q[1]) <= tol && std::abs(p[2] - q[2]) <= tol;
}

using Polygon = std::vector<Point>;

// Sutherland-Hodgman against one plane with snapped signed distances.
Polygon clip_polygon(const Polygon& poly, const TPlane& pl, int m, double tol) {
  Polygon out;
  const std::size_t N = poly.size();
  std::vector<double> s(N);
  for (std::size_t i = 0; i < N; ++i) {
    s[i] = dot(pl.a, poly[i], m) - pl.c;
    if (std::abs(s[i]) < tol) s[i] = 0.0;
  }
  for (std::size_t i = 0; i < N; ++i) {
    std::size_t j = (i + 1) % N;
    if (s[i] <= 0.0) out.push_back(poly[i]);
    if ((s[i] < 0.0 && s[j] > 0.0) || (s[i] > 0.0 && s[j] < 0.0)) out.push_back(lerp(poly[i], poly[j], s[i] / (s[i] - s[j])));
  }
  // drop consecutive duplicates
  Polygon clean;
  for (const auto& p : out)
    if (clean.empty() || !close(clean.back(), p, 1e-15)) clean.push_back(p);
  while (clean.size() > 1 && close(clean.front(), clean.back(), 1e-15)) clean.pop_back();
  return clean;
}

double tri_area2(const Point& a, const Point& b, const Point& c) {
  return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
}

Point cross(const Point& a, const Point& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
Point sub(const Point& a, const Point& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

double tet_vol6(const Point& a, const Point& b, const Point& c, const Point& d) {
  return dot(sub(b, a), cross(sub(c, a), sub(d, a)), 3);
}

using Polyhedron = std::vector<Polygon>;

Polyhedron clip_polyhedron(const Polyhedron& P, const TPlane& pl, double tol) {
  Polyhedron out;
  std::vector<Point> on_plane;
  bool face_in_plane = false;
  for (const auto& f : P) {
    Polygon g = clip_polygon(f, pl, 3, tol);
    bool all_on = g.size() >= 3;
    for (const auto& p : g) all_on &= std::abs(dot(pl.a, p, 3) - pl.c) < tol;
    face_in_plane |= all_on;
    for (const auto& p : g) {
      double s = dot(pl.a, p, 3) - pl.c;
      if (std::abs(s) < tol) {
        bool dup = false;
        for (const auto& q : on_plane) dup |= close(p, q, 1e-13);
        if (!dup) on_plane.push_back(p);
      }
    }
    if (g.size() >= 3) out.push_back(g);
  }
  if (on_plane.size() >= 3 && !out.empty() && !face_in_plane) {
    // order cap vertices by angle around their centroid
    Point cen{0, 0, 0};
    for (const auto& p : on_plane)
      for (int i = 0; i < 3; ++i) cen[i] += p[i] / double(on_plane.size());
    Point nrm = pl.a;
    Point u = std::abs(nrm[0]) < 0.9 ? cross(nrm, Point{1, 0, 0}) : cross(nrm, Point{0, 1, 0});
    double un = std::sqrt(dot(u, u, 3));
    for (auto& x : u) x /= un;
    Point v = cross(nrm, u);
    std::sort(on_plane.begin(), on_plane.end(), [&](const Point& p, const Point& q) {
      Point dp = sub(p, cen), dq = sub(q, cen);
      return std::atan2(dot(dp, v, 3), dot(dp, u, 3)) < std::atan2(dot(dq, v, 3), dot(dq, u, 3));
    });
    out.push_back(on_plane);
  }
  return out;
}

}  // namespace

Point AffineSimplex::map(const Point& t) const {
  Point x{0, 0, 0};
  for (int i = 0; i < n; ++i) {
    x[i] = b[i];
    for (int j = 0; j < m; ++j) x[i] += M[i * m + j] * t[j];
  }
  return x;
}

AffineSimplex affine_simplex_from_vertices(const std::vector<Point>& verts, int n) {
  AffineSimplex s;
  s.m = int(verts.size()) - 1;
  s.n = n;
  s.M.assign(n * s.m, 0.0);
  s.b.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    s.b[i] = verts[0][i];
    for (int j = 0; j < s.m; ++j) s.M[i * s.m + j] = verts[j + 1][i] - verts[0][i];
  }
  return s;
}

AffineSimplex sub_simplex(const AffineSimplex& s, const std::vector<Point>& tv) {
  std::vector<Point> xs;
  for (const auto& t : tv) xs.push_back(s.map(t));
  return affine_simplex_from_vertices(xs, s.n);
}

std::vector<HalfSpace> simplex_halfspaces(const std::vector<Point>& verts, int n) {
  // barycentric lambda_i = g_i . x + h_i; inside iff -lambda_i <= 0
  Eigen::MatrixXd A(n + 1, n + 1);
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i < n; ++i) A(i, j) = verts[j][i];
    A(n, j) = 1.0;
  }
  Eigen::MatrixXd Ainv = A.inverse();  // row i: lambda_i coefficients (x, 1)
  std::vector<HalfSpace> hs;
  for (int i = 0; i <= n; ++i) {
    HalfSpace h;
    double norm = 0.0;
    for (int j = 0; j < n; ++j) {
      h.a[j] = -Ainv(i, j);
      norm += h.a[j] * h.a[j];
    }
    norm = std::sqrt(norm);
    h.c = Ainv(i, n);
    for (int j = 0; j < n; ++j) h.a[j] /= norm;
    h.c /= norm;
    hs.push_back(h);
  }
  return hs;
}

std::vector<HalfSpace> box_halfspaces(const double* lo, const double* hi, int n) {
  std::vector<HalfSpace> hs;
  for (int i = 0; i < n; ++i) {
    HalfSpace a, b;
    a.a[i] = 1.0;
    a.c = hi[i];
    b.a[i] = -1.0;
    b.c = -lo[i];
    hs.push_back(a);
    hs.push_back(b);
  }
  return hs;
}

double parameter_measure(const std::vector<Point>& v, int m) {
  if (m == 0) return 1.0;
  if (m == 1) return std::abs(v[1][0] - v[0][0]);
  if (m == 2) return 0.5 * std::abs(tri_area2(v[0], v[1], v[2]));
  return std::abs(tet_vol6(v[0], v[1], v[2], v[3])) / 6.0;
}

namespace {

// Plane in parameter coordinates; returns -1 when parallel and kept, 1 when parallel and rejected,
// 0 otherwise.
int parameter_plane(const AffineSimplex& s, const HalfSpace& h, double tol, TPlane& p) {
  const int m = s.m, n = s.n;
  double scale = 0.0;
  for (double x : s.M) scale = std::max(scale, std::abs(x));
  p = TPlane{};
  double norm = 0.0;
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < n; ++i) p.a[j] += h.a[i] * s.M[i * m + j];
    norm += p.a[j] * p.a[j];
  }
  norm = std::sqrt(norm);
  p.c = h.c;
  for (int i = 0; i < n; ++i) p.c -= h.a[i] * s.b[i];
  if (norm <= 1e-12 * std::max(scale, 1e-300)) {
    // the simplex is parallel to the plane
    if (p.c >= tol * std::max(scale, 1.0)) return -1;
    if (p.c <= -tol * std::max(scale, 1.0)) return 1;
    return dot(h.a, kTieBreak, n) < 0.0 ? -1 : 1;
  }
  for (int j = 0; j < m; ++j) p.a[j] /= norm;
  p.c /= norm;
  return 0;
}

}  // namespace

bool parallel_reject(const AffineSimplex& s, const HalfSpace& h, double tol) {
  TPlane p;
  return parameter_plane(s, h, tol, p) == 1;
}

std::vector<std::vector<Point>> clip_simplex(const AffineSimplex& s, const std::vector<HalfSpace>& hs, double tol) {
  const int m = s.m;
  std::vector<TPlane> planes;
  for (const auto& h : hs) {
    TPlane p;
    const int kind = parameter_plane(s, h, tol, p);
    if (kind < 0) continue;
    if (kind > 0) return {};
    planes.push_back(p);
  }
  std::vector<std::vector<Point>> out;
  if (m == 0) {
    out.push_back({Point{0, 0, 0}});
    return out;
  }
  if (m == 1) {
    double lo = 0.0, hi = 1.0;
    for (const auto& p : planes) {
      double bound = p.c / p.a[0];
      if (p.a[0] > 0) hi = std::min(hi, bound);
      else lo = std::max(lo, bound);
    }
    if (hi - lo > tol) out.push_back({Point{lo, 0, 0}, Point{hi, 0, 0}});
    return out;
  }
  if (m == 2) {
    Polygon poly{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    for (const auto& p : planes) {
      poly = clip_polygon(poly, p, 2, tol);
      if (poly.size() < 3) return {};
    }
    for (std::size_t i = 1; i + 1 < poly.size(); ++i) {
      std::vector<Point> tri{poly[0], poly[i], poly[i + 1]};
      if (parameter_measure(tri, 2) > 1e-15) out.push_back(tri);
    }
    return out;
  }
  Polyhedron P{{{0, 0, 0}, {0, 1, 0}, {1, 0, 0}},
               {{0, 0, 0}, {1, 0, 0}, {0, 0, 1}},
               {{0, 0, 0}, {0, 0, 1}, {0, 1, 0}},
               {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  for (const auto& p : planes) {
    P = clip_polyhedron(P, p, tol);
    if (P.size() < 4) return {};
  }
  const Point apex = P[0][0];
  for (const auto& f : P) {
    bool has_apex = false;
    for (const auto& q : f) has_apex |= close(q, apex, 1e-13);
    if (has_apex) continue;
    for (std::size_t i = 1; i + 1 < f.size(); ++i) {
      std::vector<Point> tet{apex, f[0], f[i], f[i + 1]};
      if (parameter_measure(tet, 3) > 1e-16) out.push_back(tet);
    }
  }
  return out;
}

}  // namespace feec
