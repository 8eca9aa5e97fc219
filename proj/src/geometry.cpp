#include "feec/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <queue>

#include "feec/chains.hpp"
#include "feec/polynomial.hpp"

namespace feec {

namespace {

Eigen::Vector3d vec(const Point& p) { return {p[0], p[1], p[2]}; }
Point pt(const Eigen::Vector3d& v) { return {v[0], v[1], v[2]}; }

double norm(const Point& p) { return std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]); }
Point diff(const Point& a, const Point& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

// Affine map sending verts[i] to images[i] (n+1 points in R^n).
AffineMap affine_from_vertices(const std::vector<Point>& verts, const std::vector<Point>& images, int n) {
  Eigen::Matrix3d S = Eigen::Matrix3d::Identity(), D = Eigen::Matrix3d::Identity();
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      S(i, j) = verts[j + 1][i] - verts[0][i];
      D(i, j) = images[j + 1][i] - images[0][i];
    }
  AffineMap f;
  f.n = n;
  f.A = D * S.inverse();
  for (int i = n; i < 3; ++i) {
    f.A.row(i).setZero();
    f.A.col(i).setZero();
    f.A(i, i) = 1.0;
  }
  f.t = vec(images[0]) - f.A * vec(verts[0]);
  for (int i = n; i < 3; ++i) f.t[i] = 0.0;
  return f;
}

// Half-space a.y <= c pulled back through y = F x.
HalfSpace pull_halfspace(const HalfSpace& h, const AffineMap& F) {
  HalfSpace out;
  Eigen::Vector3d a = F.A.transpose() * vec(h.a);
  for (int i = 0; i < F.n; ++i) out.a[i] = a[i];
  out.c = h.c - vec(h.a).dot(F.t);
  return out;
}

bool inside(const std::vector<HalfSpace>& hs, const Point& x, int n, double tol) {
  for (const auto& h : hs) {
    double s = -h.c;
    for (int i = 0; i < n; ++i) s += h.a[i] * x[i];
    if (s > tol) return false;
  }
  return true;
}

double op_norm(const Eigen::Matrix3d& A, int n) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A.topLeftCorner(n, n));
  return svd.singularValues()(0);
}

// Sub-simplices (physical vertex lists) of an m-simplex clipped by half-spaces.
std::vector<std::vector<Point>> clip_to(const std::vector<Point>& verts, int n,
                                        const std::vector<HalfSpace>& hs) {
  AffineSimplex s = affine_simplex_from_vertices(verts, n);
  std::vector<std::vector<Point>> out;
  for (const auto& tv : clip_simplex(s, hs)) {
    std::vector<Point> xs;
    for (const auto& t : tv) xs.push_back(s.map(t));
    out.push_back(xs);
  }
  return out;
}

std::vector<Point> map_all(const AffineMap& f, const std::vector<Point>& v) {
  std::vector<Point> out;
  for (const auto& p : v) out.push_back(f.apply(p));
  return out;
}

HalfSpace hs3(double a0, double a1, double a2, double c) { return HalfSpace{{a0, a1, a2}, c}; }

}  // namespace

//---------------------------------------------------------------------------

Point AffineMap::apply(const Point& x) const { return pt(A * vec(x) + t); }

AffineMap AffineMap::inverse() const {
  AffineMap f;
  f.n = n;
  f.A = A.inverse();
  f.t = -f.A * t;
  return f;
}

AffineMap AffineMap::after(const AffineMap& inner) const {
  AffineMap f;
  f.n = n;
  f.A = A * inner.A;
  f.t = A * inner.t + t;
  return f;
}

std::vector<double> AffineMap::matrix() const {
  std::vector<double> M(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M[i * n + j] = A(i, j);
  return M;
}

std::vector<double> AffineMap::offset() const { return std::vector<double>(t.data(), t.data() + n); }

std::vector<double> pullback_covector(const Eigen::Matrix3d& J, int n, int k, const std::vector<double>& w) {
  const auto& alts = alternators(k, n);
  std::vector<double> out(alts.size(), 0.0);
  double a[9];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a[i * n + j] = J(i, j);
  for (std::size_t s = 0; s < alts.size(); ++s) {
    auto cols = mask_indices(alts[s]);
    for (std::size_t t = 0; t < alts.size(); ++t) {
      if (w[t] == 0.0) continue;
      out[s] += w[t] * minor_det(a, n, mask_indices(alts[t]), cols);
    }
  }
  return out;
}

//---------------------------------------------------------------------------

DomainGeometry DomainGeometry::make(const std::string& name, double width) {
  if (!(width > 0.0) || width >= 1.0) throw CollarTooWide("collar width must lie in (0,1)");
  DomainGeometry g;
  g.name_ = name;
  g.w_ = width;
  Region id;
  Triangulation base = generate_domain_mesh(name, 0);
  g.n_ = base.dim();
  id.phi.n = id.phi_inv.n = g.n_;
  if (name == "unit_interval") {
    g.x0_ = {0.5, 0, 0};
  } else if (name == "unit_square") {
    g.x0_ = {0.5, 0.5, 0};
  } else if (name == "l_shape") {
    g.x0_ = {-0.5, -0.5, 0};
  } else if (name == "unit_cube") {
    g.x0_ = {0.5, 0.5, 0.5};
  } else if (name == "crossed_bricks") {
    // the chart only moves y inside the wedges |y| < |z|
    if (width > 0.5) throw CollarTooWide("crossed_bricks collar width must be <= 0.5");
    g.x0_ = {0.5, 0.0, -0.5};
    Region up, down;
    up.hs = {hs3(0, -1, 1, 0), hs3(0, -1, -1, 0)};
    down.hs = {hs3(0, 1, 1, 0), hs3(0, 1, -1, 0)};
    up.phi = down.phi = id.phi;
    g.regions_.push_back(up);
    g.regions_.push_back(down);
    for (int sy : {1, -1})
      for (int sz : {1, -1}) {
        Region r;
        r.hs = {hs3(0, sy, -sz, 0), hs3(0, -sy, 0, 0), hs3(0, 0, -sz, 0)};
        r.phi.n = 3;
        r.phi.A(1, 1) = 1.0 + 0.75 * sy;
        r.phi.A(1, 2) = -0.75 * sz;
        g.regions_.push_back(r);
      }
  } else {
    throw GeometryMismatch("no geometry plugin for domain '" + name + "'");
  }
  if (g.regions_.empty()) g.regions_.push_back(id);
  for (auto& r : g.regions_) {
    r.phi_inv = r.phi.inverse();
    r.image_hs.clear();
    for (const auto& h : r.hs) r.image_hs.push_back(pull_halfspace(h, r.phi_inv));
    g.lip_phi_ = std::max(g.lip_phi_, op_norm(r.phi.A, g.n_));
    g.lip_phi_inv_ = std::max(g.lip_phi_inv_, op_norm(r.phi_inv.A, g.n_));
  }
  g.volume_ = base.total_volume();
  g.build(base);
  g.estimate_constants();
  return g;
}

int DomainGeometry::region_of(const Point& z) const {
  if (regions_.size() == 1) return 0;
  int best = 0;
  double best_v = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < regions_.size(); ++r) {
    double v = -std::numeric_limits<double>::infinity();
    for (const auto& h : regions_[r].hs) v = std::max(v, h.a[0] * z[0] + h.a[1] * z[1] + h.a[2] * z[2] - h.c);
    if (v <= 0.0) return int(r);
    if (v < best_v) best_v = v, best = int(r);
  }
  return best;
}

int DomainGeometry::image_region_of(const Point& y) const {
  if (regions_.size() == 1) return 0;
  int best = 0;
  double best_v = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < regions_.size(); ++r) {
    double v = -std::numeric_limits<double>::infinity();
    for (const auto& h : regions_[r].image_hs) v = std::max(v, h.a[0] * y[0] + h.a[1] * y[1] + h.a[2] * y[2] - h.c);
    if (v <= 0.0) return int(r);
    if (v < best_v) best_v = v, best = int(r);
  }
  return best;
}

Point DomainGeometry::flatten(const Point& z) const { return regions_[region_of(z)].phi.apply(z); }
Point DomainGeometry::unflatten(const Point& y) const { return regions_[image_region_of(y)].phi_inv.apply(y); }
Eigen::Matrix3d DomainGeometry::flatten_jacobian(const Point& z) const { return regions_[region_of(z)].phi.A; }

double DomainGeometry::flat_gauge(const Point& y, Eigen::Vector3d* grad) const {
  Eigen::Vector3d d = vec(y) - vec(x0_);
  for (int i = n_; i < 3; ++i) d[i] = 0.0;
  if (d.norm() == 0.0) {
    if (grad) grad->setZero();
    return 0.0;
  }
  int best = -1;
  double best_min = -std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < facets_.size(); ++f) {
    Eigen::Vector3d a = facets_[f].cone_inv * d;
    double mn = a.head(n_).minCoeff();
    double tot = a.head(n_).cwiseAbs().sum();
    if (mn >= -1e-12 * tot) {
      best = int(f);
      break;
    }
    if (mn / tot > best_min) best_min = mn / tot, best = int(f);
  }
  const auto& F = facets_[best];
  Eigen::Vector3d ones = Eigen::Vector3d::Zero();
  ones.head(n_).setOnes();
  if (grad) *grad = F.cone_inv.transpose() * ones;
  return ones.dot(F.cone_inv * d);
}

double DomainGeometry::gauge(const Point& z) const { return flat_gauge(flatten(z), nullptr); }

Eigen::Vector3d DomainGeometry::gauge_gradient(const Point& z) const {
  Eigen::Vector3d g;
  flat_gauge(flatten(z), &g);
  return flatten_jacobian(z).transpose() * g;
}

Point DomainGeometry::collar(const Point& x, double t) const {
  Point y = flatten(x);
  Point s;
  for (int i = 0; i < 3; ++i) s[i] = i < n_ ? x0_[i] + (1.0 + w_ * t) * (y[i] - x0_[i]) : 0.0;
  return unflatten(s);
}

Point DomainGeometry::reflect(const Point& z) const {
  Point y = flatten(z);
  double g = flat_gauge(y, nullptr);
  if (!(g > 0.0)) throw EvaluationOutsideExtendedDomain("reflection at the star center");
  Point s;
  for (int i = 0; i < 3; ++i) s[i] = i < n_ ? x0_[i] + (y[i] - x0_[i]) * (2.0 - g) / g : 0.0;
  return unflatten(s);
}

Eigen::Matrix3d DomainGeometry::reflect_jacobian(const Point& z) const {
  Point y = flatten(z);
  Eigen::Vector3d grad;
  double g = flat_gauge(y, &grad);
  if (!(g > 0.0)) throw EvaluationOutsideExtendedDomain("reflection at the star center");
  Eigen::Vector3d d = vec(y) - vec(x0_);
  for (int i = n_; i < 3; ++i) d[i] = 0.0;
  Eigen::Matrix3d Da = Eigen::Matrix3d::Zero();
  Da.topLeftCorner(n_, n_).setIdentity();
  Da *= (2.0 - g) / g;
  Da -= (2.0 / (g * g)) * d * grad.transpose();
  Point s;
  for (int i = 0; i < 3; ++i) s[i] = i < n_ ? x0_[i] + d[i] * (2.0 - g) / g : 0.0;
  Eigen::Matrix3d J = regions_[image_region_of(s)].phi_inv.A * Da * flatten_jacobian(z);
  for (int i = n_; i < 3; ++i) J(i, i) = 1.0;
  return J;
}

int DomainGeometry::find_piece(const Point& z, double tol) const {
  auto test = [&](int p) {
    const auto& P = pieces_[p];
    for (int i = 0; i < n_; ++i)
      if (z[i] < P.lo[i] - tol || z[i] > P.hi[i] + tol) return false;
    return inside(P.region, z, n_, tol);
  };
  if (tol <= piece_grid_.pad()) {
    const auto* cand = piece_grid_.candidates(z.data());
    if (!cand) return -1;
    for (int p : *cand)
      if (test(p)) return p;
    return -1;
  }
  for (int p = 0; p < int(pieces_.size()); ++p)
    if (test(p)) return p;
  return -1;
}

Point DomainGeometry::reflect_pl(const Point& z) const {
  int p = find_piece(z);
  if (p < 0) throw EvaluationOutsideExtendedDomain("point outside the exterior collar");
  return pieces_[p].map.apply(z);
}

void DomainGeometry::build(const Triangulation& base) {
  const int n = n_;
  // boundary facets split by chart regions, mapped to flattened coordinates
  std::map<std::array<long long, 3>, int> ids;
  auto vertex_id = [&](const Point& y) {
    std::array<long long, 3> key{std::llround(y[0] * 1e9), std::llround(y[1] * 1e9), std::llround(y[2] * 1e9)};
    auto it = ids.find(key);
    if (it != ids.end()) return it->second;
    int id = int(ids.size());
    ids[key] = id;
    return id;
  };
  for (int f : base.boundary_facets()) {
    std::vector<Point> fv;
    for (int v : base.simplex(n - 1, f).vertex_ids) fv.push_back(base.vertex(v));
    const int cell = base.cells_of(n - 1, f)[0];
    Point cc{0, 0, 0};
    for (int v : base.simplex(n, cell).vertex_ids)
      for (int i = 0; i < 3; ++i) cc[i] += base.vertex(v)[i] / (n + 1);
    for (const auto& R : regions_) {
      std::vector<std::vector<Point>> parts;
      if (n == 1) parts = {fv};
      else parts = clip_to(fv, n, R.hs);
      for (const auto& part : parts) {
        if (n > 1 && simplex_k_volume(part, n) <= 1e-14) continue;
        boundary_.push_back(part);
        Facet F;
        Point centroid{0, 0, 0};
        for (const auto& p : part)
          for (int i = 0; i < 3; ++i) centroid[i] += p[i] / double(part.size());
        Point inner;
        for (int i = 0; i < 3; ++i) inner[i] = centroid[i] + 1e-4 * (cc[i] - centroid[i]);
        std::vector<std::pair<int, Point>> vs;
        for (const auto& p : part) {
          Point y = R.phi.apply(p);
          vs.push_back({vertex_id(y), y});
        }
        std::sort(vs.begin(), vs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        Eigen::Matrix3d B = Eigen::Matrix3d::Identity();
        for (int j = 0; j < n; ++j) {
          F.ids.push_back(vs[j].first);
          F.verts.push_back(vs[j].second);
          for (int i = 0; i < n; ++i) B(i, j) = vs[j].second[i] - x0_[i];
        }
        // the center must see the facet from the inside
        Eigen::Vector3d nrm = Eigen::Vector3d::Zero();
        if (n == 1) nrm[0] = 1.0;
        else if (n == 2) nrm = Eigen::Vector3d(-(F.verts[1][1] - F.verts[0][1]), F.verts[1][0] - F.verts[0][0], 0.0);
        else nrm = (vec(F.verts[1]) - vec(F.verts[0])).cross(vec(F.verts[2]) - vec(F.verts[0]));
        nrm.normalize();
        Point yin = flatten(inner);
        if (nrm.dot(vec(yin) - vec(F.verts[0])) > 0.0) nrm = -nrm;
        double c = nrm.dot(vec(F.verts[0]) - vec(x0_));
        if (!(c > 1e-9)) throw NotStarShaped(name_ + ": a boundary facet is not visible from the center");
        margin_ = facets_.empty() ? c : std::min(margin_, c);
        for (const auto& y : F.verts) radius_ = std::max(radius_, norm(diff(y, x0_)));
        F.cone_inv = B.inverse();
        facets_.push_back(F);
      }
    }
  }
  // outer collar boundary, mapped back to physical coordinates
  const double s = 1.0 + w_;
  auto scale = [&](const Point& y, double f) {
    Point r{0, 0, 0};
    for (int i = 0; i < n; ++i) r[i] = x0_[i] + f * (y[i] - x0_[i]);
    return r;
  };
  for (const auto& F : facets_) {
    std::vector<Point> sc;
    for (const auto& y : F.verts) sc.push_back(scale(y, s));
    for (const auto& R : regions_) {
      std::vector<std::vector<Point>> parts;
      if (n == 1) parts = {sc};
      else parts = clip_to(sc, n, R.image_hs);
      for (const auto& part : parts)
        if (n == 1 || simplex_k_volume(part, n) > 1e-14) outer_.push_back(map_all(R.phi_inv, part));
    }
  }
  // staircase triangulation of each exterior prism, ordered by global vertex id
  for (const auto& F : facets_) {
    std::vector<Point> bottom = F.verts, top, image;
    for (const auto& y : F.verts) {
      top.push_back(scale(y, s));
      image.push_back(scale(y, 1.0 - w_));
    }
    for (int j = 0; j < n; ++j) {
      std::vector<Point> tv, iv;
      for (int i = 0; i < n - j; ++i) {
        tv.push_back(bottom[i]);
        iv.push_back(bottom[i]);
      }
      for (int i = n - 1 - j; i < n; ++i) {
        tv.push_back(top[i]);
        iv.push_back(image[i]);
      }
      AffineMap Ft = affine_from_vertices(tv, iv, n);
      for (const auto& Rb : regions_) {
        for (const auto& Rc : regions_) {
          std::vector<HalfSpace> hs = Rb.image_hs;
          for (const auto& h : Rc.image_hs) hs.push_back(pull_halfspace(h, Ft));
          for (const auto& part : clip_to(tv, n, hs)) {
            PLPiece P;
            P.simplex = map_all(Rb.phi_inv, part);
            P.map = Rc.phi_inv.after(Ft.after(Rb.phi));
            P.map.n = n;
            P.region = simplex_halfspaces(P.simplex, n);
            for (int i = 0; i < 3; ++i) {
              P.lo[i] = P.hi[i] = P.simplex[0][i];
              for (const auto& q : P.simplex) {
                P.lo[i] = std::min(P.lo[i], q[i]);
                P.hi[i] = std::max(P.hi[i], q[i]);
              }
            }
            pieces_.push_back(P);
          }
          if (regions_.size() == 1) break;
        }
      }
    }
  }
  for (int i = 0; i < 3; ++i) {
    box_lo_[i] = ebox_lo_[i] = std::numeric_limits<double>::infinity();
    box_hi_[i] = ebox_hi_[i] = -std::numeric_limits<double>::infinity();
  }
  for (const auto& b : boundary_)
    for (const auto& p : b)
      for (int i = 0; i < n; ++i) {
        box_lo_[i] = std::min(box_lo_[i], p[i]);
        box_hi_[i] = std::max(box_hi_[i], p[i]);
      }
  for (const auto& b : outer_)
    for (const auto& p : b)
      for (int i = 0; i < n; ++i) {
        ebox_lo_[i] = std::min(ebox_lo_[i], p[i]);
        ebox_hi_[i] = std::max(ebox_hi_[i], p[i]);
      }
  for (int i = n; i < 3; ++i) box_lo_[i] = box_hi_[i] = ebox_lo_[i] = ebox_hi_[i] = 0.0;
  std::vector<std::array<double, 6>> boxes;
  for (const auto& P : pieces_) boxes.push_back({P.lo[0], P.lo[1], P.lo[2], P.hi[0], P.hi[1], P.hi[2]});
  piece_grid_.build(n, boxes, 1e-8);
  double total = 0.0;
  for (const auto& b : boundary_) {
    total += n == 1 ? 1.0 : simplex_k_volume(b, n);
    facet_cum_measure_.push_back(total);
  }
}

void DomainGeometry::bounding_box(double* lo, double* hi, bool extended) const {
  for (int i = 0; i < n_; ++i) {
    lo[i] = extended ? ebox_lo_[i] : box_lo_[i];
    hi[i] = extended ? ebox_hi_[i] : box_hi_[i];
  }
}

Point DomainGeometry::sample_boundary(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  double u = uni(rng) * facet_cum_measure_.back();
  std::size_t f = std::lower_bound(facet_cum_measure_.begin(), facet_cum_measure_.end(), u) - facet_cum_measure_.begin();
  f = std::min(f, boundary_.size() - 1);
  const auto& S = boundary_[f];
  std::vector<double> lam(S.size());
  double tot = 0.0;
  for (auto& l : lam) tot += (l = -std::log(1.0 - uni(rng)));
  Point x{0, 0, 0};
  for (std::size_t j = 0; j < S.size(); ++j)
    for (int i = 0; i < n_; ++i) x[i] += lam[j] / tot * S[j][i];
  return x;
}

Point DomainGeometry::sample_exterior_collar(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (;;) {
    Point z{0, 0, 0};
    for (int i = 0; i < n_; ++i) z[i] = ebox_lo_[i] + (ebox_hi_[i] - ebox_lo_[i]) * uni(rng);
    double g = gauge(z);
    if (g > 1.0 && g < 1.0 + w_) return z;
  }
}

void DomainGeometry::estimate_constants() {
  const int n = n_;
  CollarConstants& C = consts_;
  for (const auto& P : pieces_) {
    C.lip_reflect_pl = std::max(C.lip_reflect_pl, op_norm(P.map.A, n));
    C.lip_reflect_inv_pl = std::max(C.lip_reflect_inv_pl, op_norm(P.map.A.inverse(), n));
  }
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  double diam = 0.0;
  for (int i = 0; i < n; ++i) diam += (ebox_hi_[i] - ebox_lo_[i]) * (ebox_hi_[i] - ebox_lo_[i]);
  diam = std::sqrt(diam);
  double lip = 0.0, lip_inv = 0.0;
  const int pairs = 20000;
  for (int s = 0; s < pairs; ++s) {
    Point z = sample_exterior_collar(rng);
    Point dz{0, 0, 0};
    double len = diam * std::pow(10.0, -1.0 - 3.0 * uni(rng));
    double nn = 0.0;
    for (int i = 0; i < n; ++i) nn += (dz[i] = normal(rng)) * dz[i];
    Point z2 = z;
    for (int i = 0; i < n; ++i) z2[i] += len * dz[i] / std::sqrt(nn);
    double g2 = gauge(z2);
    if (g2 <= 1.0 || g2 >= 1.0 + w_) continue;
    Point a = reflect(z), b = reflect(z2);
    double q = norm(diff(a, b)) / norm(diff(z, z2));
    lip = std::max(lip, q);
    lip_inv = std::max(lip_inv, 1.0 / q);
    ++C.samples;
  }
  C.lip_reflect_sampled = lip;
  C.lip_reflect = std::max(lip, C.lip_reflect_pl);
  C.lip_reflect_inv = std::max(lip_inv, C.lip_reflect_inv_pl);
  C.psi_upper = lip_phi_inv_ * std::max((1.0 + w_) * lip_phi_, w_ * radius_);
  double lower = std::numeric_limits<double>::infinity();
  for (int s = 0; s < 10000; ++s) {
    Point x1 = sample_boundary(rng), x2 = sample_boundary(rng);
    double t1 = 2.0 * uni(rng) - 1.0, t2 = 2.0 * uni(rng) - 1.0;
    double den = norm(diff(x1, x2)) + std::abs(t1 - t2);
    if (den < 1e-12) continue;
    lower = std::min(lower, norm(diff(collar(x1, t1), collar(x2, t2))) / den);
  }
  C.psi_lower = 0.5 * lower;
}

//---------------------------------------------------------------------------

double neighborhood_constant(const Triangulation& mesh, const DomainGeometry& geom) {
  const int n = mesh.dim();
  std::vector<std::array<double, 6>> obox;
  for (const auto& o : geom.outer_boundary_simplices()) {
    std::array<double, 6> b{};
    for (int i = 0; i < 3; ++i) {
      b[i] = b[3 + i] = o[0][i];
      for (const auto& p : o) {
        b[i] = std::min(b[i], p[i]);
        b[3 + i] = std::max(b[3 + i], p[i]);
      }
    }
    obox.push_back(b);
  }
  auto box_gap = [&](const double* lo, const double* hi, const double* lo2, const double* hi2) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      double g = std::max({0.0, lo2[i] - hi[i], lo[i] - hi2[i]});
      s += g * g;
    }
    return std::sqrt(s);
  };
  double eps = std::numeric_limits<double>::infinity();
  for (int m = 1; m <= n; ++m) {
    for (int s = 0; s < mesh.num_simplices(m); ++s) {
      const auto& ids = mesh.simplex(m, s).vertex_ids;
      std::vector<Point> S;
      double lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
      for (int i = 0; i < 3; ++i) lo[i] = hi[i] = mesh.vertex(ids[0])[i];
      for (int v : ids) {
        S.push_back(mesh.vertex(v));
        for (int i = 0; i < 3; ++i) {
          lo[i] = std::min(lo[i], mesh.vertex(v)[i]);
          hi[i] = std::max(hi[i], mesh.vertex(v)[i]);
        }
      }
      const double h = mesh.diameter(m, s);
      double best = std::numeric_limits<double>::infinity();
      const auto& outer = geom.outer_boundary_simplices();
      for (std::size_t o = 0; o < outer.size(); ++o) {
        if (box_gap(lo, hi, obox[o].data(), obox[o].data() + 3) / h >= best) continue;
        best = std::min(best, simplex_distance(S, outer[o], n) / h);
      }
      for (int c = 0; c < mesh.num_cells(); ++c) {
        double clo[3], chi[3];
        mesh.bounding_box(c, clo, chi);
        if (box_gap(lo, hi, clo, chi) / h >= best) continue;
        const auto& cv = mesh.simplex(n, c).vertex_ids;
        bool shares = false;
        for (int v : cv) shares |= std::binary_search(ids.begin(), ids.end(), v);
        if (shares) continue;
        std::vector<Point> Cs;
        for (int v : cv) Cs.push_back(mesh.vertex(v));
        best = std::min(best, simplex_distance(S, Cs, n) / h);
      }
      eps = std::min(eps, best);
    }
  }
  return eps;
}

double inner_metric_constant(const DomainGeometry& geom, int cells_per_unit) {
  const int n = geom.dim();
  double lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
  geom.bounding_box(lo, hi, false);
  int N[3] = {1, 1, 1};
  double step[3] = {1, 1, 1};
  for (int i = 0; i < n; ++i) {
    N[i] = int(std::lround((hi[i] - lo[i]) * cells_per_unit)) + 1;
    step[i] = (hi[i] - lo[i]) / (N[i] - 1);
  }
  const int total = N[0] * N[1] * N[2];
  auto coord = [&](int idx) {
    Point p{0, 0, 0};
    int r = idx;
    for (int i = 0; i < 3; ++i) {
      int k = r % N[i];
      r /= N[i];
      if (i < n) p[i] = lo[i] + k * step[i];
    }
    return p;
  };
  // stencil of primitive offsets
  std::vector<std::array<int, 3>> stencil;
  const int reach = n == 2 ? 2 : 1;
  for (int a = -reach; a <= reach; ++a)
    for (int b = (n > 1 ? -reach : 0); b <= (n > 1 ? reach : 0); ++b)
      for (int c = (n > 2 ? -reach : 0); c <= (n > 2 ? reach : 0); ++c) {
        if (a == 0 && b == 0 && c == 0) continue;
        if (std::gcd(std::gcd(std::abs(a), std::abs(b)), std::abs(c)) != 1) continue;
        stencil.push_back({a, b, c});
      }
  std::vector<char> in(total);
  for (int v = 0; v < total; ++v) in[v] = geom.in_closure(coord(v), 1e-9);
  auto neighbours = [&](int v, bool free, std::vector<std::pair<int, double>>& out) {
    out.clear();
    int k[3] = {v % N[0], (v / N[0]) % N[1], v / (N[0] * N[1])};
    Point p = coord(v);
    for (const auto& s : stencil) {
      int q[3];
      bool ok = true;
      for (int i = 0; i < 3; ++i) {
        q[i] = k[i] + s[i];
        ok &= q[i] >= 0 && q[i] < N[i];
      }
      if (!ok) continue;
      int u = q[0] + N[0] * (q[1] + N[1] * q[2]);
      Point r = coord(u);
      if (!free) {
        if (!in[u]) continue;
        for (int t = 1; t < 8 && ok; ++t) {
          Point m;
          for (int i = 0; i < 3; ++i) m[i] = p[i] + (r[i] - p[i]) * t / 8.0;
          ok = geom.in_closure(m, 1e-9);
        }
        if (!ok) continue;
      }
      out.push_back({u, norm(diff(p, r))});
    }
  };
  auto dijkstra = [&](int src, bool free) {
    std::vector<double> d(total, std::numeric_limits<double>::infinity());
    std::priority_queue<std::pair<double, int>, std::vector<std::pair<double, int>>, std::greater<>> pq;
    d[src] = 0.0;
    pq.push({0.0, src});
    std::vector<std::pair<int, double>> nb;
    while (!pq.empty()) {
      auto [dv, v] = pq.top();
      pq.pop();
      if (dv > d[v]) continue;
      neighbours(v, free, nb);
      for (auto [u, len] : nb)
        if (dv + len < d[u]) {
          d[u] = dv + len;
          pq.push({d[u], u});
        }
    }
    return d;
  };
  double L = 1.0;
  for (int v = 0; v < total; ++v) {
    if (!in[v]) continue;
    auto di = dijkstra(v, false);
    auto df = dijkstra(v, true);
    for (int u = 0; u < total; ++u)
      if (u != v && in[u] && std::isfinite(di[u])) L = std::max(L, di[u] / df[u]);
  }
  return L;
}

}  // namespace feec
