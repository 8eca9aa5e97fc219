#include "feec/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "json.hpp"

namespace feec {

namespace {

constexpr double kConformTol = 1e-10;

double dist(const Point& a, const Point& b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// all subsets of size m+1 of a sorted tuple
void subsets(const std::vector<int>& v, int size, std::vector<std::vector<int>>& out) {
  const int N = int(v.size());
  for (unsigned mask = 0; mask < (1u << N); ++mask) {
    if (__builtin_popcount(mask) != size) continue;
    std::vector<int> s;
    for (int i = 0; i < N; ++i)
      if (mask & (1u << i)) s.push_back(v[i]);
    out.push_back(s);
  }
  std::sort(out.begin(), out.end());
}

// m-volume of the simplex spanned by the points via the Gram determinant
double simplex_measure(const std::vector<Point>& p, int n) {
  const int m = int(p.size()) - 1;
  if (m == 0) return 1.0;
  Eigen::MatrixXd E(n, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i) E(i, j) = p[j + 1][i] - p[0][i];
  double g = (E.transpose() * E).determinant();
  double f = 1.0;
  for (int i = 2; i <= m; ++i) f *= i;
  return std::sqrt(std::max(0.0, g)) / f;
}

}  // namespace

int Triangulation::find(std::vector<int> vertex_ids) const {
  std::sort(vertex_ids.begin(), vertex_ids.end());
  const int m = int(vertex_ids.size()) - 1;
  if (m < 0 || m > n_) return -1;
  auto it = index_[m].find(vertex_ids);
  return it == index_[m].end() ? -1 : it->second;
}

std::vector<int> Triangulation::faces(int dim, int id, int m) const {
  std::vector<std::vector<int>> subs;
  subsets(simplices_[dim][id].vertex_ids, m + 1, subs);
  std::vector<int> out;
  for (const auto& s : subs) out.push_back(index_[m].at(s));
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> Triangulation::star_cells(int dim, int id) const {
  std::set<int> cells;
  for (int v : simplices_[dim][id].vertex_ids) cells.insert(vertex_cells_[v].begin(), vertex_cells_[v].end());
  return {cells.begin(), cells.end()};
}

std::vector<std::pair<int, int>> Triangulation::star(int dim, int id) const {
  const auto& tv = simplices_[dim][id].vertex_ids;
  std::set<std::pair<int, int>> out;
  for (int c : star_cells(dim, id))
    for (int m = 0; m <= n_; ++m)
      for (int f : faces(n_, c, m)) {
        const auto& fv = simplices_[m][f].vertex_ids;
        bool shares = false;
        for (int v : fv)
          if (std::find(tv.begin(), tv.end(), v) != tv.end()) shares = true;
        if (shares) out.insert({m, f});
      }
  return {out.begin(), out.end()};
}

double Triangulation::diameter(int dim, int id) const {
  const auto& v = simplices_[dim][id].vertex_ids;
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i + 1; j < v.size(); ++j) d = std::max(d, dist(coords_[v[i]], coords_[v[j]], n_));
  return d;
}

double Triangulation::volume(int dim, int id) const {
  std::vector<Point> p;
  for (int v : simplices_[dim][id].vertex_ids) p.push_back(coords_[v]);
  return simplex_measure(p, n_);
}

double Triangulation::total_volume() const {
  double s = 0.0;
  for (double v : cell_volume_) s += v;
  return s;
}

double Triangulation::h_min() const { return *std::min_element(cell_diam_.begin(), cell_diam_.end()); }
double Triangulation::h_max() const { return *std::max_element(cell_diam_.begin(), cell_diam_.end()); }

ReferenceChart Triangulation::chart(int cell_id) const {
  ReferenceChart ch;
  ch.cell_id = cell_id;
  const auto& v = simplices_[n_][cell_id].vertex_ids;
  ch.M.resize(n_, n_);
  ch.b.resize(n_);
  for (int i = 0; i < n_; ++i) {
    ch.b(i) = coords_[v[0]][i];
    for (int j = 0; j < n_; ++j) ch.M(i, j) = coords_[v[j + 1]][i] - coords_[v[0]][i];
  }
  ch.det_M = ch.M.determinant();
  if (ch.det_M == 0.0) throw DegenerateCell("chart: singular cell");
  ch.M_inv = ch.M.inverse();
  return ch;
}

std::vector<double> Triangulation::barycentric(int cell_id, const double* x) const {
  const auto& v = simplices_[n_][cell_id].vertex_ids;
  const Eigen::Matrix3d& Minv = cell_inv_[cell_id];
  double r[3] = {0, 0, 0};
  for (int i = 0; i < n_; ++i) r[i] = x[i] - coords_[v[0]][i];
  std::vector<double> bary(n_ + 1);
  double s = 0.0;
  for (int i = 0; i < n_; ++i) {
    double t = 0.0;
    for (int j = 0; j < n_; ++j) t += Minv(i, j) * r[j];
    bary[i + 1] = t;
    s += t;
  }
  bary[0] = 1.0 - s;
  return bary;
}

void Triangulation::bounding_box(int cell_id, double* lo, double* hi) const {
  for (int i = 0; i < n_; ++i) {
    lo[i] = cell_box_[cell_id][i];
    hi[i] = cell_box_[cell_id][3 + i];
  }
}

std::optional<Location> Triangulation::locate(const double* x, double tol) const {
  auto test = [&](int c) -> std::optional<Location> {
    for (int i = 0; i < n_; ++i) {
      double pad = tol * (1.0 + cell_diam_[c]) + 1e-14;
      if (x[i] < cell_box_[c][i] - pad || x[i] > cell_box_[c][3 + i] + pad) return std::nullopt;
    }
    auto bary = barycentric(c, x);
    if (*std::min_element(bary.begin(), bary.end()) >= -tol) return Location{c, bary};
    return std::nullopt;
  };
  if (tol * (1.0 + h_max_) + 1e-14 <= grid_.pad()) {
    const auto* cand = grid_.candidates(x);
    if (!cand) return std::nullopt;
    for (int c : *cand)
      if (auto loc = test(c)) return loc;
    return std::nullopt;
  }
  for (int c = 0; c < num_cells(); ++c)
    if (auto loc = test(c)) return loc;
  return std::nullopt;
}

std::vector<int> Triangulation::boundary_facets() const {
  std::vector<int> out;
  for (int f = 0; f < num_simplices(n_ - 1); ++f)
    if (cofaces_[n_ - 1][f].size() == 1) out.push_back(f);
  return out;
}

std::vector<bool> Triangulation::boundary_vertex_mask() const {
  std::vector<bool> mask(coords_.size(), false);
  for (int f : boundary_facets())
    for (int v : simplices_[n_ - 1][f].vertex_ids) mask[v] = true;
  return mask;
}

Triangulation build_triangulation(int n, const std::vector<Point>& vertices, const std::vector<std::vector<int>>& cells) {
  if (n < 1 || n > 3) throw MeshFormatError("mesh dimension must be 1, 2 or 3");
  Triangulation T;
  T.n_ = n;
  T.coords_ = vertices;
  for (auto& p : T.coords_)
    for (int i = n; i < 3; ++i) p[i] = 0.0;
  T.input_cells_ = cells;
  const int V = int(vertices.size());
  for (const auto& p : vertices)
    for (int i = 0; i < n; ++i)
      if (!std::isfinite(p[i])) throw MeshFormatError("non-finite vertex coordinate");

  // cells
  for (std::size_t c = 0; c < cells.size(); ++c) {
    std::vector<int> v = cells[c];
    if (int(v.size()) != n + 1) throw MeshFormatError("cell with wrong number of vertices");
    for (int id : v)
      if (id < 0 || id >= V) throw MeshFormatError("cell vertex id out of range");
    std::sort(v.begin(), v.end());
    if (std::adjacent_find(v.begin(), v.end()) != v.end()) throw DegenerateCell("cell with repeated vertices");
    Eigen::MatrixXd M(n, n);
    double h = 0.0;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) M(i, j) = T.coords_[v[j + 1]][i] - T.coords_[v[0]][i];
    for (int a = 0; a <= n; ++a)
      for (int b = a + 1; b <= n; ++b) h = std::max(h, dist(T.coords_[v[a]], T.coords_[v[b]], n));
    double det = M.determinant();
    if (std::abs(det) <= 1e-13 * std::pow(h, n)) throw DegenerateCell("cell with zero volume");
    if (T.index_[n].count(v)) throw NonConformingMesh("duplicate cell");
    Simplex s{int(T.simplices_[n].size()), n, v, det > 0 ? 1 : -1};
    T.index_[n][v] = s.id;
    T.simplices_[n].push_back(s);
  }
  // closure: collect faces per dimension, number them in lexicographic order
  for (int m = 0; m < n; ++m) {
    std::set<std::vector<int>> faces;
    for (const auto& cell : T.simplices_[n]) {
      std::vector<std::vector<int>> subs;
      subsets(cell.vertex_ids, m + 1, subs);
      faces.insert(subs.begin(), subs.end());
    }
    for (const auto& f : faces) {
      Simplex s{int(T.simplices_[m].size()), m, f, 1};
      T.index_[m][f] = s.id;
      T.simplices_[m].push_back(s);
    }
  }
  for (int m = 0; m <= n; ++m) T.cofaces_[m].assign(T.simplices_[m].size(), {});
  T.vertex_cells_.assign(V, {});
  for (const auto& cell : T.simplices_[n]) {
    for (int m = 0; m <= n; ++m) {
      std::vector<std::vector<int>> subs;
      subsets(cell.vertex_ids, m + 1, subs);
      for (const auto& s : subs) T.cofaces_[m][T.index_[m][s]].push_back(cell.id);
    }
    for (int v : cell.vertex_ids) T.vertex_cells_[v].push_back(cell.id);
  }
  for (int v = 0; v < V; ++v)
    if (T.vertex_cells_[v].empty()) throw MeshFormatError("unused vertex " + std::to_string(v));

  const int C = T.num_cells();
  T.cell_volume_.resize(C);
  T.cell_diam_.resize(C);
  T.cell_box_.resize(C);
  for (int c = 0; c < C; ++c) {
    T.cell_volume_[c] = T.volume(n, c);
    T.cell_diam_[c] = T.diameter(n, c);
    auto& box = T.cell_box_[c];
    for (int i = 0; i < 3; ++i) {
      box[i] = std::numeric_limits<double>::infinity();
      box[3 + i] = -box[i];
    }
    for (int v : T.simplices_[n][c].vertex_ids)
      for (int i = 0; i < n; ++i) {
        box[i] = std::min(box[i], T.coords_[v][i]);
        box[3 + i] = std::max(box[3 + i], T.coords_[v][i]);
      }
  }
  T.cell_inv_.resize(C);
  T.h_max_ = 0.0;
  for (int c = 0; c < C; ++c) {
    const auto& v = T.simplices_[n][c].vertex_ids;
    Eigen::Matrix3d M = Eigen::Matrix3d::Identity();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) M(i, j) = T.coords_[v[j + 1]][i] - T.coords_[v[0]][i];
    T.cell_inv_[c] = M.inverse();
    T.h_max_ = std::max(T.h_max_, T.cell_diam_[c]);
  }
  T.grid_.build(n, T.cell_box_, 1e-6 * (1.0 + T.h_max_));
  T.vertex_size_.assign(V, 0.0);
  for (int v = 0; v < V; ++v) {
    for (int c : T.vertex_cells_[v]) T.vertex_size_[v] += T.cell_diam_[c];
    T.vertex_size_[v] /= double(T.vertex_cells_[v].size());
  }

  // conformity
  for (int f = 0; f < T.num_simplices(n - 1); ++f)
    if (T.cofaces_[n - 1][f].size() > 2) throw NonConformingMesh("facet shared by more than two cells");
  for (int c = 0; c < C; ++c) {
    const auto& cv = T.simplices_[n][c].vertex_ids;
    auto in_box = [&](const Point& p) {
      for (int i = 0; i < n; ++i) {
        double pad = kConformTol * (1.0 + T.cell_diam_[c]);
        if (p[i] < T.cell_box_[c][i] - pad || p[i] > T.cell_box_[c][3 + i] + pad) return false;
      }
      return true;
    };
    for (int v = 0; v < V; ++v) {
      if (std::binary_search(cv.begin(), cv.end(), v) || !in_box(T.coords_[v])) continue;
      auto bary = T.barycentric(c, T.coords_[v].data());
      if (*std::min_element(bary.begin(), bary.end()) >= -kConformTol)
        throw NonConformingMesh("vertex " + std::to_string(v) + " lies in cell " + std::to_string(c));
    }
    Point centre{0.0, 0.0, 0.0};
    for (int v : cv)
      for (int i = 0; i < n; ++i) centre[i] += T.coords_[v][i] / double(n + 1);
    for (int d = 0; d < C; ++d) {
      if (d == c || !in_box(centre)) continue;
      bool overlap = true;
      for (int i = 0; i < n && overlap; ++i)
        if (centre[i] < T.cell_box_[d][i] || centre[i] > T.cell_box_[d][3 + i]) overlap = false;
      if (!overlap) continue;
      auto bary = T.barycentric(d, centre.data());
      if (*std::min_element(bary.begin(), bary.end()) > kConformTol)
        throw NonConformingMesh("cells " + std::to_string(c) + " and " + std::to_string(d) + " overlap");
    }
  }
  return T;
}

ShapeBreakdown shape_breakdown(const Triangulation& mesh) {
  ShapeBreakdown out;
  const int n = mesh.dim();
  for (int c = 0; c < mesh.num_cells(); ++c)
    out.flatness = std::max(out.flatness, std::pow(mesh.cell_diameter(c), n) / mesh.cell_volume(c));
  // intersecting simplices share a vertex; compare all simplices through each vertex
  std::vector<double> lo(mesh.num_vertices()), hi(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) lo[v] = hi[v] = mesh.vertex_size(v);
  for (int m = 1; m <= n; ++m)
    for (const auto& s : mesh.simplices(m)) {
      double h = mesh.diameter(m, s.id);
      for (int v : s.vertex_ids) {
        lo[v] = std::min(lo[v], h);
        hi[v] = std::max(hi[v], h);
      }
    }
  for (int v = 0; v < mesh.num_vertices(); ++v) out.comparability = std::max(out.comparability, hi[v] / lo[v]);
  return out;
}

double shape_constant(const Triangulation& mesh) {
  auto b = shape_breakdown(mesh);
  return std::max(b.flatness, b.comparability);
}

int neighbor_count_constant(const Triangulation& mesh) {
  std::size_t best = 0;
  for (int c = 0; c < mesh.num_cells(); ++c) best = std::max(best, mesh.star(mesh.dim(), c).size());
  return int(best);
}

std::pair<double, double> chart_constants(const Triangulation& mesh) {
  double cM = 0.0, CM = 0.0;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    auto ch = mesh.chart(c);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(ch.M);
    double smax = svd.singularValues()(0);
    double smin = svd.singularValues()(mesh.dim() - 1);
    double h = mesh.cell_diameter(c);
    cM = std::max(cM, smax / h);
    CM = std::max(CM, h / smin);
  }
  return {cM, CM};
}

Triangulation refine_uniform(const Triangulation& mesh) {
  const int n = mesh.dim();
  std::vector<Point> pts = mesh.vertices();
  std::map<std::pair<int, int>, int> mid;
  auto midpoint = [&](int a, int b) {
    auto key = std::minmax(a, b);
    auto it = mid.find(key);
    if (it != mid.end()) return it->second;
    Point p{};
    for (int i = 0; i < 3; ++i) p[i] = 0.5 * (pts[a][i] + pts[b][i]);
    pts.push_back(p);
    int id = int(pts.size()) - 1;
    mid[key] = id;
    return id;
  };
  std::vector<std::vector<int>> cells;
  for (const auto& c : mesh.input_cells()) {
    if (n == 1) {
      int m = midpoint(c[0], c[1]);
      cells.push_back({c[0], m});
      cells.push_back({m, c[1]});
    } else if (n == 2) {
      int m01 = midpoint(c[0], c[1]), m02 = midpoint(c[0], c[2]), m12 = midpoint(c[1], c[2]);
      cells.push_back({c[0], m01, m02});
      cells.push_back({m01, c[1], m12});
      cells.push_back({m02, m12, c[2]});
      cells.push_back({m01, m02, m12});
    } else {
      int x0 = c[0], x1 = c[1], x2 = c[2], x3 = c[3];
      int x01 = midpoint(x0, x1), x02 = midpoint(x0, x2), x03 = midpoint(x0, x3);
      int x12 = midpoint(x1, x2), x13 = midpoint(x1, x3), x23 = midpoint(x2, x3);
      cells.push_back({x0, x01, x02, x03});
      cells.push_back({x01, x1, x12, x13});
      cells.push_back({x02, x12, x2, x23});
      cells.push_back({x03, x13, x23, x3});
      cells.push_back({x01, x02, x03, x13});
      cells.push_back({x01, x02, x12, x13});
      cells.push_back({x02, x03, x13, x23});
      cells.push_back({x02, x12, x13, x23});
    }
  }
  return build_triangulation(n, pts, cells);
}

namespace {

// Kuhn (path) subdivision of unit cubes with integer lower corners, vertex order along the path
void kuhn_cubes(const std::vector<std::array<int, 3>>& corners, std::vector<Point>& pts,
                std::vector<std::vector<int>>& cells) {
  std::map<std::array<int, 3>, int> ids;
  auto id = [&](std::array<int, 3> p) {
    auto it = ids.find(p);
    if (it != ids.end()) return it->second;
    pts.push_back({double(p[0]), double(p[1]), double(p[2])});
    ids[p] = int(pts.size()) - 1;
    return int(pts.size()) - 1;
  };
  for (const auto& c : corners) {
    std::array<int, 3> perm{0, 1, 2};
    do {
      std::array<int, 3> p = c;
      std::vector<int> cell{id(p)};
      for (int a : perm) {
        p[a] += 1;
        cell.push_back(id(p));
      }
      cells.push_back(cell);
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
}

void split_squares(const std::vector<std::array<int, 2>>& corners, std::vector<Point>& pts,
                   std::vector<std::vector<int>>& cells) {
  std::map<std::array<int, 2>, int> ids;
  auto id = [&](int x, int y) {
    std::array<int, 2> p{x, y};
    auto it = ids.find(p);
    if (it != ids.end()) return it->second;
    pts.push_back({double(x), double(y), 0.0});
    ids[p] = int(pts.size()) - 1;
    return int(pts.size()) - 1;
  };
  for (const auto& [x, y] : corners) {
    cells.push_back({id(x, y), id(x + 1, y), id(x + 1, y + 1)});
    cells.push_back({id(x, y), id(x + 1, y + 1), id(x, y + 1)});
  }
}

}  // namespace

Triangulation generate_domain_mesh(const std::string& domain, int level) {
  if (level < 0 || level > 8) throw MeshFormatError("refinement level out of range");
  std::vector<Point> pts;
  std::vector<std::vector<int>> cells;
  int n = 0;
  if (domain == "unit_interval") {
    n = 1;
    pts = {{0, 0, 0}, {1, 0, 0}};
    cells = {{0, 1}};
  } else if (domain == "unit_square") {
    n = 2;
    split_squares({{0, 0}}, pts, cells);
  } else if (domain == "l_shape") {
    n = 2;
    split_squares({{-1, -1}, {0, -1}, {-1, 0}}, pts, cells);
  } else if (domain == "unit_cube") {
    n = 3;
    kuhn_cubes({{0, 0, 0}}, pts, cells);
  } else if (domain == "crossed_bricks") {
    n = 3;
    kuhn_cubes({{-1, 0, -1}, {0, 0, -1}, {0, -1, -1}, {0, -1, 0}}, pts, cells);
  } else {
    throw MeshFormatError("unknown domain '" + domain + "'");
  }
  Triangulation mesh = build_triangulation(n, pts, cells);
  for (int l = 0; l < level; ++l) mesh = refine_uniform(mesh);
  return mesh;
}

std::string mesh_to_json(const Triangulation& mesh) {
  nlohmann::ordered_json j;
  j["n"] = mesh.dim();
  auto verts = nlohmann::json::array();
  for (const auto& p : mesh.vertices()) {
    auto row = nlohmann::json::array();
    for (int i = 0; i < mesh.dim(); ++i) row.push_back(p[i]);
    verts.push_back(row);
  }
  j["vertices"] = verts;
  j["cells"] = mesh.input_cells();
  return j.dump(1);
}

Triangulation mesh_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw MeshFormatError(std::string("mesh JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("n") || !j.contains("vertices") || !j.contains("cells"))
    throw MeshFormatError("mesh JSON needs n, vertices and cells");
  int n = j["n"].get<int>();
  std::vector<Point> pts;
  for (const auto& row : j["vertices"]) {
    if (!row.is_array() || int(row.size()) != n) throw MeshFormatError("vertex of wrong length");
    Point p{0, 0, 0};
    for (int i = 0; i < n; ++i) p[i] = row[i].get<double>();
    pts.push_back(p);
  }
  std::vector<std::vector<int>> cells = j["cells"].get<std::vector<std::vector<int>>>();
  return build_triangulation(n, pts, cells);
}

double simplex_distance(const std::vector<Point>& a, const std::vector<Point>& b, int n) {
  const int na = int(a.size()), nb = int(b.size());
  double best = std::numeric_limits<double>::infinity();
  for (unsigned ma = 1; ma < (1u << na); ++ma)
    for (unsigned mb = 1; mb < (1u << nb); ++mb) {
      std::vector<int> ia, ib;
      for (int i = 0; i < na; ++i)
        if (ma & (1u << i)) ia.push_back(i);
      for (int i = 0; i < nb; ++i)
        if (mb & (1u << i)) ib.push_back(i);
      const int pa = int(ia.size()) - 1, pb = int(ib.size()) - 1;
      if (pa + pb > n) continue;
      Eigen::MatrixXd E(n, pa + pb);
      Eigen::VectorXd r(n);
      for (int i = 0; i < n; ++i) {
        r(i) = b[ib[0]][i] - a[ia[0]][i];
        for (int j = 0; j < pa; ++j) E(i, j) = a[ia[j + 1]][i] - a[ia[0]][i];
        for (int j = 0; j < pb; ++j) E(i, pa + j) = -(b[ib[j + 1]][i] - b[ib[0]][i]);
      }
      Eigen::VectorXd s = Eigen::VectorXd::Zero(pa + pb);
      if (pa + pb > 0) {
        Eigen::MatrixXd G = E.transpose() * E;
        Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
        if (lu.rank() < pa + pb) continue;
        s = lu.solve(E.transpose() * r);
        double suma = 0.0, sumb = 0.0;
        bool ok = true;
        for (int j = 0; j < pa; ++j) {
          ok &= s(j) >= -1e-12;
          suma += s(j);
        }
        for (int j = 0; j < pb; ++j) {
          ok &= s(pa + j) >= -1e-12;
          sumb += s(pa + j);
        }
        if (!ok || suma > 1.0 + 1e-12 || sumb > 1.0 + 1e-12) continue;
      }
      double d = (E * s - r).norm();
      best = std::min(best, d);
    }
  return best;
}

}  // namespace feec
