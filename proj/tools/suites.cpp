#include "suites.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "feec/chains.hpp"
#include "feec/piecewise.hpp"

#ifndef FEECPROJ_THRESHOLDS_FILE
#define FEECPROJ_THRESHOLDS_FILE "thresholds.json"
#endif

namespace feecproj {

using namespace feec;

//---------------------------------------------------------------------------
// Config and thresholds

double RunConfig::p_value() const {
  if (p == "inf" || p == "infinity") return INFINITY;
  double v = 0.0;
  try {
    std::size_t used = 0;
    v = std::stod(p, &used);
    if (used != p.size()) v = 0.0;
  } catch (const std::exception&) {
    v = 0.0;
  }
  if (!(v >= 1.0)) throw ConfigError("--p must be a number >= 1 or 'inf', got '" + p + "'");
  return v;
}

json RunConfig::to_json() const {
  json j;
  j["domain"] = domain;
  j["level"] = level;
  j["mesh_file"] = mesh_file;
  j["complex"] = complex;
  j["epsilon"] = epsilon;
  j["p"] = p;
  j["seed"] = seed;
  j["quad_degree"] = quad_degree;
  j["thresholds"] = thresholds;
  return j;
}

std::string default_thresholds_path() { return FEECPROJ_THRESHOLDS_FILE; }

namespace {

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace

json load_thresholds(const std::string& override_path) {
  json t = read_json_file(default_thresholds_path());
  if (!override_path.empty()) t.merge_patch(read_json_file(override_path));
  return t;
}

//---------------------------------------------------------------------------
// Checks and reports

bool SuiteResult::pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

void SuiteResult::check_le(const std::string& n, const std::string& inv, double value, double tol) {
  checks.push_back({n, inv, value, tol, value <= tol});
}

void SuiteResult::check_range(const std::string& n, const std::string& inv, double value, double lo, double hi) {
  checks.push_back({n, inv, value, json::array({lo, hi}), value >= lo && value <= hi});
}

void SuiteResult::check_flag(const std::string& n, const std::string& inv, bool ok) {
  checks.push_back({n, inv, ok ? 0.0 : 1.0, 0.0, ok});
}

void SuiteResult::skip(const std::string& n, const std::string& reason, double value) {
  if (!data.contains("skipped")) data["skipped"] = json::array();
  data["skipped"].push_back({{"name", n}, {"reason", reason}, {"value", value}});
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

namespace {

// JSON has no inf/nan; keep them readable as strings.
json num(double x) {
  if (std::isfinite(x)) return x;
  return format_number(x);
}

}  // namespace

json suite_json(const SuiteResult& s) {
  json j;
  j["name"] = s.name;
  j["pass"] = s.pass();
  json checks = json::array();
  for (const auto& c : s.checks) {
    json cj;
    cj["name"] = c.name;
    cj["invariant"] = c.invariant;
    cj["value"] = num(c.value);
    cj["tolerance"] = c.threshold;
    cj["pass"] = c.pass;
    checks.push_back(cj);
  }
  j["checks"] = checks;
  if (!s.data.empty()) j["data"] = s.data;
  return j;
}

json ledger_json(const ConstantLedger& L) {
  const auto& m = L.measured;
  json j;
  j["p"] = num(L.p);
  j["epsilon"] = num(L.epsilon);
  json mj;
  mj["n"] = m.n;
  mj["C_mesh"] = num(m.C_mesh);
  mj["C_N"] = num(m.C_N);
  mj["eps_h"] = num(m.eps_h);
  mj["c_M"] = num(m.c_M);
  mj["C_M"] = num(m.C_M);
  mj["L_Psi"] = num(m.L_Psi);
  mj["L_h"] = num(m.L_h);
  mj["C_h"] = num(m.C_h);
  mj["L_Omega"] = num(m.L_Omega);
  mj["lip_A"] = num(m.lip_A);
  mj["lip_A_inv"] = num(m.lip_A_inv);
  mj["C_I"] = m.C_I;
  mj["C_bd"] = m.C_bd;
  mj["C_flat_2"] = m.C_flat_2;
  mj["C_flat_inf"] = m.C_flat_inf;
  j["measured"] = mj;
  json bounds = json::array();
  for (int i = 0; i < 4; ++i) bounds.push_back({{"constraint", L.eps.name[i]}, {"epsilon_bound", num(L.eps.bound[i])}});
  j["epsilon_bounds"] = bounds;
  j["binding_constraint"] = L.eps.name[L.eps.binding];
  j["eps_max"] = num(L.eps.eps_max);
  json per = json::array();
  for (const auto& d : L.per_k) {
    per.push_back({{"k", d.k},
                   {"C_A", num(d.C_A)},
                   {"C_E", num(d.C_E)},
                   {"C_E_inf", num(d.C_E_inf)},
                   {"C_flat", num(d.C_flat)},
                   {"C_Q", num(d.C_Q)},
                   {"C_e", num(d.C_e)},
                   {"C_pi", num(d.C_pi)}});
  }
  j["per_k"] = per;
  j["C_Q"] = num(L.C_Q);
  j["C_e"] = num(L.C_e);
  j["C_pi"] = num(L.C_pi);
  return j;
}

json make_report(const std::string& command, const RunConfig& cfg, const json& ledger,
                 const std::vector<SuiteResult>& suites) {
  json r;
  r["schema_version"] = kReportSchemaVersion;
  r["tool"] = "feecproj";
  r["command"] = command;
  r["config"] = cfg.to_json();
  if (!ledger.is_null()) r["ledger"] = ledger;
  json sj = json::array();
  bool pass = true;
  for (const auto& s : suites) {
    sj.push_back(suite_json(s));
    pass = pass && s.pass();
  }
  r["suites"] = sj;
  r["pass"] = pass;
  return r;
}

json load_report(const std::string& text) {
  json r;
  try {
    r = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("report is not valid JSON: ") + e.what());
  }
  if (!r.is_object() || !r.contains("schema_version") || !r["schema_version"].is_number_integer())
    throw ConfigError("report has no schema_version");
  const int v = r["schema_version"].get<int>();
  if (v != kReportSchemaVersion)
    throw ConfigError("unsupported report schema_version " + std::to_string(v) + " (expected " +
                      std::to_string(kReportSchemaVersion) + ")");
  return r;
}

std::string StudyTable::csv() const {
  std::ostringstream os;
  os << key << ",value,ceiling,pass\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << "\n";
  }
  return os.str();
}

//---------------------------------------------------------------------------
// Context

Triangulation load_or_generate_mesh(const RunConfig& cfg) {
  if (cfg.mesh_file.empty()) return generate_domain_mesh(cfg.domain, cfg.level);
  std::ifstream in(cfg.mesh_file);
  if (!in) throw ConfigError("cannot open mesh file " + cfg.mesh_file);
  std::stringstream ss;
  ss << in.rdbuf();
  return mesh_from_json(ss.str());
}

void check_admissible(const EpsilonBounds& b, double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("epsilon must be positive and finite");
  for (int i : {2, 1, 0, 3})
    if (!(epsilon < b.bound[i]))
      throw ConfigError(b.name[i] + " violated (epsilon " + format_number(epsilon) + ", bound " +
                        format_number(b.bound[i]) + ")");
}

Context::Context(const RunConfig& c) : cfg(c) {
  const double p = cfg.p_value();
  Triangulation mesh = load_or_generate_mesh(cfg);
  const ComplexSpec cplx = parse_complex(cfg.complex, mesh.dim());
  const double width = cfg.thresholds.at("collar_width").get<double>();
  setup = std::make_unique<LevelSetup>(cfg.domain, cfg.level, cplx, width, cfg.seed, &mesh);
  const auto b2 = admissible_epsilon(setup->measured, 2.0);
  const auto bp = admissible_epsilon(setup->measured, p);
  if (cfg.epsilon == "auto") {
    epsilon = std::min(b2.eps_max, bp.eps_max);
  } else {
    try {
      std::size_t used = 0;
      epsilon = std::stod(cfg.epsilon, &used);
      if (used != cfg.epsilon.size()) throw ConfigError("");
    } catch (const std::exception&) {
      throw ConfigError("--epsilon must be 'auto' or a number, got '" + cfg.epsilon + "'");
    }
    check_admissible(b2, epsilon);
    check_admissible(bp, epsilon);
  }
  ledger2 = build_ledger(setup->measured, 2.0, epsilon);
  ledger = build_ledger(setup->measured, p, epsilon);
}

int Context::ball_degree() const { return cfg.thresholds.at("ball_degree").get<int>(); }

//---------------------------------------------------------------------------
// Calculus

namespace {

int uniform_int(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

Rational random_rational(std::mt19937_64& rng) {
  Rational q(uniform_int(rng, -4, 4), uniform_int(rng, 1, 3));
  q.canonicalize();
  return q;
}

QPoly random_qpoly(int n, int deg, std::mt19937_64& rng) {
  QPoly p(n);
  for (const auto& e : monomials(n, deg))
    if (uniform_int(rng, 0, 1)) p.add_term(e, random_rational(rng));
  return p;
}

QForm random_qform(int n, int k, int deg, std::mt19937_64& rng) {
  QForm w(n, k);
  for (unsigned s : alternators(k, n)) w.add(s, random_qpoly(n, uniform_int(rng, 0, deg), rng));
  return w;
}

DForm random_dform(int n, int k, int deg, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  DForm w(n, k);
  for (unsigned s : alternators(k, n)) {
    DPoly p(n);
    for (const auto& e : monomials(n, deg)) p.add_term(e, uni(rng));
    w.add(s, p);
  }
  return w;
}

struct QAffine {
  std::vector<Rational> M, b;  // row-major rows x cols
};

QAffine random_qaffine(int rows, int cols, std::mt19937_64& rng) {
  QAffine a;
  for (int i = 0; i < rows * cols; ++i) a.M.push_back(random_rational(rng));
  for (int i = 0; i < rows; ++i) a.b.push_back(random_rational(rng));
  return a;
}

// G o F with G: R^m -> R^n and F: R^l -> R^m.
QAffine compose(const QAffine& G, const QAffine& F, int n, int m, int l) {
  QAffine c;
  c.M.assign(n * l, Rational(0));
  c.b = G.b;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      for (int t = 0; t < l; ++t) c.M[i * l + t] += G.M[i * m + j] * F.M[j * l + t];
      c.b[i] += G.M[i * m + j] * F.b[j];
    }
  return c;
}

WeightedChain random_chain(int n, int k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  WeightedChain c;
  c.k = k;
  c.n = n;
  const int terms = uniform_int(rng, 1, 3);
  for (int t = 0; t < terms; ++t) {
    ChainTerm term;
    term.weight = 2.0 * uni(rng);
    for (int v = 0; v <= k; ++v) {
      Point x{0, 0, 0};
      for (int i = 0; i < n; ++i) x[i] = uni(rng);
      term.verts.push_back(x);
    }
    c.terms.push_back(term);
  }
  return c;
}

}  // namespace

SuiteResult run_calculus(const RunConfig& cfg) {
  SuiteResult s;
  s.name = "calculus";
  const auto& t = cfg.thresholds.at("calculus");
  const int instances = t.at("instances").get<int>();
  const int deg = t.at("max_poly_degree").get<int>();
  std::mt19937_64 rng(cfg.seed * 1000003ull + 11);

  int bad_dd = 0, bad_leibniz = 0, bad_pullback = 0, bad_dpull = 0, bad_unisolvent = 0;
  double stokes = 0.0, mass_ratio = 0.0;
  for (int inst = 0; inst < instances; ++inst) {
    {
      const int n = uniform_int(rng, 2, 3);
      const QForm w = random_qform(n, uniform_int(rng, 0, n - 2), deg, rng);
      bad_dd += !w.exterior_derivative().exterior_derivative().is_zero();
    }
    {
      const int n = uniform_int(rng, 1, 3);
      const int k = uniform_int(rng, 0, n - 1), l = uniform_int(rng, 0, n - 1 - k);
      const QForm a = random_qform(n, k, deg, rng), b = random_qform(n, l, deg, rng);
      const QForm lhs = a.wedge(b).exterior_derivative();
      QForm rhs = a.exterior_derivative().wedge(b);
      rhs += a.wedge(b.exterior_derivative()).scaled(Rational(k % 2 ? -1 : 1));
      bad_leibniz += !(lhs - rhs).is_zero();
    }
    {
      const int n = uniform_int(rng, 1, 3), m = uniform_int(rng, 1, 3), l = uniform_int(rng, 1, 3);
      const int k = uniform_int(rng, 0, std::min({n, m, l}));
      const QForm w = random_qform(n, k, deg, rng);
      const QAffine G = random_qaffine(n, m, rng), F = random_qaffine(m, l, rng);
      const QAffine GF = compose(G, F, n, m, l);
      const QForm twice = w.pullback(G.M, G.b, m).pullback(F.M, F.b, l);
      bad_pullback += !(twice - w.pullback(GF.M, GF.b, l)).is_zero();
      if (k < std::min(n, m)) {
        const QForm a = w.exterior_derivative().pullback(G.M, G.b, m);
        const QForm b = w.pullback(G.M, G.b, m).exterior_derivative();
        bad_dpull += !(a - b).is_zero();
      }
    }
    {
      const int n = uniform_int(rng, 1, 3);
      SpaceSpec spec;
      spec.family = uniform_int(rng, 0, 1) ? Family::Full : Family::Minus;
      spec.r = uniform_int(rng, 1, n == 3 ? 2 : 3);
      spec.k = uniform_int(rng, 0, n);
      const auto& el = reference_element(spec, n);
      bool ok = el.size() == space_dimension(spec, n) && int(el.dofs.size()) == el.size();
      for (int i = 0; ok && i < el.size(); ++i)
        for (int j = 0; ok && j < el.size(); ++j) ok = reference_dof(el.dofs[i], el.basis[j], n) == Rational(i == j);
      ok = ok && exact_rank(form_coordinates(el.basis)) == el.size();
      bad_unisolvent += !ok;
    }
    {
      const int n = uniform_int(rng, 1, 3);
      const int k = uniform_int(rng, 0, n - 1);
      const WeightedChain c = random_chain(n, k + 1, rng);
      const DForm w = random_dform(n, k, deg, rng);
      stokes = std::max(stokes, std::abs(integrate_chain(boundary(c), w) - integrate_chain(c, w.exterior_derivative())));
    }
    {
      const int n = uniform_int(rng, 1, 3);
      const int k = uniform_int(rng, 0, n);
      const WeightedChain c = random_chain(n, k, rng);
      const DForm w = random_dform(n, k, deg, rng);
      const double bound = mass(c) * chain_node_max(c, w);
      if (bound > 0.0) mass_ratio = std::max(mass_ratio, std::abs(integrate_chain(c, w)) / bound);
    }
  }
  s.check_le("d_squared_zero", "d(d w) = 0 exactly (failing instances)", bad_dd, 0);
  s.check_le("leibniz", "d(a^b) = da^b + (-1)^k a^db exactly (failing instances)", bad_leibniz, 0);
  s.check_le("pullback_functorial", "(G F)^* = F^* G^* exactly (failing instances)", bad_pullback, 0);
  s.check_le("pullback_commutes_with_d", "G^* d = d G^* exactly (failing instances)", bad_dpull, 0);
  s.check_le("unisolvence", "reference DOFs dual to the basis exactly (failing instances)", bad_unisolvent, 0);
  s.check_le("stokes", "|int_{bd c} w - int_c dw|", stokes, t.at("stokes_tol").get<double>());
  s.check_le("mass_bound", "|int_c w| / (M(c) max|w|)", mass_ratio, 1.0 + t.at("mass_slack").get<double>());
  return s;
}

//---------------------------------------------------------------------------
// Spaces

SuiteResult run_spaces(const Context& ctx) {
  SuiteResult s;
  s.name = "spaces";
  const auto& t = ctx.cfg.thresholds.at("spaces");
  const auto& S = *ctx.setup;
  const int n = S.mesh.dim();
  std::mt19937_64 rng(ctx.cfg.seed * 1000003ull + 23);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);

  int bad_ref = 0;
  double mesh_dual = 0.0, commute = 0.0;
  bool continuous = true;
  for (int k = 0; k <= n; ++k) {
    const auto& V = S.spaces[k];
    const auto& el = V.reference();
    for (int i = 0; i < el.size(); ++i)
      for (int j = 0; j < el.size(); ++j) bad_ref += reference_dof(el.dofs[i], el.basis[j], n) != Rational(i == j);
    // I applied to an FE function returns its coefficients, from every cell touching the DOF face
    Eigen::VectorXd x(V.dim());
    for (int i = 0; i < V.dim(); ++i) x[i] = uni(rng);
    std::vector<DForm> forms;
    for (int c = 0; c < S.mesh.num_cells(); ++c) forms.push_back(V.cell_form(x, c));
    for (int g = 0; g < V.dim(); ++g) {
      const auto& d = V.dofs()[g];
      for (int c : S.mesh.cells_of(d.face_dim, d.face_id))
        mesh_dual = std::max(mesh_dual, std::abs(V.dof_apply(g, forms[c]) - x[g]));
    }
    continuous = continuous && V.check_tangential_continuity();
    if (k == n) continue;
    const auto& W = S.spaces[k + 1];
    const Eigen::MatrixXd D = derivative_matrix(V, W);
    for (int i = 0; i < t.at("random_inputs").get<int>(); ++i) {
      const DForm w = random_dform(n, k, V.spec().r + 2, rng);
      const Eigen::VectorXd a = D * V.interpolate(w), b = W.interpolate(w.exterior_derivative());
      commute = std::max(commute, (a - b).cwiseAbs().maxCoeff());
    }
  }
  s.check_le("reference_idempotent", "I on the reference basis is the identity exactly (mismatches)", bad_ref, 0);
  s.check_le("mesh_idempotent", "max |I(sum x_i phi_i) - x|", mesh_dual, t.at("duality_tol").get<double>());
  s.check_flag("tangential_continuity", "global basis has single-valued traces", continuous);
  s.check_le("interpolant_commutes", "max |D I w - I dw| for degree r+2 inputs", commute, t.at("commute_tol").get<double>());
  return s;
}

//---------------------------------------------------------------------------
// Geometry and extension

namespace {

double dist_inf(const Point& a, const Point& b) {
  return std::max({std::abs(a[0] - b[0]), std::abs(a[1] - b[1]), std::abs(a[2] - b[2])});
}

std::vector<Point> sample_interior(const DomainGeometry& geom, int count, std::mt19937_64& rng) {
  const int n = geom.dim();
  double lo[3], hi[3];
  geom.bounding_box(lo, hi, false);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<Point> pts;
  while (int(pts.size()) < count) {
    Point z{0, 0, 0};
    for (int i = 0; i < n; ++i) z[i] = lo[i] + uni(rng) * (hi[i] - lo[i]);
    if (geom.in_domain(z)) pts.push_back(z);
  }
  return pts;
}

Eigen::VectorXd random_coeffs(int dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Eigen::VectorXd x(dim);
  for (int i = 0; i < dim; ++i) x[i] = uni(rng);
  return x;
}

std::vector<DForm> fe_cell_forms(const FESpace& V, const Eigen::VectorXd& x) {
  std::vector<DForm> out;
  for (int c = 0; c < V.mesh().num_cells(); ++c) out.push_back(V.cell_form(x, c));
  return out;
}

}  // namespace

SuiteResult run_geometry(const Context& ctx) {
  SuiteResult s;
  s.name = "geometry";
  const auto& t = ctx.cfg.thresholds.at("geometry");
  const auto& S = *ctx.setup;
  const auto& geom = S.geom;
  const int n = S.mesh.dim();
  std::mt19937_64 rng(ctx.cfg.seed * 1000003ull + 37);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  double lo[3], hi[3];
  geom.bounding_box(lo, hi, true);
  double chart = 0.0, gauge_flip = 0.0, involution = 0.0, fixed = 0.0;
  int missing = 0, escaped = 0;
  for (int i = 0; i < t.at("samples").get<int>(); ++i) {
    Point z{0, 0, 0};
    for (int d = 0; d < n; ++d) z[d] = lo[d] + uni(rng) * (hi[d] - lo[d]);
    if (geom.in_extended(z)) chart = std::max(chart, dist_inf(geom.unflatten(geom.flatten(z)), z));
    const Point e = geom.sample_exterior_collar(rng);
    const Point u = geom.reflect(e);
    gauge_flip = std::max(gauge_flip, std::abs(geom.gauge(u) - (2.0 - geom.gauge(e))));
    involution = std::max(involution, dist_inf(geom.reflect(u), e));
    if (geom.find_piece(e) < 0) ++missing;
    else if (!geom.in_closure(geom.reflect_pl(e), 1e-9)) ++escaped;
    const Point b = geom.sample_boundary(rng);
    fixed = std::max({fixed, dist_inf(geom.reflect_pl(b), b), dist_inf(geom.reflect(b), b)});
  }
  const double rtol = t.at("reflect_tol").get<double>();
  s.check_le("flattening_inverse", "max |Phi^-1(Phi(z)) - z|", chart, t.at("chart_tol").get<double>());
  s.check_le("reflection_gauge", "max |g(A z) - (2 - g(z))|", gauge_flip, rtol);
  s.check_le("reflection_involution", "max |A(A z) - z|", involution, rtol);
  s.check_le("reflection_fixes_boundary", "max |A x - x| on the boundary", fixed, rtol);
  s.check_le("pl_pieces_cover_collar", "exterior collar samples outside every affine piece", missing, 0);
  s.check_le("pl_reflection_lands_inside", "piecewise affine images outside the closed domain", escaped, 0);

  // extension by the piecewise affine reflection
  const ExtendedPartition part(S.mesh, geom);
  auto box_ok = [&](const double* a, const double* b) {
    const int steps = 3;
    int idx[3] = {0, 0, 0};
    const int total = int(std::pow(steps + 1, n));
    for (int m = 0; m < total; ++m) {
      int r = m;
      Point z{0, 0, 0};
      for (int d = 0; d < n; ++d) {
        idx[d] = r % (steps + 1);
        r /= steps + 1;
        z[d] = a[d] + (b[d] - a[d]) * idx[d] / steps;
      }
      if (!geom.in_extended(z)) return false;
    }
    return true;
  };
  double weak = 0.0;
  for (int k = 0; k < n; ++k) {
    const auto& V = S.spaces[k];
    const auto forms = fe_cell_forms(V, random_coeffs(V.dim(), rng));
    std::vector<DForm> dforms;
    for (const auto& f : forms) dforms.push_back(f.exterior_derivative());
    const auto Ew = extend_piecewise(part, geom, forms);
    const auto Edw = extend_piecewise(part, geom, dforms);
    weak = std::max(weak, weak_derivative_residual(Ew, Edw, t.at("weak_trials").get<int>(),
                                                   ctx.cfg.seed + 101 * k, box_ok));
  }
  s.check_le("extension_commutes_with_d", "weak residual of d E w = E dw", weak, t.at("weak_tol").get<double>());

  const double p = ctx.ledger.p;
  double worst = 0.0;
  for (int i = 0; i < t.at("bound_forms").get<int>(); ++i) {
    const int k = i % (n + 1);
    const auto& V = S.spaces[k];
    const Eigen::VectorXd x = random_coeffs(V.dim(), rng);
    const double inner = lp_norm(piecewise_from_fe(V, x), p);
    const double outer = lp_norm(extend_piecewise(part, geom, fe_cell_forms(V, x)), p);
    if (inner > 0.0) worst = std::max(worst, outer / (ctx.ledger.per_k[k].C_E * inner));
  }
  s.check_le("extension_bound", "max |E w|_p / (C_E |w|_p)", worst, 1.0 + t.at("bound_slack").get<double>());
  return s;
}

//---------------------------------------------------------------------------
// Mollifier

namespace {

class ConstantForm : public FormEvaluator {
 public:
  ConstantForm(int n, int k, std::vector<double> c) : n_(n), k_(k), c_(std::move(c)) {}
  int dim() const override { return n_; }
  int degree() const override { return k_; }
  void eval(const Point&, double* vals, double* jac) const override {
    std::copy(c_.begin(), c_.end(), vals);
    if (jac) std::fill(jac, jac + c_.size() * n_, 0.0);
  }

 private:
  int n_, k_;
  std::vector<double> c_;
};

}  // namespace

SuiteResult run_mollifier(const Context& ctx) {
  SuiteResult s;
  s.name = "mollifier";
  const auto& t = ctx.cfg.thresholds.at("mollifier");
  const auto& S = *ctx.setup;
  const auto& geom = S.geom;
  const int n = S.mesh.dim();
  std::mt19937_64 rng(ctx.cfg.seed * 1000003ull + 53);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);

  // the mollifier's own admissibility bound, well away from the projection epsilon
  const double eps = t.at("epsilon_fraction").get<double>() * ctx.ledger2.eps.bound[0];
  const auto cfg = MollifierConfig::make(eps, *S.field, ctx.ball_degree());
  const auto pts = sample_interior(geom, t.at("points").get<int>(), rng);

  double const0 = 0.0, const1 = 0.0;
  for (int k = 0; k <= n; ++k) {
    std::vector<double> c(binomial(n, k));
    for (auto& v : c) v = uni(rng);
    const ConstantForm w(n, k, c);
    double& worst = k == 0 ? const0 : const1;
    for (const auto& x : pts) {
      const auto r = mollify_eval(cfg, w, x);
      for (std::size_t i = 0; i < c.size(); ++i) worst = std::max(worst, std::abs(r[i] - c[i]));
    }
  }
  s.check_le("constant_0_form", "max |R c - c|", const0, t.at("constant0_tol").get<double>());
  s.check_le("constant_k_form", "max |R w - w| for constant k-forms, k >= 1", const1, t.at("constant1_tol").get<double>());

  double commute = 0.0;
  int mismatches = 0, inside = 0, outside = 0;
  for (int k = 0; k < n; ++k) {
    const auto& V = S.spaces[k];
    const auto w = ExtendedForm::from_fe(V, geom, random_coeffs(V.dim(), rng));
    commute = std::max(commute, mollify_commutation_residual(cfg, w, pts));

    // locality: R of w masked to a ball agrees bitwise with R w where the flow stays in the ball
    const Point c = pts[k % pts.size()];
    double lo[3], hi[3];
    geom.bounding_box(lo, hi, false);
    double diam = 0.0;
    for (int d = 0; d < n; ++d) diam += (hi[d] - lo[d]) * (hi[d] - lo[d]);
    const double radius = 0.25 * std::sqrt(diam);
    const BallMaskedForm masked(w, c, radius);
    for (const auto& x : pts) {
      double dist = 0.0;
      for (int d = 0; d < n; ++d) dist += (x[d] - c[d]) * (x[d] - c[d]);
      dist = std::sqrt(dist);
      const double reach = eps * S.field->h(x) * (1.0 + 1e-12);
      const auto a = mollify_eval(cfg, masked, x);
      if (dist + reach < radius) {
        ++inside;
        mismatches += a != mollify_eval(cfg, w, x);
      } else if (dist - reach > radius) {
        ++outside;
        for (double v : a) mismatches += v != 0.0;
      }
    }
  }
  s.check_le("commutes_with_d", "max |d R w - R dw| for Whitney inputs", commute, t.at("commute_tol").get<double>());
  s.check_le("locality", "bitwise mismatches of R on masked inputs", mismatches, 0);
  s.check_flag("locality_coverage", "locality probed on both sides of the mask", inside > 0 && outside > 0);
  s.data["epsilon"] = eps;
  return s;
}

//---------------------------------------------------------------------------
// Projection

namespace {

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

double unit_ball_volume(int n) { return n == 1 ? 2.0 : n == 2 ? M_PI : 4.0 * M_PI / 3.0; }

// Recomputes every derived constant of the ledger from its measured inputs.
double ledger_formula_error(const ConstantLedger& L) {
  const auto& m = L.measured;
  const double p = L.p, eps = L.epsilon;
  const bool inf = std::isinf(p);
  const double np = inf ? 0.0 : m.n / p;
  double worst = 0.0;
  auto C_e_at = [&](int k, double e) {
    const double CEi = std::max(1.0, std::pow(m.lip_A, k));
    const double Cf = inf ? m.C_flat_inf[k] : m.C_flat_2[k];
    return std::pow(m.c_M, 2 * k + 1) * std::pow(m.C_M, 2 * k + 2 + np) * m.C_I[k] * m.C_h *
           std::pow(1.0 + m.c_M * m.C_M * m.L_h * e, k) * (1.0 + m.C_bd[k]) * CEi * Cf;
  };
  for (const auto& d : L.per_k) {
    const int k = d.k;
    const double CA = std::pow(m.lip_A, k) * std::pow(m.lip_A_inv, np);
    const double CE = inf ? std::max(1.0, CA) : std::pow(1.0 + std::pow(CA, p), 1.0 / p);
    const double CQ = std::pow(1.0 + eps * m.L_h, k) * unit_ball_volume(m.n) * std::pow(m.C_h, np) *
                      std::pow(m.c_M * m.C_M, k) * m.C_I[k] * CE;
    const double Cpi = 2.0 * CQ * (inf ? 1.0 : std::pow(m.C_N, 1.0 / p));
    worst = std::max({worst, rel_err(d.C_A, CA), rel_err(d.C_E, CE), rel_err(d.C_Q, CQ), rel_err(d.C_e, C_e_at(k, eps)),
                      rel_err(d.C_pi, Cpi)});
  }
  const double b[3] = {m.eps_h / m.C_h, m.eps_h / (m.L_Psi * m.C_h), m.eps_h / (m.L_Psi * m.C_M * m.C_h)};
  for (int i = 0; i < 3; ++i) worst = std::max(worst, rel_err(L.eps.bound[i], b[i]));
  double f = 0.0;
  for (int k = 0; k < int(m.C_I.size()); ++k) f = std::max(f, C_e_at(k, L.eps.bound[3]) * L.eps.bound[3]);
  worst = std::max(worst, rel_err(f, 2.0));
  double lowest = b[0];
  for (double v : {b[1], b[2], L.eps.bound[3]}) lowest = std::min(lowest, v);
  worst = std::max(worst, rel_err(L.eps.eps_max, 0.5 * lowest));
  return worst;
}

bool binding_is_minimal(const EpsilonBounds& e) {
  for (double v : e.bound)
    if (v < e.bound[e.binding]) return false;
  return !e.name[e.binding].empty();
}

std::vector<double> epsilon_ladder(double top, const json& t) {
  const int count = t.at("points").get<int>();
  const double span = t.at("span").get<double>();
  std::vector<double> out;
  for (int j = 0; j < count; ++j) out.push_back(top * std::pow(span, -double(j) / (count - 1)));
  return out;
}

std::string kname(const std::string& base, int k) { return base + "_k" + std::to_string(k); }

}  // namespace

SuiteResult run_projection_suite(const Context& ctx) {
  SuiteResult s;
  s.name = "projection";
  const auto& th = ctx.cfg.thresholds;
  const auto& t = th.at("projection");
  const auto& S = *ctx.setup;
  const int n = S.mesh.dim();
  const double eps = ctx.epsilon;
  const int ball = ctx.ball_degree();
  const auto& L = ctx.ledger2;
  std::mt19937_64 rng(ctx.cfg.seed * 1000003ull + 71);

  const auto run = run_projection(S, eps, ball);
  s.check_le("idempotent", "max_k |pi I_fine - Id| on the FE space", run.idempotency, t.at("idempotent_tol").get<double>());
  s.check_le("commutes_with_d", "max_k |D pi_k - pi_{k+1} D|", run.commutation, t.at("commute_tol").get<double>());
  s.check_le("q_commutes_with_d", "max_k |D Q_k - Q_{k+1} D| on the FE space", run.q_commutation,
             t.at("commute_tol").get<double>());
  for (const auto& d : run.degrees) {
    const int k = d.k;
    const Eigen::MatrixXd Id = Eigen::MatrixXd::Identity(d.Q_fe.rows(), d.Q_fe.cols());
    s.check_le(kname("norm", k), "|pi|_{L2} <= C_pi eps^(-n/2)", d.norm, L.per_k[k].C_pi * std::pow(eps, -n / 2.0));
    s.check_le(kname("defect", k), "|Id - Q| on the FE space (L2)", d.proj.defect_norm, t.at("defect_max").get<double>());
    s.check_le(kname("neumann", k), "max |sum (Id-Q)^i - J|", d.proj.neumann_gap, t.at("neumann_tol").get<double>());
    s.check_le(kname("inverse", k), "max |J Q - Id|", (d.proj.J * d.Q_fe - Id).cwiseAbs().maxCoeff(),
               t.at("inverse_tol").get<double>());
  }

  // sampled applicator on callables
  const auto cfg = MollifierConfig::make(eps, *S.field, ball);
  const ExtendedPartition part(S.mesh, S.geom);
  double zero = 0.0, callable = 0.0;
  for (int k = 0; k <= n; ++k) {
    const auto& V = S.spaces[k];
    const int qd = ctx.cfg.quad_degree > 0 ? ctx.cfg.quad_degree : 2 * V.reference().degree + 4;
    const auto w0 = ExtendedForm::from_fe(V, S.geom, Eigen::VectorXd::Zero(V.dim()));
    zero = std::max(zero, apply_Q_callable(V, part, cfg, w0, qd).cwiseAbs().maxCoeff());
    const Eigen::VectorXd x = random_coeffs(V.dim(), rng);
    const auto w = ExtendedForm::from_fe(V, S.geom, x);
    const Eigen::VectorXd y = run.degrees[k].proj.J * apply_Q_callable(V, part, cfg, w, qd);
    callable = std::max(callable, (y - x).cwiseAbs().maxCoeff());
  }
  s.check_le("q_of_zero", "max |Q 0|", zero, 0.0);
  s.check_le("callable_applicator", "max |J Q(w) - coeffs(w)| for FE inputs given as callables", callable,
             t.at("callable_tol").get<double>());

  // constant forms away from the boundary (everywhere for k = 0)
  const auto bmask = S.mesh.boundary_vertex_mask();
  double constant = 0.0;
  for (int k = 0; k <= n; ++k) {
    const auto& V = S.spaces[k];
    for (unsigned sig : alternators(k, n)) {
      DForm w(n, k);
      w.add(sig, DPoly::constant(n, 1.0));
      const Eigen::VectorXd c = V.interpolate(w);
      const Eigen::VectorXd r = run.degrees[k].Q_fe * c - c;
      const double scale = std::max(c.cwiseAbs().maxCoeff(), 1e-300);
      for (int g = 0; g < V.dim(); ++g) {
        const auto& dof = V.dofs()[g];
        bool touches = false;
        for (int v : S.mesh.simplex(dof.face_dim, dof.face_id).vertex_ids) touches = touches || bmask[v];
        if (k == 0 || !touches) constant = std::max(constant, std::abs(r[g]) / scale);
      }
    }
  }
  s.check_le("constant_forms", "max |Q c - c| / |c| (interior DOFs; all DOFs for k = 0)", constant,
             t.at("constant_tol").get<double>());

  // ratios and slopes of errors at roundoff level say nothing; such checks are listed as skipped
  const double floor = th.at("scaling").at("resolution_floor").get<double>();

  // halving epsilon
  const auto half = run_projection(S, 0.5 * eps, ball);
  for (int k = 0; k <= n; ++k) {
    const Eigen::MatrixXd Id = Eigen::MatrixXd::Identity(run.degrees[k].Q_fe.rows(), run.degrees[k].Q_fe.cols());
    const double a = (run.degrees[k].Q_fe - Id).cwiseAbs().maxCoeff();
    const double b = (half.degrees[k].Q_fe - Id).cwiseAbs().maxCoeff();
    if (a >= floor)
      s.check_le(kname("q_to_identity", k), "|Q(eps/2) - Id| / |Q(eps) - Id|", b / a, 1.0);
    else
      s.skip(kname("q_to_identity", k), "|Q(eps) - Id| below the resolution floor", a);
    s.check_le(kname("norm_halving", k), "|pi(eps/2)| / |pi(eps)|", half.degrees[k].norm / run.degrees[k].norm,
               std::pow(2.0, n / 2.0) * t.at("halving_slack").get<double>());
  }

  // interpolation error against epsilon
  const auto& st = th.at("scaling");
  const auto ladder = epsilon_ladder(eps, st);
  for (int k = 0; k <= n; ++k) {
    const auto pts = interpolation_error_study(S, k, ladder, ball, st.at("random_forms").get<int>(), ctx.cfg.seed + k);
    double smallest = INFINITY;
    for (const auto& q : pts) smallest = std::min(smallest, q.ratio);
    if (smallest >= floor)
      s.check_range(kname("scaling_slope", k), "log-log slope of |w - Q w|_T / |w|_patch in eps",
                    loglog_slope(pts), st.at("slope_min").get<double>(), st.at("slope_max").get<double>());
    else
      s.skip(kname("scaling_slope", k), "smallest |w - Q w|_T / |w|_patch below the resolution floor", smallest);
    for (std::size_t j = 0; j < pts.size(); ++j)
      s.check_le(kname("scaling", k) + "_eps" + std::to_string(j), "|w - Q w|_T / |w|_patch <= C_e eps", pts[j].ratio,
                 pts[j].ceiling);
  }

  // uniformity under refinement
  const auto& rt = th.at("refinement");
  if (n > rt.at("max_dim").get<int>() || !ctx.cfg.mesh_file.empty()) {
    s.data["refinement"] = "skipped";
  } else {
    const double e = ctx.cfg.epsilon == "auto" ? -1.0 : eps;
    const auto rows = refinement_study(ctx.cfg.domain, S.complex, rt.at("first").get<int>(), rt.at("last").get<int>(), e,
                                       th.at("collar_width").get<double>(), ball, ctx.cfg.seed);
    for (std::size_t l = 0; l < rows.size(); ++l)
      for (int k = 0; k <= n; ++k) {
        const std::string tag = kname("refine_level" + std::to_string(rows[l].level), k);
        s.check_le(tag + "_norm", "|pi|_{L2} <= C_pi eps^(-n/2)", rows[l].norm[k], rows[l].ceiling[k]);
        if (l > 0)
          s.check_le(tag + "_ratio", "|pi| on this level / |pi| on the previous level", rows[l].norm[k] / rows[l - 1].norm[k],
                     rt.at("ratio_max").get<double>());
      }
  }

  s.check_le("ledger_formulas", "max relative error of derived constants recomputed from measured inputs",
             std::max(ledger_formula_error(ctx.ledger2), ledger_formula_error(ctx.ledger)), t.at("ledger_rel_tol").get<double>());
  s.check_flag("binding_constraint_named", "the smallest admissibility bound is named as binding",
               binding_is_minimal(ctx.ledger2.eps) && binding_is_minimal(ctx.ledger.eps));
  return s;
}

//---------------------------------------------------------------------------
// Drivers

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"calculus", "spaces", "geometry", "mollifier", "projection"};
  return names;
}

namespace {

json context_ledger(const Context& ctx) {
  json j = ledger_json(ctx.ledger2);
  if (ctx.ledger.p != 2.0) j["requested_p"] = ledger_json(ctx.ledger);
  return j;
}

template <class F>
SuiteResult timed(const std::string& name, F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  SuiteResult r = f();
  const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cerr << "suite " << name << ": " << (r.pass() ? "pass" : "FAIL") << " (" << format_number(sec) << " s)\n";
  return r;
}

}  // namespace

std::vector<SuiteResult> run_suites(const std::string& which, const RunConfig& cfg, json* ledger_out) {
  const auto& names = suite_names();
  if (which != "all" && std::find(names.begin(), names.end(), which) == names.end())
    throw ConfigError("unknown suite '" + which + "'");
  if (which == "calculus") {
    // calculus needs no mesh, but the flags are still validated
    const auto mesh = load_or_generate_mesh(cfg);
    feec::parse_complex(cfg.complex, mesh.dim());
  }
  std::vector<SuiteResult> out;
  if (which == "all" || which == "calculus") out.push_back(timed("calculus", [&] { return run_calculus(cfg); }));
  if (which == "calculus") return out;
  const Context ctx(cfg);
  if (ledger_out) *ledger_out = context_ledger(ctx);
  auto want = [&](const char* n) { return which == "all" || which == n; };
  if (want("spaces")) out.push_back(timed("spaces", [&] { return run_spaces(ctx); }));
  if (want("geometry")) out.push_back(timed("geometry", [&] { return run_geometry(ctx); }));
  if (want("mollifier")) out.push_back(timed("mollifier", [&] { return run_mollifier(ctx); }));
  if (want("projection")) out.push_back(timed("projection", [&] { return run_projection_suite(ctx); }));
  return out;
}

StudyTable study_epsilon_scaling(const RunConfig& cfg) {
  const Context ctx(cfg);
  const auto& S = *ctx.setup;
  const int n = S.mesh.dim();
  const auto& st = cfg.thresholds.at("scaling");
  const auto ladder = epsilon_ladder(ctx.epsilon, st);
  std::vector<std::vector<ScalingPoint>> per_k;
  SuiteResult s;
  s.name = "epsilon-scaling";
  double worst_slope = 1.0;
  const double lo = st.at("slope_min").get<double>(), hi = st.at("slope_max").get<double>();
  for (int k = 0; k <= n; ++k) {
    per_k.push_back(interpolation_error_study(S, k, ladder, ctx.ball_degree(), st.at("random_forms").get<int>(),
                                              cfg.seed + k));
    const double slope = loglog_slope(per_k.back());
    s.check_range(kname("slope", k), "log-log slope of |w - Q w|_T / |w|_patch in eps", slope, lo, hi);
    if (std::abs(slope - 1.0) > std::abs(worst_slope - 1.0)) worst_slope = slope;
  }
  StudyTable tab;
  tab.key = "epsilon";
  for (std::size_t j = 0; j < ladder.size(); ++j) {
    double value = 0.0, ceiling = INFINITY;
    for (int k = 0; k <= n; ++k) {
      value = std::max(value, per_k[k][j].ratio);
      ceiling = std::min(ceiling, per_k[k][j].ceiling);
      s.check_le(kname("ratio", k) + "_eps" + std::to_string(j), "|w - Q w|_T / |w|_patch <= C_e eps",
                 per_k[k][j].ratio, per_k[k][j].ceiling);
    }
    tab.rows.push_back({format_number(ladder[j]), format_number(value), format_number(ceiling),
                        value <= ceiling ? "true" : "false"});
  }
  const bool slope_ok = worst_slope >= lo && worst_slope <= hi;
  tab.rows.push_back({"slope", format_number(worst_slope), format_number(lo) + ":" + format_number(hi),
                      slope_ok ? "true" : "false"});
  tab.pass = s.pass();
  tab.report = make_report("study epsilon-scaling", cfg, context_ledger(ctx), {s});
  return tab;
}

StudyTable study_refinement(const RunConfig& cfg) {
  if (!cfg.mesh_file.empty()) throw ConfigError("refinement-boundedness generates its own meshes; drop --mesh-file");
  const auto& rt = cfg.thresholds.at("refinement");
  RunConfig base = cfg;
  base.level = rt.at("first").get<int>();
  const Context ctx(base);  // admissibility of an explicit epsilon and the ledger
  const int n = ctx.setup->mesh.dim();
  const double e = cfg.epsilon == "auto" ? -1.0 : ctx.epsilon;
  const auto rows = refinement_study(cfg.domain, ctx.setup->complex, rt.at("first").get<int>(), rt.at("last").get<int>(),
                                     e, cfg.thresholds.at("collar_width").get<double>(), ctx.ball_degree(), cfg.seed);
  SuiteResult s;
  s.name = "refinement-boundedness";
  StudyTable tab;
  tab.key = "level";
  const double ratio_max = rt.at("ratio_max").get<double>();
  double worst_ratio = 0.0;
  for (std::size_t l = 0; l < rows.size(); ++l) {
    double value = 0.0, ceiling = INFINITY;
    for (int k = 0; k <= n; ++k) {
      const std::string tag = kname("level" + std::to_string(rows[l].level), k);
      value = std::max(value, rows[l].norm[k]);
      ceiling = std::min(ceiling, rows[l].ceiling[k]);
      s.check_le(tag + "_norm", "|pi|_{L2} <= C_pi eps^(-n/2)", rows[l].norm[k], rows[l].ceiling[k]);
      if (l > 0) {
        const double r = rows[l].norm[k] / rows[l - 1].norm[k];
        worst_ratio = std::max(worst_ratio, r);
        s.check_le(tag + "_ratio", "|pi| on this level / |pi| on the previous level", r, ratio_max);
      }
    }
    tab.rows.push_back({std::to_string(rows[l].level), format_number(value), format_number(ceiling),
                        value <= ceiling ? "true" : "false"});
  }
  tab.rows.push_back({"ratio", format_number(worst_ratio), format_number(ratio_max),
                      worst_ratio <= ratio_max ? "true" : "false"});
  if (!rows.empty()) s.data["epsilon"] = rows.front().epsilon;
  tab.pass = s.pass();
  tab.report = make_report("study refinement-boundedness", cfg, context_ledger(ctx), {s});
  return tab;
}

}  // namespace feecproj
