#include "feec/projection.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <random>

#include "feec/chains.hpp"
#include "feec/clip.hpp"
#include "feec/parallel.hpp"

namespace feec {

namespace {

double factorial(int m) {
  double f = 1.0;
  for (int i = 2; i <= m; ++i) f *= i;
  return f;
}

bool inside(const std::vector<HalfSpace>& hs, const Point& x, int n, double tol) {
  for (const auto& h : hs) {
    double s = -h.c;
    for (int i = 0; i < n; ++i) s += h.a[i] * x[i];
    if (s > tol) return false;
  }
  return true;
}

// Runs body(i) for i in [0, count), rethrowing the first exception after the loop.
template <class F>
void for_rows(int count, bool parallel, F&& body) {
  std::exception_ptr err;
  std::mutex mu;
  const int threads = parallel ? worker_count() : 1;
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads) if (parallel)
  for (int i = 0; i < count; ++i) {
    try {
      body(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu);
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
}

}  // namespace

//---------------------------------------------------------------------------

ExtendedPartition::ExtendedPartition(const Triangulation& source, const DomainGeometry& geom) {
  const int n = source.dim();
  if (geom.dim() != n) throw GeometryMismatch("mesh and geometry dimensions differ");
  std::vector<std::array<double, 6>> boxes;
  std::vector<std::array<double, 6>> cell_boxes(source.num_cells());
  for (int c = 0; c < source.num_cells(); ++c) {
    Piece p;
    for (int v : source.simplex(n, c).vertex_ids) p.simplex.push_back(source.vertex(v));
    p.region = simplex_halfspaces(p.simplex, n);
    p.cell = c;
    std::array<double, 6> box{0, 0, 0, 0, 0, 0};
    source.bounding_box(c, box.data(), box.data() + 3);
    cell_boxes[c] = box;
    p.box = box;
    pieces_.push_back(std::move(p));
    boxes.push_back(box);
  }
  BoxGrid cells;
  cells.build(n, cell_boxes, 1e-9);
  std::vector<int> cand;
  const auto& refl = geom.reflection_pieces();
  for (int r = 0; r < int(refl.size()); ++r) {
    const auto& piece = refl[r];
    const auto& map = piece.map;
    double lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
    for (int i = 0; i < n; ++i) {
      lo[i] = std::numeric_limits<double>::infinity();
      hi[i] = -lo[i];
    }
    for (const auto& v : piece.simplex) {
      Point u = map.apply(v);
      for (int i = 0; i < n; ++i) {
        lo[i] = std::min(lo[i], u[i]);
        hi[i] = std::max(hi[i], u[i]);
      }
    }
    cells.candidates_box(lo, hi, cand);
    const auto own = simplex_halfspaces(piece.simplex, n);
    const AffineSimplex body = affine_simplex_from_vertices(piece.simplex, n);
    const double vol = simplex_k_volume(piece.simplex, n);
    for (int c : cand) {
      // a . (A z + t) <= c  <=>  (A^T a) . z <= c - a . t
      std::vector<HalfSpace> pulled;
      for (const auto& h : pieces_[c].region) {
        HalfSpace q;
        double norm = 0.0, shift = 0.0;
        for (int j = 0; j < n; ++j) {
          double s = 0.0;
          for (int i = 0; i < n; ++i) s += h.a[i] * map.A(i, j);
          q.a[j] = s;
          norm += s * s;
        }
        for (int i = 0; i < n; ++i) shift += h.a[i] * map.t[i];
        norm = std::sqrt(norm);
        for (int j = 0; j < n; ++j) q.a[j] /= norm;
        q.c = (h.c - shift) / norm;
        pulled.push_back(q);
      }
      auto parts = clip_simplex(body, pulled);
      double measure = 0.0;
      std::array<double, 6> box{0, 0, 0, 0, 0, 0};
      for (int i = 0; i < n; ++i) {
        box[i] = std::numeric_limits<double>::infinity();
        box[3 + i] = -box[i];
      }
      for (const auto& part : parts) {
        measure += parameter_measure(part, n);
        for (const auto& t : part) {
          Point x = body.map(t);
          for (int i = 0; i < n; ++i) {
            box[i] = std::min(box[i], x[i]);
            box[3 + i] = std::max(box[3 + i], x[i]);
          }
        }
      }
      if (measure * factorial(n) * vol <= 1e-14 * vol) continue;
      Piece p;
      p.simplex = piece.simplex;
      p.region = own;
      p.region.insert(p.region.end(), pulled.begin(), pulled.end());
      p.cell = c;
      p.reflect = r;
      p.box = box;
      pieces_.push_back(std::move(p));
      boxes.push_back(box);
    }
  }
  grid_.build(n, boxes, 1e-9);
}

std::vector<std::vector<Point>> ExtendedPartition::piece_simplices(int p) const {
  const auto& pc = pieces_[p];
  const int n = int(pc.simplex.size()) - 1;
  if (pc.reflect < 0) return {pc.simplex};
  const AffineSimplex body = affine_simplex_from_vertices(pc.simplex, n);
  std::vector<std::vector<Point>> out;
  for (const auto& part : clip_simplex(body, pc.region)) {
    std::vector<Point> xs;
    for (const auto& t : part) xs.push_back(body.map(t));
    out.push_back(std::move(xs));
  }
  return out;
}

PiecewiseForm extend_piecewise(const ExtendedPartition& part, const DomainGeometry& geom,
                               const std::vector<DForm>& cell_forms, bool exterior_only) {
  PiecewiseForm f;
  f.n = geom.dim();
  f.k = cell_forms.empty() ? 0 : cell_forms[0].degree();
  f.tangential = true;
  const int n = f.n;
  for (int p = 0; p < int(part.pieces().size()); ++p) {
    const auto& pc = part.pieces()[p];
    if (pc.reflect < 0) {
      if (!exterior_only) f.add(pc.simplex, cell_forms[pc.cell]);
      continue;
    }
    const auto& map = geom.reflection_pieces()[pc.reflect].map;
    std::vector<double> M(n * n), b(n);
    for (int i = 0; i < n; ++i) {
      b[i] = map.t[i];
      for (int j = 0; j < n; ++j) M[i * n + j] = map.A(i, j);
    }
    const DForm pulled = cell_forms[pc.cell].pullback(M, b, n);
    for (auto& s : part.piece_simplices(p)) f.add(s, pulled);
  }
  return f;
}

//---------------------------------------------------------------------------

namespace {

// Quadrature of every flowed copy of DOF face g, split along the extended partition. Calls
// sink(piece, x, lin, weight): the DOF integrand at the flowed point x is lin . (components at x).
template <class Sink>
void visit_flowed_dof(const FESpace& target, const ExtendedPartition& part, const MollifierConfig& cfg, int g,
                      int quad, Sink&& sink) {
  const int n = target.n(), k = target.spec().k;
  const auto& vh = cfg.field->vertex_h();
  const auto& pieces = part.pieces();
  const auto& d = target.dofs()[g];
  const int m = d.face_dim;
  std::vector<double> M, b;
  target.face_chart(m, d.face_id, M, b);
  const auto& ids = target.mesh().simplex(m, d.face_id).vertex_ids;
  const DForm w = target.dof_weight(g).convert<double>();
  const auto& rule = cached_simplex_rule(m, quad);
  const auto& sig_n = alternators(k, n);
  const auto& sig_m = alternators(k, m);
  const auto& sig_w = alternators(m - k, m);
  const unsigned full = (1u << m) - 1u;
  std::vector<std::vector<int>> rows_n, cols_m;
  for (unsigned a : sig_n) rows_n.push_back(mask_indices(a));
  for (unsigned c : sig_m) cols_m.push_back(mask_indices(c));
  // wedge coefficients: acc = sum_c tr_c * coef_c(t)
  std::vector<std::pair<int, int>> pairs;
  std::vector<int> signs;
  for (std::size_t c = 0; c < sig_m.size(); ++c)
    for (std::size_t e = 0; e < sig_w.size(); ++e) {
      if ((sig_m[c] | sig_w[e]) != full) continue;
      int s = wedge_sign(sig_m[c], sig_w[e]);
      if (s) {
        pairs.emplace_back(int(c), int(e));
        signs.push_back(s);
      }
    }

  std::vector<double> Mq(M.size()), bq(n), minors(sig_n.size() * sig_m.size());
  std::vector<double> coef(sig_m.size()), lin(sig_n.size());
  std::vector<int> cand, dof_cand;
  if (m > 0) {
    // every flowed copy of the face lies within eps max(h) of it
    double hmax = 0.0;
    for (int v : ids) hmax = std::max(hmax, vh[v]);
    double ymax = 0.0;
    for (const auto& y : cfg.nodes) ymax = std::max(ymax, std::sqrt(y[0] * y[0] + y[1] * y[1] + y[2] * y[2]));
    const double reach = cfg.epsilon * hmax * ymax * (1.0 + 1e-12) + 1e-12;
    double lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
    for (int i = 0; i < n; ++i) {
      lo[i] = hi[i] = b[i];
      for (int j = 0; j < m; ++j) {
        lo[i] = std::min(lo[i], b[i] + M[i * m + j]);
        hi[i] = std::max(hi[i], b[i] + M[i * m + j]);
      }
      lo[i] -= reach;
      hi[i] += reach;
    }
    part.grid().candidates_box(lo, hi, dof_cand);
  }

  auto emit = [&](int p, const Point& x, const double* t, double weight) {
    auto wv = w.evaluate_double(t);
    std::fill(coef.begin(), coef.end(), 0.0);
    for (std::size_t z = 0; z < pairs.size(); ++z)
      coef[pairs[z].first] += signs[z] * (wv.empty() ? 0.0 : wv[pairs[z].second]);
    for (std::size_t a = 0; a < sig_n.size(); ++a) {
      lin[a] = 0.0;
      for (std::size_t c = 0; c < sig_m.size(); ++c) lin[a] += minors[a * sig_m.size() + c] * coef[c];
    }
    sink(p, x, lin.data(), weight);
  };

  for (std::size_t q = 0; q < cfg.nodes.size(); ++q) {
    const Point& y = cfg.nodes[q];
    const double eh0 = cfg.epsilon * vh[ids[0]];
    for (int i = 0; i < n; ++i) {
      bq[i] = b[i] + eh0 * y[i];
      for (int j = 0; j < m; ++j) Mq[i * m + j] = M[i * m + j] + cfg.epsilon * y[i] * (vh[ids[j + 1]] - vh[ids[0]]);
    }
    for (std::size_t a = 0; a < sig_n.size(); ++a)
      for (std::size_t c = 0; c < sig_m.size(); ++c)
        minors[a * sig_m.size() + c] = minor_det(Mq.data(), m, rows_n[a], cols_m[c]);

    if (m == 0) {
      Point x{0, 0, 0};
      for (int i = 0; i < n; ++i) x[i] = bq[i];
      const auto* list = part.grid().candidates(x.data());
      int hit = -1;
      if (list)
        for (int p : *list)
          if (inside(pieces[p].region, x, n, 1e-10)) {
            hit = p;
            break;
          }
      if (hit < 0) throw EvaluationOutsideExtendedDomain("flowed vertex outside the extended domain");
      const double t0[3] = {0, 0, 0};
      emit(hit, x, t0, cfg.weights[q]);
      continue;
    }

    AffineSimplex S;
    S.m = m;
    S.n = n;
    S.M = Mq;
    S.b = bq;
    double lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
    for (int i = 0; i < n; ++i) {
      lo[i] = hi[i] = bq[i];
      for (int j = 0; j < m; ++j) {
        lo[i] = std::min(lo[i], bq[i] + Mq[i * m + j]);
        hi[i] = std::max(hi[i], bq[i] + Mq[i * m + j]);
      }
    }
    cand.clear();
    const double pad = part.grid().pad();
    for (int p : dof_cand) {
      const auto& bx = pieces[p].box;
      bool hit = true;
      for (int i = 0; i < n; ++i) hit &= hi[i] >= bx[i] - pad && lo[i] <= bx[3 + i] + pad;
      if (hit) cand.push_back(p);
    }
    // Fast path: one region holds the whole flowed face. Traces agree across shared facets
    // (tangential continuity), so any such region gives the exact integral.
    std::vector<Point> corners(m + 1, Point{0, 0, 0});
    for (int i = 0; i < n; ++i) {
      corners[0][i] = bq[i];
      for (int j = 0; j < m; ++j) corners[j + 1][i] = bq[i] + Mq[i * m + j];
    }
    // drop candidates separated from the face by one of their planes
    std::size_t kept = 0;
    for (int p : cand) {
      bool separated = false;
      for (const auto& h : pieces[p].region) {
        if (parallel_reject(S, h)) {
          separated = true;
          break;
        }
        // outside up to touching: the overlap has zero m-measure
        bool out = true, strictly = false;
        for (const auto& x : corners) {
          double s = -h.c;
          for (int i = 0; i < n; ++i) s += h.a[i] * x[i];
          out = out && s > -1e-12;
          strictly = strictly || s > 1e-12;
        }
        if (out && strictly) {
          separated = true;
          break;
        }
      }
      if (!separated) cand[kept++] = p;
    }
    cand.resize(kept);
    int whole = -1;
    for (int p : cand) {
      bool all = true;
      for (const auto& x : corners) all = all && inside(pieces[p].region, x, n, 1e-12);
      if (all) {
        whole = p;
        break;
      }
    }
    std::vector<std::vector<Point>> identity_part;
    if (whole >= 0) {
      identity_part.push_back(std::vector<Point>(m + 1, Point{0, 0, 0}));
      for (int j = 0; j < m; ++j) identity_part[0][j + 1][j] = 1.0;
    }
    double covered = 0.0;
    for (int p : whole >= 0 ? std::vector<int>{whole} : cand) {
      std::vector<std::vector<Point>> subs;
      if (whole >= 0) {
        subs = identity_part;
      } else {
        // planes strictly containing the face do not cut it
        std::vector<HalfSpace> cutting;
        for (const auto& h : pieces[p].region) {
          bool strict = true;
          for (const auto& x : corners) {
            double sd = -h.c;
            for (int i = 0; i < n; ++i) sd += h.a[i] * x[i];
            strict = strict && sd < -1e-9;
          }
          if (!strict) cutting.push_back(h);
        }
        subs = clip_simplex(S, cutting);
      }
      for (const auto& sub : subs) {
        const double meas = parameter_measure(sub, m);
        if (!(meas > 0.0)) continue;
        covered += meas;
        const double jac = meas * factorial(m);
        for (int r = 0; r < rule.size(); ++r) {
          const double* s = rule.points[r].data();
          double t[3] = {0, 0, 0};
          for (int j = 0; j < m; ++j) {
            t[j] = sub[0][j];
            for (int l = 0; l < m; ++l) t[j] += s[l] * (sub[l + 1][j] - sub[0][j]);
          }
          Point x{0, 0, 0};
          for (int i = 0; i < n; ++i) {
            x[i] = bq[i];
            for (int j = 0; j < m; ++j) x[i] += Mq[i * m + j] * t[j];
          }
          emit(p, x, t, cfg.weights[q] * jac * rule.weights[r]);
        }
      }
    }
    const double ref = 1.0 / factorial(m);
    if (std::abs(covered - ref) > 1e-9 * ref)
      throw EvaluationOutsideExtendedDomain("flowed DOF face leaves the extended domain (dof " + std::to_string(g) +
                                            ", covered " + std::to_string(covered / ref) + ")");
  }
}

void check_field(const FESpace& target, const MollifierConfig& cfg) {
  if (int(cfg.field->vertex_h().size()) != target.mesh().num_vertices())
    throw GeometryMismatch("mesh-size field must live on the target mesh");
}

}  // namespace

Eigen::MatrixXd assemble_Q(const FESpace& target, const FESpace& source, const ExtendedPartition& part,
                           const DomainGeometry& geom, const MollifierConfig& cfg, bool parallel) {
  const int n = target.n(), k = target.spec().k;
  if (source.n() != n || source.spec().k != k) throw DimensionMismatch("source and target spaces differ");
  check_field(target, cfg);
  const auto& refl = geom.reflection_pieces();
  const auto& pieces = part.pieces();
  const int N = binomial(n, k);
  const int quad = std::min(20, source.spec().r + target.spec().r);
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(target.dim(), source.dim());

  for_rows(target.dim(), parallel, [&](int g) {
    std::vector<double> row(source.dim(), 0.0), vals(N);
    visit_flowed_dof(target, part, cfg, g, quad, [&](int p, const Point& x, const double* lin, double weight) {
      const auto& pc = pieces[p];
      Point u = x;
      if (pc.reflect >= 0) u = refl[pc.reflect].map.apply(x);
      const auto& cg = source.geometry(pc.cell);
      double tc[3] = {0, 0, 0};
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) tc[i] += cg.M_inv(i, j) * (u[j] - cg.b(j));
      const auto& cd = source.cell_dofs(pc.cell);
      for (std::size_t i = 0; i < cd.size(); ++i) {
        source.eval_local(pc.cell, int(i), tc, vals.data());
        if (pc.reflect >= 0 && k > 0) vals = pullback_covector(refl[pc.reflect].map.A, n, k, vals);
        double acc = 0.0;
        for (int a = 0; a < N; ++a) acc += lin[a] * vals[a];
        row[cd[i]] += weight * acc;
      }
    });
    for (int j = 0; j < source.dim(); ++j) Q(g, j) = row[j];
  });
  return Q;
}

Eigen::VectorXd apply_Q_callable(const FESpace& target, const ExtendedPartition& part, const MollifierConfig& cfg,
                                 const FormEvaluator& omega, int quad_degree, bool parallel) {
  check_field(target, cfg);
  if (omega.dim() != target.n() || omega.degree() != target.spec().k) throw DimensionMismatch("form and space differ");
  const int N = target.ncomp();
  Eigen::VectorXd out(target.dim());
  for_rows(target.dim(), parallel, [&](int g) {
    std::vector<double> vals(N);
    double total = 0.0;
    visit_flowed_dof(target, part, cfg, g, std::min(20, quad_degree), [&](int, const Point& x, const double* lin, double weight) {
      omega.eval(x, vals.data(), nullptr);
      double acc = 0.0;
      for (int a = 0; a < N; ++a) acc += lin[a] * vals[a];
      total += weight * acc;
    });
    out[g] = total;
  });
  return out;
}

Eigen::VectorXd apply_Q_sampled(const FESpace& target, const MollifierConfig& cfg, const FormEvaluator& omega,
                                int quad_degree, bool parallel) {
  Eigen::VectorXd out(target.dim());
  const int N = target.ncomp();
  for_rows(target.dim(), parallel, [&](int g) {
    out[g] = target.dof_apply(
        g,
        [&](const double* x, double* v) {
          auto r = mollify_eval(cfg, omega, Point{x[0], x[1], x[2]});
          for (int s = 0; s < N; ++s) v[s] = r[s];
        },
        quad_degree);
  });
  return out;
}

Eigen::MatrixXd prolongation(const FESpace& coarse, const FESpace& fine) {
  const int n = coarse.n();
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(fine.dim(), coarse.dim());
  for (int i = 0; i < fine.dim(); ++i) {
    const auto& d = fine.dofs()[i];
    const auto& ids = fine.mesh().simplex(d.face_dim, d.face_id).vertex_ids;
    Point x{0, 0, 0};
    for (int v : ids)
      for (int j = 0; j < n; ++j) x[j] += fine.mesh().vertex(v)[j] / double(ids.size());
    auto loc = coarse.mesh().locate(x.data(), 1e-9);
    if (!loc) throw GeometryMismatch("fine mesh is not nested in the coarse mesh");
    const int c = loc->cell_id;
    const auto& cd = coarse.cell_dofs(c);
    for (std::size_t a = 0; a < cd.size(); ++a) P(i, cd[a]) = fine.dof_apply(i, coarse.cell_form(c, int(a)));
  }
  return P;
}

double gram_operator_norm(const Eigen::MatrixXd& A, const Eigen::MatrixXd& G_to, const Eigen::MatrixXd& G_from) {
  // |A| = |L_to^T A L_from^{-T}|_2 with G = L L^T
  Eigen::LLT<Eigen::MatrixXd> Lt(G_to), Lf(G_from);
  if (Lt.info() != Eigen::Success || Lf.info() != Eigen::Success)
    throw SingularDOF("Gram matrix is not positive definite");
  Eigen::MatrixXd X = Lf.matrixL().solve(A.transpose());  // L_from^{-1} A^T
  Eigen::MatrixXd B = Lt.matrixL().transpose() * X.transpose();
  Eigen::MatrixXd BBt = B * B.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(BBt, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

Projection build_projection(const Eigen::MatrixXd& Q_fe, const Eigen::MatrixXd& Q_source, const Eigen::MatrixXd& gram) {
  Projection out;
  const int d = int(Q_fe.rows());
  const Eigen::MatrixXd Id = Eigen::MatrixXd::Identity(d, d);
  const Eigen::MatrixXd defect = Id - Q_fe;
  out.defect_norm = gram_operator_norm(defect, gram, gram);
  if (!(out.defect_norm < 1.0))
    throw NeumannDivergence("|Id - Q| = " + std::to_string(out.defect_norm) + " is not below 1");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(Q_fe);
  if (!lu.isInvertible() || lu.rcond() < 1e-14) throw SingularDOF("Q restricted to the FE space is singular");
  out.J = lu.inverse();
  out.pi = out.J * Q_source;
  Eigen::MatrixXd term = Id, sum = Id;
  for (int i = 1; i <= 20; ++i) {
    term = term * defect;
    sum += term;
  }
  out.neumann_gap = (sum - out.J).cwiseAbs().maxCoeff();
  return out;
}

//---------------------------------------------------------------------------

MeasuredConstants measure_constants(const Triangulation& mesh, const DomainGeometry& geom, const MeshSizeField& field,
                                    const ComplexSpec& complex, std::uint64_t seed) {
  MeasuredConstants m;
  m.n = mesh.dim();
  m.C_mesh = shape_constant(mesh);
  m.C_N = neighbor_count_constant(mesh);
  m.eps_h = field.eps_h();
  auto [cM, CM] = chart_constants(mesh);
  m.c_M = cM;
  m.C_M = CM;
  m.L_Psi = geom.constants().psi_upper;
  m.L_h = field.L_h();
  m.C_h = field.C_h();
  m.L_Omega = inner_metric_constant(geom);
  m.lip_A = geom.constants().lip_reflect;
  m.lip_A_inv = geom.constants().lip_reflect_inv;
  for (const auto& spec : complex.spaces) {
    auto ic = measure_inverse_constants(spec, m.n, 400, seed);
    m.C_I.push_back(ic.C_interp);
    m.C_bd.push_back(ic.C_boundary);
    m.C_flat_2.push_back(ic.C_flat_2);
    m.C_flat_inf.push_back(ic.C_flat_inf);
  }
  return m;
}

DegreeConstants derive_constants(const MeasuredConstants& m, int k, double p, double epsilon) {
  DegreeConstants d;
  d.k = k;
  const double n = m.n;
  const bool inf = std::isinf(p);
  const double n_p = inf ? 0.0 : n / p;
  d.C_A = std::pow(m.lip_A, k) * std::pow(m.lip_A_inv, n_p);
  d.C_E = inf ? std::max(1.0, d.C_A) : std::pow(1.0 + std::pow(d.C_A, p), 1.0 / p);
  d.C_E_inf = std::max(1.0, std::pow(m.lip_A, k));
  d.C_flat = inf ? m.C_flat_inf[k] : m.C_flat_2[k];
  d.C_Q = std::pow(1.0 + epsilon * m.L_h, k) * ball_volume(m.n) * std::pow(m.C_h, n_p) * std::pow(m.c_M, k) *
          std::pow(m.C_M, k) * m.C_I[k] * d.C_E;
  d.C_e = std::pow(m.c_M, 2 * k + 1) * std::pow(m.C_M, 2 * k + 2 + n_p) * m.C_I[k] * m.C_h *
          std::pow(1.0 + m.c_M * m.C_M * m.L_h * epsilon, k) * (1.0 + m.C_bd[k]) * d.C_E_inf * d.C_flat;
  d.C_pi = 2.0 * d.C_Q * (inf ? 1.0 : std::pow(m.C_N, 1.0 / p));
  return d;
}

EpsilonBounds admissible_epsilon(const MeasuredConstants& m, double p) {
  EpsilonBounds e;
  e.name = {"C_h eps < eps_h", "L_Psi C_h eps < eps_h", "L_Psi C_M C_h eps < eps_h", "C_e eps < 2"};
  e.bound[0] = m.eps_h / m.C_h;
  e.bound[1] = m.eps_h / (m.L_Psi * m.C_h);
  e.bound[2] = m.eps_h / (m.L_Psi * m.C_M * m.C_h);
  auto f = [&](double eps) {
    double worst = 0.0;
    for (int k = 0; k < int(m.C_I.size()); ++k) worst = std::max(worst, derive_constants(m, k, p, eps).C_e);
    return worst * eps;
  };
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200 && f(hi) < 2.0; ++it) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 2.0 ? lo : hi) = mid;
  }
  e.bound[3] = lo;
  const int order[4] = {2, 1, 0, 3};
  e.binding = order[0];
  for (int i : order)
    if (e.bound[i] < e.bound[e.binding]) e.binding = i;
  const double b = e.bound[e.binding];
  if (!(b > 0.0) || !std::isfinite(b)) throw EmptyAdmissibleRange("no admissible epsilon: " + e.name[e.binding]);
  e.eps_max = 0.5 * b;
  return e;
}

ConstantLedger build_ledger(const MeasuredConstants& m, double p, double epsilon) {
  ConstantLedger L;
  L.measured = m;
  L.p = p;
  L.eps = admissible_epsilon(m, p);
  L.epsilon = epsilon > 0.0 ? epsilon : L.eps.eps_max;
  for (int k = 0; k < int(m.C_I.size()); ++k) {
    L.per_k.push_back(derive_constants(m, k, p, L.epsilon));
    L.C_Q = std::max(L.C_Q, L.per_k.back().C_Q);
    L.C_e = std::max(L.C_e, L.per_k.back().C_e);
    L.C_pi = std::max(L.C_pi, L.per_k.back().C_pi);
  }
  return L;
}

//---------------------------------------------------------------------------

LevelSetup::LevelSetup(const std::string& domain, int level, const ComplexSpec& cplx, double collar_width,
                       std::uint64_t seed, const Triangulation* mesh_override)
    : mesh(mesh_override ? *mesh_override : generate_domain_mesh(domain, level)),
      fine(refine_uniform(mesh)),
      geom(DomainGeometry::make(domain, collar_width)),
      complex(cplx) {
  check_complex(complex, mesh.dim());
  eps_h = neighborhood_constant(mesh, geom);
  field = std::make_unique<MeshSizeField>(mesh, geom, eps_h);
  measured = measure_constants(mesh, geom, *field, complex, seed);
  for (const auto& s : complex.spaces) {
    spaces.emplace_back(mesh, s);
    fine_spaces.emplace_back(fine, s);
  }
}

ProjectionRun run_projection(const LevelSetup& setup, double epsilon, int ball_degree, bool parallel) {
  ProjectionRun run;
  run.epsilon = epsilon;
  const auto cfg = MollifierConfig::make(epsilon, *setup.field, ball_degree);
  const ExtendedPartition coarse(setup.mesh, setup.geom), fine(setup.fine, setup.geom);
  const int n = setup.mesh.dim();
  for (int k = 0; k <= n; ++k) {
    DegreeProjection d;
    d.k = k;
    const auto& V = setup.spaces[k];
    const auto& W = setup.fine_spaces[k];
    d.Q_fe = assemble_Q(V, V, coarse, setup.geom, cfg, parallel);
    d.Q_src = assemble_Q(V, W, fine, setup.geom, cfg, parallel);
    d.P = prolongation(V, W);
    d.gram = V.gram();
    d.gram_fine = W.gram();
    d.proj = build_projection(d.Q_fe, d.Q_src, d.gram);
    d.norm = gram_operator_norm(d.proj.pi, d.gram, d.gram_fine);
    const Eigen::MatrixXd Id = Eigen::MatrixXd::Identity(V.dim(), V.dim());
    run.idempotency = std::max(run.idempotency, (d.proj.pi * d.P - Id).cwiseAbs().maxCoeff());
    run.degrees.push_back(std::move(d));
  }
  for (int k = 0; k < n; ++k) {
    run.D.push_back(derivative_matrix(setup.spaces[k], setup.spaces[k + 1]));
    run.D_fine.push_back(derivative_matrix(setup.fine_spaces[k], setup.fine_spaces[k + 1]));
    const auto& a = run.degrees[k];
    const auto& b = run.degrees[k + 1];
    run.commutation =
        std::max(run.commutation, (run.D[k] * a.proj.pi - b.proj.pi * run.D_fine[k]).cwiseAbs().maxCoeff());
    run.q_commutation = std::max(run.q_commutation, (run.D[k] * a.Q_fe - b.Q_fe * run.D[k]).cwiseAbs().maxCoeff());
  }
  return run;
}

//---------------------------------------------------------------------------

namespace {

// Cell-local Gram matrices on the cell DOFs.
std::vector<Eigen::MatrixXd> cell_grams(const FESpace& V) {
  const int n = V.n(), N = V.ncomp();
  const auto& rule = cached_simplex_rule(n, std::min(20, 2 * V.spec().r));
  std::vector<Eigen::MatrixXd> out(V.mesh().num_cells());
  for (int c = 0; c < V.mesh().num_cells(); ++c) {
    const int L = int(V.cell_dofs(c).size());
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(L, L);
    std::vector<double> vals(L * N);
    for (int q = 0; q < rule.size(); ++q) {
      for (int i = 0; i < L; ++i) V.eval_local(c, i, rule.points[q].data(), vals.data() + i * N);
      for (int i = 0; i < L; ++i)
        for (int j = 0; j < L; ++j) {
          double s = 0.0;
          for (int a = 0; a < N; ++a) s += vals[i * N + a] * vals[j * N + a];
          G(i, j) += rule.weights[q] * s;
        }
    }
    out[c] = G * V.geometry(c).abs_det;
  }
  return out;
}

std::vector<double> cell_norms2(const FESpace& V, const std::vector<Eigen::MatrixXd>& G, const Eigen::VectorXd& x) {
  std::vector<double> out(G.size());
  for (std::size_t c = 0; c < G.size(); ++c) {
    const auto& cd = V.cell_dofs(int(c));
    Eigen::VectorXd v(cd.size());
    for (std::size_t i = 0; i < cd.size(); ++i) v[i] = x[cd[i]];
    out[c] = v.dot(G[c] * v);
  }
  return out;
}

}  // namespace

std::vector<ScalingPoint> interpolation_error_study(const LevelSetup& setup, int k, const std::vector<double>& epsilons,
                                                   int ball_degree, int random_forms, std::uint64_t seed) {
  const auto& V = setup.spaces[k];
  const auto& mesh = setup.mesh;
  const int n = mesh.dim();
  const ExtendedPartition part(mesh, setup.geom);
  const auto G = cell_grams(V);
  // patches: cells sharing a vertex
  std::vector<std::vector<int>> patch(mesh.num_cells());
  for (int c = 0; c < mesh.num_cells(); ++c) patch[c] = mesh.star_cells(n, c);

  std::vector<Eigen::VectorXd> forms;
  for (int i = 0; i < V.dim(); ++i) forms.push_back(Eigen::VectorXd::Unit(V.dim(), i));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int r = 0; r < random_forms; ++r) {
    Eigen::VectorXd v(V.dim());
    for (int i = 0; i < V.dim(); ++i) v[i] = uni(rng);
    forms.push_back(v);
  }
  std::vector<std::vector<double>> norms;
  for (const auto& f : forms) norms.push_back(cell_norms2(V, G, f));

  std::vector<ScalingPoint> out;
  for (double eps : epsilons) {
    const auto cfg = MollifierConfig::make(eps, *setup.field, ball_degree);
    const Eigen::MatrixXd Q = assemble_Q(V, V, part, setup.geom, cfg);
    ScalingPoint pt;
    pt.epsilon = eps;
    pt.ceiling = derive_constants(setup.measured, k, 2.0, eps).C_e * eps;
    for (std::size_t f = 0; f < forms.size(); ++f) {
      const Eigen::VectorXd err = forms[f] - Q * forms[f];
      const auto e2 = cell_norms2(V, G, err);
      for (int c = 0; c < mesh.num_cells(); ++c) {
        double den = 0.0;
        for (int t : patch[c]) den += norms[f][t];
        if (den <= 0.0) continue;
        pt.ratio = std::max(pt.ratio, std::sqrt(e2[c] / den));
      }
    }
    out.push_back(pt);
  }
  return out;
}

std::vector<RefinementRow> refinement_study(const std::string& domain, const ComplexSpec& complex, int first, int last,
                                            double epsilon, double collar_width, int ball_degree,
                                            std::uint64_t seed) {
  std::vector<std::unique_ptr<LevelSetup>> setups;
  double eps = epsilon;
  for (int l = first; l <= last; ++l) {
    setups.push_back(std::make_unique<LevelSetup>(domain, l, complex, collar_width, seed));
    const double e = admissible_epsilon(setups.back()->measured, 2.0).eps_max;
    if (epsilon <= 0.0) eps = l == first ? e : std::min(eps, e);
  }
  std::vector<RefinementRow> rows;
  for (int l = first; l <= last; ++l) {
    const auto& S = *setups[l - first];
    auto run = run_projection(S, eps, ball_degree);
    RefinementRow row;
    row.level = l;
    row.epsilon = eps;
    for (const auto& d : run.degrees) {
      row.norm.push_back(d.norm);
      row.ceiling.push_back(derive_constants(S.measured, d.k, 2.0, eps).C_pi * std::pow(eps, -S.mesh.dim() / 2.0));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

double loglog_slope(const std::vector<ScalingPoint>& pts) {
  const double m = double(pts.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& p : pts) {
    const double x = std::log(p.epsilon), y = std::log(p.ratio);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace feec
