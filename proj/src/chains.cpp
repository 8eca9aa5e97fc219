#include "feec/chains.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace feec {

double simplex_k_volume(const std::vector<Point>& v, int n) {
  const int k = int(v.size()) - 1;
  if (k == 0) return 1.0;
  Eigen::MatrixXd E(n, k);
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < n; ++i) E(i, j) = v[j + 1][i] - v[0][i];
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return std::sqrt(std::max(0.0, (E.transpose() * E).determinant())) / f;
}

void WeightedChain::canonicalize(double zero_tol) {
  std::map<std::vector<Point>, double> merged;
  for (auto t : terms) {
    // sort vertices counting transpositions
    int sign = 1;
    auto& v = t.verts;
    for (std::size_t i = 0; i < v.size(); ++i)
      for (std::size_t j = 0; j + 1 < v.size() - i; ++j)
        if (v[j + 1] < v[j]) {
          std::swap(v[j], v[j + 1]);
          sign = -sign;
        }
    merged[v] += sign * t.weight;
  }
  terms.clear();
  for (const auto& [v, w] : merged)
    if (std::abs(w) > zero_tol) terms.push_back({w, v});
}

double mass(const WeightedChain& c) {
  double s = 0.0;
  for (const auto& t : c.terms) s += std::abs(t.weight) * simplex_k_volume(t.verts, c.n);
  return s;
}

WeightedChain boundary(const WeightedChain& c) {
  WeightedChain out;
  out.n = c.n;
  out.k = std::max(c.k - 1, 0);
  if (c.k == 0) return out;
  for (const auto& t : c.terms)
    for (std::size_t i = 0; i < t.verts.size(); ++i) {
      ChainTerm f;
      f.weight = (i % 2 == 0 ? 1.0 : -1.0) * t.weight;
      for (std::size_t j = 0; j < t.verts.size(); ++j)
        if (j != i) f.verts.push_back(t.verts[j]);
      out.terms.push_back(f);
    }
  out.canonicalize();
  return out;
}

WeightedChain pushforward_affine(const std::vector<double>& M, const std::vector<double>& b, const WeightedChain& c) {
  WeightedChain out = c;
  const int n = c.n;
  for (auto& t : out.terms)
    for (auto& p : t.verts) {
      Point q{0, 0, 0};
      for (int i = 0; i < n; ++i) {
        q[i] = b[i];
        for (int j = 0; j < n; ++j) q[i] += M[i * n + j] * p[j];
      }
      p = q;
    }
  return out;
}

namespace {

void chart_of(const std::vector<Point>& v, int n, std::vector<double>& M, std::vector<double>& b) {
  const int k = int(v.size()) - 1;
  M.assign(n * k, 0.0);
  b.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    b[i] = v[0][i];
    for (int j = 0; j < k; ++j) M[i * k + j] = v[j + 1][i] - v[0][i];
  }
}

}  // namespace

double integrate_chain(const WeightedChain& c, const DForm& omega) {
  double total = 0.0;
  for (const auto& t : c.terms) {
    std::vector<double> M, b;
    chart_of(t.verts, c.n, M, b);
    DForm tr = omega.pullback(M, b, c.k);
    total += t.weight * integrate_reference(tr.coeff((1u << c.k) - 1u));
  }
  return total;
}

double chain_node_max(const WeightedChain& c, const DForm& omega) {
  double best = 0.0;
  const int deg = std::max(omega.poly_degree(), 0);
  for (const auto& t : c.terms) {
    const auto& rule = cached_simplex_rule(c.k, std::min(deg, 20));
    std::vector<double> M, b;
    chart_of(t.verts, c.n, M, b);
    std::vector<Point> nodes;
    for (const auto& q : rule.points) {
      Point x{0, 0, 0};
      for (int i = 0; i < c.n; ++i) {
        x[i] = b[i];
        for (int j = 0; j < c.k; ++j) x[i] += M[i * c.k + j] * q[j];
      }
      nodes.push_back(x);
    }
    nodes.insert(nodes.end(), t.verts.begin(), t.verts.end());
    for (const auto& x : nodes) {
      auto v = omega.evaluate_double(x.data());
      double s = 0.0;
      for (double a : v) s += a * a;
      best = std::max(best, std::sqrt(s));
    }
  }
  return best;
}

double deformation_bound(const WeightedChain& c, double displacement_sup, double lip) {
  const double l = std::max(lip, 1.0);
  double value = std::pow(l, c.k) * mass(c);
  if (c.k > 0) value += std::pow(l, c.k - 1) * mass(boundary(c));
  return displacement_sup * value;
}

double induced_norm(const std::vector<double>& M, int n, int m, const std::vector<double>& comps, int degree) {
  if (degree == 0) return std::abs(comps[0]);
  Eigen::MatrixXd E(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) E(i, j) = M[i * m + j];
  Eigen::MatrixXd Ginv = (E.transpose() * E).inverse();
  auto C = compound_matrix(Ginv, degree);
  const int N = int(comps.size());
  double s = 0.0;
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b) s += comps[a] * comps[b] * C[a * N + b];
  return std::sqrt(std::max(0.0, s));
}

namespace {

// integral over the simplex of the pointwise induced norm of a form given on its reference
double form_l1(const std::vector<double>& M, int n, int m, const DForm& eta) {
  if (eta.is_zero()) return 0.0;
  double vol = 1.0;
  if (m > 0) {
    Eigen::MatrixXd E(n, m);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) E(i, j) = M[i * m + j];
    vol = std::sqrt(std::max(0.0, (E.transpose() * E).determinant()));
  }
  const auto& rule = cached_simplex_rule(m, std::min(2 * std::max(eta.poly_degree(), 0) + 8, 20));
  double total = 0.0;
  for (int q = 0; q < rule.size(); ++q) {
    auto comps = eta.evaluate_double(rule.points[q].data());
    total += rule.weights[q] * induced_norm(M, n, m, comps, eta.degree());
  }
  return total * vol;
}

}  // namespace

ChainMasses dof_chain_masses(const std::vector<Point>& face, int n, int k, const DForm& eta) {
  ChainMasses out;
  const int m = int(face.size()) - 1;
  std::vector<double> M, b;
  chart_of(face, n, M, b);
  out.mass_k = form_l1(M, n, m, eta);
  if (k == 0) return out;
  if (eta.degree() < m) out.boundary_mass += form_l1(M, n, m, eta.exterior_derivative());
  for (int drop = 0; drop <= m; ++drop) {
    std::vector<int> fv;
    for (int i = 0; i <= m; ++i)
      if (i != drop) fv.push_back(i);
    std::vector<Rational> Eq, bq;
    reference_face_embedding(fv, m, Eq, bq);
    std::vector<double> E(Eq.size()), be(bq.size());
    for (std::size_t i = 0; i < Eq.size(); ++i) E[i] = Eq[i].get_d();
    for (std::size_t i = 0; i < bq.size(); ++i) be[i] = bq[i].get_d();
    if (eta.degree() > m - 1) continue;
    DForm tr = eta.pullback(E, be, m - 1);
    std::vector<Point> gverts;
    for (int i : fv) gverts.push_back(face[i]);
    std::vector<double> Mg, bg;
    chart_of(gverts, n, Mg, bg);
    out.boundary_mass += form_l1(Mg, n, m - 1, tr);
  }
  return out;
}

ChainMasses dof_as_chain_pair(const FESpace& space, int g) {
  const auto& d = space.dofs()[g];
  std::vector<Point> face;
  for (int v : space.mesh().simplex(d.face_dim, d.face_id).vertex_ids) face.push_back(space.mesh().vertex(v));
  return dof_chain_masses(face, space.n(), space.spec().k, space.dof_weight(g).convert<double>());
}

//---------------------------------------------------------------------------
// Inverse inequality constants on the reference element

InverseConstants measure_inverse_constants(const SpaceSpec& spec, int n, int samples, std::uint64_t seed) {
  const auto& el = reference_element(spec, n);
  const int N = el.size();
  const int nk = binomial(n, spec.k);
  const int nk1 = spec.k < n ? binomial(n, spec.k + 1) : 0;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  InverseConstants out;

  auto nodes = sup_nodes(n, 2 * el.degree + 6);
  std::vector<Eigen::MatrixXd> B, dB;
  for (const auto& x : nodes) {
    Eigen::MatrixXd b(nk, N), db(std::max(nk1, 1), N);
    db.setZero();
    for (int i = 0; i < N; ++i) {
      auto v = el.basis_d[i].evaluate_double(x.data());
      for (int a = 0; a < nk; ++a) b(a, i) = v[a];
      if (nk1) {
        auto dv = el.dbasis_d[i].evaluate_double(x.data());
        for (int a = 0; a < nk1; ++a) db(a, i) = dv[a];
      }
    }
    B.push_back(b);
    dB.push_back(db);
  }

  // L2 Gram matrix on the reference simplex
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(N, N);
  const auto& rule = cached_simplex_rule(n, std::min(2 * el.degree, 20));
  for (int q = 0; q < rule.size(); ++q) {
    Eigen::MatrixXd b(nk, N);
    for (int i = 0; i < N; ++i) {
      auto v = el.basis_d[i].evaluate_double(rule.points[q].data());
      for (int a = 0; a < nk; ++a) b(a, i) = v[a];
    }
    G += rule.weights[q] * b.transpose() * b;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  Eigen::MatrixXd Linv = llt.matrixL().solve(Eigen::MatrixXd::Identity(N, N));
  for (std::size_t x = 0; x < nodes.size(); ++x) {
    Eigen::MatrixXd W = B[x] * Linv.transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> s1(W);
    out.C_flat_2 = std::max(out.C_flat_2, s1.singularValues()(0));
    if (nk1) {
      Eigen::MatrixXd dW = dB[x] * Linv.transpose();
      Eigen::JacobiSVD<Eigen::MatrixXd> s2(dW);
      out.C_flat_2 = std::max(out.C_flat_2, s2.singularValues()(0));
    }
  }

  auto sup_of = [&](const Eigen::VectorXd& c, bool deriv) {
    double best = 0.0;
    for (std::size_t x = 0; x < nodes.size(); ++x) {
      Eigen::VectorXd v = (deriv ? dB[x] : B[x]) * c;
      best = std::max(best, v.norm());
    }
    return best;
  };
  for (int s = 0; s < samples + N; ++s) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(N);
    if (s < N) {
      c[s] = 1.0;
    } else {
      for (int i = 0; i < N; ++i) c[i] = normal(rng);
    }
    double base = sup_of(c, false);
    if (base <= 0.0) continue;
    double top = std::max(base, nk1 ? sup_of(c, true) : 0.0);
    out.C_flat_inf = std::max(out.C_flat_inf, top / base);
  }

  // boundary inequality for the DOF chains, face by face
  std::vector<Point> verts(n + 1, Point{0, 0, 0});
  for (int i = 0; i < n; ++i) verts[i + 1][i] = 1.0;
  std::map<int, std::vector<int>> by_face_dim;
  for (int i = 0; i < N; ++i) by_face_dim[el.dofs[i].face_dim].push_back(i);
  std::vector<double> dof_mass(N, 0.0);
  for (int i = 0; i < N; ++i) {
    std::vector<Point> face;
    for (int v : el.dofs[i].face_vertices) face.push_back(verts[v]);
    auto cm = dof_chain_masses(face, n, spec.k, el.dofs[i].weight.convert<double>());
    dof_mass[i] = cm.mass_k;
    if (cm.mass_k > 0) out.C_boundary = std::max(out.C_boundary, cm.boundary_mass / cm.mass_k);
  }
  for (auto& [m, ids] : by_face_dim) {
    // random combinations of the weights attached to one face
    std::vector<int> same;
    for (int i : ids)
      if (el.dofs[i].face_vertices == el.dofs[ids[0]].face_vertices) same.push_back(i);
    if (same.size() < 2) continue;
    std::vector<Point> face;
    for (int v : el.dofs[same[0]].face_vertices) face.push_back(verts[v]);
    for (int s = 0; s < samples; ++s) {
      DForm eta(m, m - spec.k);
      for (int i : same) eta += el.dofs[i].weight.convert<double>().scaled(normal(rng));
      auto cm = dof_chain_masses(face, n, spec.k, eta);
      if (cm.mass_k > 0) out.C_boundary = std::max(out.C_boundary, cm.boundary_mass / cm.mass_k);
    }
  }

  // interpolation constant: sup over unit DOF values scaled by the chain masses
  if (N <= 12) {
    for (unsigned mask = 0; mask < (1u << N); ++mask) {
      Eigen::VectorXd c(N);
      for (int i = 0; i < N; ++i) c[i] = ((mask >> i) & 1u ? -1.0 : 1.0) * dof_mass[i];
      out.C_interp = std::max(out.C_interp, sup_of(c, false));
    }
  } else {
    for (std::size_t x = 0; x < nodes.size(); ++x)
      for (int s = 0; s < samples + nk; ++s) {
        Eigen::VectorXd u = Eigen::VectorXd::Zero(nk);
        if (s < nk) {
          u[s] = 1.0;
        } else {
          for (int a = 0; a < nk; ++a) u[a] = normal(rng);
          u.normalize();
        }
        Eigen::VectorXd proj = B[x].transpose() * u;
        double v = 0.0;
        for (int i = 0; i < N; ++i) v += dof_mass[i] * std::abs(proj[i]);
        out.C_interp = std::max(out.C_interp, v);
      }
  }
  return out;
}

}  // namespace feec
