#pragma once

#include <gmpxx.h>

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace feec {

using Rational = mpq_class;
constexpr int kMaxDim = 3;
using Exponent = std::array<std::uint8_t, kMaxDim>;

struct DimensionMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ZeroFormContraction : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double to_double(const Rational& q) { return q.get_d(); }
inline double to_double(double x) { return x; }

template <class S, class T>
S cast_to(const T& v) {
  if constexpr (std::is_same_v<S, double>) return to_double(v);
  else return S(v);
}

template <class T>
bool is_zero_value(const T& v) {
  return v == 0;
}

//---------------------------------------------------------------------------
// Alternators: increasing index tuples stored as bit masks (n <= 3)

int popcount(unsigned mask);
/// All k-subsets of {0..n-1} in lexicographic order of their index tuples.
const std::vector<unsigned>& alternators(int k, int n);
/// Position of `mask` within alternators(popcount(mask), n).
int alternator_index(unsigned mask, int n);
/// Sign of dx^a ^ dx^b relative to dx^(a|b); zero if they overlap.
int wedge_sign(unsigned a, unsigned b);
/// Indices of the set bits in increasing order.
std::vector<int> mask_indices(unsigned mask);
int binomial(int n, int k);

/// Determinant of the k x k minor with rows `rows` and columns `cols` of a row-major
/// matrix with `ncols` columns.
template <class T>
T minor_det(const T* a, int ncols, const std::vector<int>& rows, const std::vector<int>& cols) {
  const std::size_t k = rows.size();
  auto at = [&](std::size_t i, std::size_t j) -> T { return a[rows[i] * ncols + cols[j]]; };
  if (k == 0) return T(1);
  if (k == 1) return at(0, 0);
  if (k == 2) return at(0, 0) * at(1, 1) - at(0, 1) * at(1, 0);
  if (k == 3)
    return at(0, 0) * (at(1, 1) * at(2, 2) - at(1, 2) * at(2, 1)) -
           at(0, 1) * (at(1, 0) * at(2, 2) - at(1, 2) * at(2, 0)) +
           at(0, 2) * (at(1, 0) * at(2, 1) - at(1, 1) * at(2, 0));
  throw DimensionMismatch("minor_det: order above 3");
}

//---------------------------------------------------------------------------
// Polynomials in n <= 3 variables

template <class T>
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(int n) : n_(n) {}

  static Polynomial constant(int n, const T& c) {
    Polynomial p(n);
    p.add_term(Exponent{0, 0, 0}, c);
    return p;
  }
  static Polynomial variable(int n, int i) {
    Polynomial p(n);
    Exponent e{0, 0, 0};
    e[i] = 1;
    p.add_term(e, T(1));
    return p;
  }
  static Polynomial monomial(int n, const Exponent& e, const T& c) {
    Polynomial p(n);
    p.add_term(e, c);
    return p;
  }

  int dim() const { return n_; }
  bool is_zero() const { return terms_.empty(); }
  const std::map<Exponent, T>& terms() const { return terms_; }

  int degree() const {
    int d = -1;
    for (const auto& [e, c] : terms_) d = std::max(d, int(e[0]) + e[1] + e[2]);
    return d;
  }

  void add_term(const Exponent& e, const T& c) {
    if (is_zero_value(c)) return;
    auto it = terms_.find(e);
    if (it == terms_.end()) {
      terms_.emplace(e, c);
    } else {
      it->second += c;
      if (is_zero_value(it->second)) terms_.erase(it);
    }
  }

  Polynomial& operator+=(const Polynomial& o) {
    check(o);
    for (const auto& [e, c] : o.terms_) add_term(e, c);
    return *this;
  }
  Polynomial& operator-=(const Polynomial& o) {
    check(o);
    for (const auto& [e, c] : o.terms_) add_term(e, T(-c));
    return *this;
  }
  Polynomial operator+(const Polynomial& o) const {
    Polynomial r = *this;
    r += o;
    return r;
  }
  Polynomial operator-(const Polynomial& o) const {
    Polynomial r = *this;
    r -= o;
    return r;
  }
  Polynomial operator-() const { return scaled(T(-1)); }
  Polynomial operator*(const Polynomial& o) const {
    check(o);
    Polynomial r(n_);
    for (const auto& [e1, c1] : terms_)
      for (const auto& [e2, c2] : o.terms_) {
        Exponent e{std::uint8_t(e1[0] + e2[0]), std::uint8_t(e1[1] + e2[1]), std::uint8_t(e1[2] + e2[2])};
        r.add_term(e, T(c1 * c2));
      }
    return r;
  }
  Polynomial scaled(const T& s) const {
    Polynomial r(n_);
    if (is_zero_value(s)) return r;
    for (const auto& [e, c] : terms_) r.terms_.emplace(e, T(c * s));
    return r;
  }
  bool operator==(const Polynomial& o) const { return n_ == o.n_ && terms_ == o.terms_; }

  Polynomial derivative(int i) const {
    Polynomial r(n_);
    for (const auto& [e, c] : terms_) {
      if (e[i] == 0) continue;
      Exponent f = e;
      f[i] -= 1;
      r.add_term(f, T(c * T(int(e[i]))));
    }
    return r;
  }

  /// Multiplication by x_i.
  Polynomial times_variable(int i) const {
    Polynomial r(n_);
    for (const auto& [e, c] : terms_) {
      Exponent f = e;
      f[i] += 1;
      r.terms_.emplace(f, c);
    }
    return r;
  }

  template <class S>
  S evaluate(const S* x) const {
    S total = S(0);
    for (const auto& [e, c] : terms_) {
      S m = cast_to<S>(c);
      for (int i = 0; i < n_; ++i)
        for (int p = 0; p < e[i]; ++p) m *= x[i];
      total += m;
    }
    return total;
  }

  double evaluate_double(const double* x) const {
    double total = 0.0;
    for (const auto& [e, c] : terms_) {
      double m = to_double(c);
      for (int i = 0; i < n_; ++i)
        for (int p = 0; p < e[i]; ++p) m *= x[i];
      total += m;
    }
    return total;
  }

  /// Substitution x = M t + b with t in R^m; M is row-major n x m.
  Polynomial compose_affine(const std::vector<T>& M, const std::vector<T>& b, int m) const {
    std::vector<Polynomial> lin;
    for (int i = 0; i < n_; ++i) {
      Polynomial li = Polynomial::constant(m, b[i]);
      for (int j = 0; j < m; ++j) li.add_term(unit(j), M[i * m + j]);
      lin.push_back(li);
    }
    std::vector<std::vector<Polynomial>> powers(n_);
    for (int i = 0; i < n_; ++i) powers[i].push_back(Polynomial::constant(m, T(1)));
    Polynomial r(m);
    for (const auto& [e, c] : terms_) {
      Polynomial t = Polynomial::constant(m, c);
      for (int i = 0; i < n_; ++i) {
        while (int(powers[i].size()) <= e[i]) powers[i].push_back(powers[i].back() * lin[i]);
        if (e[i]) t = t * powers[i][e[i]];
      }
      r += t;
    }
    return r;
  }

  template <class S>
  Polynomial<S> convert() const {
    Polynomial<S> r(n_);
    for (const auto& [e, c] : terms_) r.add_term(e, S(to_double(c)));
    return r;
  }

  std::string to_string() const;

 private:
  static Exponent unit(int j) {
    Exponent e{0, 0, 0};
    e[j] = 1;
    return e;
  }
  void check(const Polynomial& o) const {
    if (n_ != o.n_) throw DimensionMismatch("polynomial dimension mismatch");
  }
  int n_ = 0;
  std::map<Exponent, T> terms_;
};

template <>
template <>
inline Polynomial<Rational> Polynomial<Rational>::convert<Rational>() const {
  return *this;
}

/// Exact integral of a polynomial over the reference simplex of dimension n.
Rational integrate_reference(const Polynomial<Rational>& p);
double integrate_reference(const Polynomial<double>& p);

//---------------------------------------------------------------------------
// Differential forms with polynomial coefficients

template <class T>
class Form {
 public:
  Form() = default;
  Form(int n, int k) : n_(n), k_(k) {
    if (k < 0 || k > n) throw DimensionMismatch("form degree out of range");
  }

  static Form basic(int n, unsigned sigma, const Polynomial<T>& coeff) {
    Form f(n, popcount(sigma));
    f.add(sigma, coeff);
    return f;
  }

  int dim() const { return n_; }
  int degree() const { return k_; }
  bool is_zero() const { return coeffs_.empty(); }
  const std::map<unsigned, Polynomial<T>>& coeffs() const { return coeffs_; }
  Polynomial<T> coeff(unsigned sigma) const {
    auto it = coeffs_.find(sigma);
    return it == coeffs_.end() ? Polynomial<T>(n_) : it->second;
  }
  int poly_degree() const {
    int d = -1;
    for (const auto& [s, p] : coeffs_) d = std::max(d, p.degree());
    return d;
  }

  void add(unsigned sigma, const Polynomial<T>& p) {
    if (popcount(sigma) != k_) throw DimensionMismatch("alternator degree mismatch");
    if (p.is_zero()) return;
    auto it = coeffs_.find(sigma);
    if (it == coeffs_.end()) {
      coeffs_.emplace(sigma, p);
    } else {
      it->second += p;
      if (it->second.is_zero()) coeffs_.erase(it);
    }
  }

  Form& operator+=(const Form& o) {
    check(o);
    for (const auto& [s, p] : o.coeffs_) add(s, p);
    return *this;
  }
  Form operator+(const Form& o) const {
    Form r = *this;
    r += o;
    return r;
  }
  Form operator-(const Form& o) const {
    Form r = *this;
    r += o.scaled(T(-1));
    return r;
  }
  Form scaled(const T& s) const {
    Form r(n_, k_);
    for (const auto& [sig, p] : coeffs_) r.add(sig, p.scaled(s));
    return r;
  }
  Form times(const Polynomial<T>& q) const {
    Form r(n_, k_);
    for (const auto& [sig, p] : coeffs_) r.add(sig, p * q);
    return r;
  }
  bool operator==(const Form& o) const { return n_ == o.n_ && k_ == o.k_ && coeffs_ == o.coeffs_; }

  Form wedge(const Form& o) const {
    if (n_ != o.n_) throw DimensionMismatch("wedge: dimension mismatch");
    if (k_ + o.k_ > n_) return Form(n_, std::min(n_, k_ + o.k_));
    Form r(n_, k_ + o.k_);
    for (const auto& [a, p] : coeffs_)
      for (const auto& [b, q] : o.coeffs_) {
        int s = wedge_sign(a, b);
        if (s == 0) continue;
        r.add(a | b, (p * q).scaled(T(s)));
      }
    return r;
  }

  Form exterior_derivative() const {
    if (k_ == n_) return Form(n_, n_);
    Form r(n_, k_ + 1);
    for (const auto& [sig, p] : coeffs_)
      for (int i = 0; i < n_; ++i) {
        unsigned bit = 1u << i;
        if (sig & bit) continue;
        Polynomial<T> dp = p.derivative(i);
        if (dp.is_zero()) continue;
        r.add(sig | bit, dp.scaled(T(wedge_sign(bit, sig))));
      }
    return r;
  }

  /// Contraction with the source vector field X(x) = x.
  Form koszul() const {
    if (k_ == 0) throw ZeroFormContraction("koszul: contraction of a 0-form");
    Form r(n_, k_ - 1);
    for (const auto& [sig, p] : coeffs_) {
      auto idx = mask_indices(sig);
      for (std::size_t j = 0; j < idx.size(); ++j) {
        T s = (j % 2 == 0) ? T(1) : T(-1);
        r.add(sig & ~(1u << idx[j]), p.times_variable(idx[j]).scaled(s));
      }
    }
    return r;
  }

  /// Pullback along t -> M t + b, t in R^m, M row-major n x m.
  Form pullback(const std::vector<T>& M, const std::vector<T>& b, int m) const {
    if (k_ > m) return Form(m, std::min(k_, m));
    Form r(m, k_);
    const auto& taus = alternators(k_, m);
    for (const auto& [sig, p] : coeffs_) {
      Polynomial<T> pc = p.compose_affine(M, b, m);
      auto rows = mask_indices(sig);
      for (unsigned tau : taus) {
        T det = minor_det(M.data(), m, rows, mask_indices(tau));
        if (is_zero_value(det)) continue;
        r.add(tau, pc.scaled(det));
      }
    }
    return r;
  }

  /// Component values in the order of alternators(k, n).
  template <class S>
  std::vector<S> evaluate(const S* x) const {
    const auto& sig = alternators(k_, n_);
    std::vector<S> out(sig.size(), S(0));
    for (const auto& [s, p] : coeffs_) out[alternator_index(s, n_)] = p.template evaluate<S>(x);
    return out;
  }
  std::vector<double> evaluate_double(const double* x) const {
    const auto& sig = alternators(k_, n_);
    std::vector<double> out(sig.size(), 0.0);
    for (const auto& [s, p] : coeffs_) out[alternator_index(s, n_)] = p.evaluate_double(x);
    return out;
  }

  template <class S>
  Form<S> convert() const {
    Form<S> r(n_, k_);
    for (const auto& [s, p] : coeffs_) r.add(s, p.template convert<S>());
    return r;
  }

  std::string to_string() const;

 private:
  void check(const Form& o) const {
    if (n_ != o.n_ || k_ != o.k_) throw DimensionMismatch("form shape mismatch");
  }
  int n_ = 0, k_ = 0;
  std::map<unsigned, Polynomial<T>> coeffs_;
};

using QPoly = Polynomial<Rational>;
using QForm = Form<Rational>;
using DPoly = Polynomial<double>;
using DForm = Form<double>;

/// Exact integral of an n-form over the reference simplex with its standard orientation.
Rational integrate_top_form(const QForm& f);

/// Monomials of total degree <= r (or exactly r) in n variables, graded lexicographic.
std::vector<Exponent> monomials(int n, int r, bool homogeneous = false);

/// Barycentric coordinates of the reference simplex as exact polynomials.
std::vector<QPoly> barycentric_reference(int n);

}  // namespace feec
