#include "feec/polynomial.hpp"

#include <algorithm>
#include <mutex>
#include <sstream>

namespace feec {

int popcount(unsigned mask) { return __builtin_popcount(mask); }

int binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return int(r);
}

const std::vector<unsigned>& alternators(int k, int n) {
  static std::once_flag flag;
  static std::vector<unsigned> table[kMaxDim + 1][kMaxDim + 1];
  std::call_once(flag, [] {
    for (int nn = 0; nn <= kMaxDim; ++nn) {
      for (unsigned m = 0; m < (1u << nn); ++m) table[nn][popcount(m)].push_back(m);
      for (int kk = 0; kk <= nn; ++kk)
        std::sort(table[nn][kk].begin(), table[nn][kk].end(), [](unsigned a, unsigned b) {
          return mask_indices(a) < mask_indices(b);
        });
    }
  });
  if (n < 0 || n > kMaxDim || k < 0 || k > n) throw DimensionMismatch("alternators: bad (k, n)");
  return table[n][k];
}

int alternator_index(unsigned mask, int n) {
  const auto& a = alternators(popcount(mask), n);
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] == mask) return int(i);
  throw DimensionMismatch("alternator_index: mask outside dimension");
}

int wedge_sign(unsigned a, unsigned b) {
  if (a & b) return 0;
  // count inversions: pairs (i in a, j in b) with i > j
  int inv = 0;
  for (int i = 0; i < 32; ++i)
    if (a & (1u << i)) inv += popcount(b & ((1u << i) - 1u));
  return (inv % 2) ? -1 : 1;
}

std::vector<int> mask_indices(unsigned mask) {
  std::vector<int> out;
  for (int i = 0; mask; ++i, mask >>= 1)
    if (mask & 1u) out.push_back(i);
  return out;
}

namespace {

Rational factorial(int n) {
  mpz_class f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return Rational(f);
}

// integral of t^a over the reference n-simplex: a! / (|a| + n)!
Rational monomial_integral(const Exponent& e, int n) {
  Rational num = 1;
  int s = 0;
  for (int i = 0; i < n; ++i) {
    num *= factorial(e[i]);
    s += e[i];
  }
  return num / factorial(s + n);
}

template <class T>
std::string poly_string(const Polynomial<T>& p) {
  std::ostringstream os;
  bool first = true;
  for (const auto& [e, c] : p.terms()) {
    if (!first) os << " + ";
    first = false;
    os << "(" << c << ")";
    for (int i = 0; i < p.dim(); ++i)
      if (e[i]) os << "*x" << i << (e[i] > 1 ? "^" + std::to_string(e[i]) : "");
  }
  if (first) os << "0";
  return os.str();
}

}  // namespace

template <>
std::string Polynomial<Rational>::to_string() const {
  return poly_string(*this);
}
template <>
std::string Polynomial<double>::to_string() const {
  return poly_string(*this);
}

template <class T>
static std::string form_string(const Form<T>& f) {
  std::ostringstream os;
  bool first = true;
  for (const auto& [s, p] : f.coeffs()) {
    if (!first) os << " + ";
    first = false;
    os << "[" << p.to_string() << "]";
    for (int i : mask_indices(s)) os << " dx" << i;
  }
  if (first) os << "0";
  return os.str();
}

template <>
std::string Form<Rational>::to_string() const {
  return form_string(*this);
}
template <>
std::string Form<double>::to_string() const {
  return form_string(*this);
}

Rational integrate_reference(const Polynomial<Rational>& p) {
  Rational total = 0;
  for (const auto& [e, c] : p.terms()) total += c * monomial_integral(e, p.dim());
  return total;
}

double integrate_reference(const Polynomial<double>& p) {
  double total = 0.0;
  for (const auto& [e, c] : p.terms()) total += c * monomial_integral(e, p.dim()).get_d();
  return total;
}

Rational integrate_top_form(const QForm& f) {
  if (f.degree() != f.dim()) throw DimensionMismatch("integrate_top_form: not a top form");
  return integrate_reference(f.coeff((1u << f.dim()) - 1u));
}

std::vector<Exponent> monomials(int n, int r, bool homogeneous) {
  std::vector<Exponent> out;
  if (r < 0) return out;
  for (int d = homogeneous ? r : 0; d <= r; ++d) {
    if (n == 0) {
      if (d == 0) out.push_back({0, 0, 0});
      continue;
    }
    if (n == 1) {
      out.push_back({std::uint8_t(d), 0, 0});
    } else if (n == 2) {
      for (int a = d; a >= 0; --a) out.push_back({std::uint8_t(a), std::uint8_t(d - a), 0});
    } else {
      for (int a = d; a >= 0; --a)
        for (int b = d - a; b >= 0; --b) out.push_back({std::uint8_t(a), std::uint8_t(b), std::uint8_t(d - a - b)});
    }
  }
  return out;
}

std::vector<QPoly> barycentric_reference(int n) {
  std::vector<QPoly> lam;
  QPoly l0 = QPoly::constant(n, Rational(1));
  for (int i = 0; i < n; ++i) l0 -= QPoly::variable(n, i);
  lam.push_back(l0);
  for (int i = 0; i < n; ++i) lam.push_back(QPoly::variable(n, i));
  return lam;
}

}  // namespace feec
