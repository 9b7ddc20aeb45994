#include "pqc/poly.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace pqc {

int Monomial::total_degree() const { return std::accumulate(exps.begin(), exps.end(), 0); }

namespace {

// Graded lexicographic: lower total degree first; within a degree, larger
// exponent on x1 first, then x2, ...
bool grlex_less(const Monomial& a, const Monomial& b) {
  const int da = a.total_degree();
  const int db = b.total_degree();
  if (da != db) return da < db;
  return std::lexicographical_compare(b.exps.begin(), b.exps.end(), a.exps.begin(), a.exps.end());
}

double horner(const std::vector<double>& c, double x) {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
  return acc;
}

// Magnitude scale of the evaluation, used to decide when a value is zero to
// working precision.
double horner_abs(const std::vector<double>& c, double x) {
  double acc = 0.0;
  const double ax = std::abs(x);
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * ax + std::abs(*it);
  return acc;
}

std::vector<double> differentiate(const std::vector<double>& c) {
  if (c.size() <= 1) return {};
  std::vector<double> d(c.size() - 1);
  for (size_t k = 1; k < c.size(); ++k) d[k - 1] = static_cast<double>(k) * c[k];
  return d;
}

void trim(std::vector<double>& c) {
  while (!c.empty() && c.back() == 0.0) c.pop_back();
}

double bisect(const std::vector<double>& c, double a, double b) {
  double fa = horner(c, a);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (a + b);
    if (mid <= a || mid >= b) break;
    const double fm = horner(c, mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (fa < 0.0)) {
      a = mid;
      fa = fm;
    } else {
      b = mid;
    }
  }
  return std::abs(horner(c, a)) <= std::abs(horner(c, b)) ? a : b;
}

bool vanishes(const std::vector<double>& c, double t) {
  return std::abs(horner(c, t)) <= 1e-12 * std::max(1.0, horner_abs(c, t));
}

std::vector<double> roots_in(std::vector<double> c, double lo, double hi) {
  trim(c);
  if (c.size() <= 1) return {};
  if (c.size() == 2) {
    const double r = -c[0] / c[1];
    if (r >= lo && r <= hi) return {r};
    return {};
  }
  std::vector<double> breaks{lo};
  for (double t : roots_in(differentiate(c), lo, hi)) {
    if (t > breaks.back()) breaks.push_back(t);
  }
  if (hi > breaks.back()) breaks.push_back(hi);

  std::vector<double> out;
  for (double t : breaks) {
    if (vanishes(c, t)) out.push_back(t);
  }
  for (size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double fa = horner(c, breaks[k]);
    const double fb = horner(c, breaks[k + 1]);
    if (fa == 0.0 || fb == 0.0) continue;
    if ((fa < 0.0) != (fb < 0.0)) out.push_back(bisect(c, breaks[k], breaks[k + 1]));
  }
  std::sort(out.begin(), out.end());
  // Collapse multiplicities: a root found at a critical point may also be
  // approached by a neighbouring bisection.
  std::vector<double> merged;
  for (double r : out) {
    if (!merged.empty() && std::abs(r - merged.back()) <= 1e-9 * std::max(1.0, std::abs(r))) {
      if (std::abs(horner(c, r)) < std::abs(horner(c, merged.back()))) merged.back() = r;
      continue;
    }
    merged.push_back(r);
  }
  return merged;
}

}  // namespace

Polynomial::Polynomial(int num_vars) : num_vars_(num_vars) {
  if (num_vars < 0) throw DomainError("negative number of variables");
}

Polynomial::Polynomial(int num_vars, std::vector<Monomial> terms)
    : num_vars_(num_vars), terms_(std::move(terms)) {
  if (num_vars < 0) throw DomainError("negative number of variables");
  for (size_t t = 0; t < terms_.size(); ++t) {
    if (terms_[t].exps.size() != static_cast<size_t>(num_vars_)) {
      throw DimensionError("term " + std::to_string(t) + " has " +
                           std::to_string(terms_[t].exps.size()) + " exponents, expected " +
                           std::to_string(num_vars_));
    }
    for (int e : terms_[t].exps) {
      if (e < 0) throw DomainError("term " + std::to_string(t) + " has a negative exponent");
    }
    if (!std::isfinite(terms_[t].coef)) {
      throw DomainError("term " + std::to_string(t) + " has a non-finite coefficient");
    }
  }
  normalize();
}

Polynomial Polynomial::constant(int num_vars, double c) {
  return Polynomial(num_vars, {Monomial{c, std::vector<int>(num_vars, 0)}});
}

Polynomial Polynomial::variable(int num_vars, int k) {
  if (k < 0 || k >= num_vars) throw DimensionError("variable index out of range");
  std::vector<int> e(num_vars, 0);
  e[k] = 1;
  return Polynomial(num_vars, {Monomial{1.0, std::move(e)}});
}

void Polynomial::normalize() {
  std::sort(terms_.begin(), terms_.end(), grlex_less);
  std::vector<Monomial> merged;
  merged.reserve(terms_.size());
  for (auto& t : terms_) {
    if (!merged.empty() && merged.back().exps == t.exps) {
      merged.back().coef += t.coef;
    } else {
      merged.push_back(std::move(t));
    }
  }
  std::erase_if(merged, [](const Monomial& m) { return m.coef == 0.0; });
  terms_ = std::move(merged);
}

int Polynomial::degree() const {
  int d = 0;
  for (const auto& t : terms_) d = std::max(d, t.total_degree());
  return d;
}

int Polynomial::max_exponent() const {
  int d = 0;
  for (const auto& t : terms_) {
    for (int e : t.exps) d = std::max(d, e);
  }
  return d;
}

double Polynomial::evaluate(std::span<const double> x) const {
  if (x.size() != static_cast<size_t>(num_vars_)) {
    throw DimensionError("evaluate: point has " + std::to_string(x.size()) +
                         " coordinates, polynomial has " + std::to_string(num_vars_) +
                         " variables");
  }
  double sum = 0.0;
  for (const auto& t : terms_) {
    double v = t.coef;
    for (int k = 0; k < num_vars_; ++k) {
      for (int e = 0; e < t.exps[k]; ++e) v *= x[k];
    }
    sum += v;
  }
  return sum;
}

Polynomial Polynomial::derivative(int k) const {
  if (k < 0 || k >= num_vars_) throw DimensionError("derivative: variable index out of range");
  std::vector<Monomial> out;
  for (const auto& t : terms_) {
    if (t.exps[k] == 0) continue;
    Monomial m = t;
    m.coef *= t.exps[k];
    m.exps[k] -= 1;
    out.push_back(std::move(m));
  }
  return Polynomial(num_vars_, std::move(out));
}

Polynomial Polynomial::operator-() const { return *this * -1.0; }

Polynomial& Polynomial::operator+=(const Polynomial& other) {
  if (other.num_vars_ != num_vars_) throw DimensionError("adding polynomials in different spaces");
  terms_.insert(terms_.end(), other.terms_.begin(), other.terms_.end());
  normalize();
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& other) { return *this += -1.0 * other; }

Polynomial& Polynomial::operator*=(double s) {
  for (auto& t : terms_) t.coef *= s;
  normalize();
  return *this;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  if (a.num_vars_ != b.num_vars_) {
    throw DimensionError("multiplying polynomials in different spaces");
  }
  std::vector<Monomial> out;
  out.reserve(a.terms_.size() * b.terms_.size());
  for (const auto& s : a.terms_) {
    for (const auto& t : b.terms_) {
      Monomial m{s.coef * t.coef, s.exps};
      for (int k = 0; k < a.num_vars_; ++k) m.exps[k] += t.exps[k];
      out.push_back(std::move(m));
    }
  }
  return Polynomial(a.num_vars_, std::move(out));
}

Polynomial Polynomial::pow(int e) const {
  if (e < 0) throw DomainError("negative polynomial power");
  Polynomial result = constant(num_vars_, 1.0);
  for (int k = 0; k < e; ++k) result = result * *this;
  return result;
}

std::string Polynomial::to_string() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  os.precision(17);
  bool first = true;
  for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
    double c = it->coef;
    if (first) {
      if (c < 0) os << "-";
    } else {
      os << (c < 0 ? " - " : " + ");
    }
    c = std::abs(c);
    const bool is_const = it->total_degree() == 0;
    if (is_const || c != 1.0) {
      os << c;
      if (!is_const) os << "*";
    }
    bool first_factor = true;
    for (int k = 0; k < num_vars_; ++k) {
      if (it->exps[k] == 0) continue;
      if (!first_factor) os << "*";
      os << "x" << (k + 1);
      if (it->exps[k] > 1) os << "^" << it->exps[k];
      first_factor = false;
    }
    first = false;
  }
  return os.str();
}

std::vector<Polynomial> gradient(const Polynomial& p) {
  std::vector<Polynomial> g;
  g.reserve(p.num_vars());
  for (int k = 0; k < p.num_vars(); ++k) g.push_back(p.derivative(k));
  return g;
}

std::vector<std::vector<Polynomial>> hessian(const Polynomial& p) {
  std::vector<std::vector<Polynomial>> h;
  const auto g = gradient(p);
  for (const auto& gk : g) h.push_back(gradient(gk));
  return h;
}

Vector evaluate_gradient(const std::vector<Polynomial>& grad, const Vector& x) {
  Vector out(static_cast<Eigen::Index>(grad.size()));
  for (size_t k = 0; k < grad.size(); ++k) out[static_cast<Eigen::Index>(k)] = grad[k].evaluate(x);
  return out;
}

Matrix evaluate_hessian(const std::vector<std::vector<Polynomial>>& hess, const Vector& x) {
  const auto n = static_cast<Eigen::Index>(hess.size());
  Matrix out(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index l = 0; l < n; ++l) out(k, l) = hess[k][l].evaluate(x);
  }
  return out;
}

std::vector<double> univariate_real_roots(const Polynomial& p, double lo, double hi) {
  if (p.num_vars() != 1) throw DimensionError("univariate_real_roots needs a 1-variable polynomial");
  if (p.is_zero()) throw DomainError("univariate_real_roots: polynomial is identically zero");
  if (!(lo <= hi)) throw DomainError("univariate_real_roots: empty interval");
  std::vector<double> c(static_cast<size_t>(p.degree()) + 1, 0.0);
  for (const auto& t : p.terms()) c[static_cast<size_t>(t.exps[0])] = t.coef;
  return roots_in(std::move(c), lo, hi);
}

}  // namespace pqc
