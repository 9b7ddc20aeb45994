#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pqc/error.hpp"

namespace pqc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct Monomial {
  double coef = 0.0;
  std::vector<int> exps;

  int total_degree() const;
  bool operator==(const Monomial&) const = default;
};

/// Sparse multivariate real polynomial in a fixed number of variables.
///
/// Terms are merged, zero coefficients dropped and the remaining terms kept in
/// graded lexicographic order (total degree ascending, then exponent vectors
/// compared lexicographically with x1 most significant, descending). The
/// canonical order makes evaluation and serialization reproducible.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(int num_vars);
  Polynomial(int num_vars, std::vector<Monomial> terms);

  static Polynomial constant(int num_vars, double c);
  /// The coordinate function x_k (0-based k).
  static Polynomial variable(int num_vars, int k);

  int num_vars() const { return num_vars_; }
  const std::vector<Monomial>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  /// Maximum total degree; 0 for constants and for the zero polynomial.
  int degree() const;
  /// Largest exponent of a single variable across all terms.
  int max_exponent() const;

  double evaluate(std::span<const double> x) const;
  double evaluate(const Vector& x) const {
    return evaluate(std::span<const double>(x.data(), static_cast<size_t>(x.size())));
  }

  /// Partial derivative with respect to x_k (0-based).
  Polynomial derivative(int k) const;

  Polynomial operator-() const;
  Polynomial& operator+=(const Polynomial& other);
  Polynomial& operator-=(const Polynomial& other);
  Polynomial& operator*=(double s);
  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
  friend Polynomial operator*(double s, Polynomial a) { return a *= s; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator+(Polynomial a, double c) { return a += constant(a.num_vars(), c); }
  friend Polynomial operator-(Polynomial a, double c) { return a -= constant(a.num_vars(), c); }
  friend Polynomial operator+(double c, Polynomial a) { return a += constant(a.num_vars(), c); }
  friend Polynomial operator-(double c, const Polynomial& a) { return constant(a.num_vars(), c) - a; }

  Polynomial pow(int e) const;

  bool operator==(const Polynomial&) const = default;

  /// Human-readable form such as "3*x1^2 - x2 + 1".
  std::string to_string() const;

 private:
  void normalize();

  int num_vars_ = 0;
  std::vector<Monomial> terms_;
};

std::vector<Polynomial> gradient(const Polynomial& p);
/// Symmetric matrix of second partials, row-major [k][l].
std::vector<std::vector<Polynomial>> hessian(const Polynomial& p);

Vector evaluate_gradient(const std::vector<Polynomial>& grad, const Vector& x);
Matrix evaluate_hessian(const std::vector<std::vector<Polynomial>>& hess, const Vector& x);

/// All distinct real roots of a univariate polynomial inside [lo, hi], sorted.
///
/// Roots are isolated on monotone pieces bounded by the (recursively
/// computed) critical points and refined by bisection. Critical points where
/// the polynomial vanishes to working precision are reported as roots, so even
/// multiplicities are found. Throws DomainError for the zero polynomial.
std::vector<double> univariate_real_roots(const Polynomial& p, double lo, double hi);

}  // namespace pqc
