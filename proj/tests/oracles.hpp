#pragma once

// Brute-force reference computations used by the unit and acceptance tests.
// None of them share code with the library solvers they check.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pqc/convexsolve.hpp"
#include "pqc/rng.hpp"

namespace oracle {

using pqc::Matrix;
using pqc::Vector;

// Decimal big integer as a little-endian digit string.
class Decimal {
 public:
  explicit Decimal(unsigned v) {
    if (v == 0) digits_ = "0";
    while (v) {
      digits_.push_back(static_cast<char>('0' + v % 10));
      v /= 10;
    }
  }
  Decimal& operator*=(unsigned k) {
    unsigned carry = 0;
    for (char& c : digits_) {
      const unsigned long long t = static_cast<unsigned long long>(c - '0') * k + carry;
      c = static_cast<char>('0' + t % 10);
      carry = static_cast<unsigned>(t / 10);
    }
    while (carry) {
      digits_.push_back(static_cast<char>('0' + carry % 10));
      carry /= 10;
    }
    while (digits_.size() > 1 && digits_.back() == '0') digits_.pop_back();
    return *this;
  }
  std::string str() const { return {digits_.rbegin(), digits_.rend()}; }

 private:
  std::string digits_;
};

inline std::string bound_by_hand(int n, int m, int d, int r) {
  Decimal x(static_cast<unsigned>(d));
  for (int i = 0; i < n + r; ++i) x *= static_cast<unsigned>(2 * d - 1);
  for (int i = 0; i < m; ++i) x *= static_cast<unsigned>(2 * d + 1);
  return x.str();
}

// min c.z over {A z <= b, lo <= z <= hi} (finite bounds) by enumerating every
// basic solution. Returns nothing when infeasible.
inline std::optional<double> lp_by_vertices(const Vector& c, const Matrix& A, const Vector& b, const Vector& lo,
                                            const Vector& hi, double tol = 1e-9) {
  const Eigen::Index n = c.size();
  const Eigen::Index rows = A.rows() + 2 * n;
  Matrix G(rows, n);
  Vector h(rows);
  G.topRows(A.rows()) = A;
  h.head(A.rows()) = b;
  G.block(A.rows(), 0, n, n) = Matrix::Identity(n, n);
  h.segment(A.rows(), n) = hi;
  G.bottomRows(n) = -Matrix::Identity(n, n);
  h.tail(n) = -lo;
  std::optional<double> best;
  std::vector<int> pick(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) pick[static_cast<size_t>(i)] = static_cast<int>(i);
  while (true) {
    Matrix S(n, n);
    Vector t(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      S.row(i) = G.row(pick[static_cast<size_t>(i)]);
      t[i] = h[pick[static_cast<size_t>(i)]];
    }
    Eigen::FullPivLU<Matrix> lu(S);
    if (lu.isInvertible()) {
      const Vector z = lu.solve(t);
      if (((G * z - h).array() <= tol * (1.0 + h.cwiseAbs().array())).all()) {
        const double v = c.dot(z);
        if (!best || v < *best) best = v;
      }
    }
    // next combination
    Eigen::Index k = n - 1;
    while (k >= 0 && pick[static_cast<size_t>(k)] == rows - n + k) --k;
    if (k < 0) break;
    ++pick[static_cast<size_t>(k)];
    for (Eigen::Index j = k + 1; j < n; ++j) pick[static_cast<size_t>(j)] = pick[static_cast<size_t>(j - 1)] + 1;
  }
  return best;
}

// max 0.5 mu'Q mu + q'mu over {mu >= 0, sum mu <= cap} (Q negative definite) by
// solving the stationarity system on every face and keeping feasible points.
inline double qp_by_faces(const Matrix& Q, const Vector& q, double cap) {
  const int m = static_cast<int>(q.size());
  double best = 0.0;  // mu = 0 is feasible
  for (int mask = 1; mask < (1 << m); ++mask) {
    std::vector<int> S;
    for (int i = 0; i < m; ++i) {
      if (mask >> i & 1) S.push_back(i);
    }
    const auto k = static_cast<Eigen::Index>(S.size());
    for (int cap_on = 0; cap_on < 2; ++cap_on) {
      Matrix K = Matrix::Zero(k + cap_on, k + cap_on);
      Vector rhs = Vector::Zero(k + cap_on);
      for (Eigen::Index a = 0; a < k; ++a) {
        for (Eigen::Index b = 0; b < k; ++b) K(a, b) = Q(S[static_cast<size_t>(a)], S[static_cast<size_t>(b)]);
        rhs[a] = -q[S[static_cast<size_t>(a)]];
      }
      if (cap_on) {
        // Q_SS mu_S - theta 1 = -q_S,  sum mu_S = cap
        for (Eigen::Index a = 0; a < k; ++a) {
          K(a, k) = -1.0;
          K(k, a) = 1.0;
        }
        rhs[k] = cap;
      }
      Eigen::FullPivLU<Matrix> lu(K);
      if (!lu.isInvertible()) continue;
      const Vector z = lu.solve(rhs);
      Vector mu = Vector::Zero(m);
      for (Eigen::Index a = 0; a < k; ++a) mu[S[static_cast<size_t>(a)]] = z[a];
      if ((mu.array() < -1e-12).any() || mu.sum() > cap + 1e-12) continue;
      if (cap_on && z[k] < -1e-12) continue;
      best = std::max(best, 0.5 * mu.dot(Q * mu) + q.dot(mu));
    }
  }
  return best;
}

// min over the unit simplex of ||sum lambda_i rows_i|| on a grid of step h
// (at most three rows).
inline double hull_distance_by_grid(const Matrix& rows, double h = 1e-3) {
  const Eigen::Index k = rows.rows();
  const int steps = static_cast<int>(std::lround(1.0 / h));
  double best = std::numeric_limits<double>::infinity();
  if (k == 1) return rows.row(0).norm();
  if (k == 2) {
    for (int i = 0; i <= steps; ++i) {
      const double l = static_cast<double>(i) / steps;
      best = std::min(best, (l * rows.row(0) + (1 - l) * rows.row(1)).norm());
    }
    return best;
  }
  for (int i = 0; i <= steps; ++i) {
    for (int j = 0; i + j <= steps; ++j) {
      const double l0 = static_cast<double>(i) / steps;
      const double l1 = static_cast<double>(j) / steps;
      best = std::min(best, (l0 * rows.row(0) + l1 * rows.row(1) + (1 - l0 - l1) * rows.row(2)).norm());
    }
  }
  return best;
}

// Feasible, bounded random LP in `n` variables with `m` rows and box bounds.
struct RandomLp {
  Vector c;
  Matrix A;
  Vector b;
  Vector lo;
  Vector hi;
};

inline RandomLp random_lp(pqc::Rng& rng, int n, int m) {
  RandomLp lp;
  lp.c = Vector(n);
  lp.A = Matrix(m, n);
  lp.lo = Vector::Constant(n, -5.0);
  lp.hi = Vector::Constant(n, 5.0);
  Vector z0(n);
  for (int j = 0; j < n; ++j) {
    lp.c[j] = rng.uniform(-1, 1);
    z0[j] = rng.uniform(-2, 2);
  }
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) lp.A(i, j) = rng.uniform(-1, 1);
  }
  lp.b = lp.A * z0 + Vector::NullaryExpr(m, [&](Eigen::Index) { return rng.uniform(0.0, 1.0); });
  return lp;
}

inline pqc::LpProblem to_problem(const RandomLp& r) {
  auto lp = pqc::LpProblem::free_variables(r.c.size());
  lp.c = r.c;
  lp.A = r.A;
  lp.b = r.b;
  lp.lo = r.lo;
  lp.hi = r.hi;
  return lp;
}

// Random negative definite QP data of size m.
inline pqc::CappedSimplexQp random_qp(pqc::Rng& rng, int m) {
  Matrix B(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) B(i, j) = rng.uniform(-1, 1);
  }
  pqc::CappedSimplexQp qp;
  qp.Q = -(B * B.transpose() + 0.1 * Matrix::Identity(m, m));
  qp.q = Vector::NullaryExpr(m, [&](Eigen::Index) { return rng.uniform(-2, 2); });
  qp.cap = rng.uniform(0.2, 3.0);
  return qp;
}

}  // namespace oracle
