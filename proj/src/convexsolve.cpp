#include "pqc/convexsolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include <Eigen/Dense>

namespace pqc {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal:
      return "optimal";
    case SolveStatus::Infeasible:
      return "infeasible";
    case SolveStatus::Unbounded:
      return "unbounded";
    case SolveStatus::IterLimit:
      return "iteration_limit";
  }
  return "unknown";
}

LpProblem LpProblem::free_variables(Eigen::Index n) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  LpProblem lp;
  lp.c = Vector::Zero(n);
  lp.A = Matrix::Zero(0, n);
  lp.b = Vector::Zero(0);
  lp.E = Matrix::Zero(0, n);
  lp.d = Vector::Zero(0);
  lp.lo = Vector::Constant(n, -inf);
  lp.hi = Vector::Constant(n, inf);
  return lp;
}

namespace {

using Index = Eigen::Index;

bool all_finite(const Matrix& m) { return m.array().isFinite().all(); }
bool no_nan(const Vector& v) { return !v.array().isNaN().any(); }

// Original variable z_j expressed through nonnegative standard-form columns.
struct VarMap {
  enum Kind { Lower, Upper, Free } kind;
  Index col;  // first standard column
  double offset;
};

class Tableau {
 public:
  Tableau(Index rows, Index cols) : T_(Matrix::Zero(rows, cols + 1)), obj_(Vector::Zero(cols + 1)), basis_(rows, -1) {}

  Matrix& body() { return T_; }
  Vector& obj() { return obj_; }
  std::vector<Index>& basis() { return basis_; }
  Index rows() const { return T_.rows(); }
  Index cols() const { return T_.cols() - 1; }
  double rhs(Index i) const { return T_(i, cols()); }

  void set_costs(const Vector& cost) {
    obj_.setZero();
    obj_.head(cols()) = cost;
    for (Index i = 0; i < rows(); ++i) {
      const double cb = cost[basis_[i]];
      if (cb != 0.0) obj_ -= cb * T_.row(i).transpose();
    }
  }

  void pivot(Index r, Index s) {
    T_.row(r) /= T_(r, s);
    for (Index i = 0; i < rows(); ++i) {
      if (i == r) continue;
      const double f = T_(i, s);
      if (f != 0.0) T_.row(i) -= f * T_.row(r);
    }
    const double f = obj_[s];
    if (f != 0.0) obj_ -= f * T_.row(r).transpose();
    basis_[r] = s;
  }

  // Bland's rule. Returns false on unboundedness; `iters` is shared across phases.
  enum class Outcome { Optimal, Unbounded, IterLimit };
  Outcome run(const std::vector<bool>& allowed, int& iters, int max_iters) {
    constexpr double kRcTol = 1e-11;
    constexpr double kPivTol = 1e-11;
    while (iters < max_iters) {
      Index s = -1;
      for (Index j = 0; j < cols(); ++j) {
        if (allowed[j] && obj_[j] < -kRcTol && !is_basic(j)) {
          s = j;
          break;
        }
      }
      if (s < 0) return Outcome::Optimal;
      Index r = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Index i = 0; i < rows(); ++i) {
        if (T_(i, s) <= kPivTol) continue;
        const double ratio = rhs(i) / T_(i, s);
        if (r < 0 || ratio < best - 1e-14 ||
            (std::abs(ratio - best) <= 1e-14 && basis_[i] < basis_[r])) {
          best = ratio;
          r = i;
        }
      }
      if (r < 0) return Outcome::Unbounded;
      pivot(r, s);
      ++iters;
    }
    return Outcome::IterLimit;
  }

  bool is_basic(Index j) const { return std::find(basis_.begin(), basis_.end(), j) != basis_.end(); }

 private:
  Matrix T_;
  Vector obj_;
  std::vector<Index> basis_;
};

}  // namespace

LpSolution solve_lp(const LpProblem& lp, double tol) {
  const Index n = lp.c.size();
  if (lp.A.cols() != n && lp.A.rows() > 0) throw DimensionError("solve_lp: A has wrong column count");
  if (lp.E.cols() != n && lp.E.rows() > 0) throw DimensionError("solve_lp: E has wrong column count");
  if (lp.A.rows() != lp.b.size()) throw DimensionError("solve_lp: A and b disagree");
  if (lp.E.rows() != lp.d.size()) throw DimensionError("solve_lp: E and d disagree");
  if (lp.lo.size() != n || lp.hi.size() != n) throw DimensionError("solve_lp: bound vectors have wrong size");
  if (!all_finite(lp.c) || !all_finite(lp.A) || !all_finite(lp.b) || !all_finite(lp.E) ||
      !all_finite(lp.d) || !no_nan(lp.lo) || !no_nan(lp.hi)) {
    throw DomainError("solve_lp: non-finite problem data");
  }
  for (Index j = 0; j < n; ++j) {
    if (lp.lo[j] > lp.hi[j] || lp.lo[j] == std::numeric_limits<double>::infinity() ||
        lp.hi[j] == -std::numeric_limits<double>::infinity()) {
      LpSolution out;
      out.status = SolveStatus::Infeasible;
      out.x = Vector::Zero(n);
      return out;
    }
  }

  // Standard form: columns p >= 0.
  std::vector<VarMap> vars(static_cast<size_t>(n));
  Index ncols = 0;
  std::vector<Index> bounded;  // variables needing an explicit upper-bound row
  for (Index j = 0; j < n; ++j) {
    const bool has_lo = std::isfinite(lp.lo[j]);
    const bool has_hi = std::isfinite(lp.hi[j]);
    if (has_lo) {
      vars[j] = {VarMap::Lower, ncols++, lp.lo[j]};
      if (has_hi) bounded.push_back(j);
    } else if (has_hi) {
      vars[j] = {VarMap::Upper, ncols++, lp.hi[j]};
    } else {
      vars[j] = {VarMap::Free, ncols, 0.0};
      ncols += 2;
    }
  }
  const Index mA = lp.A.rows();
  const Index mB = static_cast<Index>(bounded.size());
  const Index mE = lp.E.rows();
  const Index nineq = mA + mB;
  const Index R = nineq + mE;

  Matrix M = Matrix::Zero(R, ncols);
  Vector rhs = Vector::Zero(R);
  auto scatter = [&](Index row, Index j, double coef) {
    const auto& v = vars[j];
    switch (v.kind) {
      case VarMap::Lower:
        M(row, v.col) += coef;
        break;
      case VarMap::Upper:
        M(row, v.col) -= coef;
        break;
      case VarMap::Free:
        M(row, v.col) += coef;
        M(row, v.col + 1) -= coef;
        break;
    }
    rhs[row] -= coef * v.offset;
  };
  for (Index i = 0; i < mA; ++i) {
    rhs[i] = lp.b[i];
    for (Index j = 0; j < n; ++j) {
      if (lp.A(i, j) != 0.0) scatter(i, j, lp.A(i, j));
    }
  }
  for (Index k = 0; k < mB; ++k) {
    const Index j = bounded[k];
    M(mA + k, vars[j].col) = 1.0;
    rhs[mA + k] = lp.hi[j] - lp.lo[j];
  }
  for (Index i = 0; i < mE; ++i) {
    rhs[nineq + i] = lp.d[i];
    for (Index j = 0; j < n; ++j) {
      if (lp.E(i, j) != 0.0) scatter(nineq + i, j, lp.E(i, j));
    }
  }
  Vector cost = Vector::Zero(ncols);
  double cost_offset = 0.0;
  for (Index j = 0; j < n; ++j) {
    const auto& v = vars[j];
    cost_offset += lp.c[j] * v.offset;
    switch (v.kind) {
      case VarMap::Lower:
        cost[v.col] = lp.c[j];
        break;
      case VarMap::Upper:
        cost[v.col] = -lp.c[j];
        break;
      case VarMap::Free:
        cost[v.col] = lp.c[j];
        cost[v.col + 1] = -lp.c[j];
        break;
    }
  }

  // Columns: [structural | slacks (nineq) | artificials].
  std::vector<double> sign(static_cast<size_t>(R), 1.0);
  std::vector<Index> art_row;
  for (Index i = 0; i < R; ++i) {
    if (rhs[i] < 0.0) sign[i] = -1.0;
    if (i >= nineq || sign[i] < 0.0) art_row.push_back(i);
  }
  const Index nart = static_cast<Index>(art_row.size());
  const Index C = ncols + nineq + nart;
  Tableau tab(R, C);
  Matrix full = Matrix::Zero(R, C);  // standard-form matrix after row flips
  Vector full_rhs(R);
  std::vector<Index> identity_col(static_cast<size_t>(R), -1);
  for (Index i = 0; i < R; ++i) {
    full.row(i).head(ncols) = sign[i] * M.row(i);
    if (i < nineq) full(i, ncols + i) = sign[i];
    full_rhs[i] = sign[i] * rhs[i];
  }
  for (Index k = 0; k < nart; ++k) {
    full(art_row[k], ncols + nineq + k) = 1.0;
    identity_col[art_row[k]] = ncols + nineq + k;
  }
  for (Index i = 0; i < R; ++i) {
    if (identity_col[i] < 0) identity_col[i] = ncols + i;
    tab.basis()[i] = identity_col[i];
  }
  tab.body().leftCols(C) = full;
  tab.body().col(C) = full_rhs;

  LpSolution out;
  out.x = Vector::Zero(n);
  int iters = 0;
  const int max_iters = 50000;
  std::vector<bool> allowed(static_cast<size_t>(C), true);

  if (nart > 0) {
    Vector phase1 = Vector::Zero(C);
    phase1.tail(nart).setOnes();
    tab.set_costs(phase1);
    const auto res = tab.run(allowed, iters, max_iters);
    if (res == Tableau::Outcome::IterLimit) {
      out.status = SolveStatus::IterLimit;
      out.iterations = iters;
      return out;
    }
    const double infeas = -tab.obj()[C];
    if (infeas > tol * (1.0 + full_rhs.cwiseAbs().maxCoeff())) {
      out.status = SolveStatus::Infeasible;
      out.iterations = iters;
      return out;
    }
    // Drive zero-level artificials out of the basis where possible.
    for (Index i = 0; i < R; ++i) {
      if (tab.basis()[i] < ncols + nineq) continue;
      for (Index j = 0; j < ncols + nineq; ++j) {
        if (std::abs(tab.body()(i, j)) > 1e-9 && !tab.is_basic(j)) {
          tab.pivot(i, j);
          break;
        }
      }
    }
    for (Index k = 0; k < nart; ++k) allowed[ncols + nineq + k] = false;
  }
  Vector phase2 = Vector::Zero(C);
  phase2.head(ncols) = cost;
  tab.set_costs(phase2);
  const auto res = tab.run(allowed, iters, max_iters);
  out.iterations = iters;
  if (res == Tableau::Outcome::Unbounded) {
    out.status = SolveStatus::Unbounded;
    return out;
  }
  if (res == Tableau::Outcome::IterLimit) {
    out.status = SolveStatus::IterLimit;
    return out;
  }

  // Recompute the basic solution and the row duals from the final basis
  // directly, which removes the round-off accumulated by the pivots.
  Matrix B(R, R);
  Vector cB(R);
  for (Index i = 0; i < R; ++i) {
    B.col(i) = full.col(tab.basis()[i]);
    cB[i] = phase2[tab.basis()[i]];
  }
  Eigen::FullPivLU<Matrix> lu(B);
  Vector pB = lu.solve(full_rhs);
  Vector y = lu.transpose().solve(cB);
  if (!pB.allFinite() || !y.allFinite()) {
    pB = tab.body().col(C);
    y = Vector::Zero(R);
    for (Index i = 0; i < R; ++i) y[i] = -tab.obj()[identity_col[i]];
  }
  Vector p = Vector::Zero(C);
  for (Index i = 0; i < R; ++i) p[tab.basis()[i]] = std::max(0.0, pB[i]);

  for (Index j = 0; j < n; ++j) {
    const auto& v = vars[j];
    switch (v.kind) {
      case VarMap::Lower:
        out.x[j] = v.offset + p[v.col];
        break;
      case VarMap::Upper:
        out.x[j] = v.offset - p[v.col];
        break;
      case VarMap::Free:
        out.x[j] = p[v.col] - p[v.col + 1];
        break;
    }
  }
  // Simplex duals y satisfy B^T y = c_B on the flipped rows; a <= row in a
  // minimization carries y <= 0.
  out.dual_ineq = Vector::Zero(mA);
  out.dual_eq = Vector::Zero(mE);
  for (Index i = 0; i < mA; ++i) out.dual_ineq[i] = std::max(0.0, -sign[i] * y[i]);
  for (Index i = 0; i < mE; ++i) out.dual_eq[i] = -sign[nineq + i] * y[nineq + i];

  out.objective = lp.c.dot(out.x);
  out.reduced_costs = lp.c;
  if (mA > 0) out.reduced_costs += lp.A.transpose() * out.dual_ineq;
  if (mE > 0) out.reduced_costs += lp.E.transpose() * out.dual_eq;

  double kkt = 0.0;
  double dual_obj = 0.0;
  if (mA > 0) {
    const Vector slack = lp.b - lp.A * out.x;
    for (Index i = 0; i < mA; ++i) {
      kkt = std::max({kkt, -slack[i], std::abs(out.dual_ineq[i] * slack[i])});
    }
    dual_obj -= out.dual_ineq.dot(lp.b);
  }
  if (mE > 0) {
    kkt = std::max(kkt, (lp.E * out.x - lp.d).cwiseAbs().maxCoeff());
    dual_obj -= out.dual_eq.dot(lp.d);
  }
  for (Index j = 0; j < n; ++j) {
    const double r = out.reduced_costs[j];
    const double rp = std::max(r, 0.0);
    const double rm = std::max(-r, 0.0);
    if (std::isfinite(lp.lo[j])) {
      kkt = std::max({kkt, lp.lo[j] - out.x[j], rp * (out.x[j] - lp.lo[j])});
      dual_obj += lp.lo[j] * rp;
    } else {
      kkt = std::max(kkt, rp);
    }
    if (std::isfinite(lp.hi[j])) {
      kkt = std::max({kkt, out.x[j] - lp.hi[j], rm * (lp.hi[j] - out.x[j])});
      dual_obj -= lp.hi[j] * rm;
    } else {
      kkt = std::max(kkt, rm);
    }
  }
  (void)cost_offset;
  out.dual_objective = dual_obj;
  out.kkt_residual = kkt;
  out.status = SolveStatus::Optimal;
  return out;
}

Vector project_simplex(const Vector& v, double cap) {
  if (cap < 0.0) throw DomainError("project_simplex: negative cap");
  const Index n = v.size();
  if (n == 0) return v;
  if (cap == 0.0) return Vector::Zero(n);
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (Index j = 0; j < n; ++j) {
    cumsum += u[static_cast<size_t>(j)];
    const double t = (cumsum - cap) / static_cast<double>(j + 1);
    if (u[static_cast<size_t>(j)] - t > 0.0) theta = t;
  }
  return (v.array() - theta).max(0.0).matrix();
}

Vector project_capped_simplex(const Vector& v, double cap) {
  if (cap < 0.0) throw DomainError("project_capped_simplex: negative cap");
  Vector w = v.cwiseMax(0.0);
  if (w.sum() <= cap) return w;
  return project_simplex(v, cap);
}

namespace {

double qp_value(const CappedSimplexQp& qp, const Vector& mu) {
  return 0.5 * mu.dot(qp.Q * mu) + qp.q.dot(mu);
}

Vector qp_project(const CappedSimplexQp& qp, const Vector& v) {
  return qp.sum_equals_cap ? project_simplex(v, qp.cap) : project_capped_simplex(v, qp.cap);
}

double natural_residual(const CappedSimplexQp& qp, const Vector& mu) {
  const Vector g = qp.Q * mu + qp.q;
  return (mu - qp_project(qp, mu + g)).cwiseAbs().maxCoeff();
}

// Maximizes the quadratic restricted to the face of `mu` (zero coordinates
// fixed, the sum constraint kept when it is active). Returns the unprojected
// face optimum in full coordinates, or nothing when the face is empty.
std::optional<Vector> face_newton(const CappedSimplexQp& qp, const Vector& mu) {
  std::vector<Index> free;
  for (Index i = 0; i < mu.size(); ++i) {
    if (mu[i] > 0.0) free.push_back(i);
  }
  if (free.empty()) return std::nullopt;
  const bool cap_active = qp.sum_equals_cap || mu.sum() >= qp.cap * (1.0 - 1e-12);
  const auto k = static_cast<Index>(free.size());
  const Index dim = cap_active ? k + 1 : k;
  Matrix K = Matrix::Zero(dim, dim);
  Vector rhs = Vector::Zero(dim);
  for (Index a = 0; a < k; ++a) {
    for (Index b = 0; b < k; ++b) K(a, b) = -qp.Q(free[a], free[b]);
    rhs[a] = qp.q[free[a]];
  }
  if (cap_active) {
    for (Index a = 0; a < k; ++a) {
      K(a, k) = 1.0;
      K(k, a) = 1.0;
    }
    rhs[k] = qp.cap;
  }
  const Vector z = Eigen::CompleteOrthogonalDecomposition<Matrix>(K).solve(rhs);
  if (!z.allFinite()) return std::nullopt;
  Vector full = Vector::Zero(mu.size());
  for (Index a = 0; a < k; ++a) full[free[a]] = z[a];
  return full;
}

}  // namespace

QpSolution solve_capped_simplex_qp(const CappedSimplexQp& qp, double tol, int max_iter) {
  const Index m = qp.q.size();
  if (qp.Q.rows() != m || qp.Q.cols() != m) throw DimensionError("capped-simplex QP: Q has wrong shape");
  if (!all_finite(qp.Q) || !all_finite(qp.q) || !std::isfinite(qp.cap)) {
    throw DomainError("capped-simplex QP: non-finite data");
  }
  if (qp.cap < 0.0) throw DomainError("capped-simplex QP: negative cap");
  const double scale = std::max(1.0, qp.Q.cwiseAbs().maxCoeff());
  if ((qp.Q - qp.Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw DomainError("capped-simplex QP: Q is not symmetric");
  }
  Vector eig = Vector::Zero(0);
  if (m > 0) {
    eig = Eigen::SelfAdjointEigenSolver<Matrix>(qp.Q, Eigen::EigenvaluesOnly).eigenvalues();
    if (eig.maxCoeff() > 1e-10 * scale) throw DomainError("capped-simplex QP: Q is not negative semidefinite");
  }

  QpSolution out;
  if (m == 0) {
    out.status = SolveStatus::Optimal;
    out.mu = Vector::Zero(0);
    return out;
  }
  const double lipschitz = eig.cwiseAbs().maxCoeff();
  const double step0 = lipschitz > 1e-14 ? 1.0 / lipschitz : 1e6;

  Vector mu = qp_project(qp, Vector::Zero(m));
  double val = qp_value(qp, mu);
  int it = 0;
  for (; it < max_iter; ++it) {
    if (natural_residual(qp, mu) <= tol) break;
    // Projected gradient step with backtracking on the quadratic upper model.
    const Vector g = qp.Q * mu + qp.q;
    double t = step0;
    Vector next = mu;
    double next_val = val;
    for (int bt = 0; bt < 60; ++bt) {
      const Vector cand = qp_project(qp, mu + t * g);
      const Vector diff = cand - mu;
      const double cand_val = qp_value(qp, cand);
      if (cand_val >= val + g.dot(diff) - diff.squaredNorm() / (2.0 * t) - 1e-15 * (1.0 + std::abs(val))) {
        if (cand_val >= val) {
          next = cand;
          next_val = cand_val;
        }
        break;
      }
      t *= 0.5;
    }
    // Exact maximization on the identified face, accepted only when it improves.
    if (auto face = face_newton(qp, next)) {
      const Vector dir = *face - next;
      for (double s = 1.0; s > 1e-6; s *= 0.5) {
        const Vector cand = qp_project(qp, next + s * dir);
        const double cand_val = qp_value(qp, cand);
        if (cand_val > next_val) {
          next = cand;
          next_val = cand_val;
          break;
        }
      }
    }
    if (next_val <= val && (next - mu).cwiseAbs().maxCoeff() == 0.0) {
      mu = next;
      val = next_val;
      break;
    }
    mu = next;
    val = next_val;
  }
  out.mu = mu;
  out.objective = val;
  out.iterations = it;
  out.kkt_residual = natural_residual(qp, mu);
  const Vector g = qp.Q * mu + qp.q;
  double theta = 0.0;
  int nfree = 0;
  for (Index i = 0; i < m; ++i) {
    if (mu[i] > 0.0) {
      theta += g[i];
      ++nfree;
    }
  }
  if (nfree > 0) {
    theta /= nfree;
  } else {
    theta = g.maxCoeff();
  }
  if (!qp.sum_equals_cap) theta = std::max(0.0, theta);
  out.cap_multiplier = theta;
  out.status = out.kkt_residual <= tol ? SolveStatus::Optimal : SolveStatus::IterLimit;
  return out;
}

}  // namespace pqc
