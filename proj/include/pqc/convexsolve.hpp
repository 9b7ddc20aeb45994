#pragma once

#include <string>

#include "pqc/poly.hpp"

namespace pqc {

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterLimit };

std::string to_string(SolveStatus s);

/// minimize c.z  s.t.  A z <= b,  E z = d,  lo <= z <= hi  (bounds may be infinite).
struct LpProblem {
  Vector c;
  Matrix A;
  Vector b;
  Matrix E;
  Vector d;
  Vector lo;
  Vector hi;

  /// Problem in `n` variables with no rows and free bounds.
  static LpProblem free_variables(Eigen::Index n);
};

struct LpSolution {
  SolveStatus status = SolveStatus::IterLimit;
  double objective = 0.0;
  Vector x;
  /// Multipliers u >= 0 of the A rows and v of the E rows, with reduced costs
  /// r = c + A^T u + E^T v carried by the variable bounds.
  Vector dual_ineq;
  Vector dual_eq;
  Vector reduced_costs;
  double dual_objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
};

/// Dense two-phase tableau simplex with Bland's rule. Infeasible and
/// unbounded problems are reported through `status`; non-finite data throws.
LpSolution solve_lp(const LpProblem& lp, double tol = 1e-9);

/// maximize 0.5 mu^T Q mu + q^T mu  over  {mu >= 0, sum mu <= cap}
/// (or sum mu == cap when `sum_equals_cap`). Q must be symmetric negative
/// semidefinite.
struct CappedSimplexQp {
  Matrix Q;
  Vector q;
  double cap = 1.0;
  bool sum_equals_cap = false;
};

struct QpSolution {
  SolveStatus status = SolveStatus::IterLimit;
  double objective = 0.0;
  Vector mu;
  /// Multiplier of the sum constraint.
  double cap_multiplier = 0.0;
  /// Natural residual ||mu - P(mu + grad)||_inf.
  double kkt_residual = 0.0;
  int iterations = 0;
};

QpSolution solve_capped_simplex_qp(const CappedSimplexQp& qp, double tol = 1e-12,
                                   int max_iter = 10000);

/// Euclidean projection onto {mu >= 0, sum mu <= cap}.
Vector project_capped_simplex(const Vector& v, double cap);
/// Euclidean projection onto {mu >= 0, sum mu == cap}.
Vector project_simplex(const Vector& v, double cap);

}  // namespace pqc
