#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pqc/model.hpp"

namespace pqc {

struct LipschitzEstimate {
  double objective = 0.0;
  std::vector<double> constraints;
};

/// Largest Hessian spectral norm over the box corners and `samples` uniform
/// points, times `safety`.
LipschitzEstimate estimate_lipschitz(const ProblemInstance& prob, const std::optional<Polynomial>& f,
                                     const std::vector<Interval>& box, int samples = 200,
                                     std::uint64_t seed = 1, double safety = 1.5);

struct EsqmParams {
  double alpha = 0.0;
  double beta0 = 10.0;
  double delta = 1.0;
  /// Proximal weights; nonpositive values are replaced by Lipschitz estimates
  /// on the sample box, floored at `min_curvature`.
  double curvature_obj = 0.0;
  double curvature_con = 0.0;
  double min_curvature = 1.0;
  double step_tol = 1e-10;
  double kkt_tol = 1e-8;
  int max_iter = 5000;
  /// Restarts with beta0 scaled by 10 when the penalty is still growing at the
  /// end of an unconverged run.
  int max_retries = 3;
  /// Slack allowed when testing the new iterate against the linearized constraints.
  double linearization_tol = 1e-10;
  /// Lower bound on f used only for the reported merit values; estimated on a
  /// grid when absent.
  std::optional<double> f_min;
};

struct EsqmStep {
  Vector x_next;
  double s = 0.0;
  Vector mu;
  /// Primal objective minus dual objective of the subproblem.
  double gap = 0.0;
  double objective = 0.0;
};

/// The proximal linearized subproblem at x_k, solved through its dual
/// over {mu >= 0, sum mu <= beta_k}.
EsqmStep esqm_step(const ProblemInstance& prob, const Polynomial& f, const Vector& xk,
                   const EsqmParams& params, double beta_k);

/// Subproblem objective (without the constant f(x_k)) at (y, s).
double esqm_subproblem_objective(const ProblemInstance& prob, const Polynomial& f, const Vector& xk,
                                 const EsqmParams& params, double beta_k, const Vector& y, double s);

/// max of ||grad f + sum lambda_i grad g_i||_inf, max_i |lambda_i (g_i - bound_i)|
/// and the feasibility violation.
double kkt_residual(const ProblemInstance& prob, const Polynomial& f, const Vector& x, const Vector& lambda,
                    const PerturbationSpec& pert);

enum class EsqmStatus { Converged, MaxIter, Infeasible };

std::string to_string(EsqmStatus s);

struct EsqmTrace {
  std::vector<Vector> iterates;
  std::vector<double> slacks;  // s produced by the step leaving iterate k
  std::vector<double> betas;   // beta_k used at iterate k
  std::vector<Vector> multipliers;
  std::vector<double> kkt_residuals;
  std::vector<double> merits;
  std::vector<double> gaps;
  EsqmStatus status = EsqmStatus::MaxIter;
  std::string reason;
  double beta0 = 0.0;
  int retries = 0;
  double curvature_obj = 0.0;
  double curvature_con = 0.0;
  double f_min = 0.0;

  const Vector& x_final() const { return iterates.back(); }
  int iterations() const { return static_cast<int>(iterates.size()) - 1; }
};

EsqmTrace run_esqm(const ProblemInstance& prob, const Polynomial& f, const Vector& x0, EsqmParams params);

/// Crude lower bound on f over the sample box: grid minimum widened by 10%.
double grid_lower_bound(const Polynomial& f, const std::vector<Interval>& box, int per_axis = 41);

struct HomotopyLevel {
  double alpha = 0.0;
  Vector x;
  double value = 0.0;
  EsqmStatus status = EsqmStatus::MaxIter;
  /// Set when the level did not converge; such an alpha is possibly singular.
  bool stalled = false;
  EsqmTrace trace;
};

struct HomotopyTrace {
  std::vector<HomotopyLevel> levels;
};

/// Runs ESQM at each alpha of a strictly decreasing schedule, warm-starting
/// from the previous solution with beta reset to beta0.
HomotopyTrace homotopy_run(const ProblemInstance& prob, const Polynomial& f, const std::vector<double>& schedule,
                           const Vector& x0, const EsqmParams& params_template);

/// Columns k, x..., s, beta, kkt_residual, merit.
std::string esqm_trace_to_csv(const EsqmTrace& trace);
std::string esqm_trace_to_json(const EsqmTrace& trace);
std::string homotopy_to_json(const HomotopyTrace& trace);

}  // namespace pqc
