#include "pqc/esqm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>
#include "json.hpp"

#include "pqc/convexsolve.hpp"
#include "pqc/error.hpp"
#include "pqc/rng.hpp"

namespace pqc {

namespace {

using Index = Eigen::Index;
using nlohmann::json;

double spectral_norm(const Matrix& H) {
  if (H.size() == 0) return 0.0;
  const Matrix S = 0.5 * (H + H.transpose());
  return Eigen::SelfAdjointEigenSolver<Matrix>(S, Eigen::EigenvaluesOnly).eigenvalues().cwiseAbs().maxCoeff();
}

void check_box(const std::vector<Interval>& box, int n) {
  if (box.size() != static_cast<size_t>(n)) throw DimensionError("box has wrong dimension");
  for (const auto& iv : box) {
    if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || !(iv.lo <= iv.hi)) {
      throw DomainError("box must be bounded and nonempty");
    }
  }
}

double violation(const ProblemInstance& prob, const std::vector<double>& bounds, const Vector& x) {
  double v = 0.0;
  for (size_t i = 0; i < bounds.size(); ++i) v = std::max(v, prob.inequalities()[i].evaluate(x) - bounds[i]);
  return v;
}

json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

std::string to_string(EsqmStatus s) {
  switch (s) {
    case EsqmStatus::Converged:
      return "converged";
    case EsqmStatus::MaxIter:
      return "max_iter";
    case EsqmStatus::Infeasible:
      return "infeasible";
  }
  return "unknown";
}

LipschitzEstimate estimate_lipschitz(const ProblemInstance& prob, const std::optional<Polynomial>& f,
                                     const std::vector<Interval>& box, int samples, std::uint64_t seed,
                                     double safety) {
  const int n = prob.num_vars();
  check_box(box, n);
  std::vector<Vector> points;
  if (n <= 12) {
    for (long mask = 0; mask < (1L << n); ++mask) {
      Vector p(n);
      for (int k = 0; k < n; ++k) p[k] = (mask >> k) & 1 ? box[static_cast<size_t>(k)].hi : box[static_cast<size_t>(k)].lo;
      points.push_back(p);
    }
  }
  Rng rng(seed, {0x11b5u});
  for (int s = 0; s < samples; ++s) {
    Vector p(n);
    for (int k = 0; k < n; ++k) p[k] = rng.uniform(box[static_cast<size_t>(k)].lo, box[static_cast<size_t>(k)].hi);
    points.push_back(p);
  }
  auto worst = [&](const Polynomial& p) {
    const auto H = hessian(p);
    double best = 0.0;
    for (const auto& x : points) best = std::max(best, spectral_norm(evaluate_hessian(H, x)));
    return safety * best;
  };
  LipschitzEstimate out;
  if (f) out.objective = worst(*f);
  for (const auto& g : prob.inequalities()) out.constraints.push_back(worst(g));
  return out;
}

double esqm_subproblem_objective(const ProblemInstance& prob, const Polynomial& f, const Vector& xk,
                                 const EsqmParams& params, double beta_k, const Vector& y, double s) {
  (void)prob;
  const Vector d = y - xk;
  const double rho = params.curvature_obj + beta_k * params.curvature_con;
  return evaluate_gradient(gradient(f), xk).dot(d) + beta_k * s + 0.5 * rho * d.squaredNorm();
}

EsqmStep esqm_step(const ProblemInstance& prob, const Polynomial& f, const Vector& xk, const EsqmParams& params,
                   double beta_k) {
  if (!(beta_k > 0.0)) throw DomainError("esqm_step: beta must be positive");
  const double rho = params.curvature_obj + beta_k * params.curvature_con;
  if (!(rho > 0.0)) throw DomainError("esqm_step: proximal weight must be positive");
  const DiagonalPerturbation pert{params.alpha};
  const auto bounds = constraint_bounds(prob, pert);
  const int m = prob.num_inequalities();
  const Vector gf = evaluate_gradient(gradient(f), xk);
  Matrix A(m, prob.num_vars());
  Vector c(m);
  for (int i = 0; i < m; ++i) {
    const auto& g = prob.inequalities()[static_cast<size_t>(i)];
    A.row(i) = evaluate_gradient(gradient(g), xk).transpose();
    c[i] = g.evaluate(xk) - bounds[static_cast<size_t>(i)];
  }

  CappedSimplexQp qp;
  qp.Q = -(A * A.transpose()) / rho;
  qp.Q = (0.5 * (qp.Q + qp.Q.transpose())).eval();
  qp.q = c - A * gf / rho;
  qp.cap = beta_k;
  const QpSolution sol = solve_capped_simplex_qp(qp);
  if (sol.status != SolveStatus::Optimal && sol.kkt_residual > 1e-8) {
    throw Error("esqm_step: subproblem dual solver stopped with status " + to_string(sol.status));
  }

  EsqmStep out;
  out.mu = sol.mu;
  const Vector d = -(gf + A.transpose() * sol.mu) / rho;
  out.x_next = xk + d;
  out.s = m > 0 ? std::max(0.0, (c + A * d).maxCoeff()) : 0.0;
  out.objective = gf.dot(d) + beta_k * out.s + 0.5 * rho * d.squaredNorm();
  const double dual = sol.objective - gf.squaredNorm() / (2.0 * rho);
  out.gap = out.objective - dual;
  return out;
}

double kkt_residual(const ProblemInstance& prob, const Polynomial& f, const Vector& x, const Vector& lambda,
                    const PerturbationSpec& pert) {
  const int m = prob.num_inequalities();
  if (lambda.size() != m) throw DimensionError("kkt_residual: multiplier count differs from m");
  const auto bounds = constraint_bounds(prob, pert);
  Vector grad = evaluate_gradient(gradient(f), x);
  double comp = 0.0;
  for (int i = 0; i < m; ++i) {
    const auto& g = prob.inequalities()[static_cast<size_t>(i)];
    grad += lambda[i] * evaluate_gradient(gradient(g), x);
    comp = std::max(comp, std::abs(lambda[i] * (g.evaluate(x) - bounds[static_cast<size_t>(i)])));
  }
  const double stat = grad.size() > 0 ? grad.cwiseAbs().maxCoeff() : 0.0;
  return std::max({stat, comp, violation(prob, bounds, x)});
}

double grid_lower_bound(const Polynomial& f, const std::vector<Interval>& box, int per_axis) {
  const int n = static_cast<int>(box.size());
  check_box(box, n);
  // Keep the grid near 10^5 points.
  while (per_axis > 3 && std::pow(per_axis, n) > 1e5) per_axis = (per_axis + 1) / 2;
  std::vector<int> idx(static_cast<size_t>(n), 0);
  Vector x(n);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    for (int k = 0; k < n; ++k) {
      const auto& iv = box[static_cast<size_t>(k)];
      x[k] = iv.lo + (iv.hi - iv.lo) * idx[static_cast<size_t>(k)] / (per_axis - 1);
    }
    best = std::min(best, f.evaluate(x));
    int k = 0;
    while (k < n && ++idx[static_cast<size_t>(k)] == per_axis) idx[static_cast<size_t>(k++)] = 0;
    if (k == n) break;
  }
  return best - 0.1 * std::abs(best);
}

namespace {

EsqmTrace run_once(const ProblemInstance& prob, const Polynomial& f, const Vector& x0, const EsqmParams& params) {
  const DiagonalPerturbation pert{params.alpha};
  const auto bounds = constraint_bounds(prob, pert);
  EsqmTrace t;
  t.beta0 = params.beta0;
  t.curvature_obj = params.curvature_obj;
  t.curvature_con = params.curvature_con;
  t.f_min = *params.f_min;
  auto merit = [&](const Vector& x, double beta) {
    return (f.evaluate(x) - t.f_min) / beta + violation(prob, bounds, x);
  };
  Vector x = x0;
  double beta = params.beta0;
  t.iterates.push_back(x);
  t.betas.push_back(beta);
  t.merits.push_back(merit(x, beta));
  for (int k = 0; k < params.max_iter; ++k) {
    const EsqmStep step = esqm_step(prob, f, x, params, beta);
    const Vector d = step.x_next - x;
    // Keep beta only when the new point satisfies every linearization.
    bool linear_ok = true;
    for (int i = 0; i < prob.num_inequalities() && linear_ok; ++i) {
      const auto& g = prob.inequalities()[static_cast<size_t>(i)];
      const double lin = g.evaluate(x) + evaluate_gradient(gradient(g), x).dot(d);
      linear_ok = lin <= bounds[static_cast<size_t>(i)] + params.linearization_tol;
    }
    if (!linear_ok) beta += params.delta;
    x = step.x_next;
    const double kkt = kkt_residual(prob, f, x, step.mu, pert);
    t.iterates.push_back(x);
    t.betas.push_back(beta);
    t.slacks.push_back(step.s);
    t.multipliers.push_back(step.mu);
    t.kkt_residuals.push_back(kkt);
    t.gaps.push_back(step.gap);
    t.merits.push_back(merit(x, beta));
    if (d.norm() <= params.step_tol && kkt <= params.kkt_tol) {
      t.status = EsqmStatus::Converged;
      t.reason = "step and KKT residual below tolerance";
      return t;
    }
  }
  t.status = EsqmStatus::MaxIter;
  t.reason = "iteration limit reached";
  return t;
}

// True when beta increased during the last quarter of the run.
bool beta_still_growing(const EsqmTrace& t) {
  const size_t n = t.betas.size();
  if (n < 2) return false;
  const size_t from = n - std::max<size_t>(2, n / 4);
  return t.betas.back() > t.betas[from];
}

}  // namespace

EsqmTrace run_esqm(const ProblemInstance& prob, const Polynomial& f, const Vector& x0, EsqmParams params) {
  if (x0.size() != prob.num_vars()) throw DimensionError("run_esqm: starting point has wrong dimension");
  if (f.num_vars() != prob.num_vars()) throw DimensionError("run_esqm: objective has wrong number of variables");
  if (!(params.beta0 > 0.0) || !(params.delta > 0.0)) throw DomainError("run_esqm: beta0 and delta must be positive");
  if (params.curvature_obj <= 0.0 || params.curvature_con <= 0.0) {
    const auto lip = estimate_lipschitz(prob, f, prob.sample_box());
    if (params.curvature_obj <= 0.0) params.curvature_obj = std::max(params.min_curvature, lip.objective);
    if (params.curvature_con <= 0.0) {
      double worst = 0.0;
      for (double l : lip.constraints) worst = std::max(worst, l);
      params.curvature_con = std::max(params.min_curvature, worst);
    }
  }
  if (!params.f_min) params.f_min = grid_lower_bound(f, prob.sample_box());

  EsqmTrace t = run_once(prob, f, x0, params);
  int retries = 0;
  while (t.status != EsqmStatus::Converged && beta_still_growing(t) && retries < params.max_retries) {
    params.beta0 *= 10.0;
    ++retries;
    t = run_once(prob, f, x0, params);
  }
  t.retries = retries;
  if (t.status != EsqmStatus::Converged) {
    const auto bounds = constraint_bounds(prob, DiagonalPerturbation{params.alpha});
    if (violation(prob, bounds, t.x_final()) > 1e-6) {
      t.status = EsqmStatus::Infeasible;
      t.reason = "iterates stay infeasible while the penalty grows; the level set may be empty";
    }
  }
  return t;
}

HomotopyTrace homotopy_run(const ProblemInstance& prob, const Polynomial& f, const std::vector<double>& schedule,
                           const Vector& x0, const EsqmParams& params_template) {
  if (schedule.empty()) throw DomainError("homotopy_run: empty schedule");
  for (size_t j = 0; j < schedule.size(); ++j) {
    if (!(schedule[j] > 0.0)) throw DomainError("homotopy_run: schedule values must be positive");
    if (j > 0 && !(schedule[j] < schedule[j - 1])) throw DomainError("homotopy_run: schedule must decrease strictly");
  }
  HomotopyTrace out;
  Vector x = x0;
  for (double alpha : schedule) {
    EsqmParams params = params_template;
    params.alpha = alpha;
    HomotopyLevel level;
    level.alpha = alpha;
    level.trace = run_esqm(prob, f, x, params);
    level.status = level.trace.status;
    level.stalled = level.status != EsqmStatus::Converged;
    level.x = level.trace.x_final();
    level.value = f.evaluate(level.x);
    x = level.x;
    out.levels.push_back(std::move(level));
  }
  return out;
}

std::string esqm_trace_to_csv(const EsqmTrace& trace) {
  std::ostringstream os;
  os.precision(17);
  const Index n = trace.iterates.empty() ? 0 : trace.iterates.front().size();
  os << "k";
  for (Index i = 0; i < n; ++i) os << ",x" << (i + 1);
  os << ",s,beta,kkt_residual,merit\n";
  for (size_t k = 0; k < trace.iterates.size(); ++k) {
    os << k;
    for (Index i = 0; i < n; ++i) os << "," << trace.iterates[k][i];
    os << ",";
    if (k > 0) os << trace.slacks[k - 1];
    os << "," << trace.betas[k] << ",";
    if (k > 0) os << trace.kkt_residuals[k - 1];
    os << "," << trace.merits[k] << "\n";
  }
  return os.str();
}

namespace {

json trace_json(const EsqmTrace& t) {
  json j;
  j["status"] = to_string(t.status);
  j["reason"] = t.reason;
  j["beta0"] = t.beta0;
  j["retries"] = t.retries;
  j["curvature_obj"] = t.curvature_obj;
  j["curvature_con"] = t.curvature_con;
  j["f_min"] = t.f_min;
  j["iterates"] = json::array();
  for (const auto& x : t.iterates) j["iterates"].push_back(vec_json(x));
  j["multipliers"] = json::array();
  for (const auto& mu : t.multipliers) j["multipliers"].push_back(vec_json(mu));
  j["slacks"] = t.slacks;
  j["betas"] = t.betas;
  j["kkt_residuals"] = t.kkt_residuals;
  j["merits"] = t.merits;
  j["subproblem_gaps"] = t.gaps;
  return j;
}

}  // namespace

std::string esqm_trace_to_json(const EsqmTrace& trace) { return trace_json(trace).dump(2); }

std::string homotopy_to_json(const HomotopyTrace& trace) {
  json j;
  j["levels"] = json::array();
  for (const auto& l : trace.levels) {
    json e;
    e["alpha"] = l.alpha;
    e["x"] = vec_json(l.x);
    e["value"] = l.value;
    e["status"] = to_string(l.status);
    e["possibly_singular"] = l.stalled;
    e["trace"] = trace_json(l.trace);
    j["levels"].push_back(std::move(e));
  }
  return j.dump(2);
}

}  // namespace pqc
