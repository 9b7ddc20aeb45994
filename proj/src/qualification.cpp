#include "pqc/qualification.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "parallel.hpp"
#include "pqc/convexsolve.hpp"
#include "pqc/rng.hpp"

namespace pqc {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Holds:
      return "Holds";
    case Verdict::Fails:
      return "Fails";
    case Verdict::Degenerate:
      return "Degenerate";
  }
  return "?";
}

Verdict classify_margin(double margin, double tol) {
  if (margin <= tol) return Verdict::Fails;
  if (margin <= 10.0 * tol) return Verdict::Degenerate;
  return Verdict::Holds;
}

namespace {

using Index = Eigen::Index;

Matrix equality_jacobian(const ProblemInstance& prob, const Vector& x) {
  Matrix H(prob.num_equalities(), prob.num_vars());
  for (int j = 0; j < prob.num_equalities(); ++j) {
    H.row(j) = evaluate_gradient(gradient(prob.equalities()[static_cast<size_t>(j)]), x).transpose();
  }
  return H;
}

Matrix active_jacobian(const ProblemInstance& prob, const Vector& x, const std::vector<int>& active) {
  Matrix G(static_cast<Index>(active.size()), prob.num_vars());
  for (size_t k = 0; k < active.size(); ++k) {
    G.row(static_cast<Index>(k)) =
        evaluate_gradient(gradient(prob.inequalities()[static_cast<size_t>(active[k])]), x).transpose();
  }
  return G;
}

bool independent_rows(const Matrix& H, double rank_tol) {
  if (H.rows() == 0) return true;
  if (H.rows() > H.cols()) return false;
  const Vector s = Eigen::JacobiSVD<Matrix>(H).singularValues();
  if (s[0] <= 0.0) return false;
  return s[s.size() - 1] / s[0] > rank_tol;
}

// Shared preamble: active set plus the equality-rank gate. Returns true when
// the certificate is already decided (dependent equality gradients or an
// empty active set).
bool prepare(const ProblemInstance& prob, const PerturbationSpec& pert, const Vector& x,
             const MfcqOptions& opts, MfcqCertificate& cert) {
  cert.active = active_set(prob, pert, x, opts.active_tol);
  cert.tolerance = opts.tol;
  const Matrix H = equality_jacobian(prob, x);
  cert.equality_gradients_independent = independent_rows(H, opts.rank_tol);
  if (!cert.equality_gradients_independent) {
    cert.verdict = Verdict::Fails;
    cert.margin = 0.0;
    cert.reason = "equality constraint gradients are linearly dependent";
    cert.lambda = Vector::Zero(static_cast<Index>(cert.active.indices.size()));
    if (H.rows() > 0) {
      Eigen::JacobiSVD<Matrix> svd(H.transpose(), Eigen::ComputeFullV);
      cert.kappa = svd.matrixV().col(svd.matrixV().cols() - 1);
    }
    cert.direction = Vector::Zero(prob.num_vars());
    return true;
  }
  if (cert.active.indices.empty()) {
    cert.verdict = Verdict::Holds;
    cert.margin = std::numeric_limits<double>::infinity();
    cert.direction = Vector::Zero(prob.num_vars());
    cert.lambda = Vector::Zero(0);
    cert.kappa = Vector::Zero(prob.num_equalities());
    cert.reason = "no active inequality";
    return true;
  }
  return false;
}

}  // namespace

bool equality_gradients_independent(const ProblemInstance& prob, const Vector& x, double rank_tol) {
  if (prob.num_equalities() > prob.num_vars()) return false;
  return independent_rows(equality_jacobian(prob, x), rank_tol);
}

double replay_certificate(const ProblemInstance& prob, const Vector& x, const MfcqCertificate& cert) {
  const Matrix G = active_jacobian(prob, x, cert.active.indices);
  const Matrix H = equality_jacobian(prob, x);
  Vector w = Vector::Zero(prob.num_vars());
  if (cert.lambda.size() > 0) w += G.transpose() * cert.lambda;
  if (cert.kappa.size() > 0 && H.rows() > 0) w -= H.transpose() * cert.kappa;
  return w.norm();
}

MfcqCertificate check_mfcq_lp(const ProblemInstance& prob, const PerturbationSpec& pert,
                              const Vector& x, const MfcqOptions& opts) {
  MfcqCertificate cert;
  cert.method = MfcqCertificate::Method::Lp;
  if (prepare(prob, pert, x, opts, cert)) return cert;

  const int n = prob.num_vars();
  const Matrix G = active_jacobian(prob, x, cert.active.indices);
  const Matrix H = equality_jacobian(prob, x);
  const Index k = G.rows();

  // Variables (y, eps): minimize -eps.
  LpProblem lp = LpProblem::free_variables(n + 1);
  lp.c[n] = -1.0;
  lp.A = Matrix::Zero(k, n + 1);
  lp.A.leftCols(n) = G;
  lp.A.col(n).setOnes();
  lp.b = Vector::Zero(k);
  lp.E = Matrix::Zero(H.rows(), n + 1);
  lp.E.leftCols(n) = H;
  lp.d = Vector::Zero(H.rows());
  lp.lo.head(n).setConstant(-1.0);
  lp.hi.head(n).setConstant(1.0);
  const LpSolution sol = solve_lp(lp);
  if (sol.status != SolveStatus::Optimal) {
    cert.verdict = Verdict::Degenerate;
    cert.reason = "LP solver returned " + to_string(sol.status);
    cert.direction = Vector::Zero(n);
    return cert;
  }
  cert.margin = std::max(0.0, sol.x[n]);
  cert.direction = sol.x.head(n);
  // The eps column forces sum u = 1, so the row multipliers are hull weights.
  const double total = sol.dual_ineq.sum();
  cert.lambda = total > 0.0 ? Vector(sol.dual_ineq / total) : sol.dual_ineq;
  cert.kappa = total > 0.0 ? Vector(-sol.dual_eq / total) : Vector(-sol.dual_eq);
  cert.hull_distance = replay_certificate(prob, x, cert);
  cert.verdict = classify_margin(cert.margin, opts.tol);
  return cert;
}

MfcqCertificate check_mfcq_hull(const ProblemInstance& prob, const PerturbationSpec& pert,
                                const Vector& x, const MfcqOptions& opts) {
  MfcqCertificate cert;
  cert.method = MfcqCertificate::Method::Hull;
  if (prepare(prob, pert, x, opts, cert)) {
    if (cert.verdict == Verdict::Holds) cert.hull_distance = cert.margin;
    return cert;
  }
  const int n = prob.num_vars();
  const Matrix G = active_jacobian(prob, x, cert.active.indices);
  const Matrix H = equality_jacobian(prob, x);

  Matrix P = Matrix::Identity(n, n);
  if (H.rows() > 0) {
    Eigen::HouseholderQR<Matrix> qr(H.transpose());
    const Matrix Qthin = qr.householderQ() * Matrix::Identity(n, H.rows());
    P -= Qthin * Qthin.transpose();
  }
  const Matrix Gp = G * P;
  CappedSimplexQp qp;
  qp.Q = -(Gp * Gp.transpose());
  qp.Q = 0.5 * (qp.Q + qp.Q.transpose()).eval();
  qp.q = Vector::Zero(G.rows());
  qp.cap = 1.0;
  qp.sum_equals_cap = true;
  const QpSolution sol = solve_capped_simplex_qp(qp);
  cert.lambda = sol.mu;
  if (H.rows() > 0) {
    cert.kappa = (H * H.transpose()).ldlt().solve(H * (G.transpose() * sol.mu));
  } else {
    cert.kappa = Vector::Zero(0);
  }
  const Vector w = G.transpose() * cert.lambda - (H.rows() > 0 ? Vector(H.transpose() * cert.kappa) : Vector::Zero(n));
  cert.hull_distance = w.norm();
  cert.margin = cert.hull_distance;
  // The minimum-norm hull element separates the hull from the origin.
  const double wmax = w.cwiseAbs().maxCoeff();
  cert.direction = wmax > 0.0 ? Vector(-w / wmax) : Vector::Zero(n);
  cert.verdict = classify_margin(cert.margin, opts.tol);
  if (sol.status != SolveStatus::Optimal) cert.reason = "hull QP stopped at " + to_string(sol.status);
  return cert;
}

std::vector<Vector> sample_interior_points(const ProblemInstance& prob, const PerturbationSpec& pert,
                                           const std::vector<Interval>& box, int count,
                                           std::uint64_t seed, int max_attempts) {
  const auto bounds = constraint_bounds(prob, pert);
  Rng rng(seed, {0x1a7e51u});
  std::vector<Vector> out;
  const int n = prob.num_vars();
  Vector x(n);
  for (int attempt = 0; attempt < max_attempts && static_cast<int>(out.size()) < count; ++attempt) {
    for (int k = 0; k < n; ++k) x[k] = rng.uniform(box[static_cast<size_t>(k)].lo, box[static_cast<size_t>(k)].hi);
    bool strict = true;
    for (size_t i = 0; i < bounds.size() && strict; ++i) {
      strict = prob.inequalities()[i].evaluate(x) < bounds[i];
    }
    if (strict) out.push_back(x);
  }
  return out;
}

std::optional<Vector> boundary_point_on_ray(const ProblemInstance& prob, const PerturbationSpec& pert,
                                            const Vector& interior, const Vector& direction,
                                            const std::vector<Interval>& box, int ray_steps,
                                            int bisection_iters) {
  const auto bounds = constraint_bounds(prob, pert);
  auto feasible = [&](const Vector& p) {
    for (size_t i = 0; i < bounds.size(); ++i) {
      if (prob.inequalities()[i].evaluate(p) > bounds[i]) return false;
    }
    return true;
  };
  double t_box = std::numeric_limits<double>::infinity();
  for (Index k = 0; k < interior.size(); ++k) {
    const auto& iv = box[static_cast<size_t>(k)];
    if (direction[k] > 0.0) t_box = std::min(t_box, (iv.hi - interior[k]) / direction[k]);
    if (direction[k] < 0.0) t_box = std::min(t_box, (iv.lo - interior[k]) / direction[k]);
  }
  if (!std::isfinite(t_box) || t_box <= 0.0) return std::nullopt;
  double prev = 0.0;
  for (int s = 1; s <= ray_steps; ++s) {
    const double t = t_box * s / ray_steps;
    if (feasible(interior + t * direction)) {
      prev = t;
      continue;
    }
    double lo = prev;
    double hi = t;
    for (int it = 0; it < bisection_iters; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (feasible(interior + mid * direction)) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return Vector(interior + lo * direction);
  }
  return std::nullopt;
}

SweepReport sweep_mfcq(const ProblemInstance& prob, const PerturbationSpec& pert,
                       const SweepConfig& config) {
  if (prob.num_equalities() > 0) {
    throw DomainError("sweep_mfcq: boundary sampling needs an inequality-only problem");
  }
  const auto& box = config.box.empty() ? prob.sample_box() : config.box;
  if (box.size() != static_cast<size_t>(prob.num_vars())) throw DimensionError("sweep box has wrong dimension");

  SweepReport report;
  report.seed = config.seed;
  const int nseeds = std::clamp(config.samples, 1, 64);
  const auto seeds =
      sample_interior_points(prob, pert, box, nseeds, config.seed, config.interior_attempts);
  if (seeds.empty()) {
    report.infeasible = true;
    return report;
  }
  const int n = prob.num_vars();
  std::vector<std::optional<SweepEntry>> slots(static_cast<size_t>(config.samples));
  detail::parallel_for(config.samples, config.workers, [&](int i) {
    Rng rng(config.seed, {0x5eedu, static_cast<std::uint64_t>(i)});
    for (int attempt = 0; attempt < 100; ++attempt) {
      const Vector& x0 = seeds[rng.index(seeds.size())];
      Vector u(n);
      for (int k = 0; k < n; ++k) u[k] = rng.normal();
      if (u.norm() == 0.0) continue;
      u.normalize();
      auto bp = boundary_point_on_ray(prob, pert, x0, u, box, config.ray_steps, config.bisection_iters);
      if (!bp) continue;
      SweepEntry e;
      e.sample_id = i;
      e.x = *bp;
      e.lp = check_mfcq_lp(prob, pert, e.x, config.mfcq);
      e.hull = check_mfcq_hull(prob, pert, e.x, config.mfcq);
      slots[static_cast<size_t>(i)] = std::move(e);
      return;
    }
  });
  for (auto& s : slots) {
    if (!s) continue;
    switch (s->lp.verdict) {
      case Verdict::Holds:
        ++report.holds;
        break;
      case Verdict::Fails:
        ++report.fails;
        break;
      case Verdict::Degenerate:
        ++report.degenerate;
        break;
    }
    report.min_margin = std::min(report.min_margin, s->lp.margin);
    report.entries.push_back(std::move(*s));
  }
  return report;
}

std::string sweep_to_csv(const SweepReport& report, int num_vars) {
  std::ostringstream os;
  os.precision(17);
  os << "sample_id";
  for (int k = 0; k < num_vars; ++k) os << ",x" << (k + 1);
  os << ",verdict,margin_or_distance,active_indices\n";
  for (const auto& e : report.entries) {
    os << e.sample_id;
    for (int k = 0; k < num_vars; ++k) os << "," << e.x[k];
    os << "," << to_string(e.lp.verdict) << ",";
    if (std::isinf(e.lp.margin)) {
      os << "inf";
    } else {
      os << e.lp.margin;
    }
    os << ",";
    for (size_t k = 0; k < e.lp.active.indices.size(); ++k) {
      if (k) os << ";";
      os << e.lp.active.indices[k] + 1;
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace pqc
