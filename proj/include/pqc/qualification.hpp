#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "pqc/model.hpp"

namespace pqc {

enum class Verdict { Holds, Fails, Degenerate };

std::string to_string(Verdict v);

/// Outcome of an MFCQ check at one point.
///
/// Holds carries a direction y (||y||_inf <= 1) and margin eps with
/// <y, grad g_i(x)> <= -eps on the active set and <y, grad h_j(x)> = 0.
/// Fails carries hull weights lambda (on `active.indices`, summing to one) and
/// span coefficients kappa with sum lambda_i grad g_i - sum kappa_j grad h_j ~ 0.
struct MfcqCertificate {
  enum class Method { Lp, Hull };

  Method method = Method::Lp;
  Verdict verdict = Verdict::Holds;
  ActiveSet active;
  Vector direction;
  double margin = 0.0;  // eps* for the LP form, the hull distance for the hull form
  Vector lambda;
  Vector kappa;
  double hull_distance = std::numeric_limits<double>::quiet_NaN();
  bool equality_gradients_independent = true;
  std::string reason;
  double tolerance = 0.0;
};

struct MfcqOptions {
  double active_tol = kDefaultActiveTol;
  /// Margins at or below `tol` fail, margins in (tol, 10 tol] are degenerate.
  double tol = 1e-9;
  double rank_tol = 1e-10;
};

/// True iff the r x n matrix of equality gradients at x has numerical rank r
/// (ratio of smallest to largest singular value above `rank_tol`).
bool equality_gradients_independent(const ProblemInstance& prob, const Vector& x,
                                    double rank_tol = 1e-10);

/// Verdict from a margin under the shared thresholds.
Verdict classify_margin(double margin, double tol);

/// max eps s.t. <grad g_i, y> <= -eps (i active), <grad h_j, y> = 0, ||y||_inf <= 1.
MfcqCertificate check_mfcq_lp(const ProblemInstance& prob, const PerturbationSpec& pert,
                              const Vector& x, const MfcqOptions& opts = {});

/// min || sum lambda_i grad g_i - sum kappa_j grad h_j || over the unit simplex,
/// with kappa eliminated by projecting onto the orthogonal complement of the
/// equality gradients.
MfcqCertificate check_mfcq_hull(const ProblemInstance& prob, const PerturbationSpec& pert,
                                const Vector& x, const MfcqOptions& opts = {});

/// Recomputes || sum lambda_i grad g_i(x) - sum kappa_j grad h_j(x) ||_2 from a
/// Fails certificate.
double replay_certificate(const ProblemInstance& prob, const Vector& x, const MfcqCertificate& cert);

struct SweepConfig {
  int samples = 1000;
  std::uint64_t seed = 7;
  MfcqOptions mfcq;
  /// Sampling region; defaults to the problem's sample box.
  std::vector<Interval> box;
  int interior_attempts = 200000;
  int ray_steps = 64;
  int bisection_iters = 60;
  int workers = 0;  // 0 = hardware concurrency
};

struct SweepEntry {
  int sample_id = 0;
  Vector x;
  MfcqCertificate lp;
  MfcqCertificate hull;
};

struct SweepReport {
  bool infeasible = false;  // no interior point found in the box
  std::vector<SweepEntry> entries;
  double min_margin = std::numeric_limits<double>::infinity();
  int holds = 0;
  int fails = 0;
  int degenerate = 0;
  std::uint64_t seed = 0;

  bool all_hold() const { return !infeasible && fails == 0 && degenerate == 0 && !entries.empty(); }
};

/// Strictly feasible points drawn uniformly from `box` by rejection.
std::vector<Vector> sample_interior_points(const ProblemInstance& prob, const PerturbationSpec& pert,
                                           const std::vector<Interval>& box, int count,
                                           std::uint64_t seed, int max_attempts);

/// Boundary point obtained by marching from `interior` along `direction` to
/// the first infeasible step inside `box` and bisecting; nothing if the ray
/// leaves the box while still feasible.
std::optional<Vector> boundary_point_on_ray(const ProblemInstance& prob, const PerturbationSpec& pert,
                                            const Vector& interior, const Vector& direction,
                                            const std::vector<Interval>& box, int ray_steps,
                                            int bisection_iters);

/// Certifies MFCQ (both formulations) at `samples` boundary points.
SweepReport sweep_mfcq(const ProblemInstance& prob, const PerturbationSpec& pert,
                       const SweepConfig& config = {});

/// CSV rows: sample_id, x..., verdict, margin_or_distance, active_indices.
std::string sweep_to_csv(const SweepReport& report, int num_vars);

}  // namespace pqc
