#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "pqc/model.hpp"

namespace pqc {

using BigInt = boost::multiprecision::cpp_int;

/// d (2d-1)^(n+r) (2d+1)^m, exact.
BigInt milnor_thom_bound(int n, int m, int d, int r = 0);

/// Singular-witness system for an activity pattern K ⊆ L (0-based indices).
///
/// Unknowns z = (x, lambda_K, kappa, alpha), equations
///   sum_K lambda_i grad g_i(x) - sum_j kappa_j grad h_j(x) = 0   (n rows)
///   sum_K lambda_i = 1                                           (1 row)
///   g_l(x) = alpha (l in L ∩ I),  g_l(x) = 0 (l in L ∩ J)         (|L| rows)
///   h_j(x) = 0                                                   (r rows)
class SingularSystem {
 public:
  SingularSystem(std::shared_ptr<const ProblemInstance> problem,
                 std::shared_ptr<const DerivativeCache> derivatives, std::vector<int> K,
                 std::vector<int> L);

  const ProblemInstance& problem() const { return *problem_; }
  const std::vector<int>& K() const { return K_; }
  const std::vector<int>& L() const { return L_; }

  int num_unknowns() const;
  int num_equations() const;

  Vector residual(const Vector& z) const;
  Matrix jacobian(const Vector& z) const;

  Vector pack(const Vector& x, const Vector& lambda, const Vector& kappa, double alpha) const;
  Vector x_of(const Vector& z) const;
  Vector lambda_of(const Vector& z) const;
  Vector kappa_of(const Vector& z) const;
  double alpha_of(const Vector& z) const;

 private:
  std::shared_ptr<const ProblemInstance> problem_;
  std::shared_ptr<const DerivativeCache> cache_;
  std::vector<int> K_;
  std::vector<int> L_;
};

/// Throws DomainError unless K ⊆ L ⊆ {0..m-1} and K meets the perturbable set.
SingularSystem build_singular_system(const ProblemInstance& prob, std::vector<int> K, std::vector<int> L);

struct SingularWitness {
  double alpha = 0.0;
  Vector x;
  Vector lambda;
  Vector kappa;
  std::vector<int> K;
  std::vector<int> L;
  double residual_norm = 0.0;
  bool side_conditions_ok = false;
  /// Smallest lambda entry and smallest slack g_l - bound_l over l outside L
  /// (+inf when L covers every constraint).
  double min_lambda = 0.0;
  double min_slack = 0.0;
};

struct ScanOptions {
  double accept_residual = 1e-10;
  double certify_residual = 1e-8;
  double lambda_min = 1e-10;
  double slack_min = 1e-9;
  /// Solutions violating the strict side conditions by more than this are
  /// discarded; smaller violations go to the uncertain list.
  double borderline = 1e-6;
  double dedup = 1e-6;
  int max_iter = 100;
  double damping = 1e-3;
  int max_constraints = 12;
  int workers = 0;
};

struct RawSolutions {
  std::vector<SingularWitness> accepted;
  std::vector<SingularWitness> uncertain;
};

/// Levenberg-Marquardt from `starts` random points: x uniform in the sample
/// box, lambda ~ Dirichlet(1), alpha uniform in [window.lo, window.hi).
/// `stream` keys the random streams so distinct systems draw independently.
RawSolutions solve_system_multistart(const SingularSystem& sys, Interval window, int starts,
                                     std::uint64_t seed, const ScanOptions& opts = {},
                                     std::uint64_t stream = 0);

/// Levenberg-Marquardt from a single start; returns the final point.
Vector levenberg_marquardt(const SingularSystem& sys, Vector z, const ScanOptions& opts = {});

/// Residual norm and side conditions of a candidate solution.
SingularWitness make_witness(const SingularSystem& sys, const Vector& z, const ScanOptions& opts = {});

struct ScanReport {
  std::string problem;
  Interval window;
  std::vector<double> singular_values;
  std::vector<SingularWitness> witnesses;  // one per singular value
  std::vector<SingularWitness> uncertain;
  BigInt bound;
  int starts = 0;
  std::uint64_t seed = 0;
  int systems = 0;

  bool operator==(const ScanReport& other) const;
};

/// All patterns K ⊆ L with K meeting the perturbable set, solved over the
/// half-open window [lo, hi). Values closer than `opts.dedup` are merged, and
/// a value that close to an endpoint is treated as that endpoint.
ScanReport scan_singular(const ProblemInstance& prob, Interval window, int starts, std::uint64_t seed,
                         const ScanOptions& opts = {});

/// 4n - sum_{i in S} (v_i - a_i)^2 over nonempty S ⊆ {1..n}, v ∈ {±1}^S.
std::vector<double> analytic_singulars_ball_box(const std::vector<double>& a);

/// 4 n d^2 - ||(2 k_i v_i)_i - a||^2 over v ∈ {±1}^n, k ∈ {1..d/2}^n.
std::vector<double> analytic_singulars_grid(int d, const std::vector<double>& a);

/// Summary rows: alpha, K, L, residual, x... (indices 1-based, ';'-separated).
std::string scan_to_csv(const ScanReport& report);

}  // namespace pqc
