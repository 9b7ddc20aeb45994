#include "pqc/scanner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <tuple>

#include <Eigen/Dense>

#include "parallel.hpp"
#include "pqc/error.hpp"
#include "pqc/rng.hpp"

namespace pqc {

namespace {

using Index = Eigen::Index;

BigInt ipow(BigInt base, int e) {
  BigInt out = 1;
  for (int i = 0; i < e; ++i) out *= base;
  return out;
}

std::string join_indices(const std::vector<int>& v) {
  std::string s;
  for (size_t k = 0; k < v.size(); ++k) {
    if (k) s += ';';
    s += std::to_string(v[k] + 1);
  }
  return s;
}

void check_distinct(std::vector<double>& values, const char* what) {
  std::sort(values.begin(), values.end());
  for (size_t k = 1; k < values.size(); ++k) {
    if (values[k] - values[k - 1] < 1e-9) {
      throw DomainError(std::string(what) + ": tangency values coincide; choose a generic center a");
    }
  }
}

}  // namespace

BigInt milnor_thom_bound(int n, int m, int d, int r) {
  if (n < 1 || m < 1 || d < 1 || r < 0) {
    throw DomainError("milnor_thom_bound: need n, m, d >= 1 and r >= 0");
  }
  return BigInt(d) * ipow(BigInt(2 * d - 1), n + r) * ipow(BigInt(2 * d + 1), m);
}

SingularSystem::SingularSystem(std::shared_ptr<const ProblemInstance> problem,
                               std::shared_ptr<const DerivativeCache> derivatives, std::vector<int> K,
                               std::vector<int> L)
    : problem_(std::move(problem)), cache_(std::move(derivatives)), K_(std::move(K)), L_(std::move(L)) {
  std::sort(K_.begin(), K_.end());
  std::sort(L_.begin(), L_.end());
  const int m = problem_->num_inequalities();
  if (K_.empty()) throw DomainError("singular system: K must be nonempty");
  for (int l : L_) {
    if (l < 0 || l >= m) throw DomainError("singular system: index " + std::to_string(l + 1) + " out of range");
  }
  if (std::adjacent_find(L_.begin(), L_.end()) != L_.end() ||
      std::adjacent_find(K_.begin(), K_.end()) != K_.end()) {
    throw DomainError("singular system: repeated index");
  }
  if (!std::includes(L_.begin(), L_.end(), K_.begin(), K_.end())) {
    throw DomainError("singular system: K must be a subset of L");
  }
  if (std::none_of(K_.begin(), K_.end(), [&](int k) { return problem_->is_perturbable(k); })) {
    throw DomainError("singular system: K lies inside the fixed set J");
  }
}

int SingularSystem::num_unknowns() const {
  return problem_->num_vars() + static_cast<int>(K_.size()) + problem_->num_equalities() + 1;
}

int SingularSystem::num_equations() const {
  return problem_->num_vars() + 1 + static_cast<int>(L_.size()) + problem_->num_equalities();
}

Vector SingularSystem::pack(const Vector& x, const Vector& lambda, const Vector& kappa, double alpha) const {
  Vector z(num_unknowns());
  z << x, lambda, kappa, alpha;
  return z;
}

Vector SingularSystem::x_of(const Vector& z) const { return z.head(problem_->num_vars()); }

Vector SingularSystem::lambda_of(const Vector& z) const {
  return z.segment(problem_->num_vars(), static_cast<Index>(K_.size()));
}

Vector SingularSystem::kappa_of(const Vector& z) const {
  return z.segment(problem_->num_vars() + static_cast<Index>(K_.size()), problem_->num_equalities());
}

double SingularSystem::alpha_of(const Vector& z) const { return z[z.size() - 1]; }

Vector SingularSystem::residual(const Vector& z) const {
  const int n = problem_->num_vars();
  const int r = problem_->num_equalities();
  const Vector x = x_of(z);
  const Vector lambda = lambda_of(z);
  const Vector kappa = kappa_of(z);
  const double alpha = alpha_of(z);
  Vector F = Vector::Zero(num_equations());
  for (size_t k = 0; k < K_.size(); ++k) {
    F.head(n) += lambda[static_cast<Index>(k)] * evaluate_gradient(cache_->ineq_grad[static_cast<size_t>(K_[k])], x);
  }
  for (int j = 0; j < r; ++j) F.head(n) -= kappa[j] * evaluate_gradient(cache_->eq_grad[static_cast<size_t>(j)], x);
  F[n] = lambda.sum() - 1.0;
  for (size_t l = 0; l < L_.size(); ++l) {
    const int idx = L_[l];
    const double bound = problem_->is_perturbable(idx) ? alpha : 0.0;
    F[n + 1 + static_cast<Index>(l)] = problem_->inequalities()[static_cast<size_t>(idx)].evaluate(x) - bound;
  }
  for (int j = 0; j < r; ++j) {
    F[n + 1 + static_cast<Index>(L_.size()) + j] = problem_->equalities()[static_cast<size_t>(j)].evaluate(x);
  }
  return F;
}

Matrix SingularSystem::jacobian(const Vector& z) const {
  const int n = problem_->num_vars();
  const int r = problem_->num_equalities();
  const Index nk = static_cast<Index>(K_.size());
  const Vector x = x_of(z);
  const Vector lambda = lambda_of(z);
  const Vector kappa = kappa_of(z);
  Matrix J = Matrix::Zero(num_equations(), num_unknowns());
  for (Index k = 0; k < nk; ++k) {
    const auto i = static_cast<size_t>(K_[static_cast<size_t>(k)]);
    J.block(0, 0, n, n) += lambda[k] * evaluate_hessian(cache_->ineq_hess[i], x);
    J.block(0, n + k, n, 1) = evaluate_gradient(cache_->ineq_grad[i], x);
  }
  for (int j = 0; j < r; ++j) {
    const auto jj = static_cast<size_t>(j);
    J.block(0, 0, n, n) -= kappa[j] * evaluate_hessian(cache_->eq_hess[jj], x);
    J.block(0, n + nk + j, n, 1) = -evaluate_gradient(cache_->eq_grad[jj], x);
  }
  J.block(n, n, 1, nk).setOnes();
  for (size_t l = 0; l < L_.size(); ++l) {
    const Index row = n + 1 + static_cast<Index>(l);
    J.block(row, 0, 1, n) = evaluate_gradient(cache_->ineq_grad[static_cast<size_t>(L_[l])], x).transpose();
    if (problem_->is_perturbable(L_[l])) J(row, J.cols() - 1) = -1.0;
  }
  for (int j = 0; j < r; ++j) {
    const Index row = n + 1 + static_cast<Index>(L_.size()) + j;
    J.block(row, 0, 1, n) = evaluate_gradient(cache_->eq_grad[static_cast<size_t>(j)], x).transpose();
  }
  return J;
}

SingularSystem build_singular_system(const ProblemInstance& prob, std::vector<int> K, std::vector<int> L) {
  auto p = std::make_shared<const ProblemInstance>(prob);
  auto cache = std::make_shared<const DerivativeCache>(*p);
  return SingularSystem(p, cache, std::move(K), std::move(L));
}

Vector levenberg_marquardt(const SingularSystem& sys, Vector z, const ScanOptions& opts) {
  Vector F = sys.residual(z);
  double cost = F.squaredNorm();
  double mu = opts.damping;
  for (int it = 0; it < opts.max_iter && cost > 1e-30; ++it) {
    const Matrix J = sys.jacobian(z);
    Matrix A = J.transpose() * J;
    const Vector g = J.transpose() * F;
    A.diagonal().array() += mu;
    const Vector step = A.ldlt().solve(-g);
    if (!step.allFinite()) {
      mu *= 2.0;
      continue;
    }
    const Vector trial = z + step;
    const Vector Ft = sys.residual(trial);
    const double ct = Ft.squaredNorm();
    if (std::isfinite(ct) && ct < cost) {
      z = trial;
      F = Ft;
      cost = ct;
      mu = std::max(mu / 3.0, 1e-15);
    } else {
      mu *= 2.0;
      if (mu > 1e12) break;
    }
  }
  // Least-squares Gauss-Newton polish; handles rank-deficient and
  // underdetermined Jacobians with minimum-norm steps.
  for (int it = 0; it < 10 && cost > 1e-30; ++it) {
    const Matrix J = sys.jacobian(z);
    const Vector step = J.completeOrthogonalDecomposition().solve(-F);
    const Vector trial = z + step;
    const Vector Ft = sys.residual(trial);
    const double ct = Ft.squaredNorm();
    if (!(ct < cost)) break;
    z = trial;
    F = Ft;
    cost = ct;
  }
  return z;
}

SingularWitness make_witness(const SingularSystem& sys, const Vector& z, const ScanOptions&) {
  const auto& prob = sys.problem();
  SingularWitness w;
  w.alpha = sys.alpha_of(z);
  w.x = sys.x_of(z);
  w.lambda = sys.lambda_of(z);
  w.kappa = sys.kappa_of(z);
  w.K = sys.K();
  w.L = sys.L();
  w.residual_norm = sys.residual(z).norm();
  w.min_lambda = w.lambda.minCoeff();
  w.min_slack = std::numeric_limits<double>::infinity();
  for (int l = 0; l < prob.num_inequalities(); ++l) {
    if (std::binary_search(w.L.begin(), w.L.end(), l)) continue;
    const double bound = prob.is_perturbable(l) ? w.alpha : 0.0;
    w.min_slack = std::min(w.min_slack, bound - prob.inequalities()[static_cast<size_t>(l)].evaluate(w.x));
  }
  return w;
}

namespace {

enum class Grade { Reject, Uncertain, Accept };

Grade grade(const SingularWitness& w, Interval window, double residual_tol, const ScanOptions& opts) {
  if (!(w.residual_norm <= residual_tol)) return Grade::Reject;
  // Values within the dedup distance of an endpoint count as that endpoint.
  if (!(w.alpha >= window.lo - opts.dedup && w.alpha < window.hi - opts.dedup)) return Grade::Reject;
  if (w.min_lambda < -opts.borderline || w.min_slack < -opts.borderline) return Grade::Reject;
  if (w.min_lambda >= opts.lambda_min && w.min_slack >= opts.slack_min) return Grade::Accept;
  return Grade::Uncertain;
}

bool witness_less(const SingularWitness& a, const SingularWitness& b) {
  if (a.alpha != b.alpha) return a.alpha < b.alpha;
  if (a.K != b.K) return a.K < b.K;
  if (a.L != b.L) return a.L < b.L;
  return std::lexicographical_compare(a.x.data(), a.x.data() + a.x.size(), b.x.data(), b.x.data() + b.x.size());
}

bool same_vector(const Vector& a, const Vector& b) { return a.size() == b.size() && a == b; }

bool same_witness(const SingularWitness& a, const SingularWitness& b) {
  return a.alpha == b.alpha && same_vector(a.x, b.x) && same_vector(a.lambda, b.lambda) &&
         same_vector(a.kappa, b.kappa) && a.K == b.K && a.L == b.L && a.residual_norm == b.residual_norm &&
         a.side_conditions_ok == b.side_conditions_ok;
}

// Groups sorted witnesses whose alphas chain within `delta` and keeps the
// smallest-residual member of each group.
std::vector<SingularWitness> cluster_best(std::vector<SingularWitness> ws, double delta) {
  std::sort(ws.begin(), ws.end(), witness_less);
  std::vector<SingularWitness> out;
  for (size_t i = 0; i < ws.size();) {
    size_t j = i + 1;
    while (j < ws.size() && ws[j].alpha - ws[j - 1].alpha <= delta) ++j;
    size_t best = i;
    for (size_t k = i + 1; k < j; ++k) {
      if (ws[k].residual_norm < ws[best].residual_norm) best = k;
    }
    out.push_back(ws[best]);
    i = j;
  }
  return out;
}

}  // namespace

RawSolutions solve_system_multistart(const SingularSystem& sys, Interval window, int starts,
                                     std::uint64_t seed, const ScanOptions& opts, std::uint64_t stream) {
  const auto& prob = sys.problem();
  const auto& box = prob.sample_box();
  const int n = prob.num_vars();
  const auto nk = static_cast<Index>(sys.K().size());
  RawSolutions out;
  for (int s = 0; s < starts; ++s) {
    Rng rng(seed, {stream, static_cast<std::uint64_t>(s)});
    Vector x(n);
    for (int k = 0; k < n; ++k) x[k] = rng.uniform(box[static_cast<size_t>(k)].lo, box[static_cast<size_t>(k)].hi);
    Vector lambda(nk);
    for (Index k = 0; k < nk; ++k) lambda[k] = rng.exponential();
    lambda /= lambda.sum();
    const double alpha = rng.uniform(window.lo, window.hi);
    const Vector z = levenberg_marquardt(sys, sys.pack(x, lambda, Vector::Zero(prob.num_equalities()), alpha), opts);
    SingularWitness w = make_witness(sys, z, opts);
    switch (grade(w, window, opts.accept_residual, opts)) {
      case Grade::Accept:
        w.side_conditions_ok = true;
        out.accepted.push_back(std::move(w));
        break;
      case Grade::Uncertain:
        out.uncertain.push_back(std::move(w));
        break;
      case Grade::Reject:
        break;
    }
  }
  return out;
}

ScanReport scan_singular(const ProblemInstance& prob, Interval window, int starts, std::uint64_t seed,
                         const ScanOptions& opts) {
  const int m = prob.num_inequalities();
  if (m > opts.max_constraints) {
    throw DomainError("scan_singular: " + std::to_string(m) + " inequalities exceed the enumeration guard of " +
                      std::to_string(opts.max_constraints));
  }
  if (m == 0) throw DomainError("scan_singular: problem has no inequalities");
  if (!std::isfinite(window.lo) || !std::isfinite(window.hi) || !(window.lo < window.hi)) {
    throw DomainError("scan_singular: window must be a finite interval with lo < hi");
  }

  auto shared = std::make_shared<const ProblemInstance>(prob);
  auto cache = std::make_shared<const DerivativeCache>(*shared);

  // Pattern code in base 3: digit 0 = outside L, 1 = in L \ K, 2 = in K.
  std::vector<SingularSystem> systems;
  long total = 1;
  for (int i = 0; i < m; ++i) total *= 3;
  for (long code = 0; code < total; ++code) {
    std::vector<int> K;
    std::vector<int> L;
    long c = code;
    for (int i = 0; i < m; ++i, c /= 3) {
      const int digit = static_cast<int>(c % 3);
      if (digit >= 1) L.push_back(i);
      if (digit == 2) K.push_back(i);
    }
    if (K.empty() || std::none_of(K.begin(), K.end(), [&](int k) { return prob.is_perturbable(k); })) continue;
    systems.emplace_back(shared, cache, std::move(K), std::move(L));
  }

  std::vector<RawSolutions> raw(systems.size());
  detail::parallel_for(static_cast<int>(systems.size()), opts.workers, [&](int i) {
    raw[static_cast<size_t>(i)] = solve_system_multistart(systems[static_cast<size_t>(i)], window, starts, seed,
                                                          opts, static_cast<std::uint64_t>(i));
  });

  std::vector<SingularWitness> accepted;
  std::vector<SingularWitness> uncertain;
  for (auto& r : raw) {
    accepted.insert(accepted.end(), std::make_move_iterator(r.accepted.begin()),
                    std::make_move_iterator(r.accepted.end()));
    uncertain.insert(uncertain.end(), std::make_move_iterator(r.uncertain.begin()),
                     std::make_move_iterator(r.uncertain.end()));
  }

  ScanReport report;
  report.problem = prob.name();
  report.window = window;
  report.starts = starts;
  report.seed = seed;
  report.systems = static_cast<int>(systems.size());
  report.bound = milnor_thom_bound(prob.num_vars(), m, std::max(1, prob.max_constraint_degree()),
                                   prob.num_equalities());

  for (const auto& best : cluster_best(std::move(accepted), opts.dedup)) {
    const SingularSystem sys(shared, cache, best.K, best.L);
    ScanOptions polish = opts;
    polish.max_iter = 20;
    const Vector z = levenberg_marquardt(sys, sys.pack(best.x, best.lambda, best.kappa, best.alpha), polish);
    SingularWitness w = make_witness(sys, z, opts);
    if (!(w.residual_norm <= best.residual_norm)) w = best;
    if (grade(w, window, opts.certify_residual, opts) == Grade::Accept) {
      w.side_conditions_ok = true;
      if (!report.witnesses.empty() && w.alpha - report.witnesses.back().alpha <= opts.dedup) continue;
      report.witnesses.push_back(std::move(w));
    } else {
      w.side_conditions_ok = false;
      uncertain.push_back(std::move(w));
    }
  }
  for (const auto& w : report.witnesses) report.singular_values.push_back(w.alpha);

  // Borderline candidates whose alpha already has a certified witness add
  // nothing; the rest are kept, one per cluster.
  std::vector<SingularWitness> pending;
  for (auto& w : uncertain) {
    const bool covered = std::any_of(report.singular_values.begin(), report.singular_values.end(),
                                     [&](double a) { return std::abs(a - w.alpha) <= opts.dedup; });
    if (!covered) pending.push_back(std::move(w));
  }
  report.uncertain = cluster_best(std::move(pending), opts.dedup);
  return report;
}

bool ScanReport::operator==(const ScanReport& other) const {
  auto same_list = [](const std::vector<SingularWitness>& a, const std::vector<SingularWitness>& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i) {
      if (!same_witness(a[i], b[i])) return false;
    }
    return true;
  };
  return problem == other.problem && window == other.window && singular_values == other.singular_values &&
         same_list(witnesses, other.witnesses) && same_list(uncertain, other.uncertain) && bound == other.bound &&
         starts == other.starts && seed == other.seed && systems == other.systems;
}

std::vector<double> analytic_singulars_ball_box(const std::vector<double>& a) {
  const int n = static_cast<int>(a.size());
  if (n < 1) throw DomainError("analytic_singulars_ball_box: empty center");
  for (double ai : a) {
    if (!(ai > -1.0 && ai < 1.0)) throw DomainError("analytic_singulars_ball_box: a must lie in (-1,1)^n");
  }
  std::vector<double> out;
  // Each coordinate is free (0), on the face -1 (1) or on the face +1 (2).
  long total = 1;
  for (int i = 0; i < n; ++i) total *= 3;
  for (long code = 1; code < total; ++code) {
    double dist2 = 0.0;
    long c = code;
    for (int i = 0; i < n; ++i, c /= 3) {
      const int digit = static_cast<int>(c % 3);
      if (digit == 0) continue;
      const double v = digit == 1 ? -1.0 : 1.0;
      dist2 += (v - a[static_cast<size_t>(i)]) * (v - a[static_cast<size_t>(i)]);
    }
    out.push_back(4.0 * n - dist2);
  }
  check_distinct(out, "analytic_singulars_ball_box");
  return out;
}

std::vector<double> analytic_singulars_grid(int d, const std::vector<double>& a) {
  const int n = static_cast<int>(a.size());
  if (n < 1) throw DomainError("analytic_singulars_grid: empty center");
  if (d < 2 || d % 2 != 0) throw DomainError("analytic_singulars_grid: d must be an even integer >= 2");
  for (double ai : a) {
    if (!(ai > -d && ai < d)) throw DomainError("analytic_singulars_grid: a must lie in (-d,d)^n");
  }
  // Each coordinate picks one of the d outer corners +-2k, k = 1..d/2.
  std::vector<double> corners;
  for (int k = 1; k <= d / 2; ++k) {
    corners.push_back(2.0 * k);
    corners.push_back(-2.0 * k);
  }
  std::vector<double> out;
  long total = 1;
  for (int i = 0; i < n; ++i) total *= d;
  for (long code = 0; code < total; ++code) {
    double dist2 = 0.0;
    long c = code;
    for (int i = 0; i < n; ++i, c /= d) {
      const double diff = corners[static_cast<size_t>(c % d)] - a[static_cast<size_t>(i)];
      dist2 += diff * diff;
    }
    out.push_back(4.0 * n * d * d - dist2);
  }
  check_distinct(out, "analytic_singulars_grid");
  return out;
}

std::string scan_to_csv(const ScanReport& report) {
  std::ostringstream os;
  os.precision(17);
  const Index n = report.witnesses.empty() ? 0 : report.witnesses.front().x.size();
  os << "alpha,K,L,residual";
  for (Index k = 0; k < n; ++k) os << ",x" << (k + 1);
  os << "\n";
  for (const auto& w : report.witnesses) {
    os << w.alpha << "," << join_indices(w.K) << "," << join_indices(w.L) << "," << w.residual_norm;
    for (Index k = 0; k < w.x.size(); ++k) os << "," << w.x[k];
    os << "\n";
  }
  return os.str();
}

}  // namespace pqc
