#include "pqc/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace pqc {

namespace {

std::vector<Interval> uniform_box(int n, double lo, double hi) {
  return std::vector<Interval>(static_cast<size_t>(n), Interval{lo, hi});
}

// sum_i (x_i - a_i)^2
Polynomial squared_distance(int n, const std::vector<double>& a) {
  Polynomial out(n);
  for (int i = 0; i < n; ++i) {
    const Polynomial diff = Polynomial::variable(n, i) - a[static_cast<size_t>(i)];
    out += diff * diff;
  }
  return out;
}

// prod_{k=1..d} (x_i^2 - k^2)
Polynomial grid_factor(int n, int i, int d) {
  const Polynomial xi = Polynomial::variable(n, i);
  Polynomial q = Polynomial::constant(n, 1.0);
  for (int k = 1; k <= d; ++k) q = q * (xi * xi - static_cast<double>(k * k));
  return q;
}

std::vector<double> default_center(int n) {
  std::vector<double> a(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) a[static_cast<size_t>(i)] = 0.4 / (i + 1);
  return a;
}

std::vector<double> checked_center(const CatalogParams& params, double radius,
                                   const std::string& family) {
  std::vector<double> a = params.a.empty() ? default_center(params.n) : params.a;
  if (a.size() != static_cast<size_t>(params.n)) {
    throw DomainError(family + ": center a has " + std::to_string(a.size()) +
                      " coordinates, expected n = " + std::to_string(params.n));
  }
  for (double ai : a) {
    if (!(ai > -radius && ai < radius)) {
      throw DomainError(family + ": center coordinate " + std::to_string(ai) +
                        " outside the open cube (-" + std::to_string(radius) + ", " +
                        std::to_string(radius) + ")");
    }
  }
  return a;
}

}  // namespace

ProblemInstance::ProblemInstance(std::string name, int num_vars,
                                 std::vector<Polynomial> inequalities,
                                 std::vector<Polynomial> equalities,
                                 std::optional<Polynomial> objective,
                                 std::optional<std::vector<int>> perturbable,
                                 std::optional<std::vector<Interval>> sample_box)
    : name_(std::move(name)),
      num_vars_(num_vars),
      inequalities_(std::move(inequalities)),
      equalities_(std::move(equalities)),
      objective_(std::move(objective)) {
  if (num_vars_ < 1) throw DomainError("problem needs at least one variable");
  auto check = [&](const Polynomial& p, const std::string& what) {
    if (p.num_vars() != num_vars_) {
      throw DimensionError(what + " has " + std::to_string(p.num_vars()) +
                           " variables, problem has " + std::to_string(num_vars_));
    }
  };
  for (size_t i = 0; i < inequalities_.size(); ++i) check(inequalities_[i], "inequality " + std::to_string(i));
  for (size_t j = 0; j < equalities_.size(); ++j) check(equalities_[j], "equality " + std::to_string(j));
  if (objective_) check(*objective_, "objective");

  const int m = num_inequalities();
  if (perturbable) {
    std::set<int> seen;
    for (int i : *perturbable) {
      if (i < 0 || i >= m) {
        throw DomainError("perturbable index " + std::to_string(i) + " out of range [0, " +
                          std::to_string(m) + ")");
      }
      if (!seen.insert(i).second) {
        throw DomainError("perturbable index " + std::to_string(i) + " repeated");
      }
    }
    perturbable_.assign(seen.begin(), seen.end());
  } else {
    perturbable_.resize(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) perturbable_[static_cast<size_t>(i)] = i;
  }
  perturbable_mask_.assign(static_cast<size_t>(m), false);
  for (int i : perturbable_) perturbable_mask_[static_cast<size_t>(i)] = true;

  if (sample_box) {
    if (sample_box->size() != static_cast<size_t>(num_vars_)) {
      throw DimensionError("sample_box has " + std::to_string(sample_box->size()) +
                           " intervals, problem has " + std::to_string(num_vars_) + " variables");
    }
    for (const auto& iv : *sample_box) {
      if (!(iv.lo < iv.hi) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi)) {
        throw DomainError("sample_box intervals must be finite with lo < hi");
      }
    }
    sample_box_ = std::move(*sample_box);
  } else {
    sample_box_ = uniform_box(num_vars_, -10.0, 10.0);
  }
}

int ProblemInstance::max_constraint_degree() const {
  int d = 0;
  for (const auto& g : inequalities_) d = std::max(d, g.degree());
  for (const auto& h : equalities_) d = std::max(d, h.degree());
  return d;
}

ProblemInstance ProblemInstance::with_objective(Polynomial f) const {
  return ProblemInstance(name_, num_vars_, inequalities_, equalities_, std::move(f), perturbable_,
                         sample_box_);
}

ProblemInstance ProblemInstance::with_sample_box(std::vector<Interval> box) const {
  return ProblemInstance(name_, num_vars_, inequalities_, equalities_, objective_, perturbable_,
                         std::move(box));
}

DerivativeCache::DerivativeCache(const ProblemInstance& prob) : problem(&prob) {
  for (const auto& g : prob.inequalities()) {
    ineq_grad.push_back(gradient(g));
    ineq_hess.push_back(hessian(g));
  }
  for (const auto& h : prob.equalities()) {
    eq_grad.push_back(gradient(h));
    eq_hess.push_back(hessian(h));
  }
}

Matrix DerivativeCache::ineq_jacobian(const Vector& x) const {
  Matrix J(static_cast<Eigen::Index>(ineq_grad.size()), problem->num_vars());
  for (size_t i = 0; i < ineq_grad.size(); ++i) J.row(static_cast<Eigen::Index>(i)) = evaluate_gradient(ineq_grad[i], x).transpose();
  return J;
}

Matrix DerivativeCache::eq_jacobian(const Vector& x) const {
  Matrix J(static_cast<Eigen::Index>(eq_grad.size()), problem->num_vars());
  for (size_t j = 0; j < eq_grad.size(); ++j) J.row(static_cast<Eigen::Index>(j)) = evaluate_gradient(eq_grad[j], x).transpose();
  return J;
}

Vector DerivativeCache::ineq_values(const Vector& x) const {
  Vector v(problem->num_inequalities());
  for (int i = 0; i < problem->num_inequalities(); ++i) v[i] = problem->inequalities()[static_cast<size_t>(i)].evaluate(x);
  return v;
}

Vector DerivativeCache::eq_values(const Vector& x) const {
  Vector v(problem->num_equalities());
  for (int j = 0; j < problem->num_equalities(); ++j) v[j] = problem->equalities()[static_cast<size_t>(j)].evaluate(x);
  return v;
}

std::vector<double> constraint_bounds(const ProblemInstance& prob, const PerturbationSpec& pert) {
  const auto m = static_cast<size_t>(prob.num_inequalities());
  if (const auto* diag = std::get_if<DiagonalPerturbation>(&pert)) {
    std::vector<double> b(m, 0.0);
    for (int i : prob.perturbable()) b[static_cast<size_t>(i)] = diag->alpha;
    return b;
  }
  const auto& mu = std::get<VectorPerturbation>(pert).mu;
  if (mu.size() != m) {
    throw DimensionError("perturbation vector has " + std::to_string(mu.size()) +
                         " entries, problem has " + std::to_string(m) + " inequalities");
  }
  return mu;
}

FeasibilityResidual feasibility_residual(const ProblemInstance& prob, const PerturbationSpec& pert,
                                         const Vector& x) {
  if (x.size() != prob.num_vars()) {
    throw DimensionError("point has " + std::to_string(x.size()) + " coordinates, problem has " +
                         std::to_string(prob.num_vars()) + " variables");
  }
  const auto bounds = constraint_bounds(prob, pert);
  FeasibilityResidual r;
  for (size_t i = 0; i < bounds.size(); ++i) {
    r.ineq_violation = std::max(r.ineq_violation, prob.inequalities()[i].evaluate(x) - bounds[i]);
  }
  for (const auto& h : prob.equalities()) r.eq_violation = std::max(r.eq_violation, std::abs(h.evaluate(x)));
  return r;
}

ActiveSet active_set(const ProblemInstance& prob, const PerturbationSpec& pert, const Vector& x,
                     double tau) {
  const auto res = feasibility_residual(prob, pert, x);
  if (res.ineq_violation > tau || res.eq_violation > tau) {
    throw DomainError("active_set: point is infeasible (inequality violation " +
                      std::to_string(res.ineq_violation) + ", equality violation " +
                      std::to_string(res.eq_violation) + ")");
  }
  const auto bounds = constraint_bounds(prob, pert);
  ActiveSet out{{}, tau};
  for (size_t i = 0; i < bounds.size(); ++i) {
    if (bounds[i] - prob.inequalities()[i].evaluate(x) <= tau) out.indices.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<std::string> catalog_names() {
  return {"cusp", "cusp_boxed", "tangent_discs", "ball_box", "grid_boxes", "interval_pair"};
}

ProblemInstance catalog(const std::string& name, const CatalogParams& params) {
  if (name == "cusp" || name == "cusp_boxed") {
    const Polynomial x1 = Polynomial::variable(2, 0);
    const Polynomial x2 = Polynomial::variable(2, 1);
    const Polynomial c = x1.pow(3);
    std::vector<Polynomial> g{c + x2, c - x2};
    std::optional<std::vector<int>> pert;
    if (name == "cusp_boxed") {
      g.push_back(-x1 - 2.0);
      pert = std::vector<int>{0, 1};
    }
    return ProblemInstance(name, 2, std::move(g), {}, std::nullopt, pert, uniform_box(2, -2.0, 1.0));
  }
  if (name == "tangent_discs") {
    const Polynomial x1 = Polynomial::variable(2, 0);
    const Polynomial x2 = Polynomial::variable(2, 1);
    std::vector<Polynomial> g{x1 * x1 + x2 * x2 - 1.0, (x1 - 2.0) * (x1 - 2.0) + x2 * x2 - 1.0};
    return ProblemInstance(name, 2, std::move(g), {}, std::nullopt, std::nullopt,
                           std::vector<Interval>{{-1.5, 3.5}, {-1.5, 1.5}});
  }
  if (name == "ball_box") {
    const int n = params.n;
    if (n < 1) throw DomainError("ball_box: n must be >= 1");
    const auto a = checked_center(params, 1.0, "ball_box");
    std::vector<Polynomial> g;
    g.push_back(Polynomial::constant(n, 4.0 * n) - squared_distance(n, a));
    for (int i = 0; i < n; ++i) {
      const Polynomial xi = Polynomial::variable(n, i);
      g.push_back(xi * xi - 1.0);
    }
    return ProblemInstance(name, n, std::move(g), {}, std::nullopt, std::vector<int>{0},
                           uniform_box(n, -1.5, 1.5));
  }
  if (name == "grid_boxes") {
    const int n = params.n;
    const int d = params.d;
    if (n < 1) throw DomainError("grid_boxes: n must be >= 1");
    if (d < 2 || d % 2 != 0) throw DomainError("grid_boxes: d must be an even integer >= 2");
    const auto a = checked_center(params, static_cast<double>(d), "grid_boxes");
    std::vector<Polynomial> g;
    for (int i = 0; i < n; ++i) g.push_back(grid_factor(n, i, d));
    g.push_back(Polynomial::constant(n, 4.0 * n * d * d) - squared_distance(n, a));
    return ProblemInstance(name, n, std::move(g), {}, std::nullopt, std::vector<int>{n},
                           uniform_box(n, -d - 1.0, d + 1.0));
  }
  if (name == "interval_pair") {
    const Polynomial x = Polynomial::variable(1, 0);
    std::vector<Polynomial> g{1.0 - x * x, (x + 1.0) * (x + 1.0) - 4.0};
    return ProblemInstance(name, 1, std::move(g), {}, std::nullopt, std::nullopt,
                           uniform_box(1, -5.0, 5.0));
  }
  throw DomainError("unknown catalog problem '" + name + "'");
}

bool FeasibleSet1D::contains(double x, double tol) const {
  for (const auto& iv : intervals) {
    if (x >= iv.lo - tol && x <= iv.hi + tol) return true;
  }
  for (double p : points) {
    if (std::abs(x - p) <= tol) return true;
  }
  return false;
}

FeasibleSet1D univariate_feasible_intervals(const ProblemInstance& prob,
                                            const PerturbationSpec& pert, Interval window) {
  if (prob.num_vars() != 1) throw DimensionError("univariate_feasible_intervals needs one variable");
  if (prob.num_equalities() != 0) throw DomainError("univariate_feasible_intervals: equalities not supported");
  if (!(window.lo < window.hi)) throw DomainError("univariate_feasible_intervals: degenerate window");

  const auto bounds = constraint_bounds(prob, pert);
  std::vector<Polynomial> shifted;
  for (size_t i = 0; i < bounds.size(); ++i) shifted.push_back(prob.inequalities()[i] - bounds[i]);

  std::vector<double> breaks{window.lo, window.hi};
  for (const auto& p : shifted) {
    if (p.degree() == 0) continue;
    for (double r : univariate_real_roots(p, window.lo, window.hi)) breaks.push_back(r);
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end(),
                           [](double u, double v) { return std::abs(u - v) <= 1e-12 * std::max(1.0, std::abs(u)); }),
               breaks.end());

  auto feasible_at = [&](double t, double tol) {
    const double x[1] = {t};
    for (const auto& p : shifted) {
      if (p.evaluate(x) > tol) return false;
    }
    return true;
  };

  // Alternate breakpoints and open gaps between them; merge feasible runs.
  struct Piece {
    double lo, hi;
    bool ok;
  };
  std::vector<Piece> pieces;
  for (size_t k = 0; k < breaks.size(); ++k) {
    pieces.push_back({breaks[k], breaks[k], feasible_at(breaks[k], 1e-9)});
    if (k + 1 < breaks.size()) {
      const double mid = 0.5 * (breaks[k] + breaks[k + 1]);
      pieces.push_back({breaks[k], breaks[k + 1], feasible_at(mid, 0.0)});
    }
  }
  FeasibleSet1D out;
  size_t k = 0;
  while (k < pieces.size()) {
    if (!pieces[k].ok) {
      ++k;
      continue;
    }
    const double lo = pieces[k].lo;
    double hi = pieces[k].hi;
    while (k < pieces.size() && pieces[k].ok) hi = pieces[k++].hi;
    if (hi > lo) {
      out.intervals.push_back({lo, hi});
    } else {
      out.points.push_back(lo);
    }
  }
  return out;
}

}  // namespace pqc
