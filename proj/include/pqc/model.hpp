#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pqc/poly.hpp"

namespace pqc {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const Interval&) const = default;
};

/// Constraint system g_i(x) <= 0 (i < m), h_j(x) = 0 (j < r) with an optional
/// objective. Indices are 0-based. `perturbable` is the set I of inequality
/// indices whose bound moves under a diagonal perturbation; the complement J
/// stays at 0.
class ProblemInstance {
 public:
  ProblemInstance(std::string name, int num_vars, std::vector<Polynomial> inequalities,
                  std::vector<Polynomial> equalities = {},
                  std::optional<Polynomial> objective = std::nullopt,
                  std::optional<std::vector<int>> perturbable = std::nullopt,
                  std::optional<std::vector<Interval>> sample_box = std::nullopt);

  const std::string& name() const { return name_; }
  int num_vars() const { return num_vars_; }
  int num_inequalities() const { return static_cast<int>(inequalities_.size()); }
  int num_equalities() const { return static_cast<int>(equalities_.size()); }
  const std::vector<Polynomial>& inequalities() const { return inequalities_; }
  const std::vector<Polynomial>& equalities() const { return equalities_; }
  const std::optional<Polynomial>& objective() const { return objective_; }
  const std::vector<int>& perturbable() const { return perturbable_; }
  bool is_perturbable(int i) const { return perturbable_mask_.at(static_cast<size_t>(i)); }
  const std::vector<Interval>& sample_box() const { return sample_box_; }
  /// Maximum degree over every constraint polynomial (inequalities and equalities).
  int max_constraint_degree() const;

  ProblemInstance with_objective(Polynomial f) const;
  ProblemInstance with_sample_box(std::vector<Interval> box) const;

  bool operator==(const ProblemInstance&) const = default;

 private:
  std::string name_;
  int num_vars_;
  std::vector<Polynomial> inequalities_;
  std::vector<Polynomial> equalities_;
  std::optional<Polynomial> objective_;
  std::vector<int> perturbable_;
  std::vector<bool> perturbable_mask_;
  std::vector<Interval> sample_box_;
};

/// Symbolic gradients and Hessians of every polynomial in a problem, built
/// once and evaluated many times.
struct DerivativeCache {
  explicit DerivativeCache(const ProblemInstance& prob);

  Matrix ineq_jacobian(const Vector& x) const;  // m x n
  Matrix eq_jacobian(const Vector& x) const;    // r x n
  Vector ineq_values(const Vector& x) const;
  Vector eq_values(const Vector& x) const;

  const ProblemInstance* problem;
  std::vector<std::vector<Polynomial>> ineq_grad;
  std::vector<std::vector<Polynomial>> eq_grad;
  std::vector<std::vector<std::vector<Polynomial>>> ineq_hess;
  std::vector<std::vector<std::vector<Polynomial>>> eq_hess;
};

/// g_i <= alpha for i in the perturbable set, g_j <= 0 otherwise.
struct DiagonalPerturbation {
  double alpha = 0.0;
};

/// g_i <= mu_i for every inequality.
struct VectorPerturbation {
  std::vector<double> mu;
};

using PerturbationSpec = std::variant<DiagonalPerturbation, VectorPerturbation>;

/// Right-hand sides of the inequalities under `pert`.
std::vector<double> constraint_bounds(const ProblemInstance& prob, const PerturbationSpec& pert);

struct FeasibilityResidual {
  double ineq_violation = 0.0;
  double eq_violation = 0.0;
};

FeasibilityResidual feasibility_residual(const ProblemInstance& prob, const PerturbationSpec& pert,
                                         const Vector& x);

struct ActiveSet {
  std::vector<int> indices;
  double tolerance = 0.0;
  bool operator==(const ActiveSet&) const = default;
};

constexpr double kDefaultActiveTol = 1e-7;

/// Indices with bound_i - g_i(x) <= tau. Throws DomainError when x violates
/// some constraint by more than tau.
ActiveSet active_set(const ProblemInstance& prob, const PerturbationSpec& pert, const Vector& x,
                     double tau = kDefaultActiveTol);

struct CatalogParams {
  int n = 2;
  int d = 2;
  std::vector<double> a;
};

/// Built-in problems: cusp, cusp_boxed, tangent_discs, ball_box, grid_boxes,
/// interval_pair. `params` is read only by the parameterized families.
ProblemInstance catalog(const std::string& name, const CatalogParams& params = {});
std::vector<std::string> catalog_names();

/// 1-D feasible set as closed intervals plus isolated points.
struct FeasibleSet1D {
  std::vector<Interval> intervals;
  std::vector<double> points;
  bool contains(double x, double tol = 0.0) const;
};

FeasibleSet1D univariate_feasible_intervals(const ProblemInstance& prob,
                                            const PerturbationSpec& pert, Interval window);

}  // namespace pqc
