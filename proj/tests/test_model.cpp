#include <cmath>
#include <vector>

#include "doctest.h"
#include "pqc/model.hpp"
#include "pqc/rng.hpp"

using namespace pqc;

namespace {

ProblemInstance ball_box2() { return catalog("ball_box", {2, 2, {0.4, 0.2}}); }

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) out[i++] = d;
  return out;
}

// Brute-force membership on the raw constraints.
bool feasible_by_sign(const ProblemInstance& prob, const std::vector<double>& mu, double t) {
  const double x[1] = {t};
  for (size_t i = 0; i < mu.size(); ++i) {
    if (prob.inequalities()[i].evaluate(x) > mu[i]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("feasibility residual") {
  const auto cusp = catalog("cusp");
  auto r = feasibility_residual(cusp, DiagonalPerturbation{0.0}, vec({0, 0}));
  CHECK(r.ineq_violation == 0.0);
  CHECK(r.eq_violation == 0.0);
  r = feasibility_residual(cusp, DiagonalPerturbation{0.0}, vec({1, 0}));
  CHECK(r.ineq_violation == doctest::Approx(1.0));
  r = feasibility_residual(ball_box2(), DiagonalPerturbation{4.6}, vec({-1, -1}));
  CHECK(r.ineq_violation <= 1e-14);
  CHECK_THROWS_AS(feasibility_residual(cusp, DiagonalPerturbation{0.0}, vec({1})), DimensionError);
}

TEST_CASE("active set") {
  const auto cusp = catalog("cusp");
  CHECK(active_set(cusp, DiagonalPerturbation{0.0}, vec({0, 0}), 1e-8).indices == std::vector<int>{0, 1});
  CHECK(active_set(cusp, DiagonalPerturbation{0.1}, vec({std::cbrt(0.1), 0}), 1e-8).indices ==
        std::vector<int>{0, 1});
  CHECK(active_set(ball_box2(), DiagonalPerturbation{4.6}, vec({-1, -1})).indices == std::vector<int>{0, 1, 2});
  CHECK(active_set(cusp, DiagonalPerturbation{0.0}, vec({-1, 0})).indices.empty());
  CHECK_THROWS_AS(active_set(cusp, DiagonalPerturbation{0.0}, vec({1, 0})), DomainError);
}

TEST_CASE("vector perturbation bounds") {
  const auto ip = catalog("interval_pair");
  CHECK(constraint_bounds(ip, VectorPerturbation{{0.5, -1.0}}) == std::vector<double>{0.5, -1.0});
  CHECK_THROWS_AS(constraint_bounds(ip, VectorPerturbation{{0.5}}), DimensionError);
  const auto boxed = catalog("cusp_boxed");
  CHECK(constraint_bounds(boxed, DiagonalPerturbation{0.3}) == std::vector<double>{0.3, 0.3, 0.0});
}

TEST_CASE("catalog shapes") {
  auto degrees = [](const ProblemInstance& p) {
    std::vector<int> d;
    for (const auto& g : p.inequalities()) d.push_back(g.degree());
    return d;
  };
  const auto bb = ball_box2();
  CHECK(bb.num_inequalities() == 3);
  CHECK(degrees(bb) == std::vector<int>{2, 2, 2});
  const auto gb = catalog("grid_boxes", {2, 4, {0.6, 0.4}});
  CHECK(gb.num_inequalities() == 3);
  CHECK(degrees(gb) == std::vector<int>{8, 8, 2});
  const auto cusp = catalog("cusp");
  CHECK(cusp.num_inequalities() == 2);
  CHECK(cusp.max_constraint_degree() == 3);

  CHECK_THROWS_AS(catalog("nope"), DomainError);
  CHECK_THROWS_AS(catalog("grid_boxes", {2, 3, {0.1, 0.1}}), DomainError);
  CHECK_THROWS_AS(catalog("ball_box", {2, 2, {1.0, 0.0}}), DomainError);
  for (const auto& name : catalog_names()) CHECK_NOTHROW(catalog(name, {2, 2, {0.3, 0.2}}));
}

TEST_CASE("interval pair feasible sets") {
  const auto ip = catalog("interval_pair");
  const Interval window{-5, 5};

  auto s = univariate_feasible_intervals(ip, VectorPerturbation{{0, 0}}, window);
  REQUIRE(s.intervals.size() == 1);
  CHECK(s.intervals[0].lo == doctest::Approx(-3).epsilon(1e-12));
  CHECK(s.intervals[0].hi == doctest::Approx(-1).epsilon(1e-12));
  REQUIRE(s.points.size() == 1);
  CHECK(s.points[0] == doctest::Approx(1).epsilon(1e-12));

  s = univariate_feasible_intervals(ip, VectorPerturbation{{-0.19, -0.75}}, window);
  REQUIRE(s.intervals.size() == 1);
  CHECK(s.points.empty());
  CHECK(s.intervals[0].lo == doctest::Approx(-1 - std::sqrt(3.25)).epsilon(1e-12));
  CHECK(s.intervals[0].hi == doctest::Approx(-std::sqrt(1.19)).epsilon(1e-12));

  CHECK_THROWS_AS(univariate_feasible_intervals(ip, VectorPerturbation{{0, 0}}, {1, 1}), DomainError);
}

TEST_CASE("feasible intervals agree with a sign grid") {
  const auto ip = catalog("interval_pair");
  const std::vector<std::vector<double>> fixtures{{0, 0}, {-0.19, -0.75}, {1, 1}, {0.5, -2}, {-1.5, 0}};
  for (const auto& mu : fixtures) {
    const auto set = univariate_feasible_intervals(ip, VectorPerturbation{mu}, {-5, 5});
    std::vector<double> ends = set.points;
    for (const auto& iv : set.intervals) {
      ends.push_back(iv.lo);
      ends.push_back(iv.hi);
    }
    int mismatches = 0;
    for (int k = 0; k <= 10000; ++k) {
      const double t = -5.0 + 10.0 * k / 10000.0;
      double nearest = 1e300;
      for (double e : ends) nearest = std::min(nearest, std::abs(t - e));
      if (nearest <= 1e-9) continue;
      if (set.contains(t) != feasible_by_sign(ip, mu, t)) ++mismatches;
    }
    CHECK(mismatches == 0);
  }
}

TEST_CASE("mu = (1, 1) gives one interval") {
  const auto ip = catalog("interval_pair");
  const auto s = univariate_feasible_intervals(ip, VectorPerturbation{{1, 1}}, {-5, 5});
  REQUIRE(s.intervals.size() == 1);
  CHECK(s.points.empty());
  CHECK(s.intervals[0].lo == doctest::Approx(-1 - std::sqrt(5.0)));
  CHECK(s.intervals[0].hi == doctest::Approx(-1 + std::sqrt(5.0)));
}

TEST_CASE("feasible sets grow with alpha") {
  for (const auto& name : catalog_names()) {
    const auto prob = catalog(name, {2, 2, {0.3, 0.2}});
    pqc::Rng rng(5, {static_cast<std::uint64_t>(prob.num_inequalities())});
    const auto& box = prob.sample_box();
    for (int k = 0; k < 1000; ++k) {
      Vector x(prob.num_vars());
      for (int i = 0; i < prob.num_vars(); ++i) x[i] = rng.uniform(box[static_cast<size_t>(i)].lo, box[static_cast<size_t>(i)].hi);
      const double a = rng.uniform(-1, 1);
      const double b = a + rng.uniform(0, 1);
      if (feasibility_residual(prob, DiagonalPerturbation{a}, x).ineq_violation == 0.0) {
        CHECK(feasibility_residual(prob, DiagonalPerturbation{b}, x).ineq_violation == 0.0);
      }
    }
  }
}

TEST_CASE("active indices sit within tolerance of their bound") {
  const auto prob = ball_box2();
  const PerturbationSpec pert = DiagonalPerturbation{4.6};
  const Vector x = vec({-1, -1});
  const auto bounds = constraint_bounds(prob, pert);
  for (int i : active_set(prob, pert, x).indices) {
    CHECK(std::abs(prob.inequalities()[static_cast<size_t>(i)].evaluate(x) - bounds[static_cast<size_t>(i)]) <= kDefaultActiveTol);
  }
}

TEST_CASE("derivative cache") {
  const auto prob = ball_box2();
  DerivativeCache cache(prob);
  const Matrix J = cache.ineq_jacobian(vec({-1, -1}));
  CHECK(J(0, 0) == doctest::Approx(2 * 1.4));
  CHECK(J(0, 1) == doctest::Approx(2 * 1.2));
  CHECK(J(1, 0) == doctest::Approx(-2));
  CHECK(J(2, 1) == doctest::Approx(-2));
  CHECK(cache.eq_jacobian(vec({0, 0})).rows() == 0);
}
