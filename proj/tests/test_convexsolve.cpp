#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "pqc/convexsolve.hpp"

using namespace pqc;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) out[i++] = d;
  return out;
}

}  // namespace

TEST_CASE("lp examples") {
  // max eps s.t. eps <= 1
  auto lp = LpProblem::free_variables(1);
  lp.c = vec({-1});
  lp.A = Matrix::Ones(1, 1);
  lp.b = vec({1});
  auto sol = solve_lp(lp);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.x[0] == doctest::Approx(1));

  // max eps s.t. 0.y + eps <= 0, |y| <= 1
  lp = LpProblem::free_variables(3);
  lp.c = vec({0, 0, -1});
  lp.A = Matrix(1, 3);
  lp.A << 0, 0, 1;
  lp.b = vec({0});
  lp.lo = vec({-1, -1, -INFINITY});
  lp.hi = vec({1, 1, INFINITY});
  sol = solve_lp(lp);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.x[2] == doctest::Approx(0).scale(1));

  // cusp rows (0,1), (0,-1)
  lp.A = Matrix(2, 3);
  lp.A << 0, 1, 1, 0, -1, 1;
  lp.b = vec({0, 0});
  sol = solve_lp(lp);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(std::abs(sol.x[2]) <= 1e-12);
  CHECK(sol.dual_ineq[0] == doctest::Approx(0.5));
  CHECK(sol.dual_ineq[1] == doctest::Approx(0.5));
}

TEST_CASE("lp statuses") {
  auto lp = LpProblem::free_variables(1);
  lp.c = vec({-1});
  CHECK(solve_lp(lp).status == SolveStatus::Unbounded);

  lp.A = Matrix(2, 1);
  lp.A << 1, -1;
  lp.b = vec({0, -1});
  CHECK(solve_lp(lp).status == SolveStatus::Infeasible);

  lp.b = vec({NAN, 0});
  CHECK_THROWS(solve_lp(lp));
}

TEST_CASE("lp strong duality on random instances") {
  pqc::Rng rng(11);
  for (int t = 0; t < 200; ++t) {
    const int n = 1 + static_cast<int>(rng.index(8));
    const int m = 1 + static_cast<int>(rng.index(8));
    const auto r = oracle::random_lp(rng, n, m);
    const auto sol = solve_lp(oracle::to_problem(r));
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(std::abs(sol.objective - sol.dual_objective) <= 1e-8 * (1 + std::abs(sol.objective)));
    CHECK(((r.A * sol.x - r.b).array() <= 1e-9).all());
  }
}

TEST_CASE("lp matches vertex enumeration") {
  pqc::Rng rng(12);
  for (int t = 0; t < 100; ++t) {
    const int n = 1 + static_cast<int>(rng.index(3));
    const int m = 1 + static_cast<int>(rng.index(6));
    const auto r = oracle::random_lp(rng, n, m);
    const auto want = oracle::lp_by_vertices(r.c, r.A, r.b, r.lo, r.hi);
    REQUIRE(want.has_value());
    const auto sol = solve_lp(oracle::to_problem(r));
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(std::abs(sol.objective - *want) <= 1e-7);
  }
}

TEST_CASE("qp examples") {
  CappedSimplexQp qp;
  qp.Q = -Matrix::Identity(2, 2);
  qp.q = vec({0, 0});
  qp.cap = 1;
  auto sol = solve_capped_simplex_qp(qp);
  CHECK(sol.mu.norm() <= 1e-12);

  qp.q = vec({2, 0});
  sol = solve_capped_simplex_qp(qp);
  CHECK(sol.mu[0] == doctest::Approx(1));
  CHECK(std::abs(sol.mu[1]) <= 1e-12);

  qp.q = vec({0.3, 0.2});
  sol = solve_capped_simplex_qp(qp);
  CHECK(sol.mu[0] == doctest::Approx(0.3));
  CHECK(sol.mu[1] == doctest::Approx(0.2));
  CHECK(sol.kkt_residual <= 1e-12);

  qp.Q = Matrix::Identity(2, 2);
  CHECK_THROWS_AS(solve_capped_simplex_qp(qp), DomainError);
}

TEST_CASE("qp semidefinite and equality cap") {
  CappedSimplexQp qp;
  Matrix G(2, 2);
  G << 1, 0, 1, 0;  // identical rows
  qp.Q = -G * G.transpose();
  qp.q = vec({0, 0});
  qp.cap = 1;
  qp.sum_equals_cap = true;
  const auto sol = solve_capped_simplex_qp(qp);
  CHECK(sol.mu.sum() == doctest::Approx(1));
  CHECK(sol.objective == doctest::Approx(-0.5));
}

TEST_CASE("qp matches face enumeration") {
  pqc::Rng rng(13);
  for (int t = 0; t < 100; ++t) {
    const int m = 1 + static_cast<int>(rng.index(6));
    const auto qp = oracle::random_qp(rng, m);
    const auto sol = solve_capped_simplex_qp(qp);
    CHECK(std::abs(sol.objective - oracle::qp_by_faces(qp.Q, qp.q, qp.cap)) <= 1e-7);
    CHECK((sol.mu.array() >= 0).all());
    CHECK(sol.mu.sum() <= qp.cap + 1e-12);
  }
}

TEST_CASE("projection examples") {
  CHECK(project_capped_simplex(vec({-1, -2}), 3).norm() == 0.0);
  const Vector p = project_capped_simplex(vec({2, 0}), 1);
  CHECK(p[0] == doctest::Approx(1));
  CHECK(p[1] == 0.0);
  CHECK(project_capped_simplex(vec({0.2, 0.1}), 1) == vec({0.2, 0.1}));
  CHECK_THROWS_AS(project_capped_simplex(vec({1}), -1), DomainError);
  CHECK(project_simplex(vec({0, 0}), 1).isApprox(vec({0.5, 0.5})));
}

TEST_CASE("projection satisfies the variational inequality") {
  pqc::Rng rng(14);
  for (int t = 0; t < 50; ++t) {
    const int m = 1 + static_cast<int>(rng.index(6));
    const double cap = rng.uniform(0.1, 2);
    Vector v(m);
    for (int i = 0; i < m; ++i) v[i] = rng.uniform(-2, 2);
    const Vector p = project_capped_simplex(v, cap);
    for (int k = 0; k < 100; ++k) {
      Vector z(m);
      for (int i = 0; i < m; ++i) z[i] = rng.exponential();
      z *= rng.uniform() * cap / z.sum();
      CHECK((v - p).dot(z - p) <= 1e-10);
    }
  }
}
