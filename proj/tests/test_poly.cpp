#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "pqc/poly.hpp"
#include "pqc/rng.hpp"

using pqc::Monomial;
using pqc::Polynomial;
using pqc::Vector;

namespace {

Polynomial x(int n, int k) { return Polynomial::variable(n, k); }

Polynomial ball_g0(const std::vector<double>& a) {
  const int n = static_cast<int>(a.size());
  Polynomial p = Polynomial::constant(n, 4.0 * n);
  for (int i = 0; i < n; ++i) p -= (x(n, i) - a[static_cast<size_t>(i)]).pow(2);
  return p;
}

Polynomial q2() {
  const Polynomial t = x(1, 0);
  return (t * t - 1.0) * (t * t - 4.0);
}

Polynomial random_poly(pqc::Rng& rng, int n, int max_deg) {
  std::vector<Monomial> terms;
  const int count = 1 + static_cast<int>(rng.index(8));
  for (int t = 0; t < count; ++t) {
    Monomial m;
    m.coef = rng.uniform(-2, 2);
    m.exps.assign(static_cast<size_t>(n), 0);
    int budget = static_cast<int>(rng.index(static_cast<std::uint64_t>(max_deg) + 1));
    while (budget-- > 0) ++m.exps[rng.index(static_cast<std::uint64_t>(n))];
    terms.push_back(m);
  }
  return Polynomial(n, terms);
}

}  // namespace

TEST_CASE("evaluate") {
  const Polynomial cusp = x(2, 0).pow(3) + x(2, 1);
  CHECK(cusp.evaluate(Vector::Zero(2)) == 0.0);
  CHECK(ball_g0({0.4, 0.2}).evaluate(Vector::Constant(2, -1.0)) == doctest::Approx(4.6).epsilon(1e-14));
  CHECK(q2().evaluate(Vector::Zero(1)) == 4.0);
  CHECK_THROWS_AS(cusp.evaluate(Vector::Zero(3)), pqc::DimensionError);
}

TEST_CASE("canonical form") {
  const Polynomial a = x(2, 1) + x(2, 0) * x(2, 0) + 1.0;
  const Polynomial b = 1.0 + x(2, 0).pow(2) + x(2, 1);
  CHECK(a == b);
  CHECK((a - a).is_zero());
  CHECK((a - a).degree() == 0);
  CHECK(a.degree() == 2);
  CHECK(q2().max_exponent() == 4);
}

TEST_CASE("gradient") {
  const Polynomial cusp = x(2, 0).pow(3) + x(2, 1);
  const auto g = pqc::gradient(cusp);
  REQUIRE(g.size() == 2);
  CHECK(g[0] == 3.0 * x(2, 0).pow(2));
  CHECK(g[1] == Polynomial::constant(2, 1.0));

  for (const auto& c : pqc::gradient(Polynomial::constant(3, 5.0))) CHECK(c.is_zero());

  const std::vector<double> a{0.4, 0.2};
  const auto gb = pqc::gradient(ball_g0(a));
  for (int i = 0; i < 2; ++i) CHECK(gb[static_cast<size_t>(i)] == -2.0 * (x(2, i) - a[static_cast<size_t>(i)]));
}

TEST_CASE("gradient matches central differences on random polynomials") {
  pqc::Rng rng(2024);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.index(4));
    const Polynomial p = random_poly(rng, n, 6);
    Vector pt(n);
    for (int i = 0; i < n; ++i) pt[i] = rng.uniform(-1.5, 1.5);
    const Vector g = pqc::evaluate_gradient(pqc::gradient(p), pt);
    const double h = 1e-5;
    for (int k = 0; k < n; ++k) {
      Vector up = pt, dn = pt;
      up[k] += h;
      dn[k] -= h;
      const double fd = (p.evaluate(up) - p.evaluate(dn)) / (2 * h);
      CHECK(std::abs(fd - g[k]) <= 1e-5 * std::max(1.0, std::abs(g[k])));
      ++checked;
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("hessian is symmetric and matches differentiated gradient") {
  pqc::Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const Polynomial p = random_poly(rng, 3, 5);
    const auto H = pqc::hessian(p);
    for (int k = 0; k < 3; ++k) {
      for (int l = 0; l < 3; ++l) {
        CHECK(H[static_cast<size_t>(k)][static_cast<size_t>(l)] == H[static_cast<size_t>(l)][static_cast<size_t>(k)]);
        CHECK(H[static_cast<size_t>(k)][static_cast<size_t>(l)] == p.derivative(k).derivative(l));
      }
    }
  }
}

TEST_CASE("univariate roots") {
  const Polynomial t = x(1, 0);
  auto near = [](const std::vector<double>& got, const std::vector<double>& want) {
    REQUIRE(got.size() == want.size());
    for (size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
  };
  near(pqc::univariate_real_roots(1.0 - t * t, -5, 5), {-1, 1});
  near(pqc::univariate_real_roots((t + 1.0).pow(2) - 4.0, -5, 5), {-3, 1});
  near(pqc::univariate_real_roots(q2(), -5, 5), {-2, -1, 1, 2});
  near(pqc::univariate_real_roots((t - 1.0).pow(2), -5, 5), {1});
  CHECK(pqc::univariate_real_roots(t * t + 1.0, -5, 5).empty());
  CHECK_THROWS_AS(pqc::univariate_real_roots(Polynomial(1), -1, 1), pqc::DomainError);
}

TEST_CASE("planted integer roots are recovered") {
  pqc::Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 1 + static_cast<int>(rng.index(5));
    std::vector<int> roots;
    Polynomial p = Polynomial::constant(1, rng.uniform(0.5, 2.0));
    while (static_cast<int>(roots.size()) < k) {
      const int r = static_cast<int>(rng.index(9)) - 4;
      if (std::find(roots.begin(), roots.end(), r) != roots.end()) continue;
      roots.push_back(r);
      p = p * (x(1, 0) - static_cast<double>(r));
    }
    std::sort(roots.begin(), roots.end());
    const auto got = pqc::univariate_real_roots(p, -5.5, 5.5);
    REQUIRE(got.size() == roots.size());
    for (size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - roots[i]) <= 1e-10);
  }
}
