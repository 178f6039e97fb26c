#include "prophet/mathkit.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"

using namespace prophet::mathkit;

namespace {

// Independent root finder for small m.  For m = 1 the defining equation
// reduces to e^x = 2 + x, for m = 2 to e^x = 2 + x + x^2/2: bisect those
// closed forms directly, with no shared code with the library.
double xi_reference(int m) {
  auto f = [m](double x) {
    double poly = 2.0, pw = 1.0, fact = 1.0;
    for (int j = 1; j <= m; ++j) {
      pw *= x;
      fact *= j;
      poly += pw / fact;
    }
    return std::exp(x) - poly;
  };
  double lo = 0.0, hi = 20.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// 2^n enumeration of a sum of independent Bernoulli(p_i).
std::vector<double> bernoulli_sum_pmf_bruteforce(const std::vector<double>& ps) {
  const int n = static_cast<int>(ps.size());
  std::vector<double> pmf(n + 1, 0.0);
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    double prob = 1.0;
    int ones = 0;
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        prob *= ps[i];
        ++ones;
      } else {
        prob *= 1.0 - ps[i];
      }
    }
    pmf[ones] += prob;
  }
  return pmf;
}

}  // namespace

TEST_CASE("log_factorial small values") {
  CHECK(log_factorial(0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(log_factorial(1) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(log_factorial(5) == doctest::Approx(std::log(120.0)).epsilon(1e-12));
  CHECK(log_factorial(170) == doctest::Approx(std::lgamma(171.0)).epsilon(1e-12));
  CHECK_THROWS_AS(log_factorial(-1), std::domain_error);
}

TEST_CASE("q_upper basics") {
  CHECK(q_upper(5, 0.0) == 1.0);
  CHECK(q_upper(1, std::log(2.0)) == doctest::Approx(0.5).epsilon(1e-12));
  // Q_2(x) = e^-x (1 + x)
  CHECK(q_upper(2, 1.5) == doctest::Approx(std::exp(-1.5) * 2.5).epsilon(1e-12));
  CHECK_THROWS_AS(q_upper(0, 1.0), std::domain_error);
  CHECK_THROWS_AS(q_upper(3, -0.1), std::domain_error);
}

TEST_CASE("q_upper is decreasing in x and increasing in a") {
  for (int a = 1; a <= 20; a += 3) {
    double prev = 1.0;
    for (double x = 0.25; x <= 30.0; x += 0.25) {
      double cur = q_upper(a, x);
      CHECK(cur <= prev + 1e-12);
      CHECK(cur >= 0.0);
      prev = cur;
    }
  }
  for (double x : {0.5, 2.0, 7.5}) {
    for (int a = 1; a < 15; ++a) CHECK(q_upper(a, x) <= q_upper(a + 1, x) + 1e-12);
  }
}

TEST_CASE("q_upper_derivative matches finite differences") {
  CHECK(q_upper_derivative(1, 0.0) == doctest::Approx(-1.0));
  CHECK(q_upper_derivative(4, 0.0) == 0.0);
  const double h = 1e-5;
  for (int a = 1; a <= 20; a += 2) {
    for (double x : {0.1, 0.7, 1.3, 2.9, 5.0, 10.0}) {
      double fd = (q_upper(a, x + h) - q_upper(a, x - h)) / (2.0 * h);
      CHECK(q_upper_derivative(a, x) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("solve_xi agrees with the independent closed-form roots") {
  CHECK(solve_xi(1).xi == doctest::Approx(xi_reference(1)).epsilon(1e-12));
  CHECK(solve_xi(2).xi == doctest::Approx(xi_reference(2)).epsilon(1e-12));
  CHECK(solve_xi(3).xi == doctest::Approx(xi_reference(3)).epsilon(1e-12));
  // Frozen: root of e^x = 2 + x.
  CHECK(solve_xi(1).xi == doctest::Approx(1.1461932206205825).epsilon(1e-10));
}

TEST_CASE("solve_xi acceptance targets for small m") {
  const double expected[] = {0.682, 0.792, 0.861, 0.907, 0.937, 0.958,
                             0.971, 0.980, 0.987, 0.991, 0.994};
  for (int m = 1; m <= 11; ++m) {
    CHECK(std::fabs(solve_xi(m).target - expected[m - 1]) <= 5e-4);
  }
}

TEST_CASE("solve_xi brackets, residual, monotonicity up to m=500") {
  double prev = 0.0;
  for (int m = 1; m <= 500; ++m) {
    ExponentEntry e = solve_xi(m);
    CHECK(e.bracket_low < e.xi);
    CHECK(e.xi < e.bracket_high);
    CHECK(e.xi > prev);
    CHECK(e.psi < 1.0);
    CHECK(e.psi > 0.0);
    // Residual of the defining equation, evaluated the plain way.
    double h = q_upper(m + 1, e.xi) - 1.0 + std::exp(-e.xi);
    CHECK(std::fabs(h) <= 1e-10);
    // Numerically observed range (not relied on elsewhere).  The root for
    // m = 1 sits at ~1.146, above m; from m = 2 on it stays below m.
    CHECK(e.xi >= m / (std::exp(2.0)));
    if (m >= 2) CHECK(e.xi <= static_cast<double>(m));
    prev = e.xi;
  }
  CHECK(std::fabs(solve_xi(500).xi / 500.0 - 1.0 / std::exp(1.0)) <= 0.01);
  CHECK_THROWS_AS(solve_xi(0), std::domain_error);
}

TEST_CASE("poisson_pmf basics and normalization") {
  CHECK(poisson_pmf(2.0, 0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
  CHECK(poisson_pmf(2.0, 3) == doctest::Approx(std::exp(-2.0) * 8.0 / 6.0).epsilon(1e-12));
  CHECK_THROWS_AS(poisson_pmf(0.0, 1), std::domain_error);
  CHECK_THROWS_AS(poisson_pmf(-1.0, 1), std::domain_error);
  CHECK_THROWS_AS(poisson_pmf(1.0, -1), std::domain_error);
  const double rate = solve_xi(1).xi;
  double sum = 0.0;
  for (int k = 0; k <= 60; ++k) sum += poisson_pmf(rate, k);
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("poisson_binomial_pmf matches 2^n enumeration") {
  CHECK(poisson_binomial_pmf({0.5}) == std::vector<double>{0.5, 0.5});
  std::vector<double> two = poisson_binomial_pmf({0.5, 0.5});
  CHECK(two[0] == doctest::Approx(0.25));
  CHECK(two[1] == doctest::Approx(0.5));
  CHECK(two[2] == doctest::Approx(0.25));

  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    int n = 1 + static_cast<int>(rng() % 10);
    std::vector<double> ps(n);
    for (double& p : ps) p = unif(rng);
    std::vector<double> got = poisson_binomial_pmf(ps);
    std::vector<double> want = bernoulli_sum_pmf_bruteforce(ps);
    REQUIRE(got.size() == want.size());
    double total = 0.0;
    for (std::size_t k = 0; k < got.size(); ++k) {
      CHECK(got[k] == doctest::Approx(want[k]).epsilon(1e-12));
      total += got[k];
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(poisson_binomial_pmf({0.5, 1.5}), std::domain_error);
  CHECK_THROWS_AS(poisson_binomial_pmf({-0.1}), std::domain_error);
}

TEST_CASE("le_cam_check bound holds") {
  LeCamResult degenerate = le_cam_check({0.0});
  CHECK(degenerate.tv_distance == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(degenerate.bound == 0.0);

  LeCamResult half = le_cam_check({0.5, 0.5});
  CHECK(half.bound == doctest::Approx(1.0));
  CHECK(half.tv_distance <= half.bound);
  CHECK(half.tv_distance > 0.1);  // coarse approximation, distance is real

  LeCamResult fine = le_cam_check(std::vector<double>(20, 0.05));
  CHECK(fine.bound == doctest::Approx(0.1));
  CHECK(fine.tv_distance <= fine.bound);

  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    int n = 1 + static_cast<int>(rng() % 15);
    std::vector<double> ps(n);
    for (double& p : ps) p = unif(rng);
    LeCamResult r = le_cam_check(ps);
    CHECK(r.tv_distance <= r.bound + 1e-12);
    CHECK(r.tv_distance >= 0.0);
  }
}

TEST_CASE("chernoff_bound values and domains") {
  CHECK(chernoff_bound(1.0, 0.0, ChernoffVariant::I) == doctest::Approx(1.0));
  CHECK(chernoff_bound(3.0, 1.0, ChernoffVariant::III) ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(chernoff_bound(2.0, 1.0, ChernoffVariant::IV) ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  // Variant I at delta=1: (e / 4)^mu.
  CHECK(chernoff_bound(2.0, 1.0, ChernoffVariant::I) ==
        doctest::Approx(std::pow(std::exp(1.0) / 4.0, 2.0)).epsilon(1e-12));
  // Variant II at delta=1 degrades to e^-mu.
  CHECK(chernoff_bound(4.0, 1.0, ChernoffVariant::II) ==
        doctest::Approx(std::exp(-4.0)).epsilon(1e-12));
  CHECK(chernoff_bound(1.0, 8.0, ChernoffVariant::V) ==
        doctest::Approx(std::exp(-8.0 * std::log(8.0) / 2.0)).epsilon(1e-12));

  CHECK_THROWS_AS(chernoff_bound(1.0, -0.5, ChernoffVariant::I), std::domain_error);
  CHECK_THROWS_AS(chernoff_bound(1.0, -0.5, ChernoffVariant::II), std::domain_error);
  CHECK_THROWS_AS(chernoff_bound(1.0, 0.0, ChernoffVariant::III), std::domain_error);
  CHECK_THROWS_AS(chernoff_bound(1.0, 1.5, ChernoffVariant::IV), std::domain_error);
  CHECK_THROWS_AS(chernoff_bound(1.0, 5.0, ChernoffVariant::V), std::domain_error);
  CHECK_THROWS_AS(chernoff_bound(0.0, 0.5, ChernoffVariant::I), std::domain_error);

  // Bounds are at most 1 in the meaningful ranges.
  for (double mu : {0.5, 1.0, 4.0}) {
    for (double d = 0.05; d <= 1.0; d += 0.05) {
      CHECK(chernoff_bound(mu, d, ChernoffVariant::I) <= 1.0 + 1e-12);
      CHECK(chernoff_bound(mu, d, ChernoffVariant::II) <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("poisson_balance examples and nonnegativity") {
  CHECK(poisson_balance(0, 3) == 0.0);
  const double xi1 = solve_xi(1).xi;
  CHECK(poisson_balance(1, 1) ==
        doctest::Approx(xi1 - xi1 * xi1 / 2.0).epsilon(1e-12));
  CHECK(poisson_balance(1, 1) == doctest::Approx(0.489).epsilon(1e-3));
  CHECK(poisson_balance(5, 2) >= 0.0);
  for (int m = 1; m <= 50; ++m) {
    for (int k = 0; k <= 50; ++k) {
      CHECK(poisson_balance(k, m) >= -1e-10);
    }
  }
  CHECK_THROWS_AS(poisson_balance(-1, 1), std::domain_error);
  CHECK_THROWS_AS(poisson_balance(1, 0), std::domain_error);
}
