#include "prophet/mathkit.hpp"

#include <cmath>
#include <mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace prophet::mathkit {

namespace {

// sum_{k=m+1}^inf x^k / k!.  On the solve bracket x < m+1, so terms decrease
// geometrically from the first one and the loop terminates quickly.
double upper_tail_series(int m, double x) {
  if (x <= 0.0) return 0.0;
  const double lx = std::log(x);
  double sum = 0.0;
  for (int k = m + 1;; ++k) {
    const double term = std::exp(k * lx - std::lgamma(k + 1.0));
    sum += term;
    if (k > x && term <= sum * 1e-18) break;
  }
  return sum;
}

// x*ln(x) extended continuously by 0 for x <= 0.
double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

struct CacheSlot {
  ExponentEntry entry;
  double residual = 0.0;  // |h| at the returned root
};

}  // namespace

double log_factorial(int n) {
  if (n < 0) throw std::domain_error("log_factorial: n must be >= 0");
  return std::lgamma(n + 1.0);
}

double q_upper(int a, double x) {
  if (a < 1) throw std::domain_error("q_upper: a must be >= 1");
  if (x < 0.0) throw std::domain_error("q_upper: x must be >= 0");
  if (x == 0.0) return 1.0;
  const double lx = std::log(x);
  double sum = 0.0;
  for (int j = 0; j < a; ++j) {
    sum += std::exp(j * lx - x - std::lgamma(j + 1.0));
  }
  return sum < 1.0 ? sum : 1.0;
}

double q_upper_derivative(int a, double x) {
  if (a < 1) throw std::domain_error("q_upper_derivative: a must be >= 1");
  if (x < 0.0) throw std::domain_error("q_upper_derivative: x must be >= 0");
  if (x == 0.0) return a == 1 ? -1.0 : 0.0;
  return -std::exp((a - 1) * std::log(x) - x - std::lgamma(static_cast<double>(a)));
}

ExponentEntry solve_xi(int m, double tol) {
  if (m < 1) throw std::domain_error("solve_xi: m must be >= 1");
  if (!(tol > 0.0)) throw std::domain_error("solve_xi: tol must be positive");

  static std::mutex cache_mutex;
  static std::unordered_map<int, CacheSlot> cache;
  {
    std::lock_guard<std::mutex> lock(cache_mutex);
    auto it = cache.find(m);
    if (it != cache.end()) {
      if (it->second.residual > tol)
        throw std::runtime_error("solve_xi: requested tolerance not attainable");
      return it->second.entry;
    }
  }

  double lo = std::exp(std::lgamma(m + 1.0) / m);
  double hi = std::exp(std::lgamma(m + 2.0) / (m + 1.0));

  // h(x) = Q_{m+1}(x) - 1 + exp(-x) = exp(-x) * (1 - T(x)) with
  // T(x) = sum_{k>m} x^k/k!.  Bisect on the sign of 1 - T(x): same root,
  // same monotonicity, but no cancellation against 1 when exp(-x) is tiny.
  auto scaled_h = [m](double x) { return 1.0 - upper_tail_series(m, x); };
  if (!(scaled_h(lo) > 0.0) || !(scaled_h(hi) < 0.0))
    throw std::runtime_error("solve_xi: bracket does not straddle the root");

  for (int it = 0; it < 200 && (hi - lo) > hi * 1e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (scaled_h(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  const double xi = 0.5 * (lo + hi);
  const double residual = std::exp(-xi) * std::fabs(scaled_h(xi));
  if (residual > tol) throw std::runtime_error("solve_xi: residual above tolerance");

  ExponentEntry e;
  e.m = m;
  e.xi = xi;
  e.target = 1.0 - std::exp(-xi);
  e.bracket_low = std::exp(std::lgamma(m + 1.0) / m);
  e.bracket_high = std::exp(std::lgamma(m + 2.0) / (m + 1.0));
  e.psi = std::exp(std::lgamma(m + 1.0) - m * std::log(xi));

  std::lock_guard<std::mutex> lock(cache_mutex);
  cache.emplace(m, CacheSlot{e, residual});
  return e;
}

double poisson_pmf(double rate, int k) {
  if (!(rate > 0.0)) throw std::domain_error("poisson_pmf: rate must be positive");
  if (k < 0) throw std::domain_error("poisson_pmf: k must be >= 0");
  return std::exp(k * std::log(rate) - rate - std::lgamma(k + 1.0));
}

std::vector<double> poisson_binomial_pmf(const std::vector<double>& ps) {
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (!(ps[i] >= 0.0 && ps[i] <= 1.0))
      throw std::domain_error("poisson_binomial_pmf: p[" + std::to_string(i) +
                              "] outside [0,1]");
  }
  std::vector<double> pmf{1.0};
  pmf.reserve(ps.size() + 1);
  for (double p : ps) {
    pmf.push_back(0.0);
    for (std::size_t k = pmf.size() - 1; k > 0; --k)
      pmf[k] = pmf[k] * (1.0 - p) + pmf[k - 1] * p;
    pmf[0] *= 1.0 - p;
  }
  return pmf;
}

LeCamResult le_cam_check(const std::vector<double>& ps) {
  const std::vector<double> pmf = poisson_binomial_pmf(ps);
  double lambda = 0.0, bound = 0.0;
  for (double p : ps) {
    lambda += p;
    bound += 2.0 * p * p;
  }
  const double llambda = lambda > 0.0 ? std::log(lambda) : 0.0;
  double tv = 0.0;
  for (int k = 0;; ++k) {
    const double poisson = lambda > 0.0
                               ? std::exp(k * llambda - lambda - std::lgamma(k + 1.0))
                               : (k == 0 ? 1.0 : 0.0);
    const double ours = k < static_cast<int>(pmf.size()) ? pmf[k] : 0.0;
    tv += std::fabs(ours - poisson);
    // Stop once the whole pmf is consumed and we are past the Poisson mode
    // with a negligible term; from there the terms only shrink, so the
    // remaining tail contributes below double precision.
    if (k + 1 >= static_cast<int>(pmf.size()) && k > lambda && poisson < 1e-18)
      break;
  }
  return {tv, bound};
}

double chernoff_bound(double mu, double delta, ChernoffVariant variant) {
  if (!(mu > 0.0)) throw std::domain_error("chernoff_bound: mu must be positive");
  switch (variant) {
    case ChernoffVariant::I:
      if (delta < 0.0) throw std::domain_error("chernoff_bound: variant I needs delta >= 0");
      return std::exp(mu * (delta - (1.0 + delta) * std::log1p(delta)));
    case ChernoffVariant::II:
      if (delta < 0.0) throw std::domain_error("chernoff_bound: variant II needs delta >= 0");
      return std::exp(mu * (-delta - xlogx(1.0 - delta)));
    case ChernoffVariant::III:
      if (!(delta > 0.0 && delta <= 1.0))
        throw std::domain_error("chernoff_bound: variant III needs delta in (0,1]");
      return std::exp(-mu * delta * delta / 3.0);
    case ChernoffVariant::IV:
      if (!(delta > 0.0 && delta <= 1.0))
        throw std::domain_error("chernoff_bound: variant IV needs delta in (0,1]");
      return std::exp(-mu * delta * delta / 2.0);
    case ChernoffVariant::V: {
      const double e2 = std::exp(2.0);
      if (!(delta > e2)) throw std::domain_error("chernoff_bound: variant V needs delta > e^2");
      return std::exp(-mu * delta * std::log(delta) / 2.0);
    }
  }
  throw std::domain_error("chernoff_bound: unknown variant");
}

double poisson_balance(int k, int m) {
  if (k < 0) throw std::domain_error("poisson_balance: k must be >= 0");
  if (m < 1) throw std::domain_error("poisson_balance: m must be >= 1");
  const double xi = solve_xi(m).xi;
  const double lx = std::log(xi);
  // Difference the aligned terms pairwise; each pair is nonnegative.
  double sum = 0.0;
  for (int j = 1; j <= k; ++j) {
    sum += std::exp(j * lx - std::lgamma(j + 1.0)) -
           std::exp((m + j) * lx - std::lgamma(m + j + 1.0));
  }
  return sum;
}

}  // namespace prophet::mathkit
