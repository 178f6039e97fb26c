#pragma once

#include <vector>

namespace prophet::mathkit {

// Everything solved for one query budget m: the unique positive root xi of
// Q_{m+1}(x) = 1 - exp(-x), the proven bracket it lives in, and the derived
// constants used elsewhere.
struct ExponentEntry {
  int m = 0;
  double xi = 0.0;
  double target = 0.0;        // 1 - exp(-xi)
  double bracket_low = 0.0;   // (m!)^(1/m)
  double bracket_high = 0.0;  // ((m+1)!)^(1/(m+1))
  double psi = 0.0;           // m! / xi^m, always < 1
};

// ln(n!), exact to machine precision via lgamma.
double log_factorial(int n);

// Regularized upper incomplete gamma Q_a(x) = exp(-x) * sum_{j<a} x^j / j!
// for integer a >= 1, x >= 0. Decreasing in x, Q_a(0) = 1.
double q_upper(int a, double x);

// d/dx Q_a(x) = -exp(-x) x^(a-1) / (a-1)!
double q_upper_derivative(int a, double x);

// Solves Q_{m+1}(xi) = 1 - exp(-xi) by bisection on the bracket above.
// The residual h(x) = Q_{m+1}(x) - 1 + exp(-x) is strictly decreasing and
// changes sign inside the bracket; the returned root has |h| <= tol.
// Results are cached per process; safe to call concurrently.
ExponentEntry solve_xi(int m, double tol = 1e-12);

// exp(-rate) rate^k / k!, rate > 0.
double poisson_pmf(double rate, int k);

// Exact pmf of a sum of independent Bernoulli(p_i), by convolution.
// Returned vector has size ps.size() + 1 and sums to 1.
std::vector<double> poisson_binomial_pmf(const std::vector<double>& ps);

struct LeCamResult {
  double tv_distance = 0.0;  // L1 distance between the pmf and Poisson(sum p_i)
  double bound = 0.0;        // 2 * sum p_i^2, always >= tv_distance
};
LeCamResult le_cam_check(const std::vector<double>& ps);

// Multiplicative tail bounds for a sum Y of independent [0,1] variables with
// mean mu. Variants follow the usual ladder:
//   I   P[Y >= (1+d)mu] <= (e^d / (1+d)^(1+d))^mu          d >= 0
//   II  P[Y <= (1-d)mu] <= (e^-d / (1-d)^(1-d))^mu         d >= 0
//   III P[Y >= (1+d)mu] <= exp(-mu d^2 / 3)                d in (0,1]
//   IV  P[Y <= (1-d)mu] <= exp(-mu d^2 / 2)                d in (0,1]
//   V   P[Y >= (1+d)mu] <= exp(-mu d ln(d) / 2)            d > e^2
enum class ChernoffVariant { I, II, III, IV, V };
double chernoff_bound(double mu, double delta, ChernoffVariant variant);

// f(k, m) = sum_{j=1}^{k} xi_m^j/j! - sum_{j=m+1}^{m+k} xi_m^j/j!.
// Nonnegative for all k >= 0, m >= 1; zero at k = 0.
double poisson_balance(int k, int m);

}  // namespace prophet::mathkit
