#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace prophet::instances {

// One independent nonnegative discrete reward: atoms are (value, probability)
// pairs with values strictly ascending and probabilities summing to 1.
struct DiscreteVariable {
  std::vector<std::pair<double, double>> atoms;
};

// Either an explicit list of discrete variables or "n iid uniform(0,1)".
struct Instance {
  std::vector<DiscreteVariable> variables;
  int iid_uniform_n = 0;

  bool is_iid_uniform() const { return iid_uniform_n > 0; }
  int size() const {
    return is_iid_uniform() ? iid_uniform_n : static_cast<int>(variables.size());
  }
};

// Parameters of the hard parametric family: a sure 1 first, n rare slightly
// increasing middle values with mass c1/n each, and a c2/eps tail of mass eps.
struct FamilyParams {
  int m = 1;
  int n = 1;
  double eps = 1e-9;
  double c1 = 1.0;
  double c2 = 1.0;
};

// Returns an error message naming the first violated requirement (with the
// offending variable index), or nullopt if the instance is well formed.
std::optional<std::string> validate(const Instance& inst, double prob_tol = 1e-12);

// Exact E[max] over the product distribution; n/(n+1) for iid uniform.
double expected_max(const Instance& inst);

// Support of the maximum with exact point masses, values ascending.
std::vector<std::pair<double, double>> max_distribution(const Instance& inst);

// Three variables: a sure 1, then 1+eps with probability 1/2-eps, then a
// 1/eps tail with probability eps.  Requires 0 < eps < 1/4.
Instance build_gap_instance_m1(double eps);

// m+2 variables generalizing the above: X_1 = 1, X_i = 1+(i-1)eps with
// probability 1/2-eps for i in [2, m+1], tail 1/eps with probability eps.
Instance build_gap_instance(int m, double eps);

// n+2 variables: X_1 = 1, n middle variables equal to 1 with probability
// xi_m/n, tail 1/eps with probability eps.  Requires xi_m/n < 1.
Instance build_tightness_instance(int m, int n, double eps);

// Spacing used for the middle values of the family instance; shrinks with n
// so the whole middle block spans at most 1e-6 above 1.
double default_value_step(int n);

// n+2 variables: X_1 = 1, middle X_i = 1+(i-1)*value_step with probability
// c1/n, tail c2/eps with probability eps.  Pass value_step <= 0 for the
// default spacing.
Instance build_adversarial_instance(const FamilyParams& params, double value_step = -1.0);

void save(const Instance& inst, const std::string& path);
Instance load(const std::string& path);

}  // namespace prophet::instances
