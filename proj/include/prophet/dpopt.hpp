#pragma once

#include <vector>

#include "prophet/instances.hpp"

namespace prophet::dpopt {

// Two-valued sequential family: X_k is b_k with probability p_k and 0
// otherwise, values presented in index order, query budget m.
struct DpInputs {
  std::vector<double> b;  // nonnegative, strictly increasing over nonzero entries
  std::vector<double> p;  // each in (0, 1]
  int m = 0;
  int size() const { return static_cast<int>(b.size()); }
};

// Builds the DpInputs for the parametric family: a sure 1 first, n middles
// at 1 + i*step with probability c1/n, then a tail worth c2/eps with
// probability eps.  value_step <= 0 selects the instances default.
DpInputs family_dp_inputs(const instances::FamilyParams& params, double value_step = -1.0);

// Backward-induction tables.  Row t holds the value with t queries left;
// column k is 1-based, column N+1 is the empty-suffix base case.  E is the
// unconditioned value, E_up is conditioned on some later-or-current value
// being nonzero.
struct DpTables {
  int N = 0;
  int m = 0;
  std::vector<std::vector<double>> E, E_up;  // [t][k], k in [1, N+1]
  std::vector<double> q0;                    // q0[k] = P[all of X_k..X_N are zero]
  std::vector<double> alpha;                 // alpha[k] = P[X_k > 0 | Z_k > 0]
  std::vector<double> beta;                  // beta[k] = P[Z_k > 0]
};

struct DpSolution {
  double value = 0.0;  // E[m][1]
  DpTables tables;
};

DpSolution dp_optimal(const DpInputs& inputs);

// Value of the optimal algorithm only, O(m) memory; used by the grid scan.
double dp_value(const DpInputs& inputs);

// Exact E[max] of the family at finite eps and value_step.
double family_expected_max(const instances::FamilyParams& params, double value_step = -1.0);

// dp_value / family_expected_max at the same finite parameters.
double dp_family_ratio(const instances::FamilyParams& params, double value_step = -1.0);

// Exact expected payoff of the rising-bar threshold strategy, evaluated
// analytically in the limit of vanishing eps and value_step (middle accepts
// count 1, the tail contributes c2 in expectation).  threshold_choice j:
// 0 activates at the sure first value, j in [1, n] activates at middle j,
// n+1 activates only at the tail.
double single_threshold_value_exact(const instances::FamilyParams& params, int threshold_choice);

struct BestThreshold {
  int threshold_choice = 0;
  double value = 0.0;
  double ratio = 0.0;  // value / family_expected_max
};

// Maximizes single_threshold_value_exact over all n+2 threshold choices
// (first index wins ties).
BestThreshold best_single_threshold(const instances::FamilyParams& params);

struct GridSpec {
  double c1_lo = 0.5, c1_hi = 8.0;
  int c1_steps = 76;
  double c2_lo = 0.4, c2_hi = 1.0;
  int c2_steps = 61;
  bool refine = true;    // one local pass at 10x resolution around the argmin
  int refine_steps = 21;
};

struct GridResult {
  double c1 = 0.0;
  double c2 = 0.0;
  double ratio = 0.0;  // minimal optimal-algorithm ratio over the grid
};

// Scans the (c1, c2) grid for the family parameters where the optimal
// algorithm's ratio is worst.  Scan order is c1 outer, c2 inner, ascending;
// ties keep the first point; workers parallelize evaluation only.
GridResult grid_search_worst(int m, int n, double eps, const GridSpec& spec = {},
                             int workers = 1, double value_step = -1.0);

struct DiscrepancyRow {
  int m = 0;
  double c1 = 0.0, c2 = 0.0;  // adversarial parameters found by the grid
  double opt_ratio = 0.0;     // optimal-algorithm ratio at (c1, c2)
  double target = 0.0;        // best single-threshold ratio bound 1 - exp(-xi_m)
  double difference = 0.0;    // opt_ratio - target (signed)
};

std::vector<DiscrepancyRow> discrepancy(int m_max, int n, double eps,
                                        const GridSpec& spec = {}, int workers = 1);

}  // namespace prophet::dpopt
