#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <vector>

#include "prophet/instances.hpp"

namespace prophet::engine {

// Answer convention for a query at position i: YES means the current value
// beats the maximum of everything still to come (strictly, or at least ties
// under Weak).  YES is the stopping signal.
enum class OracleSemantics { Strict, Weak };

enum class Action { Skip, Query, Accept };

enum class Objective { RoeNumerator, Pbm };

struct EpisodeResult {
  double payoff = 0.0;
  std::vector<int> selected_positions;  // 1-based presentation positions
  bool is_max = false;                  // something was selected and it equals the realized max
  int queries_used = 0;
  int count_above_threshold = 0;  // values above the strategy's initial threshold
  int running_max_changes = 0;    // prefix-max changes within that subsequence
};

struct SimReport {
  long long trials = 0;
  double mean_payoff = 0.0;
  double pbm_estimate = 0.0;
  double stderr_payoff = 0.0;
  double stderr_pbm = 0.0;
  std::uint64_t seed = 0;
  double expected_max = 0.0;
  double roe_estimate = 0.0;
};

struct Ordering {
  enum class Kind { Natural, StackNonzeros, Explicit };
  Kind kind = Kind::Natural;
  std::vector<int> permutation;  // Explicit only: presented j shows original permutation[j]

  static Ordering natural() { return {}; }
  static Ordering stack_nonzeros() { return {Kind::StackNonzeros, {}}; }
  static Ordering explicit_order(std::vector<int> perm) {
    return {Kind::Explicit, std::move(perm)};
  }
};

// Prophetic one-bit answer about the realized suffix after position i (0-based).
// An empty suffix answers YES under both semantics.
bool answer_oracle(std::span<const double> values, int i, OracleSemantics sem);

// Presentation order as a permutation of original indices (0-based).
// StackNonzeros requires at least 3 values and presents: first value, then
// nonzero middles in index order, then zero middles, then the last value.
std::vector<int> apply_ordering(std::span<const double> realization, const Ordering& ordering);

// A strategy instance carries per-episode mutable state: clone a fresh copy
// (or call reset) before each episode.  reset receives the sequence length.
class OracleStrategy {
 public:
  virtual ~OracleStrategy() = default;
  virtual std::unique_ptr<OracleStrategy> clone() const = 0;
  virtual void reset(int sequence_length) = 0;
  // Called once per presented value; returning Query hands the answer to
  // on_answer, whose return decides acceptance.
  virtual Action on_value(int position, double value, int queries_left) = 0;
  virtual bool on_answer(int position, double value, bool yes) = 0;
  virtual std::optional<double> initial_threshold() const { return std::nullopt; }
};

class SelectionStrategy {
 public:
  virtual ~SelectionStrategy() = default;
  virtual std::unique_ptr<SelectionStrategy> clone() const = 0;
  virtual void reset(int sequence_length) = 0;
  virtual bool on_value(int position, double value, int capacity_left) = 0;
};

// Threshold rule: query the first value above the bar while budget remains,
// stop on YES, raise the bar to the value on NO; once out of queries, accept
// the first value above the current bar.
std::unique_ptr<OracleStrategy> single_threshold_strategy(double tau);

// Bar placed at the exp(-xi_m) quantile of the maximum, nudged to the middle
// of the gap below the selected support value so ties cannot trigger it.
double quantile_threshold(const instances::Instance& inst, int m);

// Queries exactly at the given 1-based presented positions when the value
// there is nonzero; accepts on YES; otherwise accepts the final value if it
// is nonzero.
std::unique_ptr<OracleStrategy> query_set_strategy(const std::set<int>& positions);

// Threshold 1 - q/n for n iid uniforms, same rising-bar rule as above.
// Requires q/n < 1.  The budget m is supplied at play time.
std::unique_ptr<OracleStrategy> iid_pbm_strategy(double q, int n, int m);

std::unique_ptr<SelectionStrategy> select_all();
std::unique_ptr<SelectionStrategy> select_none();
// Selects at fixed 1-based positions; optionally also the final position
// when its value is nonzero.
std::unique_ptr<SelectionStrategy> select_positions(const std::set<int>& positions,
                                                    bool final_if_nonzero);
// Selects every strict running maximum while capacity remains.
std::unique_ptr<SelectionStrategy> running_max_selector();

// Multi-select simulation of an oracle strategy with budget m: selects every
// value the inner strategy queries or accepts, feeding the inner strategy
// the continue answer so it keeps exploring.  Use capacity m+1.  The result
// pathwise dominates the inner strategy's payoff.
std::unique_ptr<SelectionStrategy> wrap_oracle_as_top1(const OracleStrategy& inner, int m);

// Oracle strategy with budget k-1 simulating a capacity-k selector: queries
// whenever the inner strategy selects, accepts on YES, and accepts outright
// once the budget is gone.
std::unique_ptr<OracleStrategy> wrap_top1_as_oracle(const SelectionStrategy& inner, int k);

// Deterministic cores on an already-presented value sequence.
EpisodeResult play_oracle(std::span<const double> presented, const OracleStrategy& strategy,
                          int m, OracleSemantics sem);
EpisodeResult top1_engine(std::span<const double> presented, const SelectionStrategy& strategy,
                          int k);

// Samples one realization with the given rng, applies the ordering, plays.
EpisodeResult run_episode(const instances::Instance& inst, const Ordering& ordering,
                          const OracleStrategy& strategy, int m, OracleSemantics sem,
                          std::mt19937_64& rng);
EpisodeResult run_top1_episode(const instances::Instance& inst, const Ordering& ordering,
                               const SelectionStrategy& strategy, int k,
                               std::mt19937_64& rng);

// Fresh engine for trial t of a run seeded with seed; trials are 1-based.
std::mt19937_64 trial_rng(std::uint64_t seed, long long trial);

// Mean payoff, success frequency and their standard errors over independent
// trials.  Trial t draws from trial_rng(seed, t), so reports are bit-identical
// for any worker count.
SimReport monte_carlo(const instances::Instance& inst, const Ordering& ordering,
                      const OracleStrategy& strategy, int m, OracleSemantics sem,
                      long long trials, std::uint64_t seed, int workers);
SimReport monte_carlo_top1(const instances::Instance& inst, const Ordering& ordering,
                           const SelectionStrategy& strategy, int k, long long trials,
                           std::uint64_t seed, int workers);

// Exact expectation of a fixed strategy by enumerating the product space
// (at most 1e6 joint outcomes).
double exact_strategy_value(const instances::Instance& inst, const Ordering& ordering,
                            const OracleStrategy& strategy, int m, OracleSemantics sem,
                            Objective objective);
double exact_strategy_value_top1(const instances::Instance& inst, const Ordering& ordering,
                                 const SelectionStrategy& strategy, int k,
                                 Objective objective);

struct ModelSpec {
  enum class Kind { Oracle, Top1 };
  Kind kind = Kind::Oracle;
  int budget = 1;  // query budget m, or selection capacity k

  static ModelSpec oracle(int m) { return {Kind::Oracle, m}; }
  static ModelSpec top1(int k) { return {Kind::Top1, k}; }
};

// Value of the best deterministic adaptive strategy, by expectimax over
// belief states (query answers partition the consistent futures).  Caps:
// at most 6 variables, 3 atoms each, budget <= 3 (capacity <= 4).
double exact_optimal(const instances::Instance& inst, const Ordering& ordering,
                     ModelSpec model, Objective objective, OracleSemantics sem);

// Lower bound on the probability that the rising-bar rule with one query and
// threshold quantile q/n picks the maximum of n iid uniforms.
double iid_pbm_formula(double q, int n);

}  // namespace prophet::engine
