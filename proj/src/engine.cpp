#include "prophet/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "prophet/mathkit.hpp"

namespace prophet::engine {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double u53(std::mt19937_64& rng) { return (rng() >> 11) * 0x1.0p-53; }

std::uint64_t splitmix64_at(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t x = seed + index * 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

void sample_realization(const instances::Instance& inst, std::mt19937_64& rng,
                        std::vector<double>& out) {
  if (inst.is_iid_uniform()) {
    out.resize(inst.iid_uniform_n);
    for (double& v : out) v = u53(rng);
    return;
  }
  out.resize(inst.variables.size());
  for (std::size_t i = 0; i < inst.variables.size(); ++i) {
    const auto& atoms = inst.variables[i].atoms;
    const double u = u53(rng);
    double cum = 0.0;
    out[i] = atoms.back().first;
    for (const auto& [value, prob] : atoms) {
      cum += prob;
      if (u < cum) {
        out[i] = value;
        break;
      }
    }
  }
}

void fill_ordering(std::span<const double> realization, const Ordering& ordering,
                   std::vector<int>& sigma) {
  const int n = static_cast<int>(realization.size());
  sigma.clear();
  switch (ordering.kind) {
    case Ordering::Kind::Natural:
      for (int i = 0; i < n; ++i) sigma.push_back(i);
      return;
    case Ordering::Kind::StackNonzeros: {
      if (n < 3)
        throw std::invalid_argument(
            "apply_ordering: stack_nonzeros needs a first value, a middle block and a last value");
      sigma.push_back(0);
      for (int i = 1; i + 1 < n; ++i)
        if (realization[i] > 0.0) sigma.push_back(i);
      for (int i = 1; i + 1 < n; ++i)
        if (!(realization[i] > 0.0)) sigma.push_back(i);
      sigma.push_back(n - 1);
      return;
    }
    case Ordering::Kind::Explicit: {
      if (static_cast<int>(ordering.permutation.size()) != n)
        throw std::invalid_argument("apply_ordering: permutation length mismatch");
      std::vector<char> seen(n, 0);
      for (int idx : ordering.permutation) {
        if (idx < 0 || idx >= n || seen[idx])
          throw std::invalid_argument("apply_ordering: not a permutation");
        seen[idx] = 1;
      }
      sigma = ordering.permutation;
      return;
    }
  }
  throw std::invalid_argument("apply_ordering: unknown ordering");
}

EpisodeResult play_oracle_inplace(std::span<const double> presented, OracleStrategy& strategy,
                                  int m, OracleSemantics sem) {
  if (m < 0) throw std::domain_error("play_oracle: m must be >= 0");
  EpisodeResult r;
  int budget = m;
  const int n = static_cast<int>(presented.size());
  for (int i = 0; i < n; ++i) {
    const double v = presented[i];
    const Action a = strategy.on_value(i + 1, v, budget);
    if (a == Action::Skip) continue;
    if (a == Action::Query) {
      if (budget <= 0) throw std::logic_error("play_oracle: query with no budget left");
      --budget;
      ++r.queries_used;
      const bool yes = answer_oracle(presented, i, sem);
      if (strategy.on_answer(i + 1, v, yes)) {
        r.payoff = v;
        r.selected_positions.push_back(i + 1);
        break;
      }
      continue;
    }
    r.payoff = v;
    r.selected_positions.push_back(i + 1);
    break;
  }
  if (auto tau = strategy.initial_threshold()) {
    double bar = kNegInf;
    for (double v : presented) {
      if (v > *tau) {
        ++r.count_above_threshold;
        if (v > bar) {
          bar = v;
          ++r.running_max_changes;
        }
      }
    }
  }
  const double z = presented.empty() ? 0.0 : *std::max_element(presented.begin(), presented.end());
  r.is_max = !r.selected_positions.empty() && r.payoff == z;
  return r;
}

EpisodeResult top1_inplace(std::span<const double> presented, SelectionStrategy& strategy,
                           int k) {
  if (k < 0) throw std::domain_error("top1_engine: k must be >= 0");
  EpisodeResult r;
  int capacity = k;
  double best = 0.0;
  const int n = static_cast<int>(presented.size());
  for (int i = 0; i < n; ++i) {
    if (capacity == 0) break;
    if (strategy.on_value(i + 1, presented[i], capacity)) {
      --capacity;
      r.selected_positions.push_back(i + 1);
      best = std::max(best, presented[i]);
    }
  }
  r.payoff = r.selected_positions.empty() ? 0.0 : best;
  const double z = presented.empty() ? 0.0 : *std::max_element(presented.begin(), presented.end());
  r.is_max = !r.selected_positions.empty() && r.payoff == z;
  return r;
}

// ---- concrete strategies ----

class SingleThreshold final : public OracleStrategy {
 public:
  explicit SingleThreshold(double tau) : tau0_(tau), bar_(tau) {}
  std::unique_ptr<OracleStrategy> clone() const override {
    return std::make_unique<SingleThreshold>(*this);
  }
  void reset(int) override { bar_ = tau0_; }
  Action on_value(int, double v, int queries_left) override {
    if (!(v > bar_)) return Action::Skip;
    return queries_left > 0 ? Action::Query : Action::Accept;
  }
  bool on_answer(int, double v, bool yes) override {
    if (yes) return true;
    bar_ = v;  // something larger is still coming
    return false;
  }
  std::optional<double> initial_threshold() const override { return tau0_; }

 private:
  double tau0_, bar_;
};

class QuerySet final : public OracleStrategy {
 public:
  explicit QuerySet(std::set<int> positions) : positions_(std::move(positions)) {}
  std::unique_ptr<OracleStrategy> clone() const override {
    return std::make_unique<QuerySet>(*this);
  }
  void reset(int sequence_length) override { last_ = sequence_length; }
  Action on_value(int position, double v, int queries_left) override {
    if (v > 0.0 && queries_left > 0 && positions_.count(position)) return Action::Query;
    if (position == last_ && v > 0.0) return Action::Accept;
    return Action::Skip;
  }
  bool on_answer(int, double, bool yes) override { return yes; }

 private:
  std::set<int> positions_;
  int last_ = 0;
};

class SelectAll final : public SelectionStrategy {
 public:
  std::unique_ptr<SelectionStrategy> clone() const override {
    return std::make_unique<SelectAll>(*this);
  }
  void reset(int) override {}
  bool on_value(int, double, int capacity_left) override { return capacity_left > 0; }
};

class SelectNone final : public SelectionStrategy {
 public:
  std::unique_ptr<SelectionStrategy> clone() const override {
    return std::make_unique<SelectNone>(*this);
  }
  void reset(int) override {}
  bool on_value(int, double, int) override { return false; }
};

class SelectPositions final : public SelectionStrategy {
 public:
  SelectPositions(std::set<int> positions, bool final_if_nonzero)
      : positions_(std::move(positions)), final_if_nonzero_(final_if_nonzero) {}
  std::unique_ptr<SelectionStrategy> clone() const override {
    return std::make_unique<SelectPositions>(*this);
  }
  void reset(int sequence_length) override { last_ = sequence_length; }
  bool on_value(int position, double v, int capacity_left) override {
    if (capacity_left <= 0) return false;
    if (positions_.count(position)) return true;
    return final_if_nonzero_ && position == last_ && v > 0.0;
  }

 private:
  std::set<int> positions_;
  bool final_if_nonzero_;
  int last_ = 0;
};

class RunningMaxSelector final : public SelectionStrategy {
 public:
  std::unique_ptr<SelectionStrategy> clone() const override {
    return std::make_unique<RunningMaxSelector>(*this);
  }
  void reset(int) override { best_ = kNegInf; }
  bool on_value(int, double v, int capacity_left) override {
    const bool take = capacity_left > 0 && v > best_;
    best_ = std::max(best_, v);
    return take;
  }

 private:
  double best_ = kNegInf;
};

class OracleAsTop1 final : public SelectionStrategy {
 public:
  OracleAsTop1(const OracleStrategy& inner, int m) : proto_(inner.clone()), m_(m) {}
  OracleAsTop1(const OracleAsTop1& other) : proto_(other.proto_->clone()), m_(other.m_) {}
  std::unique_ptr<SelectionStrategy> clone() const override {
    return std::make_unique<OracleAsTop1>(*this);
  }
  void reset(int sequence_length) override {
    inner_ = proto_->clone();
    inner_->reset(sequence_length);
    budget_ = m_;
    done_ = false;
  }
  bool on_value(int position, double v, int capacity_left) override {
    if (done_ || capacity_left <= 0) return false;
    const Action a = inner_->on_value(position, v, budget_);
    if (a == Action::Skip) return false;
    if (a == Action::Accept) {
      done_ = true;
      return true;
    }
    if (budget_ <= 0) throw std::logic_error("wrap_oracle_as_top1: inner queried with no budget");
    --budget_;
    // Feed the continue answer so the inner strategy keeps exploring; every
    // value it would have queried is banked instead.
    if (inner_->on_answer(position, v, false)) done_ = true;
    return true;
  }

 private:
  std::unique_ptr<OracleStrategy> proto_, inner_;
  int m_;
  int budget_ = 0;
  bool done_ = false;
};

class Top1AsOracle final : public OracleStrategy {
 public:
  Top1AsOracle(const SelectionStrategy& inner, int k) : proto_(inner.clone()), k_(k) {}
  Top1AsOracle(const Top1AsOracle& other) : proto_(other.proto_->clone()), k_(other.k_) {}
  std::unique_ptr<OracleStrategy> clone() const override {
    return std::make_unique<Top1AsOracle>(*this);
  }
  void reset(int sequence_length) override {
    inner_ = proto_->clone();
    inner_->reset(sequence_length);
    capacity_ = k_;
  }
  Action on_value(int position, double v, int queries_left) override {
    if (capacity_ <= 0) return Action::Skip;
    if (!inner_->on_value(position, v, capacity_)) return Action::Skip;
    --capacity_;
    return queries_left > 0 ? Action::Query : Action::Accept;
  }
  bool on_answer(int, double, bool yes) override { return yes; }

 private:
  std::unique_ptr<SelectionStrategy> proto_, inner_;
  int k_;
  int capacity_ = 0;
};

}  // namespace

bool answer_oracle(std::span<const double> values, int i, OracleSemantics sem) {
  if (i < 0 || i >= static_cast<int>(values.size()))
    throw std::domain_error("answer_oracle: position out of range");
  double suffix_max = kNegInf;
  for (std::size_t j = i + 1; j < values.size(); ++j)
    suffix_max = std::max(suffix_max, values[j]);
  return sem == OracleSemantics::Strict ? values[i] > suffix_max : values[i] >= suffix_max;
}

std::vector<int> apply_ordering(std::span<const double> realization, const Ordering& ordering) {
  std::vector<int> sigma;
  fill_ordering(realization, ordering, sigma);
  return sigma;
}

std::unique_ptr<OracleStrategy> single_threshold_strategy(double tau) {
  if (!std::isfinite(tau)) throw std::domain_error("single_threshold_strategy: tau must be finite");
  return std::make_unique<SingleThreshold>(tau);
}

double quantile_threshold(const instances::Instance& inst, int m) {
  if (inst.is_iid_uniform())
    throw std::invalid_argument("quantile_threshold: discrete instance required");
  const double target = std::exp(-mathkit::solve_xi(m).xi);
  const auto dist = instances::max_distribution(inst);
  // Largest support value whose strictly-below mass still fits under the
  // quantile, then the midpoint of the gap down to the previous value.
  double chosen = dist.front().first, below = 0.0, cum = 0.0;
  for (std::size_t idx = 0; idx < dist.size(); ++idx) {
    if (cum <= target) {
      chosen = dist[idx].first;
      below = idx > 0 ? dist[idx - 1].first : 0.0;
    }
    cum += dist[idx].second;
  }
  if (!(chosen > 0.0)) return 0.0;
  return 0.5 * (chosen + below);
}

std::unique_ptr<OracleStrategy> query_set_strategy(const std::set<int>& positions) {
  for (int p : positions)
    if (p < 1) throw std::domain_error("query_set_strategy: positions are 1-based");
  return std::make_unique<QuerySet>(positions);
}

std::unique_ptr<OracleStrategy> iid_pbm_strategy(double q, int n, int m) {
  if (n < 1) throw std::domain_error("iid_pbm_strategy: n must be >= 1");
  if (m < 1) throw std::domain_error("iid_pbm_strategy: m must be >= 1");
  if (!(q > 0.0) || !(q / n < 1.0))
    throw std::domain_error("iid_pbm_strategy: need 0 < q/n < 1");
  return std::make_unique<SingleThreshold>(1.0 - q / n);
}

std::unique_ptr<SelectionStrategy> select_all() { return std::make_unique<SelectAll>(); }
std::unique_ptr<SelectionStrategy> select_none() { return std::make_unique<SelectNone>(); }
std::unique_ptr<SelectionStrategy> select_positions(const std::set<int>& positions,
                                                    bool final_if_nonzero) {
  return std::make_unique<SelectPositions>(positions, final_if_nonzero);
}
std::unique_ptr<SelectionStrategy> running_max_selector() {
  return std::make_unique<RunningMaxSelector>();
}

std::unique_ptr<SelectionStrategy> wrap_oracle_as_top1(const OracleStrategy& inner, int m) {
  if (m < 0) throw std::domain_error("wrap_oracle_as_top1: m must be >= 0");
  return std::make_unique<OracleAsTop1>(inner, m);
}

std::unique_ptr<OracleStrategy> wrap_top1_as_oracle(const SelectionStrategy& inner, int k) {
  if (k < 1) throw std::domain_error("wrap_top1_as_oracle: k must be >= 1");
  return std::make_unique<Top1AsOracle>(inner, k);
}

EpisodeResult play_oracle(std::span<const double> presented, const OracleStrategy& strategy,
                          int m, OracleSemantics sem) {
  auto s = strategy.clone();
  s->reset(static_cast<int>(presented.size()));
  return play_oracle_inplace(presented, *s, m, sem);
}

EpisodeResult top1_engine(std::span<const double> presented, const SelectionStrategy& strategy,
                          int k) {
  auto s = strategy.clone();
  s->reset(static_cast<int>(presented.size()));
  return top1_inplace(presented, *s, k);
}

namespace {

void present(const std::vector<double>& realization, const std::vector<int>& sigma,
             std::vector<double>& out) {
  out.resize(sigma.size());
  for (std::size_t j = 0; j < sigma.size(); ++j) out[j] = realization[sigma[j]];
}

void check_instance(const instances::Instance& inst, const char* who) {
  if (auto err = instances::validate(inst, 1e-9))
    throw std::invalid_argument(std::string(who) + ": " + *err);
}

}  // namespace

EpisodeResult run_episode(const instances::Instance& inst, const Ordering& ordering,
                          const OracleStrategy& strategy, int m, OracleSemantics sem,
                          std::mt19937_64& rng) {
  check_instance(inst, "run_episode");
  std::vector<double> realization, presented;
  std::vector<int> sigma;
  sample_realization(inst, rng, realization);
  fill_ordering(realization, ordering, sigma);
  present(realization, sigma, presented);
  auto s = strategy.clone();
  s->reset(static_cast<int>(presented.size()));
  return play_oracle_inplace(presented, *s, m, sem);
}

EpisodeResult run_top1_episode(const instances::Instance& inst, const Ordering& ordering,
                               const SelectionStrategy& strategy, int k,
                               std::mt19937_64& rng) {
  check_instance(inst, "run_top1_episode");
  std::vector<double> realization, presented;
  std::vector<int> sigma;
  sample_realization(inst, rng, realization);
  fill_ordering(realization, ordering, sigma);
  present(realization, sigma, presented);
  auto s = strategy.clone();
  s->reset(static_cast<int>(presented.size()));
  return top1_inplace(presented, *s, k);
}

std::mt19937_64 trial_rng(std::uint64_t seed, long long trial) {
  return std::mt19937_64(splitmix64_at(seed, static_cast<std::uint64_t>(trial)));
}

namespace {

// Per-trial work is chunked into fixed-size blocks claimed by workers; block
// sums are reduced in index order afterwards, so the result does not depend
// on the number of workers.
template <typename MakeWorker>
SimReport mc_blocks(const instances::Instance& inst, long long trials, std::uint64_t seed,
                    int workers, MakeWorker&& make_worker) {
  if (trials < 1) throw std::domain_error("monte_carlo: trials must be >= 1");
  constexpr long long kBlock = 8192;
  const long long nblocks = (trials + kBlock - 1) / kBlock;
  struct Sums {
    double pay = 0.0, pay2 = 0.0;
    long long succ = 0;
  };
  std::vector<Sums> blocks(nblocks);
  std::atomic<long long> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto run = [&]() {
    try {
      auto play = make_worker();  // (std::mt19937_64&) -> std::pair<double,bool>
      for (;;) {
        const long long b = next.fetch_add(1);
        if (b >= nblocks || failed.load()) break;
        Sums s;
        const long long lo = b * kBlock + 1;
        const long long hi = std::min(trials, (b + 1) * kBlock);
        for (long long t = lo; t <= hi; ++t) {
          auto rng = trial_rng(seed, t);
          const auto [pay, succ] = play(rng);
          s.pay += pay;
          s.pay2 += pay * pay;
          s.succ += succ ? 1 : 0;
        }
        blocks[b] = s;
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
      failed.store(true);
    }
  };
  const int w = std::max(1, workers);
  std::vector<std::thread> pool;
  for (int i = 1; i < w; ++i) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);

  double pay = 0.0, pay2 = 0.0;
  long long succ = 0;
  for (const auto& s : blocks) {
    pay += s.pay;
    pay2 += s.pay2;
    succ += s.succ;
  }
  SimReport rep;
  rep.trials = trials;
  rep.seed = seed;
  rep.mean_payoff = pay / trials;
  rep.pbm_estimate = static_cast<double>(succ) / trials;
  if (trials > 1) {
    const double var = std::max(0.0, (pay2 - trials * rep.mean_payoff * rep.mean_payoff) /
                                         (trials - 1));
    rep.stderr_payoff = std::sqrt(var / trials);
    rep.stderr_pbm =
        std::sqrt(rep.pbm_estimate * (1.0 - rep.pbm_estimate) / (trials - 1));
  }
  rep.expected_max = instances::expected_max(inst);
  rep.roe_estimate = rep.mean_payoff / rep.expected_max;
  return rep;
}

}  // namespace

SimReport monte_carlo(const instances::Instance& inst, const Ordering& ordering,
                      const OracleStrategy& strategy, int m, OracleSemantics sem,
                      long long trials, std::uint64_t seed, int workers) {
  check_instance(inst, "monte_carlo");
  if (m < 0) throw std::domain_error("monte_carlo: m must be >= 0");
  return mc_blocks(inst, trials, seed, workers, [&]() {
    return [&inst, &ordering, m, sem, s = strategy.clone(), realization = std::vector<double>(),
            sigma = std::vector<int>(), presented = std::vector<double>()](
               std::mt19937_64& rng) mutable {
      sample_realization(inst, rng, realization);
      fill_ordering(realization, ordering, sigma);
      present(realization, sigma, presented);
      s->reset(static_cast<int>(presented.size()));
      EpisodeResult r = play_oracle_inplace(presented, *s, m, sem);
      return std::pair<double, bool>(r.payoff, r.is_max);
    };
  });
}

SimReport monte_carlo_top1(const instances::Instance& inst, const Ordering& ordering,
                           const SelectionStrategy& strategy, int k, long long trials,
                           std::uint64_t seed, int workers) {
  check_instance(inst, "monte_carlo_top1");
  if (k < 0) throw std::domain_error("monte_carlo_top1: k must be >= 0");
  return mc_blocks(inst, trials, seed, workers, [&]() {
    return [&inst, &ordering, k, s = strategy.clone(), realization = std::vector<double>(),
            sigma = std::vector<int>(), presented = std::vector<double>()](
               std::mt19937_64& rng) mutable {
      sample_realization(inst, rng, realization);
      fill_ordering(realization, ordering, sigma);
      present(realization, sigma, presented);
      s->reset(static_cast<int>(presented.size()));
      EpisodeResult r = top1_inplace(presented, *s, k);
      return std::pair<double, bool>(r.payoff, r.is_max);
    };
  });
}

namespace {

// Walks the whole product space of a small discrete instance.
template <typename Visit>
void enumerate_outcomes(const instances::Instance& inst, Visit&& visit) {
  const std::size_t nvars = inst.variables.size();
  double outcomes = 1.0;
  for (const auto& var : inst.variables) outcomes *= static_cast<double>(var.atoms.size());
  if (outcomes > 1e6)
    throw std::invalid_argument("exact evaluation: size error, more than 1e6 joint outcomes");
  std::vector<std::size_t> idx(nvars, 0);
  std::vector<double> values(nvars);
  for (;;) {
    double prob = 1.0;
    for (std::size_t i = 0; i < nvars; ++i) {
      const auto& [value, p] = inst.variables[i].atoms[idx[i]];
      values[i] = value;
      prob *= p;
    }
    visit(values, prob);
    std::size_t i = 0;
    for (; i < nvars; ++i) {
      if (++idx[i] < inst.variables[i].atoms.size()) break;
      idx[i] = 0;
    }
    if (i == nvars) break;
  }
}

void require_discrete(const instances::Instance& inst, const char* who) {
  if (inst.is_iid_uniform())
    throw std::invalid_argument(std::string(who) + ": discrete instance required");
  check_instance(inst, who);
}

}  // namespace

double exact_strategy_value(const instances::Instance& inst, const Ordering& ordering,
                            const OracleStrategy& strategy, int m, OracleSemantics sem,
                            Objective objective) {
  require_discrete(inst, "exact_strategy_value");
  auto s = strategy.clone();
  std::vector<int> sigma;
  std::vector<double> presented;
  double total = 0.0;
  enumerate_outcomes(inst, [&](const std::vector<double>& values, double prob) {
    fill_ordering(values, ordering, sigma);
    present(values, sigma, presented);
    s->reset(static_cast<int>(presented.size()));
    EpisodeResult r = play_oracle_inplace(presented, *s, m, sem);
    total += prob * (objective == Objective::RoeNumerator ? r.payoff : (r.is_max ? 1.0 : 0.0));
  });
  return total;
}

double exact_strategy_value_top1(const instances::Instance& inst, const Ordering& ordering,
                                 const SelectionStrategy& strategy, int k,
                                 Objective objective) {
  require_discrete(inst, "exact_strategy_value_top1");
  auto s = strategy.clone();
  std::vector<int> sigma;
  std::vector<double> presented;
  double total = 0.0;
  enumerate_outcomes(inst, [&](const std::vector<double>& values, double prob) {
    fill_ordering(values, ordering, sigma);
    present(values, sigma, presented);
    s->reset(static_cast<int>(presented.size()));
    EpisodeResult r = top1_inplace(presented, *s, k);
    total += prob * (objective == Objective::RoeNumerator ? r.payoff : (r.is_max ? 1.0 : 0.0));
  });
  return total;
}

namespace {

// Expectimax for the query model.  A state is the set of joint outcomes
// consistent with what has been observed and answered so far; memoization
// keys on the weighted multiset of their suffixes, so symmetric supports
// collapse to one entry.
class OracleExpectimax {
 public:
  OracleExpectimax(std::vector<std::vector<double>> vals, std::vector<double> weights,
                   Objective obj, OracleSemantics sem)
      : vals_(std::move(vals)), w_(std::move(weights)), obj_(obj), sem_(sem) {
    n_ = vals_.empty() ? 0 : static_cast<int>(vals_[0].size());
    sufmax_.assign(vals_.size(), std::vector<double>(n_ + 1, kNegInf));
    for (std::size_t o = 0; o < vals_.size(); ++o)
      for (int i = n_ - 1; i >= 0; --i)
        sufmax_[o][i] = std::max(vals_[o][i], sufmax_[o][i + 1]);
  }

  double solve(int budget) {
    std::vector<int> all(vals_.size());
    for (std::size_t o = 0; o < all.size(); ++o) all[o] = static_cast<int>(o);
    return value(all, 0, budget, kNegInf);
  }

 private:
  // Probability (within ids) that accepting v at position i wins; all
  // outcomes in a consistent set share their prefix, so the realized max is
  // max(prefmax, suffix max) and the result depends only on the memo key.
  double accept_value(double v, const std::vector<int>& ids, double wt, double prefmax,
                      int i) const {
    if (obj_ == Objective::RoeNumerator) return v;
    double hit = 0.0;
    for (int o : ids) {
      const double z = std::max(prefmax, sufmax_[o][i]);
      if (v == z) hit += w_[o];
    }
    return hit / wt;
  }

  double value(std::vector<int>& ids, int i, int budget, double prefmax) {
    if (i == n_) return 0.0;

    std::vector<double> key;
    key.reserve(3 + ids.size() * (n_ - i + 1));
    key.push_back(budget);
    key.push_back(obj_ == Objective::Pbm ? prefmax : -1.0);
    {
      std::vector<int> sorted = ids;
      std::sort(sorted.begin(), sorted.end(), [&](int a, int b) {
        for (int j = i; j < n_; ++j)
          if (vals_[a][j] != vals_[b][j]) return vals_[a][j] < vals_[b][j];
        return w_[a] < w_[b];
      });
      for (int o : sorted) {
        for (int j = i; j < n_; ++j) key.push_back(vals_[o][j]);
        key.push_back(w_[o]);
      }
    }
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;

    double wtotal = 0.0;
    for (int o : ids) wtotal += w_[o];

    std::map<double, std::vector<int>> groups;
    for (int o : ids) groups[vals_[o][i]].push_back(o);

    double total = 0.0;
    for (auto& [v, group] : groups) {
      double wt = 0.0;
      for (int o : group) wt += w_[o];
      const double next_prefmax = std::max(prefmax, v);
      double best = value(group, i + 1, budget, next_prefmax);           // skip
      best = std::max(best, accept_value(v, group, wt, prefmax, i));     // accept
      if (budget > 0) {                                                  // query
        std::vector<int> yes, no;
        for (int o : group) {
          const bool y = sem_ == OracleSemantics::Strict ? v > sufmax_[o][i + 1]
                                                         : v >= sufmax_[o][i + 1];
          (y ? yes : no).push_back(o);
        }
        double qv = 0.0;
        for (std::vector<int>* part : {&yes, &no}) {
          if (part->empty()) continue;
          double wp = 0.0;
          for (int o : *part) wp += w_[o];
          const double g = std::max(accept_value(v, *part, wp, prefmax, i),
                                    value(*part, i + 1, budget - 1, next_prefmax));
          qv += (wp / wt) * g;
        }
        best = std::max(best, qv);
      }
      total += (wt / wtotal) * best;
    }
    memo_.emplace(std::move(key), total);
    return total;
  }

  std::vector<std::vector<double>> vals_;
  std::vector<double> w_;
  std::vector<std::vector<double>> sufmax_;
  Objective obj_;
  OracleSemantics sem_;
  int n_ = 0;
  std::map<std::vector<double>, double> memo_;
};

// The multi-select model carries no hidden information, so plain dynamic
// programming over (position, capacity, best selected, prefix max) is exact.
class Top1Optimal {
 public:
  Top1Optimal(std::vector<std::vector<std::pair<double, double>>> atoms, Objective obj)
      : atoms_(std::move(atoms)), obj_(obj), n_(static_cast<int>(atoms_.size())) {}

  double solve(int capacity) { return value(0, capacity, 0.0, kNegInf, false); }

 private:
  double value(int i, int capacity, double best_selected, double prefmax, bool any) {
    if (i == n_) {
      if (obj_ == Objective::RoeNumerator) return any ? best_selected : 0.0;
      return any && best_selected == prefmax ? 1.0 : 0.0;
    }
    const bool pbm = obj_ == Objective::Pbm;
    const auto key = std::make_tuple(i, capacity, best_selected, pbm ? prefmax : kNegInf,
                                     any);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    double total = 0.0;
    for (const auto& [v, prob] : atoms_[i]) {
      const double np = pbm ? std::max(prefmax, v) : kNegInf;
      double best = value(i + 1, capacity, best_selected, np, any);
      if (capacity > 0)
        best = std::max(best, value(i + 1, capacity - 1, std::max(best_selected, v), np, true));
      total += prob * best;
    }
    memo_.emplace(key, total);
    return total;
  }

  std::vector<std::vector<std::pair<double, double>>> atoms_;
  Objective obj_;
  int n_;
  std::map<std::tuple<int, int, double, double, bool>, double> memo_;
};

}  // namespace

double exact_optimal(const instances::Instance& inst, const Ordering& ordering,
                     ModelSpec model, Objective objective, OracleSemantics sem) {
  require_discrete(inst, "exact_optimal");
  if (ordering.kind == Ordering::Kind::StackNonzeros)
    throw std::invalid_argument("exact_optimal: needs a fixed presentation order");
  const int n = inst.size();
  if (n > 6) throw std::invalid_argument("exact_optimal: size error, at most 6 variables");
  for (const auto& var : inst.variables)
    if (var.atoms.size() > 3)
      throw std::invalid_argument("exact_optimal: size error, at most 3 atoms per variable");
  if (model.kind == ModelSpec::Kind::Oracle && (model.budget < 0 || model.budget > 3))
    throw std::invalid_argument("exact_optimal: size error, query budget at most 3");
  if (model.kind == ModelSpec::Kind::Top1 && (model.budget < 0 || model.budget > 4))
    throw std::invalid_argument("exact_optimal: size error, capacity at most 4");

  // Fixed presentation order: permute the variables once.
  std::vector<int> sigma(n);
  for (int i = 0; i < n; ++i) sigma[i] = i;
  if (ordering.kind == Ordering::Kind::Explicit) {
    std::vector<double> dummy(n, 0.0);
    sigma = apply_ordering(dummy, ordering);
  }
  std::vector<const instances::DiscreteVariable*> vars(n);
  for (int j = 0; j < n; ++j) vars[j] = &inst.variables[sigma[j]];

  if (model.kind == ModelSpec::Kind::Top1) {
    std::vector<std::vector<std::pair<double, double>>> atoms(n);
    for (int j = 0; j < n; ++j) atoms[j] = vars[j]->atoms;
    return Top1Optimal(std::move(atoms), objective).solve(model.budget);
  }

  std::vector<std::vector<double>> vals;
  std::vector<double> weights;
  std::vector<std::size_t> idx(n, 0);
  for (;;) {
    double prob = 1.0;
    std::vector<double> row(n);
    for (int j = 0; j < n; ++j) {
      const auto& [value, p] = vars[j]->atoms[idx[j]];
      row[j] = value;
      prob *= p;
    }
    vals.push_back(std::move(row));
    weights.push_back(prob);
    int j = 0;
    for (; j < n; ++j) {
      if (++idx[j] < vars[j]->atoms.size()) break;
      idx[j] = 0;
    }
    if (j == n) break;
  }
  return OracleExpectimax(std::move(vals), std::move(weights), objective, sem)
      .solve(model.budget);
}

double iid_pbm_formula(double q, int n) {
  if (n < 1) throw std::domain_error("iid_pbm_formula: n must be >= 1");
  if (!(q > 0.0) || !(q < n)) throw std::domain_error("iid_pbm_formula: need 0 < q < n");
  const double first = q * std::pow(1.0 - q / n, n - 1);
  const double lq = std::log(q);
  double harmonic = 1.0;  // H_{i-1} entering the loop at i = 2
  double sum = 0.0;
  for (int i = 2; i <= n; ++i) {
    const double term = std::exp(i * lq - std::lgamma(i + 1.0)) * (1.0 + harmonic) / i;
    sum += term;
    if (i > q && term < 1e-19 * sum) break;
    harmonic += 1.0 / i;
  }
  return first + std::exp(-q) * sum - 2.0 * q / n;
}

}  // namespace prophet::engine
