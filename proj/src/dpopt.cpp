#include "prophet/dpopt.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "prophet/mathkit.hpp"

namespace prophet::dpopt {

namespace {

void validate_inputs(const DpInputs& in) {
  const std::size_t n = in.b.size();
  if (n == 0 || in.p.size() != n)
    throw std::invalid_argument("dp inputs: b and p must be nonempty and equal length");
  if (in.m < 0) throw std::domain_error("dp inputs: m must be >= 0");
  double last_nonzero = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(in.b[i]) || in.b[i] < 0.0)
      throw std::domain_error("dp inputs: values must be finite and nonnegative");
    if (in.b[i] > 0.0) {
      if (last_nonzero > 0.0 && !(in.b[i] > last_nonzero))
        throw std::domain_error("dp inputs: nonzero values must be strictly increasing");
      last_nonzero = in.b[i];
    }
    if (!(in.p[i] > 0.0) || in.p[i] > 1.0)
      throw std::domain_error("dp inputs: probabilities must be in (0, 1]");
  }
}

// Backward induction over k = N..1.  With t queries left and a nonzero
// X_k = b_k on hand, querying answers YES exactly when the whole suffix is
// zero (later nonzero values are strictly larger), so the take branch is
//   q0[k+1] * b_k + (1 - q0[k+1]) * E_up[t-1][k+1].
// Conditioning in E_up: given Z_k > 0, X_k is nonzero with probability
// alpha_k; when it is, the conditioning event is absorbed and the skip
// branch continues with the unconditioned E; when it is not, the suffix
// keeps the condition.
double dp_run(const DpInputs& in, DpTables* tables) {
  validate_inputs(in);
  const int N = in.size();
  const int m = in.m;

  std::vector<double> q0(N + 2);
  q0[N + 1] = 1.0;
  for (int k = N; k >= 1; --k) {
    const double pk = in.b[k - 1] > 0.0 ? in.p[k - 1] : 0.0;
    q0[k] = q0[k + 1] * (1.0 - pk);
  }

  if (tables) {
    tables->N = N;
    tables->m = m;
    tables->E.assign(m + 1, std::vector<double>(N + 2, 0.0));
    tables->E_up.assign(m + 1, std::vector<double>(N + 2, 0.0));
    tables->q0 = q0;
    tables->alpha.assign(N + 2, 0.0);
    tables->beta.assign(N + 2, 0.0);
  }

  std::vector<double> e_next(m + 1, 0.0), eup_next(m + 1, 0.0);
  std::vector<double> e_cur(m + 1), eup_cur(m + 1);
  for (int k = N; k >= 1; --k) {
    const double bk = in.b[k - 1];
    const double pk = bk > 0.0 ? in.p[k - 1] : 0.0;
    const double beta_k = 1.0 - q0[k];
    const double alpha_k = beta_k > 0.0 ? pk / beta_k : 0.0;
    const double beta_next = 1.0 - q0[k + 1];
    for (int t = 0; t <= m; ++t) {
      const double take = t > 0 ? q0[k + 1] * bk + beta_next * eup_next[t - 1] : bk;
      const double best = std::max(e_next[t], take);
      e_cur[t] = (1.0 - pk) * e_next[t] + pk * best;
      eup_cur[t] = (1.0 - alpha_k) * eup_next[t] + alpha_k * best;
    }
    if (tables) {
      tables->alpha[k] = alpha_k;
      tables->beta[k] = beta_k;
      for (int t = 0; t <= m; ++t) {
        tables->E[t][k] = e_cur[t];
        tables->E_up[t][k] = eup_cur[t];
      }
    }
    std::swap(e_cur, e_next);
    std::swap(eup_cur, eup_next);
  }
  return e_next[m];
}

void validate_family(const instances::FamilyParams& params, double step) {
  const auto& [m, n, eps, c1, c2] = params;
  if (m < 1 || n < 1) throw std::domain_error("family params: m, n must be >= 1");
  if (!(eps > 0.0 && eps < 1.0)) throw std::domain_error("family params: eps must be in (0,1)");
  if (!(c1 > 0.0) || !(c1 / n < 1.0))
    throw std::domain_error("family params: c1/n must be in (0,1)");
  if (!(c2 / eps > 1.0 + n * step))
    throw std::domain_error("family params: tail value must exceed middle values");
}

double resolve_step(const instances::FamilyParams& params, double value_step) {
  return value_step > 0.0 ? value_step : instances::default_value_step(params.n);
}

double binom_cdf(int trials, double q, int k) {
  if (k < 0) return 0.0;
  if (k >= trials) return 1.0;
  double pmf = std::exp(trials * std::log1p(-q));
  double cdf = pmf;
  const double odds = q / (1.0 - q);
  for (int i = 0; i < k; ++i) {
    pmf *= odds * (trials - i) / (i + 1);
    cdf += pmf;
  }
  return std::min(cdf, 1.0);
}

}  // namespace

DpInputs family_dp_inputs(const instances::FamilyParams& params, double value_step) {
  const double step = resolve_step(params, value_step);
  validate_family(params, step);
  const auto& [m, n, eps, c1, c2] = params;
  DpInputs in;
  in.m = m;
  in.b.reserve(n + 2);
  in.p.reserve(n + 2);
  in.b.push_back(1.0);
  in.p.push_back(1.0);
  for (int i = 1; i <= n; ++i) {
    in.b.push_back(1.0 + i * step);
    in.p.push_back(c1 / n);
  }
  in.b.push_back(c2 / eps);
  in.p.push_back(eps);
  return in;
}

DpSolution dp_optimal(const DpInputs& inputs) {
  DpSolution out;
  out.value = dp_run(inputs, &out.tables);
  return out;
}

double dp_value(const DpInputs& inputs) { return dp_run(inputs, nullptr); }

double family_expected_max(const instances::FamilyParams& params, double value_step) {
  const double step = resolve_step(params, value_step);
  validate_family(params, step);
  const auto& [m, n, eps, c1, c2] = params;
  const double q = c1 / n;
  // E[index of the largest nonzero middle], 0 when all middles are zero.
  double mean_top_index = 0.0;
  double pow_acc = 1.0;  // (1-q)^(n-i), walking i = n..1
  for (int i = n; i >= 1; --i) {
    mean_top_index += i * q * pow_acc;
    pow_acc *= 1.0 - q;
  }
  return c2 + (1.0 - eps) * (1.0 + step * mean_top_index);
}

double dp_family_ratio(const instances::FamilyParams& params, double value_step) {
  return dp_value(family_dp_inputs(params, value_step)) /
         family_expected_max(params, value_step);
}

double single_threshold_value_exact(const instances::FamilyParams& params,
                                    int threshold_choice) {
  validate_family(params, resolve_step(params, -1.0));
  const auto& [m, n, eps, c1, c2] = params;
  if (threshold_choice < 0 || threshold_choice > n + 1)
    throw std::domain_error("single_threshold_value_exact: threshold_choice out of range");
  const double q = c1 / n;
  if (threshold_choice == 0) {
    // Activates at the sure first value: one query spent there; a NO means
    // some middle is nonzero, after which the walk over the K nonzero
    // middles reaches the tail exactly when K <= m-1 fails... K <= m-1
    // leaves a query (or a raised bar) for the tail, K >= m exhausts the
    // budget on middles and ends at value 1.
    return 1.0 + c2 * binom_cdf(n, q, m - 1);
  }
  // Activates at middle `threshold_choice`: K counts the nonzero middles
  // from there on (n - j + 1 candidates).  Any nonzero middle is eventually
  // accepted (worth 1) unless every query returned NO with budget to spare,
  // in which case the tail pays c2 in expectation; K <= m reaches the tail.
  const int candidates = n - threshold_choice + 1;
  return 1.0 - std::exp(candidates * std::log1p(-q)) + c2 * binom_cdf(candidates, q, m);
}

BestThreshold best_single_threshold(const instances::FamilyParams& params) {
  const double denom = family_expected_max(params);
  BestThreshold best;
  best.value = -std::numeric_limits<double>::infinity();
  for (int j = 0; j <= params.n + 1; ++j) {
    const double v = single_threshold_value_exact(params, j);
    if (v > best.value) {
      best.threshold_choice = j;
      best.value = v;
    }
  }
  best.ratio = best.value / denom;
  return best;
}

namespace {

std::vector<double> axis(double lo, double hi, int steps) {
  std::vector<double> v(steps);
  if (steps == 1) {
    v[0] = lo;
    return v;
  }
  for (int i = 0; i < steps; ++i) v[i] = lo + (hi - lo) * i / (steps - 1);
  return v;
}

GridResult eval_grid(int m, int n, double eps, double value_step,
                     const std::vector<double>& c1s, const std::vector<double>& c2s,
                     int workers) {
  const std::size_t total = c1s.size() * c2s.size();
  std::vector<double> ratios(total);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto run = [&]() {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= total || failed.load()) break;
      try {
        const instances::FamilyParams params{m, n, eps, c1s[idx / c2s.size()],
                                             c2s[idx % c2s.size()]};
        ratios[idx] = dp_family_ratio(params, value_step);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
        break;
      }
    }
  };
  const int w = std::max(1, workers);
  std::vector<std::thread> pool;
  for (int i = 1; i < w; ++i) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);

  GridResult best;
  best.ratio = std::numeric_limits<double>::infinity();
  for (std::size_t idx = 0; idx < total; ++idx) {
    if (ratios[idx] < best.ratio) {
      best.c1 = c1s[idx / c2s.size()];
      best.c2 = c2s[idx % c2s.size()];
      best.ratio = ratios[idx];
    }
  }
  return best;
}

}  // namespace

GridResult grid_search_worst(int m, int n, double eps, const GridSpec& spec, int workers,
                             double value_step) {
  if (m < 1 || n < 1) throw std::domain_error("grid_search_worst: m, n must be >= 1");
  if (!(eps > 0.0 && eps < 1.0))
    throw std::domain_error("grid_search_worst: eps must be in (0,1)");
  if (spec.c1_steps < 1 || spec.c2_steps < 1 || spec.refine_steps < 2)
    throw std::domain_error("grid_search_worst: step counts out of range");
  if (!(spec.c1_lo > 0.0) || !(spec.c1_hi >= spec.c1_lo) || !(spec.c1_hi / n < 1.0))
    throw std::domain_error("grid_search_worst: c1 range invalid");
  if (!(spec.c2_lo > 0.0) || !(spec.c2_hi >= spec.c2_lo))
    throw std::domain_error("grid_search_worst: c2 range invalid");
  const double step = value_step > 0.0 ? value_step : instances::default_value_step(n);

  GridResult best = eval_grid(m, n, eps, step, axis(spec.c1_lo, spec.c1_hi, spec.c1_steps),
                              axis(spec.c2_lo, spec.c2_hi, spec.c2_steps), workers);

  if (spec.refine && spec.c1_steps > 1 && spec.c2_steps > 1) {
    const double s1 = (spec.c1_hi - spec.c1_lo) / (spec.c1_steps - 1);
    const double s2 = (spec.c2_hi - spec.c2_lo) / (spec.c2_steps - 1);
    const double lo1 = std::max(spec.c1_lo, best.c1 - s1);
    const double hi1 = std::min(spec.c1_hi, best.c1 + s1);
    const double lo2 = std::max(spec.c2_lo, best.c2 - s2);
    const double hi2 = std::min(spec.c2_hi, best.c2 + s2);
    const GridResult refined =
        eval_grid(m, n, eps, step, axis(lo1, hi1, spec.refine_steps),
                  axis(lo2, hi2, spec.refine_steps), workers);
    if (refined.ratio < best.ratio) best = refined;
  }
  return best;
}

std::vector<DiscrepancyRow> discrepancy(int m_max, int n, double eps, const GridSpec& spec,
                                        int workers) {
  if (m_max < 1) throw std::domain_error("discrepancy: m_max must be >= 1");
  std::vector<DiscrepancyRow> rows;
  rows.reserve(m_max);
  for (int m = 1; m <= m_max; ++m) {
    const GridResult g = grid_search_worst(m, n, eps, spec, workers);
    DiscrepancyRow row;
    row.m = m;
    row.c1 = g.c1;
    row.c2 = g.c2;
    row.opt_ratio = g.ratio;
    row.target = mathkit::solve_xi(m).target;
    row.difference = g.ratio - row.target;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace prophet::dpopt
