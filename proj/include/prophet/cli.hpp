#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "prophet/dpopt.hpp"
#include "prophet/engine.hpp"

// Shared backend for the command-line tool: each subcommand maps to one
// plain function returning a plain struct, plus CSV/JSON serializers, so the
// same entry points drive the binary, the tests and the acceptance run.
namespace prophet::cli {

// One row of the exponent table.
struct XiRow {
  int m = 0;
  double xi = 0.0;
  double target = 0.0;
  double bracket_low = 0.0;
  double bracket_high = 0.0;
  double psi = 0.0;
};

std::vector<XiRow> xi_rows(int m_max);

// Monte Carlo estimate of the probability that the rising-bar rule with m
// queries and threshold quantile q/n picks the maximum of n iid uniforms,
// next to the closed-form lower bound (which covers m = 1).
struct PbmResult {
  int n = 0;
  double q = 0.0;
  int m = 1;
  long long trials = 0;
  std::uint64_t seed = 0;
  double estimate = 0.0;
  double stderr_pbm = 0.0;
  double formula = 0.0;
};

PbmResult pbm_run(int n, double q, int m, long long trials, std::uint64_t seed,
                  int workers);

// One evaluation of the parametric family at (c1, c2): the optimal-policy
// ratio, the best single fixed threshold for comparison, and the distance to
// the guarantee 1 - exp(-xi_m).  Pass c1 <= 0 or c2 <= 0 to use the
// canonical pair (xi_m, m!/xi_m^m).
struct DpRow {
  int m = 0;
  int n = 0;
  double eps = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double opt_ratio = 0.0;
  double best_single_ratio = 0.0;
  int best_threshold = 0;
  double target = 0.0;
  double difference = 0.0;  // opt_ratio - target
};

DpRow dp_row(int m, int n, double eps, double c1, double c2,
             double value_step = -1.0);

// Exact analysis of the separation instance: the best m-query strategy, the
// best (m+1)-selection strategy, and the simple reference strategy that
// queries the first m values and otherwise takes the final value if positive.
struct GapReport {
  int m = 0;
  double eps = 0.0;
  double expected_max = 0.0;
  double oracle_opt_value = 0.0;
  double oracle_opt_ratio = 0.0;
  double top1_opt_value = 0.0;
  double top1_opt_ratio = 0.0;
  double quotient = 0.0;  // oracle_opt_ratio / top1_opt_ratio
  double reference_value = 0.0;
  double reference_ratio = 0.0;
};

GapReport gap_report(int m, double eps);

// Worst-case grid search rows for m = 1..m_max (see dpopt::discrepancy).
std::vector<dpopt::DiscrepancyRow> discrepancy_table(int m_max, int n,
                                                     double eps, int workers,
                                                     const dpopt::GridSpec& spec = {});

// ---- serialization ----
// CSV: header row, one record per line, '.' decimal separator, full
// round-trip precision.  JSON: array of objects (single object for scalars).

std::string to_csv(const std::vector<XiRow>& rows);
std::string to_json(const std::vector<XiRow>& rows);

std::string to_csv(const PbmResult& r);
std::string to_json(const PbmResult& r);

std::string to_csv(const DpRow& r);
std::string to_json(const DpRow& r);

std::string to_csv(const GapReport& r);
std::string to_json(const GapReport& r);

std::string to_csv(const std::vector<dpopt::DiscrepancyRow>& rows);
std::string to_json(const std::vector<dpopt::DiscrepancyRow>& rows);

std::string to_csv(const engine::SimReport& r);
std::string to_json(const engine::SimReport& r);

// Shortest decimal string that round-trips the double (snprintf %.17g with
// trailing-zero trimming); integers print without an exponent.
std::string format_double(double v);

// Writes text to the given path, or to stdout when path is empty or "-".
void write_output(const std::string& text, const std::string& path);

}  // namespace prophet::cli
