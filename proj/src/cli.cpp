#include "prophet/cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "prophet/instances.hpp"
#include "prophet/mathkit.hpp"

namespace prophet::cli {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string join_csv(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line += ',';
    line += fields[i];
  }
  line += '\n';
  return line;
}

std::string dump_json(const ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<XiRow> xi_rows(int m_max) {
  if (m_max < 1) throw std::invalid_argument("xi_rows: m_max must be >= 1");
  std::vector<XiRow> rows;
  rows.reserve(m_max);
  for (int m = 1; m <= m_max; ++m) {
    const auto e = mathkit::solve_xi(m);
    rows.push_back({e.m, e.xi, e.target, e.bracket_low, e.bracket_high, e.psi});
  }
  return rows;
}

PbmResult pbm_run(int n, double q, int m, long long trials, std::uint64_t seed,
                  int workers) {
  if (m < 1) throw std::invalid_argument("pbm_run: m must be >= 1");
  instances::Instance inst;
  inst.iid_uniform_n = n;
  const auto strategy = engine::iid_pbm_strategy(q, n, m);
  const auto report =
      engine::monte_carlo(inst, engine::Ordering::natural(), *strategy, m,
                          engine::OracleSemantics::Strict, trials, seed, workers);
  PbmResult r;
  r.n = n;
  r.q = q;
  r.m = m;
  r.trials = report.trials;
  r.seed = report.seed;
  r.estimate = report.pbm_estimate;
  r.stderr_pbm = report.stderr_pbm;
  r.formula = engine::iid_pbm_formula(q, n);
  return r;
}

DpRow dp_row(int m, int n, double eps, double c1, double c2, double value_step) {
  if (m < 1) throw std::invalid_argument("dp_row: m must be >= 1");
  const auto entry = mathkit::solve_xi(m);
  if (c1 <= 0.0) c1 = entry.xi;
  if (c2 <= 0.0) c2 = entry.psi;
  const instances::FamilyParams params{m, n, eps, c1, c2};
  DpRow r;
  r.m = m;
  r.n = n;
  r.eps = eps;
  r.c1 = c1;
  r.c2 = c2;
  r.opt_ratio = dpopt::dp_family_ratio(params, value_step);
  const auto best = dpopt::best_single_threshold(params);
  r.best_single_ratio = best.ratio;
  r.best_threshold = best.threshold_choice;
  r.target = entry.target;
  r.difference = r.opt_ratio - r.target;
  return r;
}

GapReport gap_report(int m, double eps) {
  if (m < 1) throw std::invalid_argument("gap_report: m must be >= 1");
  const auto inst = instances::build_gap_instance(m, eps);
  const auto ordering = engine::Ordering::natural();
  const auto objective = engine::Objective::RoeNumerator;
  const auto sem = engine::OracleSemantics::Strict;

  GapReport g;
  g.m = m;
  g.eps = eps;
  g.expected_max = instances::expected_max(inst);
  g.oracle_opt_value = engine::exact_optimal(inst, ordering, engine::ModelSpec::oracle(m),
                                             objective, sem);
  g.top1_opt_value = engine::exact_optimal(inst, ordering, engine::ModelSpec::top1(m + 1),
                                           objective, sem);
  std::set<int> first_m;
  for (int i = 1; i <= m; ++i) first_m.insert(i);
  const auto reference = engine::query_set_strategy(first_m);
  g.reference_value =
      engine::exact_strategy_value(inst, ordering, *reference, m, sem, objective);

  g.oracle_opt_ratio = g.oracle_opt_value / g.expected_max;
  g.top1_opt_ratio = g.top1_opt_value / g.expected_max;
  g.quotient = g.oracle_opt_ratio / g.top1_opt_ratio;
  g.reference_ratio = g.reference_value / g.expected_max;
  return g;
}

std::vector<dpopt::DiscrepancyRow> discrepancy_table(int m_max, int n, double eps,
                                                     int workers,
                                                     const dpopt::GridSpec& spec) {
  return dpopt::discrepancy(m_max, n, eps, spec, workers);
}

// ---- serialization ----

std::string to_csv(const std::vector<XiRow>& rows) {
  std::string out = join_csv({"m", "xi", "target", "bracket_low", "bracket_high", "psi"});
  for (const auto& r : rows)
    out += join_csv({std::to_string(r.m), format_double(r.xi), format_double(r.target),
                     format_double(r.bracket_low), format_double(r.bracket_high),
                     format_double(r.psi)});
  return out;
}

std::string to_json(const std::vector<XiRow>& rows) {
  ordered_json arr = ordered_json::array();
  for (const auto& r : rows)
    arr.push_back({{"m", r.m},
                   {"xi", r.xi},
                   {"target", r.target},
                   {"bracket_low", r.bracket_low},
                   {"bracket_high", r.bracket_high},
                   {"psi", r.psi}});
  return dump_json(arr);
}

std::string to_csv(const PbmResult& r) {
  std::string out =
      join_csv({"n", "q", "m", "trials", "seed", "estimate", "stderr_pbm", "formula"});
  out += join_csv({std::to_string(r.n), format_double(r.q), std::to_string(r.m),
                   std::to_string(r.trials), std::to_string(r.seed),
                   format_double(r.estimate), format_double(r.stderr_pbm),
                   format_double(r.formula)});
  return out;
}

std::string to_json(const PbmResult& r) {
  return dump_json({{"n", r.n},
                    {"q", r.q},
                    {"m", r.m},
                    {"trials", r.trials},
                    {"seed", r.seed},
                    {"estimate", r.estimate},
                    {"stderr_pbm", r.stderr_pbm},
                    {"formula", r.formula}});
}

std::string to_csv(const DpRow& r) {
  std::string out = join_csv({"m", "n", "eps", "c1", "c2", "opt_ratio",
                              "best_single_ratio", "best_threshold", "target",
                              "difference"});
  out += join_csv({std::to_string(r.m), std::to_string(r.n), format_double(r.eps),
                   format_double(r.c1), format_double(r.c2), format_double(r.opt_ratio),
                   format_double(r.best_single_ratio), std::to_string(r.best_threshold),
                   format_double(r.target), format_double(r.difference)});
  return out;
}

std::string to_json(const DpRow& r) {
  return dump_json({{"m", r.m},
                    {"n", r.n},
                    {"eps", r.eps},
                    {"c1", r.c1},
                    {"c2", r.c2},
                    {"opt_ratio", r.opt_ratio},
                    {"best_single_ratio", r.best_single_ratio},
                    {"best_threshold", r.best_threshold},
                    {"target", r.target},
                    {"difference", r.difference}});
}

std::string to_csv(const GapReport& r) {
  std::string out = join_csv({"m", "eps", "expected_max", "oracle_opt_value",
                              "oracle_opt_ratio", "top1_opt_value", "top1_opt_ratio",
                              "quotient", "reference_value", "reference_ratio"});
  out += join_csv({std::to_string(r.m), format_double(r.eps),
                   format_double(r.expected_max), format_double(r.oracle_opt_value),
                   format_double(r.oracle_opt_ratio), format_double(r.top1_opt_value),
                   format_double(r.top1_opt_ratio), format_double(r.quotient),
                   format_double(r.reference_value), format_double(r.reference_ratio)});
  return out;
}

std::string to_json(const GapReport& r) {
  return dump_json({{"m", r.m},
                    {"eps", r.eps},
                    {"expected_max", r.expected_max},
                    {"oracle_opt_value", r.oracle_opt_value},
                    {"oracle_opt_ratio", r.oracle_opt_ratio},
                    {"top1_opt_value", r.top1_opt_value},
                    {"top1_opt_ratio", r.top1_opt_ratio},
                    {"quotient", r.quotient},
                    {"reference_value", r.reference_value},
                    {"reference_ratio", r.reference_ratio}});
}

std::string to_csv(const std::vector<dpopt::DiscrepancyRow>& rows) {
  std::string out = join_csv({"m", "c1", "c2", "opt_ratio", "target", "difference"});
  for (const auto& r : rows)
    out += join_csv({std::to_string(r.m), format_double(r.c1), format_double(r.c2),
                     format_double(r.opt_ratio), format_double(r.target),
                     format_double(r.difference)});
  return out;
}

std::string to_json(const std::vector<dpopt::DiscrepancyRow>& rows) {
  ordered_json arr = ordered_json::array();
  for (const auto& r : rows)
    arr.push_back({{"m", r.m},
                   {"c1", r.c1},
                   {"c2", r.c2},
                   {"opt_ratio", r.opt_ratio},
                   {"target", r.target},
                   {"difference", r.difference}});
  return dump_json(arr);
}

std::string to_csv(const engine::SimReport& r) {
  std::string out = join_csv({"trials", "mean_payoff", "pbm_estimate", "stderr_payoff",
                              "stderr_pbm", "seed", "expected_max", "roe_estimate"});
  out += join_csv({std::to_string(r.trials), format_double(r.mean_payoff),
                   format_double(r.pbm_estimate), format_double(r.stderr_payoff),
                   format_double(r.stderr_pbm), std::to_string(r.seed),
                   format_double(r.expected_max), format_double(r.roe_estimate)});
  return out;
}

std::string to_json(const engine::SimReport& r) {
  return dump_json({{"trials", r.trials},
                    {"mean_payoff", r.mean_payoff},
                    {"pbm_estimate", r.pbm_estimate},
                    {"stderr_payoff", r.stderr_payoff},
                    {"stderr_pbm", r.stderr_pbm},
                    {"seed", r.seed},
                    {"expected_max", r.expected_max},
                    {"roe_estimate", r.roe_estimate}});
}

void write_output(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << text;
  if (!out) throw std::runtime_error("failed writing output file: " + path);
}

}  // namespace prophet::cli
