#include <cstdint>
#include <iostream>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "prophet/cli.hpp"
#include "prophet/dpopt.hpp"
#include "prophet/engine.hpp"
#include "prophet/instances.hpp"
#include "prophet/mathkit.hpp"

namespace {

namespace cli = prophet::cli;
namespace engine = prophet::engine;
namespace instances = prophet::instances;
namespace dpopt = prophet::dpopt;
namespace mathkit = prophet::mathkit;

std::uint64_t entropy_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

double parse_auto(const std::string& text, double auto_value, const char* flag) {
  if (text == "auto") return auto_value;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == nullptr || *end != '\0' || end == text.c_str())
    throw std::invalid_argument(std::string(flag) + ": expected a number or 'auto', got '" +
                                text + "'");
  return v;
}

// Flags shared by every subcommand that prints a table or record.
struct OutputFlags {
  std::string format = "csv";
  std::string output;  // empty => stdout

  void attach(CLI::App* sub) {
    sub->add_option("--format", format, "Output format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    sub->add_option("--output", output, "Output path ('-' or empty for stdout)");
  }
  void emit(const std::string& csv, const std::string& json) const {
    cli::write_output(format == "csv" ? csv : json, output);
  }
};

struct SimulateFlags {
  std::string instance_path;
  std::string builder;
  int m = 1;
  int n = 2000;
  double eps = 0.01;
  std::string c1 = "auto";
  std::string c2 = "auto";
  double value_step = -1.0;
  std::string strategy = "single-threshold";
  std::string tau = "auto";
  double q = 2.435;
  std::vector<int> positions;
  bool final_if_nonzero = false;
  int k = 0;  // 0 => m + 1
  std::string oracle = "strict";
  std::string ordering = "natural";
  std::vector<int> permutation;
  std::string objective = "roe";
  long long trials = 100000;
  std::uint64_t seed = 0;
  int workers = 1;
  OutputFlags out;
};

instances::Instance resolve_instance(const SimulateFlags& f) {
  const bool has_file = !f.instance_path.empty();
  const bool has_builder = !f.builder.empty();
  if (has_file == has_builder)
    throw std::invalid_argument("simulate: give exactly one of --instance and --builder");
  if (has_file) return instances::load(f.instance_path);
  if (f.builder == "gap") return instances::build_gap_instance(f.m, f.eps);
  if (f.builder == "tightness") return instances::build_tightness_instance(f.m, f.n, f.eps);
  if (f.builder == "adversarial") {
    const auto entry = mathkit::solve_xi(f.m);
    const double c1 = parse_auto(f.c1, entry.xi, "--c1");
    const double c2 = parse_auto(f.c2, entry.psi, "--c2");
    return instances::build_adversarial_instance({f.m, f.n, f.eps, c1, c2}, f.value_step);
  }
  if (f.builder == "iid-uniform") {
    instances::Instance inst;
    inst.iid_uniform_n = f.n;
    return inst;
  }
  throw std::invalid_argument("simulate: unknown builder '" + f.builder + "'");
}

engine::Ordering resolve_ordering(const SimulateFlags& f) {
  if (f.ordering == "natural") return engine::Ordering::natural();
  if (f.ordering == "stack-nonzeros") return engine::Ordering::stack_nonzeros();
  if (f.ordering == "explicit") {
    if (f.permutation.empty())
      throw std::invalid_argument("simulate: --ordering explicit needs --permutation");
    return engine::Ordering::explicit_order(f.permutation);
  }
  throw std::invalid_argument("simulate: unknown ordering '" + f.ordering + "'");
}

void run_simulate(const SimulateFlags& f) {
  const auto inst = resolve_instance(f);
  const auto ordering = resolve_ordering(f);
  const auto sem = f.oracle == "strict" ? engine::OracleSemantics::Strict
                                        : engine::OracleSemantics::Weak;
  const std::set<int> position_set(f.positions.begin(), f.positions.end());

  engine::SimReport report;
  if (f.strategy.rfind("top1-", 0) == 0) {
    std::unique_ptr<engine::SelectionStrategy> sel;
    if (f.strategy == "top1-select-first-and-last")
      sel = engine::select_positions({1}, /*final_if_nonzero=*/true);
    else if (f.strategy == "top1-select-positions")
      sel = engine::select_positions(position_set, f.final_if_nonzero);
    else if (f.strategy == "top1-running-max")
      sel = engine::running_max_selector();
    else if (f.strategy == "top1-select-all")
      sel = engine::select_all();
    else
      throw std::invalid_argument("simulate: unknown strategy '" + f.strategy + "'");
    const int k = f.k > 0 ? f.k : f.m + 1;
    report = engine::monte_carlo_top1(inst, ordering, *sel, k, f.trials, f.seed, f.workers);
  } else {
    std::unique_ptr<engine::OracleStrategy> orc;
    if (f.strategy == "single-threshold") {
      const double tau =
          f.tau == "auto" ? engine::quantile_threshold(inst, f.m)
                          : parse_auto(f.tau, 0.0, "--tau");
      orc = engine::single_threshold_strategy(tau);
    } else if (f.strategy == "query-set") {
      orc = engine::query_set_strategy(position_set);
    } else if (f.strategy == "iid-pbm") {
      orc = engine::iid_pbm_strategy(f.q, inst.size(), f.m);
    } else {
      throw std::invalid_argument("simulate: unknown strategy '" + f.strategy + "'");
    }
    report = engine::monte_carlo(inst, ordering, *orc, f.m, sem, f.trials, f.seed, f.workers);
  }
  f.out.emit(cli::to_csv(report), cli::to_json(report));
}

std::string compratio_csv(const std::vector<cli::XiRow>& rows) {
  std::string out = "m,target\n";
  for (const auto& r : rows)
    out += std::to_string(r.m) + "," + cli::format_double(r.target) + "\n";
  return out;
}

std::string compratio_json(const std::vector<cli::XiRow>& rows) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) arr.push_back({{"m", r.m}, {"target", r.target}});
  return arr.dump(2) + "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Oracle-augmented optimal stopping: exponent tables, simulators, exact solvers"};
  app.require_subcommand(1);

  // ---- xi ----
  int xi_m_max = 15;
  OutputFlags xi_out;
  auto* xi = app.add_subcommand("xi", "Exponent table: xi_m, guarantee, brackets, psi");
  xi->add_option("--m-max", xi_m_max, "Largest query budget m")->capture_default_str();
  xi_out.attach(xi);
  xi->callback([&] {
    const auto rows = cli::xi_rows(xi_m_max);
    xi_out.emit(cli::to_csv(rows), cli::to_json(rows));
  });

  // ---- simulate ----
  SimulateFlags sf;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo run of a strategy on an instance");
  sim->add_option("--instance", sf.instance_path, "Instance file (JSON)");
  sim->add_option("--builder", sf.builder, "Built-in instance family")
      ->check(CLI::IsMember({"gap", "tightness", "adversarial", "iid-uniform"}));
  sim->add_option("--m", sf.m, "Query budget (and family parameter m)")->capture_default_str();
  sim->add_option("--n", sf.n, "Family size parameter n")->capture_default_str();
  sim->add_option("--eps", sf.eps, "Family tail parameter eps")->capture_default_str();
  sim->add_option("--c1", sf.c1, "Family c1, or 'auto' for xi_m")->capture_default_str();
  sim->add_option("--c2", sf.c2, "Family c2, or 'auto' for m!/xi_m^m")->capture_default_str();
  sim->add_option("--value-step", sf.value_step,
                  "Spacing of the family's middle values (<= 0 for default)");
  sim->add_option("--strategy", sf.strategy,
                  "single-threshold | query-set | iid-pbm | top1-select-first-and-last | "
                  "top1-select-positions | top1-running-max | top1-select-all")
      ->capture_default_str();
  sim->add_option("--tau", sf.tau, "Threshold for single-threshold, or 'auto'")
      ->capture_default_str();
  sim->add_option("--q", sf.q, "Quantile parameter for iid-pbm")->capture_default_str();
  sim->add_option("--positions", sf.positions,
                  "1-based positions for query-set / top1-select-positions")
      ->delimiter(',');
  sim->add_flag("--final-if-nonzero", sf.final_if_nonzero,
                "top1-select-positions also takes the final nonzero value");
  sim->add_option("--k", sf.k, "Selection capacity for top1-* strategies (0 => m+1)")
      ->capture_default_str();
  sim->add_option("--oracle", sf.oracle, "Oracle answer semantics")
      ->check(CLI::IsMember({"strict", "weak"}))
      ->capture_default_str();
  sim->add_option("--ordering", sf.ordering, "Presentation order")
      ->check(CLI::IsMember({"natural", "stack-nonzeros", "explicit"}))
      ->capture_default_str();
  sim->add_option("--permutation", sf.permutation, "0-based order for --ordering explicit")
      ->delimiter(',');
  sim->add_option("--objective", sf.objective,
                  "Primary estimate of interest (both are always reported)")
      ->check(CLI::IsMember({"roe", "pbm"}))
      ->capture_default_str();
  sim->add_option("--trials", sf.trials, "Monte Carlo trials")->capture_default_str();
  auto* sim_seed = sim->add_option("--seed", sf.seed, "RNG seed (default: entropy, echoed)");
  sim->add_option("--workers", sf.workers, "Worker threads")->capture_default_str();
  sf.out.attach(sim);
  sim->callback([&] {
    if (sim_seed->count() == 0) sf.seed = entropy_seed();
    run_simulate(sf);
  });

  // ---- pbm ----
  int pbm_n = 5000, pbm_m = 1, pbm_workers = 1;
  double pbm_q = 2.435;
  long long pbm_trials = 100000;
  std::uint64_t pbm_seed = 0;
  OutputFlags pbm_out;
  auto* pbm = app.add_subcommand(
      "pbm", "Probability of picking the maximum of n iid uniforms, estimate vs bound");
  pbm->add_option("--n", pbm_n, "Number of iid uniform values")->capture_default_str();
  pbm->add_option("--q", pbm_q, "Threshold quantile parameter (threshold 1 - q/n)")
      ->capture_default_str();
  pbm->add_option("--m", pbm_m, "Query budget")->capture_default_str();
  pbm->add_option("--trials", pbm_trials, "Monte Carlo trials")->capture_default_str();
  auto* pbm_seed_opt = pbm->add_option("--seed", pbm_seed, "RNG seed (default: entropy)");
  pbm->add_option("--workers", pbm_workers, "Worker threads")->capture_default_str();
  pbm_out.attach(pbm);
  pbm->callback([&] {
    if (pbm_seed_opt->count() == 0) pbm_seed = entropy_seed();
    const auto r = cli::pbm_run(pbm_n, pbm_q, pbm_m, pbm_trials, pbm_seed, pbm_workers);
    pbm_out.emit(cli::to_csv(r), cli::to_json(r));
  });

  // ---- dp ----
  int dp_m = 1, dp_n = 10000;
  double dp_eps = 1e-9, dp_step = -1.0;
  std::string dp_c1 = "auto", dp_c2 = "auto";
  OutputFlags dp_out;
  auto* dp = app.add_subcommand(
      "dp", "Optimal-policy ratio on the parametric family at one (c1, c2)");
  dp->add_option("--m", dp_m, "Query budget")->required();
  dp->add_option("--n", dp_n, "Number of middle values")->capture_default_str();
  dp->add_option("--eps", dp_eps, "Tail probability")->capture_default_str();
  dp->add_option("--c1", dp_c1, "c1, or 'auto' for xi_m")->capture_default_str();
  dp->add_option("--c2", dp_c2, "c2, or 'auto' for m!/xi_m^m")->capture_default_str();
  dp->add_option("--value-step", dp_step, "Middle value spacing (<= 0 for default)");
  dp_out.attach(dp);
  dp->callback([&] {
    const double c1 = parse_auto(dp_c1, -1.0, "--c1");
    const double c2 = parse_auto(dp_c2, -1.0, "--c2");
    const auto r = cli::dp_row(dp_m, dp_n, dp_eps, c1, c2, dp_step);
    dp_out.emit(cli::to_csv(r), cli::to_json(r));
  });

  // ---- table ----
  std::string which;
  int tab_m_max = 0, tab_n = 10000, tab_workers = 1, tab_c1_steps = 76, tab_c2_steps = 61,
      tab_refine_steps = 21;
  double tab_eps = 1e-9, tab_c1_lo = 0.5, tab_c1_hi = 8.0, tab_c2_lo = 0.4, tab_c2_hi = 1.0;
  bool tab_no_refine = false;
  OutputFlags tab_out;
  auto* tab = app.add_subcommand("table", "Full tables: guarantee per m, or worst-case grid");
  tab->add_option("which", which, "compratio | discrepancy")
      ->required()
      ->check(CLI::IsMember({"compratio", "discrepancy"}));
  tab->add_option("--m-max", tab_m_max, "Largest m (default 15 / 11)");
  tab->add_option("--n", tab_n, "Middles per family instance")->capture_default_str();
  tab->add_option("--eps", tab_eps, "Tail probability")->capture_default_str();
  tab->add_option("--c1-lo", tab_c1_lo)->capture_default_str();
  tab->add_option("--c1-hi", tab_c1_hi)->capture_default_str();
  tab->add_option("--c1-steps", tab_c1_steps)->capture_default_str();
  tab->add_option("--c2-lo", tab_c2_lo)->capture_default_str();
  tab->add_option("--c2-hi", tab_c2_hi)->capture_default_str();
  tab->add_option("--c2-steps", tab_c2_steps)->capture_default_str();
  tab->add_flag("--no-refine", tab_no_refine, "Skip the local refinement pass");
  tab->add_option("--refine-steps", tab_refine_steps)->capture_default_str();
  tab->add_option("--workers", tab_workers, "Worker threads")->capture_default_str();
  tab_out.attach(tab);
  tab->callback([&] {
    if (which == "compratio") {
      const int m_max = tab_m_max > 0 ? tab_m_max : 15;
      const auto rows = cli::xi_rows(m_max);
      tab_out.emit(compratio_csv(rows), compratio_json(rows));
      return;
    }
    const int m_max = tab_m_max > 0 ? tab_m_max : 11;
    dpopt::GridSpec spec;
    spec.c1_lo = tab_c1_lo;
    spec.c1_hi = tab_c1_hi;
    spec.c1_steps = tab_c1_steps;
    spec.c2_lo = tab_c2_lo;
    spec.c2_hi = tab_c2_hi;
    spec.c2_steps = tab_c2_steps;
    spec.refine = !tab_no_refine;
    spec.refine_steps = tab_refine_steps;
    const auto rows = cli::discrepancy_table(m_max, tab_n, tab_eps, tab_workers, spec);
    tab_out.emit(cli::to_csv(rows), cli::to_json(rows));
  });

  // ---- gap ----
  int gap_m = 1;
  double gap_eps = 0.01;
  OutputFlags gap_out;
  auto* gap = app.add_subcommand(
      "gap", "Exact separation example: best m-query vs best (m+1)-selection strategy");
  gap->add_option("--m", gap_m, "Query budget (exact search caps at 3)")->capture_default_str();
  gap->add_option("--eps", gap_eps, "Instance parameter in (0, 1/4)")->capture_default_str();
  gap_out.attach(gap);
  gap->callback([&] {
    const auto r = cli::gap_report(gap_m, gap_eps);
    gap_out.emit(cli::to_csv(r), cli::to_json(r));
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
