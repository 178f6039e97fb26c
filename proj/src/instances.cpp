#include "prophet/instances.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include "json.hpp"
#include "prophet/mathkit.hpp"

namespace prophet::instances {

std::optional<std::string> validate(const Instance& inst, double prob_tol) {
  if (inst.is_iid_uniform()) {
    if (!inst.variables.empty()) return "iid instance must not carry explicit variables";
    return std::nullopt;
  }
  if (inst.variables.empty()) return "instance has no variables";
  for (std::size_t i = 0; i < inst.variables.size(); ++i) {
    const auto& var = inst.variables[i];
    const std::string where = "variable " + std::to_string(i + 1) + ": ";
    if (var.atoms.empty()) return where + "no atoms";
    double mass = 0.0;
    for (std::size_t a = 0; a < var.atoms.size(); ++a) {
      const auto& [value, prob] = var.atoms[a];
      if (!(value >= 0.0) || !std::isfinite(value)) return where + "negative or non-finite value";
      if (!(prob > 0.0 && prob <= 1.0)) return where + "probability outside (0,1]";
      if (a > 0 && !(value > var.atoms[a - 1].first)) {
        if (value == var.atoms[a - 1].first) return where + "non-distinct support";
        return where + "atoms not sorted by value";
      }
      mass += prob;
    }
    if (std::fabs(mass - 1.0) > prob_tol)
      return where + "probability mass " + std::to_string(mass) + " != 1";
  }
  return std::nullopt;
}

std::vector<std::pair<double, double>> max_distribution(const Instance& inst) {
  if (inst.is_iid_uniform())
    throw std::invalid_argument("max_distribution: discrete instance required");
  if (auto err = validate(inst, 1e-9))
    throw std::invalid_argument("max_distribution: " + *err);

  std::vector<double> support;
  for (const auto& var : inst.variables)
    for (const auto& [value, prob] : var.atoms) support.push_back(value);
  std::sort(support.begin(), support.end());
  support.erase(std::unique(support.begin(), support.end()), support.end());

  std::vector<std::pair<double, double>> dist;
  double prev_cdf = 0.0;
  for (double v : support) {
    double cdf = 1.0;
    for (const auto& var : inst.variables) {
      double f = 0.0;
      for (const auto& [value, prob] : var.atoms) {
        if (value <= v) f += prob;
      }
      cdf *= f;
    }
    if (cdf - prev_cdf > 0.0) dist.emplace_back(v, cdf - prev_cdf);
    prev_cdf = cdf;
  }
  return dist;
}

double expected_max(const Instance& inst) {
  if (inst.is_iid_uniform())
    return inst.iid_uniform_n / (inst.iid_uniform_n + 1.0);
  double e = 0.0;
  for (const auto& [value, prob] : max_distribution(inst)) e += value * prob;
  return e;
}

Instance build_gap_instance_m1(double eps) { return build_gap_instance(1, eps); }

Instance build_gap_instance(int m, double eps) {
  if (m < 1) throw std::domain_error("build_gap_instance: m must be >= 1");
  if (!(eps > 0.0 && eps < 0.25))
    throw std::domain_error("build_gap_instance: eps must be in (0, 1/4)");
  Instance inst;
  inst.variables.push_back({{{1.0, 1.0}}});
  for (int i = 2; i <= m + 1; ++i) {
    inst.variables.push_back(
        {{{0.0, 0.5 + eps}, {1.0 + (i - 1) * eps, 0.5 - eps}}});
  }
  inst.variables.push_back({{{0.0, 1.0 - eps}, {1.0 / eps, eps}}});
  return inst;
}

Instance build_tightness_instance(int m, int n, double eps) {
  if (n < 1) throw std::domain_error("build_tightness_instance: n must be >= 1");
  if (!(eps > 0.0 && eps < 1.0))
    throw std::domain_error("build_tightness_instance: eps must be in (0,1)");
  const double q = prophet::mathkit::solve_xi(m).xi / n;
  if (!(q < 1.0))
    throw std::domain_error("build_tightness_instance: xi_m/n must be < 1");
  Instance inst;
  inst.variables.push_back({{{1.0, 1.0}}});
  for (int i = 0; i < n; ++i)
    inst.variables.push_back({{{0.0, 1.0 - q}, {1.0, q}}});
  inst.variables.push_back({{{0.0, 1.0 - eps}, {1.0 / eps, eps}}});
  return inst;
}

double default_value_step(int n) {
  return std::min(1e-12, 1e-6 / std::max(1, n));
}

Instance build_adversarial_instance(const FamilyParams& params, double value_step) {
  const auto& [m, n, eps, c1, c2] = params;
  if (m < 1 || n < 1) throw std::domain_error("build_adversarial_instance: m, n must be >= 1");
  if (!(eps > 0.0 && eps < 1.0))
    throw std::domain_error("build_adversarial_instance: eps must be in (0,1)");
  if (!(c1 > 0.0 && c1 / n < 1.0))
    throw std::domain_error("build_adversarial_instance: c1/n must be in (0,1)");
  const double step = value_step > 0.0 ? value_step : default_value_step(n);
  // The tail has to dominate every middle value.
  if (!(c2 / eps > 1.0 + n * step))
    throw std::domain_error("build_adversarial_instance: tail value must exceed middle values");
  Instance inst;
  inst.variables.push_back({{{1.0, 1.0}}});
  for (int i = 2; i <= n + 1; ++i) {
    inst.variables.push_back(
        {{{0.0, 1.0 - c1 / n}, {1.0 + (i - 1) * step, c1 / n}}});
  }
  inst.variables.push_back({{{0.0, 1.0 - eps}, {c2 / eps, eps}}});
  return inst;
}

void save(const Instance& inst, const std::string& path) {
  nlohmann::json j;
  if (inst.is_iid_uniform()) {
    j["iid_uniform"] = inst.iid_uniform_n;
  } else {
    nlohmann::json vars = nlohmann::json::array();
    for (const auto& var : inst.variables) {
      nlohmann::json atoms = nlohmann::json::array();
      for (const auto& [value, prob] : var.atoms) atoms.push_back({value, prob});
      vars.push_back({{"atoms", atoms}});
    }
    j["variables"] = vars;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save: cannot open " + path);
  out << j.dump(2) << '\n';
}

Instance load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("load: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("load: parse error in " + path + ": " + e.what());
  }
  Instance inst;
  try {
    if (j.contains("iid_uniform")) {
      inst.iid_uniform_n = j.at("iid_uniform").get<int>();
      if (inst.iid_uniform_n < 1)
        throw std::invalid_argument("load: iid_uniform must be >= 1");
    } else {
      for (const auto& var : j.at("variables")) {
        DiscreteVariable dv;
        for (const auto& atom : var.at("atoms"))
          dv.atoms.emplace_back(atom.at(0).get<double>(), atom.at(1).get<double>());
        inst.variables.push_back(std::move(dv));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("load: malformed instance in " + path + ": " + e.what());
  }
  if (auto err = validate(inst, 1e-9))
    throw std::invalid_argument("load: " + *err);
  return inst;
}

}  // namespace prophet::instances
