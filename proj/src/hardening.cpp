#include "gridharden/hardening.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "gridharden/errors.hpp"

namespace gridharden::harden {

namespace {

constexpr double kAngleBound = std::numbers::pi / 2.0;
constexpr double kCapacityZero = 1e-6;

}  // namespace

double EconParams::voll_at(int bus) const {
  const auto it = voll_by_bus.find(bus);
  return it == voll_by_bus.end() ? voll : it->second;
}

double EconParams::invest_at(int bus) const {
  const auto it = invest_by_bus.find(bus);
  return it == invest_by_bus.end() ? dg_invest_cost : it->second;
}

void EconParams::validate() const {
  if (!(voll >= 0.0)) throw InputError("voll must be nonnegative");
  for (const auto& [bus, v] : voll_by_bus) {
    if (!(v >= 0.0)) throw InputError("voll at bus " + std::to_string(bus) + " is negative");
  }
  if (!(dg_invest_cost > 0.0)) throw InputError("dg_invest_cost must be positive");
  for (const auto& [bus, c] : invest_by_bus) {
    if (!(c > 0.0)) {
      throw InputError("dg investment cost at bus " + std::to_string(bus) + " must be positive");
    }
  }
  if (budget && !(*budget >= 0.0)) throw InputError("budget must be nonnegative");
  if (load_multipliers.empty()) throw InputError("horizon must have at least one hour");
  for (double m : load_multipliers) {
    if (!(m > 0.0) || !std::isfinite(m)) throw InputError("load multipliers must be positive");
  }
}

std::vector<double> EconParams::default_load_profile() {
  return {0.72, 0.68, 0.66, 0.65, 0.66, 0.70, 0.78, 0.86, 0.92, 0.95, 0.97, 0.98,
          0.98, 0.97, 0.96, 0.96, 0.98, 1.00, 1.00, 1.00, 1.00, 0.90, 0.82, 0.76};
}

HardeningModel build_model(const net::Network& network, const ScenarioSet& scenarios,
                           const EconParams& econ, const Commitment& commitment) {
  econ.validate();
  const auto& refbus = network.reference_bus();
  if (scenarios.scenarios.empty()) throw InputError("scenario set has no base scenario");
  const auto& base = scenarios.scenarios.front();
  if (!base.out_generators.empty() || !base.out_branches.empty()) {
    throw InputError("scenario 0 must be the intact base case");
  }

  HardeningModel model;
  ModelIndex& ix = model.index;
  ix.hours = econ.horizon();
  ix.scenarios = static_cast<int>(scenarios.scenarios.size());
  ix.num_gens = static_cast<int>(network.generators.size());
  ix.num_branches = static_cast<int>(network.branches.size());
  ix.num_buses = static_cast<int>(network.buses.size());
  const int T = ix.hours;
  const int S = ix.scenarios;
  const int G = ix.num_gens;
  const int L = ix.num_branches;
  const int B = ix.num_buses;

  if (!commitment.empty()) {
    if (static_cast<int>(commitment.size()) != G) {
      throw InputError("commitment needs one row per generator");
    }
    for (const auto& row : commitment) {
      if (static_cast<int>(row.size()) != T) {
        throw InputError("commitment rows must cover the horizon");
      }
      for (int v : row) {
        if (v != 0 && v != 1) throw InputError("commitment flags must be 0 or 1");
      }
    }
  }
  const auto committed = [&](int g, int t) { return commitment.empty() ? 1 : commitment[g][t]; };

  // Availability per scenario.
  std::map<int, int> gen_pos, branch_pos;
  for (int g = 0; g < G; ++g) gen_pos[network.generators[g].id] = g;
  for (int l = 0; l < L; ++l) branch_pos[network.branches[l].id] = l;
  model.generator_up.assign(S, std::vector<int>(G, 1));
  model.branch_up.assign(S, std::vector<int>(L, 1));
  model.scenario_weight.assign(S, 0.0);
  for (int s = 0; s < S; ++s) {
    const auto& sc = scenarios.scenarios[s];
    for (int id : sc.out_generators) {
      const auto it = gen_pos.find(id);
      if (it == gen_pos.end()) {
        throw InputError("scenario " + std::to_string(s) + " references unknown generator " +
                         std::to_string(id));
      }
      model.generator_up[s][it->second] = 0;
    }
    for (int id : sc.out_branches) {
      const auto it = branch_pos.find(id);
      if (it == branch_pos.end()) {
        throw InputError("scenario " + std::to_string(s) + " references unknown branch " +
                         std::to_string(id));
      }
      model.branch_up[s][it->second] = 0;
    }
    if (s > 0) {
      if (!(sc.weight > 0.0)) throw InputError("scenario weights must be positive");
      model.scenario_weight[s] =
          econ.weighting == ScenarioWeighting::kUnweighted ? 1.0 : sc.weight;
    }
  }

  std::vector<char> candidate(B, 0);
  if (econ.dg_candidates) {
    for (int id : *econ.dg_candidates) candidate[network.bus_index(id)] = 1;
  } else {
    for (int b = 0; b < B; ++b) candidate[b] = network.buses[b].base_load > 0.0;
  }

  model.demand.assign(T, std::vector<double>(B, 0.0));
  for (int t = 0; t < T; ++t) {
    for (int b = 0; b < B; ++b) {
      model.demand[t][b] = network.buses[b].base_load * econ.load_multipliers[t];
    }
  }

  const int ref = network.bus_index(refbus.id);
  std::vector<int> from_pos(L), to_pos(L), gen_bus_pos(G);
  for (int l = 0; l < L; ++l) {
    from_pos[l] = network.bus_index(network.branches[l].from_bus);
    to_pos[l] = network.bus_index(network.branches[l].to_bus);
  }
  for (int g = 0; g < G; ++g) gen_bus_pos[g] = network.bus_index(network.generators[g].bus);

  lp::LpProblem& lp = model.lp;
  const auto tag = [](const char* kind, int a, int t, int s) {
    return std::string(kind) + "_" + std::to_string(a) + "_" + std::to_string(t) + "_" +
           std::to_string(s);
  };

  // Columns, in the order fixed by ModelIndex.
  for (int t = 0; t < T; ++t) {
    for (int s = 0; s < S; ++s) {
      const double w = model.scenario_weight[s];
      for (int g = 0; g < G; ++g) {
        const auto& gen = network.generators[g];
        const double on = committed(g, t) * model.generator_up[s][g];
        double cost = 0.0;
        if (s == 0) {
          cost = gen.cost_linear;
        } else if (econ.price_scenario_dispatch) {
          cost = w * gen.cost_linear;
        }
        lp.add_variable(gen.p_min * on, gen.p_max * on, cost, tag("P", gen.id, t, s));
      }
      for (int l = 0; l < L; ++l) {
        const auto& br = network.branches[l];
        const double limit = br.flow_limit * model.branch_up[s][l];
        lp.add_variable(-limit, limit, 0.0, tag("PL", br.id, t, s));
      }
      for (int b = 0; b < B; ++b) {
        const double bound = b == ref ? 0.0 : kAngleBound;
        lp.add_variable(-bound, bound, 0.0, tag("theta", network.buses[b].id, t, s));
      }
      for (int b = 0; b < B; ++b) {
        const double cap = s == 0 ? 0.0 : model.demand[t][b];
        const double cost = s == 0 ? 0.0 : w * econ.voll_at(network.buses[b].id);
        lp.add_variable(0.0, cap, cost, tag("LC", network.buses[b].id, t, s));
      }
      for (int b = 0; b < B; ++b) {
        lp.add_variable(0.0, candidate[b] ? lp::kInfinity : 0.0, 0.0,
                        tag("PG", network.buses[b].id, t, s));
      }
    }
  }
  for (int b = 0; b < B; ++b) {
    const int id = network.buses[b].id;
    lp.add_variable(0.0, candidate[b] ? lp::kInfinity : 0.0,
                    candidate[b] ? econ.invest_at(id) : 0.0, "PGmax_" + std::to_string(id));
  }

  for (int t = 0; t < T; ++t) {
    for (int g = 0; g < G; ++g) {
      model.objective_offset += committed(g, t) * network.generators[g].cost_noload;
    }
  }

  // Rows.
  ix.balance_rows.assign(static_cast<std::size_t>(T) * S * B, -1);
  std::vector<std::vector<int>> bus_gens(B);
  for (int g = 0; g < G; ++g) bus_gens[gen_bus_pos[g]].push_back(g);
  std::vector<std::vector<std::pair<int, double>>> bus_flows(B);
  for (int l = 0; l < L; ++l) {
    bus_flows[from_pos[l]].push_back({l, -1.0});  // leaving the bus
    bus_flows[to_pos[l]].push_back({l, +1.0});
  }

  std::vector<int> cols;
  std::vector<double> vals;
  for (int t = 0; t < T; ++t) {
    for (int s = 0; s < S; ++s) {
      // Nodal balance: generation + DG + net inflow + curtailment = demand.
      for (int b = 0; b < B; ++b) {
        cols.clear();
        vals.clear();
        for (int g : bus_gens[b]) {
          cols.push_back(ix.dispatch(g, t, s));
          vals.push_back(1.0);
        }
        cols.push_back(ix.dg_output(b, t, s));
        vals.push_back(1.0);
        for (const auto& [l, sign] : bus_flows[b]) {
          cols.push_back(ix.flow(l, t, s));
          vals.push_back(sign);
        }
        cols.push_back(ix.curtail(b, t, s));
        vals.push_back(1.0);
        ix.balance_rows[ix.block(t, s) * B + b] =
            lp.add_row(cols, vals, lp::RowSense::kEqual, model.demand[t][b],
                       tag("bal", network.buses[b].id, t, s));
      }
      // DC flow definition; relaxed by +-M_l for branches on outage.
      for (int l = 0; l < L; ++l) {
        const auto& br = network.branches[l];
        const double k = network.flow_per_radian(br);
        const int c[] = {ix.flow(l, t, s), ix.angle(from_pos[l], t, s), ix.angle(to_pos[l], t, s)};
        const double v[] = {1.0, -k, k};
        if (model.branch_up[s][l]) {
          lp.add_row(c, v, lp::RowSense::kEqual, 0.0, tag("flow", br.id, t, s));
        } else {
          const double big_m = 2.0 * kAngleBound * k;
          lp.add_row(c, v, lp::RowSense::kLessEqual, big_m, tag("flowM+", br.id, t, s));
          lp.add_row(c, v, lp::RowSense::kGreaterEqual, -big_m, tag("flowM-", br.id, t, s));
        }
      }
      // Redispatch limit between base case and contingency for available units.
      if (s > 0) {
        for (int g = 0; g < G; ++g) {
          if (!committed(g, t) || !model.generator_up[s][g]) continue;
          const auto& gen = network.generators[g];
          const int c[] = {ix.dispatch(g, t, 0), ix.dispatch(g, t, s)};
          const double v[] = {1.0, -1.0};
          lp.add_row(c, v, lp::RowSense::kLessEqual, gen.ramp_dev, tag("rampU", gen.id, t, s));
          lp.add_row(c, v, lp::RowSense::kGreaterEqual, -gen.ramp_dev,
                     tag("rampD", gen.id, t, s));
        }
      }
      // DG output within installed capacity.
      for (int b = 0; b < B; ++b) {
        if (!candidate[b]) continue;
        const int c[] = {ix.dg_output(b, t, s), ix.dg_capacity(b)};
        const double v[] = {1.0, -1.0};
        lp.add_row(c, v, lp::RowSense::kLessEqual, 0.0, tag("dgcap", network.buses[b].id, t, s));
      }
    }
  }
  if (econ.budget) {
    cols.clear();
    vals.clear();
    for (int b = 0; b < B; ++b) {
      if (!candidate[b]) continue;
      cols.push_back(ix.dg_capacity(b));
      vals.push_back(econ.invest_at(network.buses[b].id));
    }
    ix.budget_row = lp.add_row(cols, vals, lp::RowSense::kLessEqual, *econ.budget, "budget");
  }
  return model;
}

ModelDiagnostics diagnose(const HardeningModel& model, const net::Network& network,
                          std::span<const double> x) {
  const ModelIndex& ix = model.index;
  ModelDiagnostics d;
  for (int t = 0; t < ix.hours; ++t) {
    for (int s = 0; s < ix.scenarios; ++s) {
      std::vector<double> injection(ix.num_buses, 0.0);
      for (int g = 0; g < ix.num_gens; ++g) {
        const double p = x[ix.dispatch(g, t, s)];
        injection[network.bus_index(network.generators[g].bus)] += p;
        if (!model.generator_up[s][g]) {
          d.max_outaged_dispatch = std::max(d.max_outaged_dispatch, std::abs(p));
        }
      }
      for (int l = 0; l < ix.num_branches; ++l) {
        const auto& br = network.branches[l];
        const int f = network.bus_index(br.from_bus);
        const int k = network.bus_index(br.to_bus);
        const double flow = x[ix.flow(l, t, s)];
        injection[f] -= flow;
        injection[k] += flow;
        if (model.branch_up[s][l]) {
          const double dc = network.flow_per_radian(br) *
                            (x[ix.angle(f, t, s)] - x[ix.angle(k, t, s)]);
          d.max_flow_angle_residual = std::max(d.max_flow_angle_residual, std::abs(flow - dc));
        } else {
          d.max_outaged_flow = std::max(d.max_outaged_flow, std::abs(flow));
        }
      }
      for (int b = 0; b < ix.num_buses; ++b) {
        const double lc = x[ix.curtail(b, t, s)];
        const double demand = model.demand[t][b];
        injection[b] += x[ix.dg_output(b, t, s)] + lc;
        d.max_balance_residual = std::max(d.max_balance_residual, std::abs(injection[b] - demand));
        if (s == 0) d.max_base_curtailment = std::max(d.max_base_curtailment, std::abs(lc));
        d.max_curtailment_excess = std::max({d.max_curtailment_excess, -lc, lc - demand});
      }
    }
  }
  lp::LpSolution as_solution;
  as_solution.primal.assign(x.begin(), x.end());
  const auto report = lp::check_solution(model.lp, as_solution);
  d.max_lp_row_violation = report.max_row_violation;
  d.max_lp_bound_violation = report.max_bound_violation;
  return d;
}

double HardeningPlan::total_curtailment() const {
  double total = 0.0;
  for (double c : scenario_curtailment) total += c;
  return total;
}

namespace {

HardeningPlan assemble(const HardeningModel& model, const net::Network& network,
                       const EconParams& econ, const lp::LpSolution& sol) {
  const ModelIndex& ix = model.index;
  HardeningPlan plan;
  plan.status = sol.status;
  plan.iterations = sol.iterations;
  plan.message = sol.message;
  plan.annualization_factor = 8760.0 / ix.hours;
  const auto& x = sol.primal;

  for (int b = 0; b < ix.num_buses; ++b) {
    const int id = network.buses[b].id;
    const double cap = x[ix.dg_capacity(b)];
    const double cost = model.lp.variable(ix.dg_capacity(b)).cost;
    plan.invest_cost += cost * cap;
    if (cap > kCapacityZero) plan.dg_capacity[id] = cap;
  }
  plan.base_operation_cost = model.objective_offset;
  for (int t = 0; t < ix.hours; ++t) {
    for (int g = 0; g < ix.num_gens; ++g) {
      plan.base_operation_cost += network.generators[g].cost_linear * x[ix.dispatch(g, t, 0)];
    }
  }
  plan.scenario_curtailment.assign(ix.scenarios, 0.0);
  double voll_energy_sum = 0.0;
  for (int s = 0; s < ix.scenarios; ++s) {
    for (int t = 0; t < ix.hours; ++t) {
      for (int b = 0; b < ix.num_buses; ++b) {
        const double lc = x[ix.curtail(b, t, s)];
        plan.scenario_curtailment[s] += lc;
        if (s > 0) {
          const double v = econ.voll_at(network.buses[b].id);
          plan.weighted_unserved_cost += model.scenario_weight[s] * v * lc;
          voll_energy_sum += v * lc;
        }
      }
    }
  }
  const int contingencies = ix.scenarios - 1;
  plan.average_unserved_cost = contingencies > 0 ? voll_energy_sum / contingencies : 0.0;
  plan.objective = sol.objective + model.objective_offset;
  plan.diagnostics = diagnose(model, network, x);
  return plan;
}

HardeningPlan solve_model(const HardeningModel& model, const net::Network& network,
                          const EconParams& econ, const lp::SolveOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const auto sol = lp::solve(model.lp, options);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  switch (sol.status) {
    case lp::SolveStatus::kOptimal:
      break;
    case lp::SolveStatus::kInfeasible:
      throw SolverError("hardening LP infeasible (" + sol.message +
                        "); check generator minimums and base-case supply");
    case lp::SolveStatus::kUnbounded:
      throw SolverError("hardening LP unbounded; check cost inputs");
    default:
      throw SolverError(std::string("hardening LP failed: ") + lp::to_string(sol.status) +
                        " " + sol.message);
  }
  HardeningPlan plan = assemble(model, network, econ, sol);
  plan.solve_seconds = seconds;
  return plan;
}

}  // namespace

HardeningPlan solve_hardening(const net::Network& network, const ScenarioSet& scenarios,
                              const EconParams& econ, const Commitment& commitment,
                              const lp::SolveOptions& options) {
  const HardeningModel model = build_model(network, scenarios, econ, commitment);
  return solve_model(model, network, econ, options);
}

HardeningPlan evaluate_plan(const net::Network& network, const ScenarioSet& scenarios,
                            const EconParams& econ, const std::map<int, double>& capacities,
                            const Commitment& commitment, const lp::SolveOptions& options) {
  EconParams fixed = econ;
  fixed.budget.reset();
  HardeningModel model = build_model(network, scenarios, fixed, commitment);
  for (const auto& [bus, cap] : capacities) {
    if (!(cap >= 0.0)) throw InputError("capacities must be nonnegative");
    (void)network.bus_index(bus);
  }
  for (int b = 0; b < model.index.num_buses; ++b) {
    const int column = model.index.dg_capacity(b);
    const auto it = capacities.find(network.buses[b].id);
    const double cap = it == capacities.end() ? 0.0 : it->second;
    if (cap > 0.0 && model.lp.variable(column).upper == 0.0) {
      throw InputError("bus " + std::to_string(network.buses[b].id) +
                       " is not a DG candidate");
    }
    model.lp.set_bounds(column, cap, cap);
  }
  return solve_model(model, network, fixed, options);
}

std::vector<SweepRow> budget_sweep(const net::Network& network, const ScenarioSet& scenarios,
                                   const EconParams& econ,
                                   const std::vector<std::optional<double>>& budgets,
                                   const Commitment& commitment,
                                   const lp::SolveOptions& options) {
  for (std::size_t k = 0; k < budgets.size(); ++k) {
    if (budgets[k] && !(*budgets[k] >= 0.0)) throw InputError("budgets must be nonnegative");
    if (k > 0) {
      const bool prev_unlimited = !budgets[k - 1];
      const bool ascending =
          !prev_unlimited && (!budgets[k] || *budgets[k] >= *budgets[k - 1]);
      if (!ascending) throw InputError("budgets must be sorted ascending");
    }
  }
  std::vector<SweepRow> rows;
  // Once a solve leaves its budget slack, the plan is optimal without the
  // budget row and therefore for every larger budget as well.
  std::optional<SweepRow> slack_plan;
  for (const auto& budget : budgets) {
    SweepRow row;
    row.budget = budget;
    if (slack_plan && (!budget || slack_plan->invest_used <= *budget)) {
      row = *slack_plan;
      row.budget = budget;
      rows.push_back(std::move(row));
      continue;
    }
    try {
      EconParams e = econ;
      e.budget = budget;
      const auto plan = solve_hardening(network, scenarios, e, commitment, options);
      row.scenario_curtailment.assign(plan.scenario_curtailment.begin() + 1,
                                      plan.scenario_curtailment.end());
      row.average_unserved_cost = plan.average_unserved_cost;
      row.invest_used = plan.invest_cost;
      row.objective = plan.objective;
      row.ok = true;
      if (!budget || plan.invest_cost < *budget * (1.0 - 1e-9) - 1e-6) slack_plan = row;
    } catch (const SolverError& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::ordered_json to_json(const HardeningPlan& plan) {
  nlohmann::ordered_json j;
  j["status"] = lp::to_string(plan.status);
  nlohmann::ordered_json caps = nlohmann::ordered_json::object();
  for (const auto& [bus, cap] : plan.dg_capacity) caps[std::to_string(bus)] = cap;
  j["dg_capacity_mw"] = caps;
  j["invest_cost"] = plan.invest_cost;
  j["base_operation_cost"] = plan.base_operation_cost;
  j["scenario_curtailment_mwh"] = plan.scenario_curtailment;
  j["total_curtailment_mwh"] = plan.total_curtailment();
  j["weighted_unserved_cost"] = plan.weighted_unserved_cost;
  j["average_unserved_cost"] = plan.average_unserved_cost;
  j["objective"] = plan.objective;
  j["annualization_factor"] = plan.annualization_factor;
  j["annualized"] = {{"base_operation_cost", plan.base_operation_cost * plan.annualization_factor},
                     {"average_unserved_cost",
                      plan.average_unserved_cost * plan.annualization_factor}};
  const auto& d = plan.diagnostics;
  j["diagnostics"] = {{"iterations", plan.iterations},
                      {"max_balance_residual_mw", d.max_balance_residual},
                      {"max_outaged_dispatch_mw", d.max_outaged_dispatch},
                      {"max_outaged_flow_mw", d.max_outaged_flow},
                      {"max_flow_angle_residual_mw", d.max_flow_angle_residual},
                      {"max_base_curtailment_mw", d.max_base_curtailment},
                      {"max_lp_row_violation", d.max_lp_row_violation},
                      {"max_lp_bound_violation", d.max_lp_bound_violation}};
  return j;
}

namespace {

std::string money(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.0f", std::round(v));
  return buf;
}

std::string energy(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::size_t paths = 0;
  for (const auto& r : rows) paths = std::max(paths, r.scenario_curtailment.size());
  std::ostringstream out;
  out << "budget";
  for (std::size_t k = 0; k < paths; ++k) out << ",curtail_path_" << k + 1 << "_mwh";
  out << ",avg_unserved_cost,invest_used,status\n";
  for (const auto& r : rows) {
    out << (r.budget ? money(*r.budget) : std::string("unlimited"));
    for (std::size_t k = 0; k < paths; ++k) {
      out << ',' << (k < r.scenario_curtailment.size() ? energy(r.scenario_curtailment[k]) : "");
    }
    out << ',' << (r.ok ? money(r.average_unserved_cost) : "") << ','
        << (r.ok ? money(r.invest_used) : "") << ',' << (r.ok ? "ok" : "error: " + r.error)
        << '\n';
  }
  return out.str();
}

}  // namespace gridharden::harden
