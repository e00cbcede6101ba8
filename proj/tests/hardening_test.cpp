#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "gridharden/errors.hpp"
#include "gridharden/hardening.hpp"
#include "oracles/dcopf_oracle.hpp"
#include "support/instances.hpp"

using namespace gridharden;
using namespace gridharden::harden;

namespace {

net::Network single_bus(double load, double p_max, double cost_linear) {
  net::Network n;
  n.name = "single";
  n.buses = {{1, load, true}};
  n.generators = {{1, 1, 0.0, p_max, cost_linear, 0.0, p_max}};
  return n;
}

// Bus 1 generates, bus 2 consumes 10 MW over one line.
net::Network two_bus() {
  net::Network n;
  n.name = "two";
  n.buses = {{1, 0.0, true}, {2, 10.0, false}};
  n.generators = {{1, 1, 0.0, 100.0, 20.0, 0.0, 100.0}};
  n.branches = {{1, 1, 2, 0.1, 100.0}};
  return n;
}

EconParams one_hour() {
  EconParams e;
  e.load_multipliers = {1.0};
  return e;
}

Scenario outage(std::string label, std::set<int> gens, std::set<int> branches, double w) {
  return {std::move(label), std::move(gens), std::move(branches), w};
}

// A 6-bus ring with a chord, three units and two storm scenarios.
net::Network six_bus() {
  net::Network n;
  n.name = "six";
  n.buses = {{1, 0.0, true}, {2, 40.0, false}, {3, 55.0, false},
             {4, 30.0, false}, {5, 60.0, false}, {6, 25.0, false}};
  n.generators = {{1, 1, 0.0, 150.0, 20.0, 10.0, 40.0},
                  {2, 3, 0.0, 80.0, 35.0, 5.0, 30.0},
                  {3, 5, 5.0, 90.0, 28.0, 8.0, 25.0}};
  n.branches = {{1, 1, 2, 0.10, 120.0}, {2, 2, 3, 0.15, 60.0}, {3, 3, 4, 0.12, 80.0},
                {4, 4, 5, 0.10, 80.0},  {5, 5, 6, 0.20, 70.0}, {6, 6, 1, 0.12, 100.0},
                {7, 2, 5, 0.25, 50.0}};
  return n;
}

ScenarioSet six_bus_storms() {
  ScenarioSet set = base_only();
  set.scenarios.push_back(outage("west", {2}, {2, 3}, 0.5));
  set.scenarios.push_back(outage("east", {}, {5, 6, 7}, 0.5));
  return set;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("single bus: DG is installed exactly when it beats lost load") {
  // Base case covered by the unit; the unit is lost in the only scenario.
  const auto net = single_bus(100.0, 100.0, 0.0);
  ScenarioSet set = base_only();
  set.scenarios.push_back(outage("loss", {1}, {}, 1.0));
  EconParams econ = one_hour();
  econ.voll = 100.0;

  econ.dg_invest_cost = 50.0;
  auto plan = solve_hardening(net, set, econ);
  CHECK(plan.dg_capacity.at(1) == doctest::Approx(100.0).epsilon(1e-9));
  CHECK(plan.total_curtailment() == doctest::Approx(0.0));
  CHECK(plan.objective == doctest::Approx(5000.0));

  econ.dg_invest_cost = 150.0;
  plan = solve_hardening(net, set, econ);
  CHECK(plan.dg_capacity.empty());
  CHECK(plan.scenario_curtailment[1] == doctest::Approx(100.0));
  CHECK(plan.objective == doctest::Approx(10000.0));

  // Four hours at weight 1: break-even at IC = 400.
  econ.load_multipliers = {1.0, 1.0, 1.0, 1.0};
  econ.dg_invest_cost = 390.0;
  CHECK(solve_hardening(net, set, econ).dg_capacity.size() == 1);
  econ.dg_invest_cost = 410.0;
  CHECK(solve_hardening(net, set, econ).dg_capacity.empty());
}

TEST_CASE("single bus short of capacity installs the gap") {
  const auto net = single_bus(100.0, 50.0, 10.0);
  EconParams econ = one_hour();
  const auto plan = solve_hardening(net, base_only(), econ);
  CHECK(plan.dg_capacity.at(1) == doctest::Approx(50.0));
  CHECK(plan.invest_cost == doctest::Approx(50.0 * 50.0));
  CHECK(plan.objective == doctest::Approx(2500.0 + 10.0 * 50.0));
}

TEST_CASE("zero load gives the all-zero optimum at no-load cost") {
  net::Network net = six_bus();
  for (auto& b : net.buses) b.base_load = 0.0;
  for (auto& g : net.generators) g.p_min = 0.0;
  const EconParams econ;
  const auto model = build_model(net, base_only(), econ);
  const auto sol = lp::solve(model.lp);
  REQUIRE(sol.optimal());
  for (double v : sol.primal) CHECK(v == doctest::Approx(0.0));
  CHECK(model.objective_offset == doctest::Approx(24 * (10.0 + 5.0 + 8.0)));
  const auto plan = solve_hardening(net, base_only(), econ);
  CHECK(plan.objective == doctest::Approx(24 * 23.0));
}

TEST_CASE("118-bus model size follows the block formula") {
  const auto net = net::parse_matpower(read_file("data/case118.m"));
  ScenarioSet set = base_only();
  for (int k = 0; k < 3; ++k) set.scenarios.push_back(outage("p", {1 + k}, {10 + k}, 1.0 / 3));
  const EconParams econ;
  const auto model = build_model(net, set, econ);
  const int T = 24, S = 4, G = 54, L = 186, B = 118;
  CHECK(model.lp.num_variables() == T * S * (G + L + 3 * B) + B);
  CHECK(model.index.num_variables() == model.lp.num_variables());
  CHECK(model.index.dispatch(53, 23, 3) + 1 == model.index.flow(0, 23, 3));
  CHECK(model.index.dg_output(117, 23, 3) + 1 == model.index.dg_capacity(0));
}

TEST_CASE("two-bus islanding instance matches the hand solution") {
  const auto net = two_bus();
  ScenarioSet set = base_only();
  set.scenarios.push_back(outage("cut", {}, {1}, 1.0));
  EconParams econ = one_hour();
  econ.voll = 100.0;
  econ.dg_invest_cost = 50.0;
  const auto plan = solve_hardening(net, set, econ);
  REQUIRE(plan.dg_capacity.count(2) == 1);
  CHECK(std::abs(plan.dg_capacity.at(2) - 10.0) <= 1e-6);
  CHECK(std::abs(plan.invest_cost - 500.0) <= 1e-6);
  CHECK(plan.total_curtailment() <= 1e-6);

  econ.dg_invest_cost = 150.0;
  const auto skip = solve_hardening(net, set, econ);
  CHECK(skip.dg_capacity.empty());
  CHECK(skip.scenario_curtailment[1] == doctest::Approx(10.0));
  CHECK(skip.average_unserved_cost == doctest::Approx(1000.0));
}

TEST_CASE("average unserved cost is VOLL times mean contingency energy") {
  // Three radial loads, each isolated by its own scenario.
  net::Network n;
  n.name = "radial";
  n.buses = {{1, 0.0, true}, {2, 43338.0, false}, {3, 47143.0, false}, {4, 44393.0, false}};
  n.generators = {{1, 1, 0.0, 200000.0, 1.0, 0.0, 200000.0}};
  n.branches = {{1, 1, 2, 0.001, 90000.0}, {2, 1, 3, 0.001, 90000.0}, {3, 1, 4, 0.001, 90000.0}};
  ScenarioSet set = base_only();
  for (int k = 1; k <= 3; ++k) set.scenarios.push_back(outage("path", {}, {k}, 1.0 / 3));
  EconParams econ = one_hour();
  econ.voll = 100.0;
  econ.dg_candidates = std::vector<int>{};
  const auto plan = evaluate_plan(n, set, econ, {});
  CHECK(plan.scenario_curtailment[1] == doctest::Approx(43338.0));
  CHECK(plan.scenario_curtailment[2] == doctest::Approx(47143.0));
  CHECK(plan.scenario_curtailment[3] == doctest::Approx(44393.0));
  CHECK(plan.average_unserved_cost == doctest::Approx(4495800.0));
  CHECK(plan.weighted_unserved_cost == doctest::Approx(4495800.0));
}

TEST_CASE("optimum satisfies balance, outage and curtailment invariants") {
  const auto net = six_bus();
  const auto set = six_bus_storms();
  EconParams econ;
  econ.dg_invest_cost = 2000.0;  // expensive enough to leave some curtailment
  const auto plan = solve_hardening(net, set, econ);
  const auto& d = plan.diagnostics;
  CHECK(d.max_balance_residual <= 1e-6);
  CHECK(d.max_outaged_dispatch <= 1e-8);
  CHECK(d.max_outaged_flow <= 1e-8);
  CHECK(d.max_flow_angle_residual <= 1e-6);
  CHECK(d.max_base_curtailment == 0.0);
  CHECK(d.max_curtailment_excess <= 1e-9);
  CHECK(plan.total_curtailment() > 0.0);
  double invest = 0.0;
  for (const auto& [bus, cap] : plan.dg_capacity) invest += econ.invest_at(bus) * cap;
  CHECK(invest == doctest::Approx(plan.invest_cost));
}

TEST_CASE("redispatch stays within the deviation limit") {
  const auto net = six_bus();
  const auto set = six_bus_storms();
  EconParams econ;
  econ.dg_candidates = std::vector<int>{};
  const auto model = build_model(net, set, econ);
  const auto sol = lp::solve(model.lp);
  REQUIRE(sol.optimal());
  for (int t = 0; t < model.index.hours; ++t) {
    for (int s = 1; s < model.index.scenarios; ++s) {
      for (int g = 0; g < model.index.num_gens; ++g) {
        if (!model.generator_up[s][g]) continue;
        const double dev = sol.primal[model.index.dispatch(g, t, 0)] -
                           sol.primal[model.index.dispatch(g, t, s)];
        CHECK(std::abs(dev) <= net.generators[g].ramp_dev + 1e-7);
      }
    }
  }
}

TEST_CASE("budget ladder is monotone and budget 0 equals a zero-capacity evaluation") {
  const auto net = six_bus();
  const auto set = six_bus_storms();
  EconParams econ;
  econ.dg_invest_cost = 500.0;
  const std::vector<std::optional<double>> budgets = {0.0, 5e3, 1e4, 2e4, 4e4, std::nullopt};
  const auto rows = budget_sweep(net, set, econ, budgets);
  REQUIRE(rows.size() == budgets.size());
  double prev_curt = 1e300;
  double prev_obj = 1e300;
  double prev_avg = 1e300;
  for (const auto& r : rows) {
    REQUIRE(r.ok);
    double curt = 0.0;
    for (double c : r.scenario_curtailment) curt += c;
    CHECK(curt <= prev_curt + 1e-6);
    CHECK(r.objective <= prev_obj + 1e-6);
    CHECK(r.average_unserved_cost <= prev_avg + 1e-6);
    if (r.budget) CHECK(r.invest_used <= *r.budget + 1e-6);
    prev_curt = curt;
    prev_obj = r.objective;
    prev_avg = r.average_unserved_cost;
  }
  CHECK(rows.front().scenario_curtailment[0] > rows.back().scenario_curtailment[0]);

  const auto zero = evaluate_plan(net, set, econ, {});
  CHECK(rows[0].objective == doctest::Approx(zero.objective));
  CHECK(rows[0].scenario_curtailment[0] == doctest::Approx(zero.scenario_curtailment[1]));
  CHECK(rows[0].scenario_curtailment[1] == doctest::Approx(zero.scenario_curtailment[2]));

  // Rows filled from a slack plan agree with direct solves.
  for (std::size_t k = 1; k < rows.size(); ++k) {
    EconParams e = econ;
    e.budget = budgets[k];
    CHECK(solve_hardening(net, set, e).objective == doctest::Approx(rows[k].objective));
  }
}

TEST_CASE("evaluating the unlimited plan reproduces it") {
  const auto net = six_bus();
  const auto set = six_bus_storms();
  const EconParams econ;
  const auto plan = solve_hardening(net, set, econ);
  CHECK(plan.total_curtailment() <= 1e-6);
  CHECK(plan.invest_cost > 0.0);
  const auto again = evaluate_plan(net, set, econ, plan.dg_capacity);
  CHECK(again.total_curtailment() <= 1e-6);
  CHECK(again.objective == doctest::Approx(plan.objective));
}

TEST_CASE("unweighted mode prices each scenario at full weight") {
  const auto net = single_bus(100.0, 100.0, 0.0);
  ScenarioSet set = base_only();
  set.scenarios.push_back(outage("a", {1}, {}, 0.5));
  set.scenarios.push_back(outage("b", {1}, {}, 0.5));
  EconParams econ = one_hour();
  econ.dg_invest_cost = 1e9;
  CHECK(solve_hardening(net, set, econ).weighted_unserved_cost == doctest::Approx(10000.0));
  econ.weighting = ScenarioWeighting::kUnweighted;
  CHECK(solve_hardening(net, set, econ).weighted_unserved_cost == doctest::Approx(20000.0));
}

TEST_CASE("model input errors") {
  const auto net = two_bus();
  const EconParams econ;
  ScenarioSet set = base_only();
  set.scenarios.push_back(outage("bad", {7}, {}, 1.0));
  CHECK_THROWS_AS(build_model(net, set, econ), InputError);
  set.scenarios.back() = outage("bad", {}, {9}, 1.0);
  CHECK_THROWS_AS(build_model(net, set, econ), InputError);
  CHECK_THROWS_AS(build_model(net, ScenarioSet{}, econ), InputError);
  ScenarioSet no_base;
  no_base.scenarios.push_back(outage("x", {1}, {}, 1.0));
  CHECK_THROWS_AS(build_model(net, no_base, econ), InputError);

  EconParams bad = econ;
  bad.voll = -1.0;
  CHECK_THROWS_AS(build_model(net, base_only(), bad), InputError);
  bad = econ;
  bad.load_multipliers.clear();
  CHECK_THROWS_AS(build_model(net, base_only(), bad), InputError);
  bad = econ;
  bad.dg_invest_cost = 0.0;
  CHECK_THROWS_AS(build_model(net, base_only(), bad), InputError);

  CHECK_THROWS_AS(budget_sweep(net, base_only(), econ, {1e3, 0.0}), InputError);
  CHECK_THROWS_AS(budget_sweep(net, base_only(), econ, {std::nullopt, 0.0}), InputError);
  CHECK_THROWS_AS(evaluate_plan(net, base_only(), econ, {{2, -1.0}}), InputError);
}

TEST_CASE("infeasible base case is reported as a solver error") {
  // Unit minimum above the only load cannot be balanced without curtailment.
  net::Network net = single_bus(10.0, 100.0, 1.0);
  net.generators[0].p_min = 50.0;
  EconParams econ = one_hour();
  CHECK_THROWS_AS(solve_hardening(net, base_only(), econ), SolverError);
}

TEST_CASE("sweep CSV layout") {
  SweepRow a;
  a.budget = 0.0;
  a.scenario_curtailment = {12.5, 0.0};
  a.average_unserved_cost = 625.4;
  a.ok = true;
  SweepRow b;
  b.scenario_curtailment = {0.0, 0.0};
  b.invest_used = 1234.6;
  b.ok = true;
  CHECK(sweep_csv({a, b}) ==
        "budget,curtail_path_1_mwh,curtail_path_2_mwh,avg_unserved_cost,invest_used,status\n"
        "0,12.500,0.000,625,0,ok\n"
        "unlimited,0.000,0.000,0,1235,ok\n");
}

TEST_CASE("base-only model dispatch matches an independent DC-OPF") {
  std::mt19937_64 rng(2024);
  int checked = 0;
  int binding_cases = 0;
  while (checked < 5) {
    const auto [net, dc] = support::random_dc_network(rng);
    const int ng = static_cast<int>(net.generators.size());
    const auto expected = oracle::solve_dcopf(dc);
    if (!expected) continue;  // oracle infeasible: draw another network

    EconParams econ = one_hour();
    econ.dg_candidates = std::vector<int>{};
    const auto model = build_model(net, base_only(), econ);
    const auto sol = lp::solve(model.lp);
    REQUIRE(sol.optimal());
    CAPTURE(checked);
    for (int g = 0; g < ng; ++g) {
      CHECK(std::abs(sol.primal[model.index.dispatch(g, 0, 0)] - expected->dispatch[g]) <= 1e-6);
    }
    CHECK(sol.objective == doctest::Approx(expected->cost).epsilon(1e-9));
    for (std::size_t l = 0; l < net.branches.size(); ++l) {
      const double flow = sol.primal[model.index.flow(static_cast<int>(l), 0, 0)];
      if (std::abs(flow) >= net.branches[l].flow_limit - 1e-6) ++binding_cases;
    }
    ++checked;
  }
  // At least one instance is congested, so the flow limits are exercised.
  CHECK(binding_cases > 0);
}
