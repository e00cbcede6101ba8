#pragma once

// Scenario-based DC planning model for distributed-generation hardening.
//
// Decision: one DG capacity per candidate bus, shared by every scenario.
// Per hour t and scenario s (s = 0 is the intact base case) the model carries
// unit dispatch, branch flows, bus angles, load curtailment and DG output.
// Base-case dispatch is priced; curtailment in contingency scenarios is
// priced at the value of lost load, weighted per scenario; DG capacity is
// priced at its investment cost and may be capped by a budget.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gridharden/lp_solver.hpp"
#include "gridharden/net_model.hpp"
#include "gridharden/scenario.hpp"
#include "json.hpp"

namespace gridharden::harden {

enum class ScenarioWeighting {
  kFromScenarios,  // use Scenario::weight
  kUnweighted,     // weight 1 for every contingency scenario
};

struct EconParams {
  double voll = 100.0;                 // per MWh, every bus unless overridden
  std::map<int, double> voll_by_bus;
  double dg_invest_cost = 50.0;        // per MW, every candidate bus unless overridden
  std::map<int, double> invest_by_bus;
  std::optional<double> budget;        // nullopt: unlimited
  std::vector<double> load_multipliers = default_load_profile();
  ScenarioWeighting weighting = ScenarioWeighting::kFromScenarios;
  // Buses allowed to host DG; nullopt means every bus with positive load.
  std::optional<std::vector<int>> dg_candidates;
  // Also price contingency-scenario dispatch at weight * cost_linear.
  bool price_scenario_dispatch = false;

  [[nodiscard]] int horizon() const { return static_cast<int>(load_multipliers.size()); }
  [[nodiscard]] double voll_at(int bus) const;
  [[nodiscard]] double invest_at(int bus) const;
  // Throws InputError when an invariant fails.
  void validate() const;

  // 24 hourly multipliers of base load: night trough, evening peak at 1.0
  // held for four hours (17:00-20:59).
  static std::vector<double> default_load_profile();
};

// Commitment flags [generator][hour]; empty means all units on.
using Commitment = std::vector<std::vector<int>>;

// Column/row maps of a built model.
struct ModelIndex {
  int hours = 0;
  int scenarios = 0;
  int num_gens = 0;
  int num_branches = 0;
  int num_buses = 0;

  [[nodiscard]] int block(int t, int s) const { return t * scenarios + s; }
  [[nodiscard]] int block_size() const {
    return num_gens + num_branches + 3 * num_buses;
  }
  [[nodiscard]] int dispatch(int g, int t, int s) const { return block(t, s) * block_size() + g; }
  [[nodiscard]] int flow(int l, int t, int s) const {
    return block(t, s) * block_size() + num_gens + l;
  }
  [[nodiscard]] int angle(int b, int t, int s) const {
    return block(t, s) * block_size() + num_gens + num_branches + b;
  }
  [[nodiscard]] int curtail(int b, int t, int s) const {
    return block(t, s) * block_size() + num_gens + num_branches + num_buses + b;
  }
  [[nodiscard]] int dg_output(int b, int t, int s) const {
    return block(t, s) * block_size() + num_gens + num_branches + 2 * num_buses + b;
  }
  [[nodiscard]] int dg_capacity(int b) const {
    return hours * scenarios * block_size() + b;
  }
  [[nodiscard]] int num_variables() const { return dg_capacity(num_buses); }

  std::vector<int> balance_rows;  // [block(t, s) * num_buses + b]
  int budget_row = -1;
};

struct HardeningModel {
  lp::LpProblem lp;
  ModelIndex index;
  double objective_offset = 0.0;  // no-load cost of committed units
  // Scenario availability and demand, kept for diagnostics.
  std::vector<std::vector<double>> demand;        // [t][b] MW
  std::vector<std::vector<int>> generator_up;     // [s][g]
  std::vector<std::vector<int>> branch_up;        // [s][l]
  std::vector<double> scenario_weight;            // [s], 0 for the base case
};

// Throws InputError on unknown components, a missing base scenario or
// invalid economics.
HardeningModel build_model(const net::Network& network, const ScenarioSet& scenarios,
                           const EconParams& econ, const Commitment& commitment = {});

struct ModelDiagnostics {
  double max_balance_residual = 0.0;       // MW
  double max_outaged_dispatch = 0.0;       // MW, units with UX = 0
  double max_outaged_flow = 0.0;           // MW, branches with UY = 0
  double max_flow_angle_residual = 0.0;    // MW, branches with UY = 1
  double max_base_curtailment = 0.0;       // MW
  double max_curtailment_excess = 0.0;     // MW above demand or below zero
  double max_lp_row_violation = 0.0;
  double max_lp_bound_violation = 0.0;
};

ModelDiagnostics diagnose(const HardeningModel& model, const net::Network& network,
                          std::span<const double> primal);

struct HardeningPlan {
  std::map<int, double> dg_capacity;  // bus id -> MW, zeros omitted
  double invest_cost = 0.0;
  double base_operation_cost = 0.0;   // over the horizon, incl. no-load
  std::vector<double> scenario_curtailment;  // MWh per scenario, [0] = base
  double weighted_unserved_cost = 0.0;       // objective term
  double average_unserved_cost = 0.0;        // VOLL-priced mean over contingencies
  double objective = 0.0;                    // LP objective plus no-load offset
  double annualization_factor = 1.0;         // 8760 / horizon
  lp::SolveStatus status = lp::SolveStatus::kNumericalFailure;
  std::int64_t iterations = 0;
  double solve_seconds = 0.0;
  ModelDiagnostics diagnostics;
  std::string message;

  [[nodiscard]] double total_curtailment() const;
};

// Builds and solves the planning model. Throws SolverError when the LP is
// infeasible, unbounded or fails numerically.
HardeningPlan solve_hardening(const net::Network& network, const ScenarioSet& scenarios,
                              const EconParams& econ, const Commitment& commitment = {},
                              const lp::SolveOptions& options = {});

// Operations-only re-solve with DG capacities fixed (missing buses = 0).
HardeningPlan evaluate_plan(const net::Network& network, const ScenarioSet& scenarios,
                            const EconParams& econ, const std::map<int, double>& capacities,
                            const Commitment& commitment = {},
                            const lp::SolveOptions& options = {});

struct SweepRow {
  std::optional<double> budget;  // nullopt: unlimited
  std::vector<double> scenario_curtailment;  // MWh per contingency scenario
  double average_unserved_cost = 0.0;
  double invest_used = 0.0;
  double objective = 0.0;
  bool ok = false;
  std::string error;
};

// Rows in input order. Budgets must be nonnegative and ascending (unlimited
// last). A plan that leaves its budget unspent is reused for the larger
// budgets instead of re-solving. Solver errors are recorded per row.
std::vector<SweepRow> budget_sweep(const net::Network& network, const ScenarioSet& scenarios,
                                   const EconParams& econ,
                                   const std::vector<std::optional<double>>& budgets,
                                   const Commitment& commitment = {},
                                   const lp::SolveOptions& options = {});

nlohmann::ordered_json to_json(const HardeningPlan& plan);
// CSV: budget,curtail_path_1_mwh,...,avg_unserved_cost,invest_used
std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace gridharden::harden
