#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "gridharden/errors.hpp"
#include "gridharden/pipeline.hpp"

using namespace gridharden;
namespace pl = gridharden::pipeline;

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out, case_file, geometry, data, model, scenarios;
  std::vector<std::string> forecasts;
  std::optional<int> n_per_class;
  std::optional<double> c;
  std::string policy;
  std::optional<int> window;
  std::string budget, budgets;
  std::optional<double> voll, invest_cost;
  bool unweighted = false;
};

pl::RunConfig resolve(const Flags& f) {
  pl::RunConfig c;
  if (!f.config.empty()) c = pl::load_config(f.config);
  if (f.seed) c.seed = *f.seed;
  if (!f.out.empty()) c.out_dir = f.out;
  if (!f.case_file.empty()) c.case_file = f.case_file;
  if (!f.geometry.empty()) c.geometry = f.geometry;
  if (!f.forecasts.empty()) c.forecasts.assign(f.forecasts.begin(), f.forecasts.end());
  if (!f.data.empty()) c.dataset = f.data;
  if (!f.model.empty()) c.model = f.model;
  if (!f.scenarios.empty()) c.scenarios = f.scenarios;
  if (f.n_per_class) c.spec.n_per_class = *f.n_per_class;
  if (f.c) c.fixed_c = *f.c;
  if (!f.policy.empty()) {
    nlohmann::ordered_json j{{"policy", f.policy}};
    pl::apply_config(c, j);
  }
  if (f.window) c.window = *f.window;
  if (!f.budget.empty()) c.econ.budget = pl::parse_budget(f.budget);
  if (!f.budgets.empty()) c.budgets = pl::parse_budget_list(f.budgets);
  if (f.voll) c.econ.voll = *f.voll;
  if (f.invest_cost) c.econ.dg_invest_cost = *f.invest_cost;
  if (f.unweighted) c.econ.weighting = harden::ScenarioWeighting::kUnweighted;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hurricane outage prediction and DG hardening planner"};
  app.require_subcommand(1);
  Flags f;

  app.add_option("--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", f.seed, "master seed");
  app.add_option("--out", f.out, "output directory (default out)");
  app.add_option("--case", f.case_file, "MATPOWER case file");
  app.add_option("--geometry", f.geometry, "bus layout CSV");
  app.add_option("--data", f.data, "dataset CSV (default <out>/dataset.csv)");
  app.add_option("--model", f.model, "model JSON (default <out>/model.json)");
  app.add_option("--scenarios", f.scenarios, "scenario JSON (default <out>/scenarios.json)");
  app.fallthrough();

  auto* gen = app.add_subcommand("gen-data", "generate the labeled synthetic dataset");
  gen->add_option("--n-per-class", f.n_per_class, "samples per class")->check(CLI::PositiveNumber);

  auto* train = app.add_subcommand("train", "select the penalty, train and test the SVM");
  train->add_option("--c", f.c, "fixed penalty, skips selection")->check(CLI::PositiveNumber);

  auto* predict = app.add_subcommand("predict", "predict component states and build scenarios");
  auto* plan = app.add_subcommand("plan", "solve the hardening plan for one budget");
  auto* sweep = app.add_subcommand("sweep", "solve a ladder of budgets");
  auto* all = app.add_subcommand("run-all", "every step in order");

  for (auto* sub : {predict, all}) {
    sub->add_option("--forecast", f.forecasts, "forecast JSON (repeatable)");
    sub->add_option("--policy", f.policy, "per-path | windowed")
        ->check(CLI::IsMember({"per-path", "windowed"}));
    sub->add_option("--window", f.window, "waypoints per window")->check(CLI::PositiveNumber);
  }
  for (auto* sub : {plan, sweep, all}) {
    sub->add_option("--voll", f.voll, "value of lost load per MWh")->check(CLI::NonNegativeNumber);
    sub->add_option("--invest-cost", f.invest_cost, "DG cost per MW")->check(CLI::NonNegativeNumber);
    sub->add_flag("--unweighted", f.unweighted, "weight every contingency scenario 1");
  }
  for (auto* sub : {plan, all}) sub->add_option("--budget", f.budget, "investment budget or 'unlimited'");
  for (auto* sub : {sweep, all}) {
    sub->add_option("--budgets", f.budgets, "comma-separated budgets, e.g. 0,1e6,unlimited");
  }
  all->add_option("--n-per-class", f.n_per_class, "samples per class")->check(CLI::PositiveNumber);
  all->add_option("--c", f.c, "fixed penalty, skips selection")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const auto config = resolve(f);
    std::string out;
    if (*gen) out = pl::gen_data(config);
    else if (*train) out = pl::train(config);
    else if (*predict) out = pl::predict(config);
    else if (*plan) out = pl::plan(config);
    else if (*sweep) out = pl::sweep(config);
    else out = pl::run_all(config);
    std::fputs(out.c_str(), stdout);
    return 0;
  } catch (const InputError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 2;
  } catch (const SolverError& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
