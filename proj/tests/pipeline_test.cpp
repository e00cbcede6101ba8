#include <algorithm>
#include <filesystem>

#include "doctest.h"
#include "gridharden/errors.hpp"
#include "gridharden/pipeline.hpp"

using namespace gridharden;
namespace pl = gridharden::pipeline;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("gridharden_test_" + name);
  fs::remove_all(dir);
  return dir;
}

// Bus 1 generates, bus 2 consumes 10 MW over one line.
std::string two_bus_case() {
  net::Network n;
  n.name = "two";
  n.buses = {{1, 0.0, true}, {2, 10.0, false}};
  n.generators = {{1, 1, 0.0, 100.0, 20.0, 0.0, 100.0}};
  n.branches = {{1, 1, 2, 0.1, 100.0}};
  return net::write_matpower(n);
}

}  // namespace

TEST_CASE("budget parsing") {
  CHECK(pl::parse_budget("0") == 0.0);
  CHECK(pl::parse_budget("1e6") == 1e6);
  CHECK_FALSE(pl::parse_budget("unlimited").has_value());
  CHECK_FALSE(pl::parse_budget("inf").has_value());
  CHECK_THROWS_AS(pl::parse_budget("-1"), InputError);
  CHECK_THROWS_AS(pl::parse_budget("12abc"), InputError);
  CHECK_THROWS_AS(pl::parse_budget(""), InputError);
  const auto list = pl::parse_budget_list("0,1e6,unlimited");
  REQUIRE(list.size() == 3);
  CHECK(list[1] == 1e6);
  CHECK_FALSE(list[2].has_value());
}

TEST_CASE("config merging rejects unknown keys") {
  pl::RunConfig c;
  pl::apply_config(c, nlohmann::ordered_json::parse(
                          R"({"seed": 7, "budget": "unlimited", "voll": 250, "policy": "windowed",
                              "samples": {"n_per_class": 40}, "budgets": [0, 5e5, "unlimited"]})"));
  CHECK(c.seed == 7);
  CHECK_FALSE(c.econ.budget.has_value());
  CHECK(c.econ.voll == 250.0);
  CHECK(c.policy == storm::ScenarioPolicy::kWindowed);
  CHECK(c.spec.n_per_class == 40);
  CHECK(c.budgets.size() == 3);
  CHECK_THROWS_AS(pl::apply_config(c, nlohmann::ordered_json::parse(R"({"sede": 1})")), InputError);
  CHECK_THROWS_AS(pl::apply_config(c, nlohmann::ordered_json::parse(R"({"policy": "daily"})")),
                  InputError);
  CHECK_THROWS_AS(pl::apply_config(c, nlohmann::ordered_json::parse(R"({"seed": "x"})")), InputError);
}

TEST_CASE("gen-data writes the requested rows and is reproducible") {
  const auto dir = scratch("gen");
  pl::RunConfig c;
  c.out_dir = dir;
  c.spec.n_per_class = 10;
  pl::gen_data(c);
  const auto first = pl::read_text(dir / "dataset.csv");
  CHECK(std::count(first.begin(), first.end(), '\n') == 21);  // header + 20
  CHECK(fs::exists(dir / "dataset.meta.json"));
  pl::gen_data(c);
  CHECK(pl::read_text(dir / "dataset.csv") == first);
  c.seed = 2;
  pl::gen_data(c);
  CHECK(pl::read_text(dir / "dataset.csv") != first);
  fs::remove_all(dir);
}

TEST_CASE("train then predict reproduces byte-identical outputs") {
  const auto dir = scratch("train");
  pl::RunConfig c;
  c.out_dir = dir;
  pl::gen_data(c);
  const auto summary = pl::train(c);
  CHECK(summary.find("Overall accuracy") != std::string::npos);
  const auto model = pl::read_text(dir / "model.json");
  pl::predict(c);
  const auto scenarios = pl::read_text(dir / "scenarios.json");
  CHECK(fs::exists(dir / "states_path1.csv"));

  pl::train(c);
  pl::predict(c);
  CHECK(pl::read_text(dir / "model.json") == model);
  CHECK(pl::read_text(dir / "scenarios.json") == scenarios);

  const auto set = pl::load_scenarios(c);
  CHECK(set.scenarios.size() == 4);

  c.fixed_c = 10.0;
  pl::train(c);
  CHECK(pl::read_text(dir / "model.json") != model);
  fs::remove_all(dir);
}

TEST_CASE("bad inputs surface as input errors") {
  const auto dir = scratch("bad");
  pl::RunConfig c;
  c.out_dir = dir;
  CHECK_THROWS_AS(pl::train(c), InputError);  // no dataset yet
  pl::write_text(dir / "dataset.csv", "wind_norm,dist_norm,label\n");
  CHECK_THROWS_AS(pl::train(c), InputError);

  pl::gen_data(c);
  pl::train(c);
  pl::write_text(dir / "storm.json", R"({"name": "x", "category": 7, "path": [[0, 0]]})");
  c.forecasts = {dir / "storm.json"};
  CHECK_THROWS_AS(pl::predict(c), InputError);
  c.case_file = dir / "missing.m";
  CHECK_THROWS_AS(pl::plan(c), InputError);
  fs::remove_all(dir);
}

TEST_CASE("plan and sweep on the two-bus case") {
  const auto dir = scratch("plan");
  pl::RunConfig c;
  c.out_dir = dir;
  c.case_file = dir / "two.m";
  pl::write_text(c.case_file, two_bus_case());
  ScenarioSet set = base_only();
  set.scenarios.push_back({"cut", {}, {1}, 1.0});
  pl::write_text(dir / "scenarios.json", storm::to_json(set).dump());
  c.econ.load_multipliers = {1.0};

  pl::plan(c);
  const auto plan = nlohmann::ordered_json::parse(pl::read_text(dir / "plan.json"));
  CHECK(plan["invest_cost"].get<double>() == doctest::Approx(500.0));
  const auto before = pl::read_text(dir / "plan.json");
  pl::plan(c);
  CHECK(pl::read_text(dir / "plan.json") == before);

  c.budgets = {0.0, 200.0, std::nullopt};
  pl::sweep(c);
  const auto csv = pl::read_text(dir / "sweep.csv");
  CHECK(csv.find("unlimited,0.000") != std::string::npos);
  CHECK(csv.find("0,10.000") != std::string::npos);
  fs::remove_all(dir);
}
