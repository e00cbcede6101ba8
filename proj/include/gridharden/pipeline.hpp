#pragma once

// File-based pipeline steps behind the command-line tool. Each step reads
// its inputs from disk and writes its outputs into the run directory, so
// steps can be replayed one at a time.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gridharden/hardening.hpp"
#include "gridharden/outage_ml.hpp"
#include "gridharden/storm.hpp"
#include "json.hpp"

namespace gridharden::pipeline {

namespace fs = std::filesystem;

struct RunConfig {
  fs::path case_file = "data/case118.m";
  fs::path geometry = "data/case118_layout.csv";
  std::vector<fs::path> forecasts = {"data/forecasts/path1.json", "data/forecasts/path2.json",
                                     "data/forecasts/path3.json"};
  fs::path out_dir = "out";
  std::uint64_t seed = 1;

  // Inputs of later steps; empty means the file the previous step wrote.
  fs::path dataset;
  fs::path model;
  fs::path scenarios;

  synth::SampleSpec spec;
  synth::Feature bounds = synth::kDefaultBounds;
  double test_fraction = 0.2;
  int cv_folds = 5;
  std::vector<double> c_grid = ml::kDefaultPenaltyGrid;
  std::optional<double> fixed_c;
  ml::TrainOptions train;

  storm::ScenarioPolicy policy = storm::ScenarioPolicy::kPerPath;
  int window = 2;

  harden::EconParams econ;
  std::vector<std::optional<double>> budgets = {0.0, 1e6, 1e7, 1e8, std::nullopt};

  [[nodiscard]] fs::path dataset_path() const { return dataset.empty() ? out_dir / "dataset.csv" : dataset; }
  [[nodiscard]] fs::path model_path() const { return model.empty() ? out_dir / "model.json" : model; }
  [[nodiscard]] fs::path scenarios_path() const {
    return scenarios.empty() ? out_dir / "scenarios.json" : scenarios;
  }
};

// Merges a JSON config object into `config`. Unknown keys are an
// InputError so typos do not pass silently.
void apply_config(RunConfig& config, const nlohmann::ordered_json& json);
RunConfig load_config(const fs::path& path, RunConfig base = {});

// "unlimited" (or "inf") maps to nullopt.
std::optional<double> parse_budget(const std::string& text);
std::vector<std::optional<double>> parse_budget_list(const std::string& text);

// Each step returns a short human-readable summary and throws InputError /
// SolverError on failure.
std::string gen_data(const RunConfig& config);
std::string train(const RunConfig& config);
std::string predict(const RunConfig& config);
std::string plan(const RunConfig& config);
std::string sweep(const RunConfig& config);
std::string run_all(const RunConfig& config);

// Shared helpers, also used by the acceptance runner.
std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);
net::Network load_network(const RunConfig& config);
ScenarioSet load_scenarios(const RunConfig& config);

}  // namespace gridharden::pipeline
