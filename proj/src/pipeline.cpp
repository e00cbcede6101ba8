#include "gridharden/pipeline.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "gridharden/errors.hpp"

namespace gridharden::pipeline {

namespace {

fs::path meta_path(const fs::path& dataset) {
  fs::path p = dataset;
  p.replace_extension(".meta.json");
  return p;
}

nlohmann::ordered_json read_json(const fs::path& path) {
  try {
    return nlohmann::ordered_json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
  write_text(path, j.dump(2) + "\n");
}

template <typename T>
void take(const nlohmann::ordered_json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

storm::ScenarioPolicy parse_policy(const std::string& s) {
  if (s == "per-path") return storm::ScenarioPolicy::kPerPath;
  if (s == "windowed") return storm::ScenarioPolicy::kWindowed;
  throw InputError("unknown scenario policy '" + s + "' (per-path | windowed)");
}

std::string budget_label(const std::optional<double>& b) {
  if (!b) return "unlimited";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.0f", *b);
  return buf;
}

// CSV outputs carry their provenance in a JSON sidecar.
void write_sidecar(const fs::path& csv, nlohmann::ordered_json meta) {
  fs::path p = csv;
  p.replace_extension(".meta.json");
  write_json(p, meta);
}

std::string file_label(std::string s) {
  for (char& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  }
  return s;
}

harden::EconParams econ_for(const RunConfig& config, const net::Network& network) {
  harden::EconParams e = config.econ;
  // Validate candidate ids early; an unknown bus is an input error.
  if (e.dg_candidates) {
    for (int bus : *e.dg_candidates) (void)network.bus_index(bus);
  }
  return e;
}

}  // namespace

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw InputError("cannot create " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw InputError("write failed for " + path.string());
}

void apply_config(RunConfig& c, const nlohmann::ordered_json& j) {
  if (!j.is_object()) throw InputError("config must be a JSON object");
  static const std::set<std::string> known = {
      "case", "geometry", "forecasts", "out_dir", "seed", "dataset", "model", "scenarios",
      "samples", "bounds", "test_fraction", "cv_folds", "c_grid", "c", "kkt_tolerance",
      "max_passes", "policy", "window", "voll", "dg_invest_cost", "budget", "budgets",
      "load_multipliers", "unweighted", "dg_candidates", "price_scenario_dispatch"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw InputError("config: unknown key '" + key + "'");
  }
  try {
    if (j.contains("case")) c.case_file = j["case"].get<std::string>();
    if (j.contains("geometry")) c.geometry = j["geometry"].get<std::string>();
    if (j.contains("forecasts")) {
      c.forecasts.clear();
      for (const auto& f : j["forecasts"]) c.forecasts.emplace_back(f.get<std::string>());
    }
    if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("dataset")) c.dataset = j["dataset"].get<std::string>();
    if (j.contains("model")) c.model = j["model"].get<std::string>();
    if (j.contains("scenarios")) c.scenarios = j["scenarios"].get<std::string>();
    take(j, "seed", c.seed);
    if (j.contains("samples")) c.spec = synth::spec_from_json(j["samples"], c.spec);
    take(j, "bounds", c.bounds);
    take(j, "test_fraction", c.test_fraction);
    take(j, "cv_folds", c.cv_folds);
    take(j, "c_grid", c.c_grid);
    if (j.contains("c")) c.fixed_c = j["c"].get<double>();
    take(j, "kkt_tolerance", c.train.kkt_tolerance);
    take(j, "max_passes", c.train.max_passes);
    if (j.contains("policy")) c.policy = parse_policy(j["policy"].get<std::string>());
    take(j, "window", c.window);
    take(j, "voll", c.econ.voll);
    take(j, "dg_invest_cost", c.econ.dg_invest_cost);
    if (j.contains("budget")) {
      const auto& b = j["budget"];
      c.econ.budget = b.is_string() ? parse_budget(b.get<std::string>())
                                    : std::optional<double>(b.get<double>());
    }
    if (j.contains("budgets")) {
      c.budgets.clear();
      for (const auto& b : j["budgets"]) {
        c.budgets.push_back(b.is_string() ? parse_budget(b.get<std::string>())
                                          : std::optional<double>(b.get<double>()));
      }
    }
    take(j, "load_multipliers", c.econ.load_multipliers);
    if (j.contains("unweighted") && j["unweighted"].get<bool>()) {
      c.econ.weighting = harden::ScenarioWeighting::kUnweighted;
    }
    if (j.contains("dg_candidates")) {
      const auto& d = j["dg_candidates"];
      if (d.is_null()) {
        c.econ.dg_candidates.reset();
      } else {
        c.econ.dg_candidates = d.get<std::vector<int>>();
      }
    }
    take(j, "price_scenario_dispatch", c.econ.price_scenario_dispatch);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
}

RunConfig load_config(const fs::path& path, RunConfig base) {
  apply_config(base, read_json(path));
  return base;
}

std::optional<double> parse_budget(const std::string& text) {
  if (text == "unlimited" || text == "inf") return std::nullopt;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty() || !std::isfinite(v) || v < 0.0) {
    throw InputError("bad budget '" + text + "' (nonnegative number or 'unlimited')");
  }
  return v;
}

std::vector<std::optional<double>> parse_budget_list(const std::string& text) {
  std::vector<std::optional<double>> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_budget(item));
  if (out.empty()) throw InputError("empty budget list");
  return out;
}

net::Network load_network(const RunConfig& config) {
  std::vector<std::string> warnings;
  auto network = net::parse_matpower(read_text(config.case_file), {}, &warnings);
  for (const auto& w : net::validate(network)) warnings.push_back(w);
  for (const auto& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  return network;
}

ScenarioSet load_scenarios(const RunConfig& config) {
  return storm::scenarios_from_json(read_json(config.scenarios_path()));
}

std::string gen_data(const RunConfig& config) {
  synth::SampleSpec spec = config.spec;
  spec.seed = config.seed;
  spec.validate();
  const auto data = synth::normalize(synth::generate_samples(spec), config.bounds);
  const auto path = config.dataset_path();
  write_text(path, synth::to_csv(data));
  write_json(meta_path(path), synth::metadata(spec, config.bounds));
  return "wrote " + std::to_string(data.size()) + " samples to " + path.string() + "\n";
}

std::string train(const RunConfig& config) {
  const auto data_path = config.dataset_path();
  auto data = synth::from_csv(read_text(data_path));
  if (data.size() == 0) throw InputError(data_path.string() + ": no samples");
  data.bounds = config.bounds;
  std::uint64_t data_seed = config.seed;
  if (fs::exists(meta_path(data_path))) {
    const auto meta = read_json(meta_path(data_path));
    if (meta.contains("bounds")) data.bounds = meta["bounds"].get<synth::Feature>();
  }

  ml::ExperimentConfig ec;
  ec.spec.seed = config.seed;
  ec.bounds = data.bounds;
  ec.test_fraction = config.test_fraction;
  ec.cv_folds = config.cv_folds;
  ec.c_grid = config.c_grid;
  ec.fixed_c = config.fixed_c;
  ec.train = config.train;
  const auto r = ml::run_experiment(data, ec);

  auto j = ml::model_to_json(r.model);
  j["seed"] = data_seed;
  if (r.selection) {
    nlohmann::ordered_json scores = nlohmann::ordered_json::array();
    for (const auto& s : r.selection->scores) {
      scores.push_back({{"c", s.c},
                        {"cv_accuracy", s.accuracy ? nlohmann::ordered_json(*s.accuracy)
                                                   : nlohmann::ordered_json(nullptr)}});
    }
    j["penalty_selection"] = {{"folds", config.cv_folds}, {"best_c", r.selection->best_c},
                              {"scores", scores}};
  }
  j["test_confusion"] = r.confusion.to_json();
  write_json(config.model_path(), j);
  const std::string report = r.confusion.report();
  write_text(config.out_dir / "confusion.txt", report);

  std::string summary;
  if (r.selection) {
    for (const auto& s : r.selection->scores) {
      char buf[96];
      if (s.accuracy) {
        std::snprintf(buf, sizeof buf, "c=%-6g cv accuracy %.2f%%\n", s.c, 100.0 * *s.accuracy);
      } else {
        std::snprintf(buf, sizeof buf, "c=%-6g failed\n", s.c);
      }
      summary += buf;
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "selected c=%g (%s)\n", r.model.c,
                r.model.converged ? "converged" : "NOT converged");
  summary += buf;
  return summary + report;
}

std::string predict(const RunConfig& config) {
  const auto model = ml::model_from_json(read_json(config.model_path()));
  const auto network = load_network(config);
  const auto geo = net::load_geometry(read_text(config.geometry), network);
  if (config.forecasts.empty()) throw InputError("no forecast files given");
  std::vector<storm::StormForecast> forecasts;
  for (const auto& f : config.forecasts) {
    try {
      forecasts.push_back(storm::forecast_from_json(read_json(f)));
    } catch (const InputError& e) {
      throw InputError(f.string() + ": " + e.what());
    }
  }
  const auto windows =
      storm::prediction_windows(model, network, geo, forecasts, config.policy, config.window);
  std::string summary;
  for (const auto& w : windows) {
    const auto path = config.out_dir / ("states_" + file_label(w.label) + ".csv");
    write_text(path, storm::states_csv(w.states));
    write_sidecar(path, {{"window", w.label}, {"model", config.model_path().string()}, {"seed", config.seed}});
    int g = 0, b = 0;
    for (const auto& s : w.states) {
      if (s.outage) ++(s.kind == storm::ComponentKind::kGenerator ? g : b);
    }
    summary += w.label + ": " + std::to_string(g + b) + " components predicted out (" +
               std::to_string(g) + " generators, " + std::to_string(b) + " branches)\n";
  }
  const auto set = storm::build_scenarios(windows);
  auto j = storm::to_json(set);
  j["seed"] = config.seed;
  write_json(config.scenarios_path(), j);
  summary += "wrote " + std::to_string(set.scenarios.size()) + " scenarios (base + " +
             std::to_string(set.num_contingencies()) + ") to " + config.scenarios_path().string() +
             "\n";
  return summary;
}

std::string plan(const RunConfig& config) {
  const auto network = load_network(config);
  const auto set = load_scenarios(config);
  const auto econ = econ_for(config, network);
  const auto result = harden::solve_hardening(network, set, econ);
  auto j = harden::to_json(result);
  j["budget"] = econ.budget ? nlohmann::ordered_json(*econ.budget) : nlohmann::ordered_json("unlimited");
  j["seed"] = config.seed;
  const auto path = config.out_dir / "plan.json";
  write_json(path, j);
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "budget %s: DG at %zu buses, invest %.0f, curtailment %.3f MWh, "
                "average unserved cost %.0f\n",
                budget_label(econ.budget).c_str(), result.dg_capacity.size(), result.invest_cost,
                result.total_curtailment(), result.average_unserved_cost);
  std::fprintf(stderr, "plan solved in %.1f s (%lld iterations)\n", result.solve_seconds,
               static_cast<long long>(result.iterations));
  return std::string(buf) + "wrote " + path.string() + "\n";
}

std::string sweep(const RunConfig& config) {
  const auto network = load_network(config);
  const auto set = load_scenarios(config);
  const auto econ = econ_for(config, network);
  const auto rows = harden::budget_sweep(network, set, econ, config.budgets);
  const auto csv = harden::sweep_csv(rows);
  const auto path = config.out_dir / "sweep.csv";
  write_text(path, csv);
  nlohmann::ordered_json budgets = nlohmann::ordered_json::array();
  for (const auto& b : config.budgets) {
    budgets.push_back(b ? nlohmann::ordered_json(*b) : nlohmann::ordered_json("unlimited"));
  }
  write_sidecar(path, {{"budgets", budgets},
                       {"voll", econ.voll},
                       {"dg_invest_cost", econ.dg_invest_cost},
                       {"hours", econ.horizon()},
                       {"scenarios", config.scenarios_path().string()},
                       {"seed", config.seed}});
  bool any_failed = false;
  for (const auto& r : rows) any_failed = any_failed || !r.ok;
  if (any_failed) {
    for (const auto& r : rows) {
      if (!r.ok) std::fprintf(stderr, "budget %s failed: %s\n", budget_label(r.budget).c_str(), r.error.c_str());
    }
    throw SolverError("some budgets failed; see " + path.string());
  }
  return csv + "wrote " + path.string() + "\n";
}

std::string run_all(const RunConfig& config) {
  RunConfig c = config;
  c.dataset.clear();
  c.model.clear();
  c.scenarios.clear();
  std::string out;
  out += "[gen-data]\n" + gen_data(c);
  out += "[train]\n" + train(c);
  out += "[predict]\n" + predict(c);
  out += "[plan]\n" + plan(c);
  out += "[sweep]\n" + sweep(c);
  return out;
}

}  // namespace gridharden::pipeline
