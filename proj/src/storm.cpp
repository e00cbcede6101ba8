#include "gridharden/storm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "gridharden/errors.hpp"

namespace gridharden::storm {

void StormForecast::validate() const {
  if (category < 1 || category > 5) {
    throw InputError("forecast '" + name + "': category " + std::to_string(category) +
                     " out of range 1..5");
  }
  if (path.empty()) throw InputError("forecast '" + name + "': path has no waypoints");
  for (const auto& p : path) {
    if (!std::isfinite(p.x_km) || !std::isfinite(p.y_km)) {
      throw InputError("forecast '" + name + "': non-finite waypoint");
    }
  }
}

double category_to_wind(int category) {
  static constexpr double kWind[] = {84.5, 103.0, 120.0, 143.0, 165.0};
  if (category < 1 || category > 5) {
    throw InputError("category " + std::to_string(category) + " out of range 1..5");
  }
  return kWind[category - 1];
}

double segment_distance(const Point& p, const Point& a, const Point& b) {
  const double dx = b.x_km - a.x_km;
  const double dy = b.y_km - a.y_km;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) {
    t = ((p.x_km - a.x_km) * dx + (p.y_km - a.y_km) * dy) / len2;
    t = std::clamp(t, 0.0, 1.0);
  }
  return std::hypot(p.x_km - (a.x_km + t * dx), p.y_km - (a.y_km + t * dy));
}

double path_distance(const Point& p, std::span<const Point> path) {
  if (path.empty()) throw InputError("path has no waypoints");
  if (path.size() == 1) return net::distance(p, path[0]);
  double best = HUGE_VAL;
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    best = std::min(best, segment_distance(p, path[k], path[k + 1]));
  }
  return best;
}

const char* kind_name(ComponentKind kind) {
  return kind == ComponentKind::kGenerator ? "generator" : "branch";
}

double component_distance(const net::GeoLayout& geo, ComponentKind kind, std::size_t index,
                          std::span<const Point> path) {
  const auto& points = kind == ComponentKind::kGenerator ? geo.generator_points : geo.branch_points;
  if (index >= points.size()) {
    throw InputError(std::string(kind_name(kind)) + " " + std::to_string(index + 1) +
                     " missing from layout");
  }
  return path_distance(points[index], path);
}

std::vector<ComponentState> predict_states(const ml::SvmModel& model, const net::Network& network,
                                           const net::GeoLayout& geo, int category,
                                           std::span<const Point> path) {
  if (!(model.bounds[0] > 0.0 && model.bounds[1] > 0.0)) {
    throw InputError("model has no normalization bounds");
  }
  const double wind = category_to_wind(category);
  std::vector<ComponentState> out;
  out.reserve(network.generators.size() + network.branches.size());
  const auto classify = [&](ComponentKind kind, std::size_t index, int id) {
    ComponentState s;
    s.kind = kind;
    s.id = id;
    s.wind_mph = wind;
    s.distance_km = component_distance(geo, kind, index, path);
    const auto x = synth::normalize_point({wind, s.distance_km}, model.bounds);
    s.decision_value = model.decision_value(x);
    s.outage = model.predict(x) == 1;
    out.push_back(s);
  };
  for (std::size_t g = 0; g < network.generators.size(); ++g) {
    classify(ComponentKind::kGenerator, g, network.generators[g].id);
  }
  for (std::size_t l = 0; l < network.branches.size(); ++l) {
    classify(ComponentKind::kBranch, l, network.branches[l].id);
  }
  return out;
}

std::vector<ComponentState> predict_states(const ml::SvmModel& model, const net::Network& network,
                                           const net::GeoLayout& geo,
                                           const StormForecast& forecast) {
  forecast.validate();
  return predict_states(model, network, geo, forecast.category, forecast.path);
}

std::vector<PredictionWindow> prediction_windows(const ml::SvmModel& model,
                                                 const net::Network& network,
                                                 const net::GeoLayout& geo,
                                                 const std::vector<StormForecast>& forecasts,
                                                 ScenarioPolicy policy, int window) {
  if (forecasts.empty()) throw InputError("no forecasts given");
  std::vector<PredictionWindow> out;
  for (const auto& f : forecasts) {
    f.validate();
    if (policy == ScenarioPolicy::kPerPath) {
      out.push_back({f.name, predict_states(model, network, geo, f)});
      continue;
    }
    if (window < 1 || static_cast<std::size_t>(window) > f.path.size()) {
      throw InputError("window " + std::to_string(window) + " does not fit path of '" + f.name +
                       "' (" + std::to_string(f.path.size()) + " waypoints)");
    }
    const std::span<const Point> path(f.path);
    for (std::size_t start = 0; start + window <= f.path.size(); ++start) {
      out.push_back({f.name + "@" + std::to_string(start) + "-" + std::to_string(start + window - 1),
                     predict_states(model, network, geo, f.category, path.subspan(start, window))});
    }
  }
  return out;
}

ScenarioSet build_scenarios(const std::vector<PredictionWindow>& windows) {
  if (windows.empty()) throw InputError("no predictions to build scenarios from");
  ScenarioSet set = base_only();
  const double weight = 1.0 / static_cast<double>(windows.size());
  for (const auto& w : windows) {
    Scenario s;
    s.label = w.label;
    s.weight = weight;
    for (const auto& c : w.states) {
      if (!c.outage) continue;
      (c.kind == ComponentKind::kGenerator ? s.out_generators : s.out_branches).insert(c.id);
    }
    set.scenarios.push_back(std::move(s));
  }
  return set;
}

StormForecast forecast_from_json(const nlohmann::ordered_json& json) {
  StormForecast f;
  try {
    f.name = json.value("name", std::string("storm"));
    f.category = json.at("category").get<int>();
    for (const auto& p : json.at("path")) {
      if (!p.is_array() || p.size() != 2) throw InputError("forecast waypoint must be [x, y]");
      f.path.push_back({p[0].get<double>(), p[1].get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("forecast: ") + e.what());
  }
  f.validate();
  return f;
}

nlohmann::ordered_json to_json(const StormForecast& forecast) {
  nlohmann::ordered_json j;
  j["name"] = forecast.name;
  j["category"] = forecast.category;
  j["path"] = nlohmann::ordered_json::array();
  for (const auto& p : forecast.path) j["path"].push_back({p.x_km, p.y_km});
  return j;
}

std::string states_csv(const std::vector<ComponentState>& states) {
  std::string out = "component_id,kind,distance_km,wind_mph,decision_value,predicted\n";
  char buf[160];
  for (const auto& s : states) {
    std::snprintf(buf, sizeof buf, "%d,%s,%.3f,%.1f,%.6f,%s\n", s.id, kind_name(s.kind),
                  s.distance_km, s.wind_mph, s.decision_value,
                  s.outage ? "outage" : "operational");
    out += buf;
  }
  return out;
}

nlohmann::ordered_json to_json(const ScenarioSet& scenarios) {
  nlohmann::ordered_json j;
  j["scenarios"] = nlohmann::ordered_json::array();
  for (const auto& s : scenarios.scenarios) {
    j["scenarios"].push_back({{"label", s.label},
                              {"weight", s.weight},
                              {"out_generators", s.out_generators},
                              {"out_branches", s.out_branches}});
  }
  return j;
}

ScenarioSet scenarios_from_json(const nlohmann::ordered_json& json) {
  ScenarioSet set;
  try {
    for (const auto& s : json.at("scenarios")) {
      Scenario sc;
      sc.label = s.value("label", std::string());
      sc.weight = s.value("weight", 1.0);
      sc.out_generators = s.value("out_generators", std::set<int>{});
      sc.out_branches = s.value("out_branches", std::set<int>{});
      if (!(sc.weight > 0.0)) throw InputError("scenario '" + sc.label + "': weight must be positive");
      set.scenarios.push_back(std::move(sc));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("scenario file: ") + e.what());
  }
  if (set.scenarios.empty()) throw InputError("scenario file: no scenarios");
  const auto& base = set.scenarios.front();
  if (!base.out_generators.empty() || !base.out_branches.empty()) {
    throw InputError("scenario file: scenario 0 must be the intact base case");
  }
  return set;
}

}  // namespace gridharden::storm
