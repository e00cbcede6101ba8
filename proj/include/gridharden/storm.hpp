#pragma once

// Forecast hurricane -> per-component features -> predicted states ->
// contingency scenarios. Components are generators and branches.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gridharden/net_model.hpp"
#include "gridharden/outage_ml.hpp"
#include "gridharden/scenario.hpp"
#include "json.hpp"

namespace gridharden::storm {

using net::Point;

struct StormForecast {
  std::string name;
  int category = 1;
  std::vector<Point> path;  // storm center waypoints, km

  void validate() const;  // InputError
};

// Saffir-Simpson band midpoints in mph: 74-95, 96-110, 111-129, 130-156;
// category 5 has no upper edge and uses 157 + 8.
double category_to_wind(int category);

double segment_distance(const Point& p, const Point& a, const Point& b);
// Distance to the polyline through the waypoints; one waypoint means
// plain point distance.
double path_distance(const Point& p, std::span<const Point> path);

enum class ComponentKind { kGenerator, kBranch };
const char* kind_name(ComponentKind kind);

// `index` is the position in Network::generators or Network::branches.
double component_distance(const net::GeoLayout& geo, ComponentKind kind, std::size_t index,
                          std::span<const Point> path);

struct ComponentState {
  ComponentKind kind = ComponentKind::kGenerator;
  int id = 0;  // Generator::id or Branch::id
  bool outage = false;
  double decision_value = 0.0;
  double distance_km = 0.0;
  double wind_mph = 0.0;
};

// One record per generator, then one per branch. The path span may be a
// sub-window of the forecast path.
std::vector<ComponentState> predict_states(const ml::SvmModel& model, const net::Network& network,
                                           const net::GeoLayout& geo, int category,
                                           std::span<const Point> path);
std::vector<ComponentState> predict_states(const ml::SvmModel& model, const net::Network& network,
                                           const net::GeoLayout& geo,
                                           const StormForecast& forecast);

enum class ScenarioPolicy { kPerPath, kWindowed };

struct PredictionWindow {
  std::string label;
  std::vector<ComponentState> states;
};

// Per-path: one window per forecast over its whole path. Windowed: one
// window per run of `window` consecutive waypoints of each forecast.
std::vector<PredictionWindow> prediction_windows(const ml::SvmModel& model,
                                                 const net::Network& network,
                                                 const net::GeoLayout& geo,
                                                 const std::vector<StormForecast>& forecasts,
                                                 ScenarioPolicy policy, int window = 2);

// Base case first, then one scenario per window holding its predicted
// outages; contingency weights are 1 / number of windows.
ScenarioSet build_scenarios(const std::vector<PredictionWindow>& windows);

StormForecast forecast_from_json(const nlohmann::ordered_json& json);
nlohmann::ordered_json to_json(const StormForecast& forecast);

// Header component_id,kind,distance_km,wind_mph,decision_value,predicted.
std::string states_csv(const std::vector<ComponentState>& states);

nlohmann::ordered_json to_json(const ScenarioSet& scenarios);
ScenarioSet scenarios_from_json(const nlohmann::ordered_json& json);

}  // namespace gridharden::storm
