#pragma once

// Transmission network data: buses, generators, branches, a MATPOWER case
// reader for the subset needed by DC studies, and planar bus geometry.
//
// Units after parsing: power in MW, costs in currency/MWh (linear) and
// currency/h (no-load), reactance in per-unit on `base_mva`. A DC branch
// flow in MW is base_mva * (theta_from - theta_to) / reactance.

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace gridharden::net {

struct Bus {
  int id = 0;
  double base_load = 0.0;  // MW
  bool is_reference = false;

  bool operator==(const Bus&) const = default;
};

struct Generator {
  int id = 0;
  int bus = 0;
  double p_min = 0.0;
  double p_max = 0.0;
  double cost_linear = 0.0;  // per MWh
  double cost_noload = 0.0;  // per hour committed
  double ramp_dev = 0.0;     // MW, base case vs. any contingency

  bool operator==(const Generator&) const = default;
};

struct Branch {
  int id = 0;
  int from_bus = 0;
  int to_bus = 0;
  double reactance = 0.0;   // per-unit
  double flow_limit = 0.0;  // MW

  bool operator==(const Branch&) const = default;
};

struct Network {
  std::string name;
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Generator> generators;
  std::vector<Branch> branches;

  bool operator==(const Network&) const = default;

  // Position of a bus id in `buses`; throws InputError if absent.
  [[nodiscard]] int bus_index(int bus_id) const;
  [[nodiscard]] const Bus& reference_bus() const;
  [[nodiscard]] double total_load() const;
  // MW carried per radian of angle difference.
  [[nodiscard]] double flow_per_radian(const Branch& branch) const {
    return base_mva / branch.reactance;
  }
};

struct ParseOptions {
  // MATPOWER uses rateA = 0 for "unlimited"; such branches get this limit.
  double unlimited_flow_limit = 9900.0;
  // Used when a generator has no ramp_30 entry: ramp_dev = fraction * p_max.
  double default_ramp_fraction = 0.5;
};

// Reads the bus/gen/branch/gencost blocks of a MATPOWER case. Other blocks
// are skipped and reported in `warnings` when provided. Throws InputError.
Network parse_matpower(std::string_view text, const ParseOptions& options = {},
                       std::vector<std::string>* warnings = nullptr);

// Writes a MATPOWER case that parse_matpower reads back to the same Network.
std::string write_matpower(const Network& network);

// Throws InputError on an invalid network. Returns non-fatal findings such as
// a disconnected topology.
std::vector<std::string> validate(const Network& network);

struct IncidenceEntry {
  int bus = 0;   // bus id
  int sign = 0;  // +1 at from_bus, -1 at to_bus
};

// One pair per branch, in branch order.
std::vector<std::array<IncidenceEntry, 2>> incidence(const Network& network);

// Canonical JSON (fixed key order, branch/gen/bus order preserved).
nlohmann::ordered_json to_json(const Network& network);
Network network_from_json(const nlohmann::ordered_json& json);

struct Point {
  double x_km = 0.0;
  double y_km = 0.0;

  bool operator==(const Point&) const = default;
};

double distance(const Point& a, const Point& b);

// Bus coordinates plus the derived representative point of every component:
// a generator sits at its bus, a branch at the midpoint of its end buses.
struct GeoLayout {
  std::map<int, Point> bus_points;
  std::vector<Point> generator_points;  // parallel to Network::generators
  std::vector<Point> branch_points;     // parallel to Network::branches

  [[nodiscard]] std::size_t num_component_points() const {
    return generator_points.size() + branch_points.size();
  }
};

// CSV with header `bus_id,x_km,y_km`, one row per bus of `network`.
GeoLayout load_geometry(std::string_view csv, const Network& network);

}  // namespace gridharden::net
