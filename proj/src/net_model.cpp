#include "gridharden/net_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <queue>
#include <set>
#include <sstream>

#include "gridharden/errors.hpp"

namespace gridharden::net {

int Network::bus_index(int bus_id) const {
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (buses[i].id == bus_id) return static_cast<int>(i);
  }
  throw InputError("unknown bus " + std::to_string(bus_id));
}

const Bus& Network::reference_bus() const {
  for (const auto& bus : buses) {
    if (bus.is_reference) return bus;
  }
  throw InputError("no reference bus");
}

double Network::total_load() const {
  double total = 0.0;
  for (const auto& bus : buses) total += bus.base_load;
  return total;
}

namespace {

// MATPOWER column positions (0-based).
constexpr int kBusColumns = 13;
constexpr int kGenColumns = 10;
constexpr int kBranchColumns = 11;
constexpr int kGenRamp30 = 18;

std::string strip_comments(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool in_comment = false;
  bool in_string = false;
  for (char c : text) {
    if (in_comment) {
      if (c == '\n') {
        in_comment = false;
        out.push_back(c);
      }
      continue;
    }
    if (c == '\'') in_string = !in_string;
    if (c == '\n') in_string = false;
    if (c == '%' && !in_string) {
      in_comment = true;
      continue;
    }
    out.push_back(c);
  }
  return out;
}

double parse_double(std::string_view token, const std::string& where) {
  double value = 0.0;
  std::string buffer(token);
  if (buffer == "Inf" || buffer == "inf") return INFINITY;
  if (buffer == "-Inf" || buffer == "-inf") return -INFINITY;
  const char* begin = buffer.data();
  const char* end = begin + buffer.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw InputError("malformed number '" + buffer + "' in " + where);
  }
  return value;
}

using Matrix = std::vector<std::vector<double>>;

// Finds `mpc.<name> = [ ... ];` and returns its rows.
bool extract_matrix(const std::string& text, const std::string& name,
                    Matrix& out) {
  const std::string key = "mpc." + name;
  std::size_t pos = 0;
  while ((pos = text.find(key, pos)) != std::string::npos) {
    std::size_t after = pos + key.size();
    const bool word_end =
        after >= text.size() || !(std::isalnum(static_cast<unsigned char>(text[after])) ||
                                  text[after] == '_');
    if (!word_end) {
      pos = after;
      continue;
    }
    const std::size_t eq = text.find('=', after);
    const std::size_t open = text.find('[', after);
    if (eq == std::string::npos || open == std::string::npos) return false;
    const std::size_t close = text.find(']', open);
    if (close == std::string::npos) {
      throw InputError("unterminated matrix block mpc." + name);
    }
    const std::string body = text.substr(open + 1, close - open - 1);
    out.clear();
    std::vector<double> row;
    std::string token;
    const auto flush_token = [&] {
      if (!token.empty()) {
        row.push_back(parse_double(token, "mpc." + name));
        token.clear();
      }
    };
    const auto flush_row = [&] {
      flush_token();
      if (!row.empty()) out.push_back(std::move(row));
      row.clear();
    };
    for (char c : body) {
      if (c == ';' || c == '\n') {
        flush_row();
      } else if (c == ' ' || c == '\t' || c == ',' || c == '\r') {
        flush_token();
      } else {
        token.push_back(c);
      }
    }
    flush_row();
    return true;
  }
  return false;
}

bool extract_scalar(const std::string& text, const std::string& name,
                    double& out) {
  const std::string key = "mpc." + name;
  const std::size_t pos = text.find(key);
  if (pos == std::string::npos) return false;
  const std::size_t eq = text.find('=', pos);
  const std::size_t semi = text.find(';', eq);
  if (eq == std::string::npos || semi == std::string::npos) return false;
  std::string value = text.substr(eq + 1, semi - eq - 1);
  value.erase(std::remove_if(value.begin(), value.end(),
                             [](unsigned char c) { return std::isspace(c); }),
              value.end());
  out = parse_double(value, "mpc." + name);
  return true;
}

void check_columns(const Matrix& rows, const std::string& name, int minimum) {
  if (rows.empty()) return;
  const std::size_t width = rows.front().size();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != width || static_cast<int>(rows[r].size()) < minimum) {
      throw InputError("malformed row " + std::to_string(r + 1) + " in mpc." +
                       name + ": expected " +
                       std::to_string(std::max<int>(minimum, static_cast<int>(width))) +
                       " columns, found " + std::to_string(rows[r].size()));
    }
  }
}

int as_int(double v, const std::string& what) {
  if (v != std::floor(v) || !std::isfinite(v)) {
    throw InputError(what + " must be an integer, got " + std::to_string(v));
  }
  return static_cast<int>(v);
}

void warn(std::vector<std::string>* warnings, std::string message) {
  if (warnings != nullptr) warnings->push_back(std::move(message));
}

}  // namespace

Network parse_matpower(std::string_view text, const ParseOptions& options,
                       std::vector<std::string>* warnings) {
  const std::string clean = strip_comments(text);
  Network network;

  const auto fn = clean.find("function");
  if (fn != std::string::npos) {
    const auto eq = clean.find('=', fn);
    const auto nl = clean.find('\n', fn);
    if (eq != std::string::npos && eq < nl) {
      std::string name = clean.substr(eq + 1, nl - eq - 1);
      name.erase(std::remove_if(name.begin(), name.end(),
                                [](unsigned char c) { return std::isspace(c); }),
                 name.end());
      network.name = name;
    }
  }

  double base = 100.0;
  if (extract_scalar(clean, "baseMVA", base)) {
    if (!(base > 0.0)) throw InputError("baseMVA must be positive");
  }
  network.base_mva = base;

  Matrix bus_rows, gen_rows, branch_rows, cost_rows;
  if (!extract_matrix(clean, "bus", bus_rows)) throw InputError("missing mpc.bus block");
  if (!extract_matrix(clean, "gen", gen_rows)) throw InputError("missing mpc.gen block");
  if (!extract_matrix(clean, "branch", branch_rows)) {
    throw InputError("missing mpc.branch block");
  }
  const bool has_cost = extract_matrix(clean, "gencost", cost_rows);
  check_columns(bus_rows, "bus", kBusColumns);
  check_columns(gen_rows, "gen", kGenColumns);
  check_columns(branch_rows, "branch", kBranchColumns);

  for (const std::string other : {"areas", "dcline", "bus_name", "gentype", "genfuel"}) {
    if (clean.find("mpc." + other) != std::string::npos) {
      warn(warnings, "ignoring unsupported block mpc." + other);
    }
  }

  for (const auto& row : bus_rows) {
    Bus bus;
    bus.id = as_int(row[0], "bus id");
    const int type = as_int(row[1], "bus type");
    bus.is_reference = type == 3;
    bus.base_load = row[2];
    network.buses.push_back(bus);
  }

  std::vector<int> gen_rows_kept;
  for (std::size_t r = 0; r < gen_rows.size(); ++r) {
    const auto& row = gen_rows[r];
    if (row[7] <= 0.0) {
      warn(warnings, "generator row " + std::to_string(r + 1) +
                         " is out of service; skipped");
      continue;
    }
    Generator gen;
    gen.id = static_cast<int>(network.generators.size()) + 1;
    gen.bus = as_int(row[0], "generator bus");
    gen.p_max = row[8];
    gen.p_min = row[9];
    const double ramp = static_cast<int>(row.size()) > kGenRamp30 ? row[kGenRamp30] : 0.0;
    gen.ramp_dev = ramp > 0.0 ? ramp : options.default_ramp_fraction * gen.p_max;
    network.generators.push_back(gen);
    gen_rows_kept.push_back(static_cast<int>(r));
  }

  if (has_cost) {
    if (cost_rows.size() < gen_rows.size()) {
      throw InputError("mpc.gencost has fewer rows than mpc.gen");
    }
    if (cost_rows.size() > gen_rows.size()) {
      warn(warnings, "ignoring reactive-power rows of mpc.gencost");
    }
    bool dropped_quadratic = false;
    for (std::size_t g = 0; g < network.generators.size(); ++g) {
      const int r = gen_rows_kept[g];
      const auto& row = cost_rows[r];
      if (row.size() < 4) throw InputError("malformed row in mpc.gencost");
      const int model = as_int(row[0], "gencost model");
      const int count = as_int(row[3], "gencost n");
      if (static_cast<int>(row.size()) < 4 + (model == 1 ? 2 * count : count)) {
        throw InputError("malformed row " + std::to_string(r + 1) +
                         " in mpc.gencost: too few coefficients");
      }
      auto& gen = network.generators[g];
      if (model == 2) {
        // Coefficients run from the highest power down to the constant.
        for (int k = 0; k < count; ++k) {
          const int power = count - 1 - k;
          const double c = row[4 + k];
          if (power == 1) gen.cost_linear = c;
          if (power == 0) gen.cost_noload = c;
          if (power >= 2 && c != 0.0) dropped_quadratic = true;
        }
      } else if (model == 1) {
        if (count < 2) throw InputError("piecewise gencost needs two points");
        const double x0 = row[4], y0 = row[5];
        const double x1 = row[4 + 2 * (count - 1)], y1 = row[5 + 2 * (count - 1)];
        gen.cost_linear = x1 > x0 ? (y1 - y0) / (x1 - x0) : 0.0;
        gen.cost_noload = y0 - gen.cost_linear * x0;
        warn(warnings, "piecewise-linear cost of generator " +
                           std::to_string(gen.id) + " replaced by its chord");
      } else {
        throw InputError("unknown gencost model " + std::to_string(model));
      }
    }
    if (dropped_quadratic) {
      warn(warnings, "quadratic generator cost terms dropped; costs are linear");
    }
  }

  for (std::size_t r = 0; r < branch_rows.size(); ++r) {
    const auto& row = branch_rows[r];
    if (row[10] <= 0.0) {
      warn(warnings, "branch row " + std::to_string(r + 1) + " is out of service; skipped");
      continue;
    }
    Branch branch;
    branch.id = static_cast<int>(r) + 1;
    branch.from_bus = as_int(row[0], "branch from bus");
    branch.to_bus = as_int(row[1], "branch to bus");
    branch.reactance = row[3];
    branch.flow_limit = row[5] > 0.0 ? row[5] : options.unlimited_flow_limit;
    network.branches.push_back(branch);
  }

  for (auto& w : validate(network)) warn(warnings, std::move(w));
  return network;
}

std::vector<std::string> validate(const Network& network) {
  std::set<int> ids;
  int references = 0;
  for (const auto& bus : network.buses) {
    if (!ids.insert(bus.id).second) {
      throw InputError("duplicate bus id " + std::to_string(bus.id));
    }
    if (bus.is_reference) ++references;
    if (!(bus.base_load >= 0.0) || !std::isfinite(bus.base_load)) {
      throw InputError("bus " + std::to_string(bus.id) + " has negative load");
    }
  }
  if (references == 0) throw InputError("no reference bus");
  if (references > 1) throw InputError("more than one reference bus");

  for (const auto& gen : network.generators) {
    const std::string label = "generator " + std::to_string(gen.id);
    if (!ids.contains(gen.bus)) {
      throw InputError(label + " references missing bus " + std::to_string(gen.bus));
    }
    if (!(gen.p_min >= 0.0) || !(gen.p_min <= gen.p_max) || !std::isfinite(gen.p_max)) {
      throw InputError(label + " violates 0 <= p_min <= p_max");
    }
    if (!(gen.cost_linear >= 0.0)) throw InputError(label + " has negative cost");
    if (!(gen.ramp_dev >= 0.0)) throw InputError(label + " has negative ramp_dev");
  }

  for (const auto& br : network.branches) {
    const std::string label = "branch " + std::to_string(br.id);
    if (!ids.contains(br.from_bus) || !ids.contains(br.to_bus)) {
      throw InputError(label + " references a missing bus");
    }
    if (br.from_bus == br.to_bus) throw InputError(label + " is a self-loop");
    if (!(br.reactance > 0.0)) {
      throw InputError(label + " has zero or negative reactance");
    }
    if (!(br.flow_limit > 0.0)) throw InputError(label + " has nonpositive flow limit");
  }

  std::vector<std::string> warnings;
  if (!network.buses.empty()) {
    std::map<int, std::vector<int>> adjacent;
    for (const auto& br : network.branches) {
      adjacent[br.from_bus].push_back(br.to_bus);
      adjacent[br.to_bus].push_back(br.from_bus);
    }
    std::set<int> seen{network.buses.front().id};
    std::queue<int> frontier;
    frontier.push(network.buses.front().id);
    while (!frontier.empty()) {
      const int b = frontier.front();
      frontier.pop();
      for (int next : adjacent[b]) {
        if (seen.insert(next).second) frontier.push(next);
      }
    }
    if (seen.size() != network.buses.size()) {
      warnings.push_back("network is not connected: " +
                         std::to_string(network.buses.size() - seen.size()) +
                         " buses unreachable from bus " +
                         std::to_string(network.buses.front().id));
    }
  }
  return warnings;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string write_matpower(const Network& network) {
  std::ostringstream out;
  out << "function mpc = " << (network.name.empty() ? "case" : network.name) << "\n";
  out << "mpc.version = '2';\n";
  out << "mpc.baseMVA = " << fmt(network.base_mva) << ";\n\n";
  out << "%% bus_i type Pd Qd Gs Bs area Vm Va baseKV zone Vmax Vmin\n";
  out << "mpc.bus = [\n";
  for (const auto& bus : network.buses) {
    out << '\t' << bus.id << '\t' << (bus.is_reference ? 3 : 1) << '\t'
        << fmt(bus.base_load) << "\t0\t0\t0\t1\t1\t0\t1\t1\t1.06\t0.94;\n";
  }
  out << "];\n\n";
  out << "%% bus Pg Qg Qmax Qmin Vg mBase status Pmax Pmin (11 zeros) ramp_30 ...\n";
  out << "mpc.gen = [\n";
  for (const auto& gen : network.generators) {
    out << '\t' << gen.bus << "\t0\t0\t0\t0\t1\t" << fmt(network.base_mva) << "\t1\t"
        << fmt(gen.p_max) << '\t' << fmt(gen.p_min);
    for (int k = 10; k < kGenRamp30; ++k) out << "\t0";
    out << '\t' << fmt(gen.ramp_dev) << "\t0\t0;\n";
  }
  out << "];\n\n";
  out << "%% fbus tbus r x b rateA rateB rateC ratio angle status angmin angmax\n";
  out << "mpc.branch = [\n";
  for (const auto& br : network.branches) {
    out << '\t' << br.from_bus << '\t' << br.to_bus << "\t0\t" << fmt(br.reactance)
        << "\t0\t" << fmt(br.flow_limit) << "\t0\t0\t0\t0\t1\t-360\t360;\n";
  }
  out << "];\n\n";
  out << "mpc.gencost = [\n";
  for (const auto& gen : network.generators) {
    out << "\t2\t0\t0\t2\t" << fmt(gen.cost_linear) << '\t' << fmt(gen.cost_noload)
        << ";\n";
  }
  out << "];\n";
  return out.str();
}

std::vector<std::array<IncidenceEntry, 2>> incidence(const Network& network) {
  std::vector<std::array<IncidenceEntry, 2>> rows;
  rows.reserve(network.branches.size());
  for (const auto& br : network.branches) {
    rows.push_back({IncidenceEntry{br.from_bus, +1}, IncidenceEntry{br.to_bus, -1}});
  }
  return rows;
}

nlohmann::ordered_json to_json(const Network& network) {
  nlohmann::ordered_json j;
  j["name"] = network.name;
  j["base_mva"] = network.base_mva;
  j["buses"] = nlohmann::ordered_json::array();
  for (const auto& b : network.buses) {
    j["buses"].push_back({{"id", b.id}, {"base_load", b.base_load}, {"is_reference", b.is_reference}});
  }
  j["generators"] = nlohmann::ordered_json::array();
  for (const auto& g : network.generators) {
    j["generators"].push_back({{"id", g.id},
                               {"bus", g.bus},
                               {"p_min", g.p_min},
                               {"p_max", g.p_max},
                               {"cost_linear", g.cost_linear},
                               {"cost_noload", g.cost_noload},
                               {"ramp_dev", g.ramp_dev}});
  }
  j["branches"] = nlohmann::ordered_json::array();
  for (const auto& br : network.branches) {
    j["branches"].push_back({{"id", br.id},
                             {"from_bus", br.from_bus},
                             {"to_bus", br.to_bus},
                             {"reactance", br.reactance},
                             {"flow_limit", br.flow_limit}});
  }
  return j;
}

Network network_from_json(const nlohmann::ordered_json& j) {
  try {
    Network network;
    network.name = j.at("name").get<std::string>();
    network.base_mva = j.at("base_mva").get<double>();
    for (const auto& b : j.at("buses")) {
      network.buses.push_back({b.at("id").get<int>(), b.at("base_load").get<double>(),
                               b.at("is_reference").get<bool>()});
    }
    for (const auto& g : j.at("generators")) {
      network.generators.push_back({g.at("id").get<int>(), g.at("bus").get<int>(),
                                    g.at("p_min").get<double>(), g.at("p_max").get<double>(),
                                    g.at("cost_linear").get<double>(),
                                    g.at("cost_noload").get<double>(),
                                    g.at("ramp_dev").get<double>()});
    }
    for (const auto& br : j.at("branches")) {
      network.branches.push_back({br.at("id").get<int>(), br.at("from_bus").get<int>(),
                                  br.at("to_bus").get<int>(), br.at("reactance").get<double>(),
                                  br.at("flow_limit").get<double>()});
    }
    validate(network);
    return network;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("network JSON: ") + e.what());
  }
}

double distance(const Point& a, const Point& b) {
  return std::hypot(a.x_km - b.x_km, a.y_km - b.y_km);
}

GeoLayout load_geometry(std::string_view csv, const Network& network) {
  GeoLayout layout;
  std::istringstream in{std::string(csv)};
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != "bus_id,x_km,y_km") {
        throw InputError("geometry: expected header 'bus_id,x_km,y_km'");
      }
      header_seen = true;
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 3) {
      throw InputError("geometry line " + std::to_string(line_no) + ": expected 3 fields");
    }
    const std::string where = "geometry line " + std::to_string(line_no);
    const int id = as_int(parse_double(fields[0], where), "bus_id");
    const Point p{parse_double(fields[1], where), parse_double(fields[2], where)};
    if (!std::isfinite(p.x_km) || !std::isfinite(p.y_km)) {
      throw InputError(where + ": non-finite coordinate");
    }
    if (!layout.bus_points.emplace(id, p).second) {
      throw InputError("duplicate bus " + std::to_string(id) + " in geometry");
    }
  }
  if (!header_seen) throw InputError("geometry: empty file");
  for (const auto& bus : network.buses) {
    if (!layout.bus_points.contains(bus.id)) {
      throw InputError("missing bus " + std::to_string(bus.id));
    }
  }
  for (const auto& [id, p] : layout.bus_points) {
    (void)p;
    bool known = false;
    for (const auto& bus : network.buses) known |= bus.id == id;
    if (!known) throw InputError("geometry lists unknown bus " + std::to_string(id));
  }
  for (const auto& gen : network.generators) {
    layout.generator_points.push_back(layout.bus_points.at(gen.bus));
  }
  for (const auto& br : network.branches) {
    const Point& a = layout.bus_points.at(br.from_bus);
    const Point& b = layout.bus_points.at(br.to_bus);
    layout.branch_points.push_back({0.5 * (a.x_km + b.x_km), 0.5 * (a.y_km + b.y_km)});
  }
  return layout;
}

}  // namespace gridharden::net
