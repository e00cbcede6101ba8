#pragma once

#include <set>
#include <string>
#include <vector>

namespace gridharden {

// One storm realization. Component ids refer to Generator::id / Branch::id.
struct Scenario {
  std::string label;
  std::set<int> out_generators;
  std::set<int> out_branches;
  double weight = 1.0;

  bool operator==(const Scenario&) const = default;
};

// Index 0 is always the intact base case with empty outage sets.
struct ScenarioSet {
  std::vector<Scenario> scenarios;

  [[nodiscard]] std::size_t num_contingencies() const {
    return scenarios.empty() ? 0 : scenarios.size() - 1;
  }
  bool operator==(const ScenarioSet&) const = default;
};

// A set holding only the base case.
inline ScenarioSet base_only() {
  ScenarioSet set;
  set.scenarios.push_back({"base", {}, {}, 1.0});
  return set;
}

}  // namespace gridharden
