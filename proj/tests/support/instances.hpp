#pragma once

// Random instance generators shared by the unit tests and the acceptance
// runner, so both exercise the same families.

#include <algorithm>
#include <random>
#include <vector>

#include "gridharden/lp_solver.hpp"
#include "gridharden/net_model.hpp"
#include "gridharden/outage_ml.hpp"
#include "oracles/dcopf_oracle.hpp"
#include "oracles/lp_vertex_oracle.hpp"

namespace support {

using gridharden::lp::LpProblem;
using gridharden::lp::RowSense;
using gridharden::ml::SvmModel;
using gridharden::synth::Feature;
using gridharden::synth::LabeledDataset;

inline LpProblem to_problem(const oracle::DenseLp& dense) {
  LpProblem lp;
  for (int j = 0; j < dense.n; ++j) {
    lp.add_variable(dense.lower[j], dense.upper[j], dense.cost[j]);
  }
  for (std::size_t i = 0; i < dense.a.size(); ++i) {
    std::vector<int> cols;
    std::vector<double> vals;
    for (int j = 0; j < dense.n; ++j) {
      if (dense.a[i][j] != 0.0) {
        cols.push_back(j);
        vals.push_back(dense.a[i][j]);
      }
    }
    const RowSense sense = dense.sense[i] == 'L'   ? RowSense::kLessEqual
                           : dense.sense[i] == 'G' ? RowSense::kGreaterEqual
                                                   : RowSense::kEqual;
    lp.add_row(cols, vals, sense, dense.rhs[i]);
  }
  return lp;
}

inline oracle::DenseLp random_lp(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dim(1, 6);
  std::uniform_int_distribution<int> rows(0, 6);
  std::uniform_int_distribution<int> coef(-5, 5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  oracle::DenseLp lp;
  lp.n = dim(rng);
  const int m = rows(rng);
  std::vector<double> anchor(lp.n);
  for (int j = 0; j < lp.n; ++j) {
    lp.lower.push_back(-5.0 * unit(rng));
    lp.upper.push_back(lp.lower.back() + 0.5 + 5.0 * unit(rng));
    lp.cost.push_back(static_cast<double>(coef(rng)));
    anchor[j] = lp.lower[j] + unit(rng) * (lp.upper[j] - lp.lower[j]);
  }
  // Mostly feasible instances: right-hand sides are built around an anchor
  // point, occasionally shifted to make the system infeasible.
  for (int i = 0; i < m; ++i) {
    std::vector<double> row(lp.n);
    double act = 0.0;
    for (int j = 0; j < lp.n; ++j) {
      row[j] = unit(rng) < 0.3 ? 0.0 : static_cast<double>(coef(rng));
      act += row[j] * anchor[j];
    }
    const double pick = unit(rng);
    const char sense = pick < 0.45 ? 'L' : pick < 0.9 ? 'G' : 'E';
    double slack = 3.0 * unit(rng);
    if (unit(rng) < 0.1) slack = -5.0 - 10.0 * unit(rng);
    lp.a.push_back(row);
    lp.sense.push_back(sense);
    lp.rhs.push_back(sense == 'L' ? act + slack : sense == 'G' ? act - slack : act);
  }
  return lp;
}

// Alternating labels; `shift` pushes the classes apart along the first axis.
inline LabeledDataset random_set(std::mt19937_64& rng, int n, double shift) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  LabeledDataset d;
  d.bounds = {160.0, 240.0};
  for (int k = 0; k < n; ++k) {
    const int label = k % 2 == 0 ? 1 : -1;
    Feature x{u(rng), u(rng)};
    x[0] = std::clamp(x[0] + label * shift, 0.0, 1.0);
    d.features.push_back(x);
    d.labels.push_back(label);
  }
  return d;
}

// Worst violation of the dual optimality conditions at the model.
inline double kkt_violation(const SvmModel& m, const LabeledDataset& d) {
  const auto alpha = gridharden::ml::full_duals(m, d.size());
  double worst = 0.0;
  const double c = m.c;
  const double edge = 1e-12 * std::max(1.0, c);
  for (std::size_t k = 0; k < d.size(); ++k) {
    const double margin = d.labels[k] * m.decision_value(d.features[k]);
    if (alpha[k] <= edge) {
      worst = std::max(worst, 1.0 - margin);
    } else if (alpha[k] >= c - edge) {
      worst = std::max(worst, margin - 1.0);
    } else {
      worst = std::max(worst, std::abs(margin - 1.0));
    }
  }
  return worst;
}

struct DcInstance {
  gridharden::net::Network net;
  oracle::DcCase dc;
};

// 3..10 buses on a random spanning tree plus a few chords, 2..4 units.
inline DcInstance random_dc_network(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DcInstance inst;
  auto& net = inst.net;
  auto& dc = inst.dc;
  const int nb = 3 + static_cast<int>(u(rng) * 8);
  net.name = "rand";
  dc.buses = nb;
  dc.reference = 0;
  for (int b = 0; b < nb; ++b) {
    const double load = u(rng) < 0.3 ? 0.0 : 10.0 + 50.0 * u(rng);
    net.buses.push_back({b + 1, load, b == 0});
    dc.load.push_back(load);
  }
  int id = 1;
  const auto add_branch = [&](int f, int t) {
    const double x = 0.02 + 0.13 * u(rng);  // keeps every angle inside +-pi/2
    const double limit = 15.0 + 80.0 * u(rng);
    net.branches.push_back({id++, f + 1, t + 1, x, limit});
    dc.branches.push_back({f, t, net.base_mva / x, limit});
  };
  for (int b = 1; b < nb; ++b) add_branch(static_cast<int>(u(rng) * b), b);
  for (int extra = 0; extra < nb / 3; ++extra) {
    const int f = static_cast<int>(u(rng) * nb);
    const int t = static_cast<int>(u(rng) * nb);
    if (f != t) add_branch(f, t);
  }
  const int ng = 2 + static_cast<int>(u(rng) * 3);
  for (int g = 0; g < ng; ++g) {
    const int bus = static_cast<int>(u(rng) * nb);
    const double pmax = 60.0 + 150.0 * u(rng);
    const double pmin = 5.0 * u(rng);
    const double cost = 10.0 + 40.0 * u(rng);
    net.generators.push_back({g + 1, bus + 1, pmin, pmax, cost, 3.0, pmax});
    dc.gens.push_back({bus, pmin, pmax, cost});
  }
  return inst;
}

}  // namespace support
