#include "gridharden/lp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace gridharden::lp {

int LpProblem::add_variable(double lower, double upper, double cost,
                            std::string name) {
  variables_.push_back({lower, upper, cost, std::move(name)});
  return num_variables() - 1;
}

int LpProblem::add_row(std::span<const int> columns,
                       std::span<const double> values, RowSense sense,
                       double rhs, std::string name) {
  if (columns.size() != values.size()) {
    throw std::invalid_argument("add_row: columns/values size mismatch");
  }
  Row row;
  row.columns.assign(columns.begin(), columns.end());
  row.values.assign(values.begin(), values.end());
  row.sense = sense;
  row.rhs = rhs;
  row.name = std::move(name);
  rows_.push_back(std::move(row));
  return num_rows() - 1;
}

void LpProblem::set_cost(int column, double cost) {
  variables_.at(column).cost = cost;
}

void LpProblem::set_bounds(int column, double lower, double upper) {
  auto& v = variables_.at(column);
  v.lower = lower;
  v.upper = upper;
}

void LpProblem::set_rhs(int row, double rhs) { rows_.at(row).rhs = rhs; }

std::size_t LpProblem::num_nonzeros() const {
  std::size_t total = 0;
  for (const auto& row : rows_) total += row.columns.size();
  return total;
}

void LpProblem::validate() const {
  for (int j = 0; j < num_variables(); ++j) {
    const auto& v = variables_[j];
    if (std::isnan(v.lower) || std::isnan(v.upper) || v.lower > v.upper) {
      throw std::invalid_argument("variable " + std::to_string(j) +
                                  " has lower > upper");
    }
    if (v.lower == kInfinity || v.upper == -kInfinity) {
      throw std::invalid_argument("variable " + std::to_string(j) +
                                  " has an empty domain");
    }
    if (!std::isfinite(v.cost)) {
      throw std::invalid_argument("variable " + std::to_string(j) +
                                  " has a non-finite cost");
    }
  }
  for (int i = 0; i < num_rows(); ++i) {
    const auto& row = rows_[i];
    if (!std::isfinite(row.rhs)) {
      throw std::invalid_argument("row " + std::to_string(i) +
                                  " has a non-finite rhs");
    }
    for (std::size_t k = 0; k < row.columns.size(); ++k) {
      if (row.columns[k] < 0 || row.columns[k] >= num_variables()) {
        throw std::invalid_argument("row " + std::to_string(i) +
                                    " references column " +
                                    std::to_string(row.columns[k]));
      }
      if (!std::isfinite(row.values[k])) {
        throw std::invalid_argument("row " + std::to_string(i) +
                                    " has a non-finite coefficient");
      }
    }
  }
}

double LpProblem::objective(std::span<const double> x) const {
  double total = 0.0;
  for (int j = 0; j < num_variables(); ++j) total += variables_[j].cost * x[j];
  return total;
}

std::vector<double> LpProblem::row_activities(std::span<const double> x) const {
  std::vector<double> activity(rows_.size(), 0.0);
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const auto& row = rows_[i];
    double sum = 0.0;
    for (std::size_t k = 0; k < row.columns.size(); ++k) {
      sum += row.values[k] * x[row.columns[k]];
    }
    activity[i] = sum;
  }
  return activity;
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal:
      return "optimal";
    case SolveStatus::kInfeasible:
      return "infeasible";
    case SolveStatus::kUnbounded:
      return "unbounded";
    case SolveStatus::kIterationLimit:
      return "iteration_limit";
    case SolveStatus::kNumericalFailure:
      return "numerical_failure";
  }
  return "unknown";
}

namespace {

// Contribution of min_{lo <= v <= hi} d * v to the dual objective.
// Returns false when the minimum is unbounded.
bool box_minimum(double d, double lo, double hi, double tol, double& out,
                 double& infeasibility) {
  if (std::abs(d) <= tol) {
    out = 0.0;
    return true;
  }
  const double bound = d > 0.0 ? lo : hi;
  if (!std::isfinite(bound)) {
    infeasibility = std::max(infeasibility, std::abs(d));
    return false;
  }
  out = d * bound;
  return true;
}

}  // namespace

SolutionReport check_solution(const LpProblem& problem,
                              const LpSolution& solution) {
  const int n = problem.num_variables();
  const int m = problem.num_rows();
  if (static_cast<int>(solution.primal.size()) != n) {
    throw std::invalid_argument("check_solution: expected " +
                                std::to_string(n) + " primal values, got " +
                                std::to_string(solution.primal.size()));
  }
  if (!solution.duals.empty() && static_cast<int>(solution.duals.size()) != m) {
    throw std::invalid_argument("check_solution: dual vector size mismatch");
  }

  SolutionReport report;
  const auto& x = solution.primal;
  for (int j = 0; j < n; ++j) {
    const auto& v = problem.variable(j);
    const double below = v.lower - x[j];
    const double above = x[j] - v.upper;
    report.max_bound_violation =
        std::max({report.max_bound_violation, below, above});
  }
  const auto activity = problem.row_activities(x);
  for (int i = 0; i < m; ++i) {
    const auto& row = problem.row(i);
    const double diff = activity[i] - row.rhs;
    double violation = 0.0;
    switch (row.sense) {
      case RowSense::kLessEqual:
        violation = std::max(0.0, diff);
        break;
      case RowSense::kGreaterEqual:
        violation = std::max(0.0, -diff);
        break;
      case RowSense::kEqual:
        violation = std::abs(diff);
        report.max_equality_residual =
            std::max(report.max_equality_residual, violation);
        break;
    }
    report.max_row_violation = std::max(report.max_row_violation, violation);
  }

  if (solution.duals.empty() && m > 0) return report;

  // Dual function of min c^T x s.t. l <= x <= u, row bounds on A x.
  const auto& y = solution.duals;
  std::vector<double> d(n);
  for (int j = 0; j < n; ++j) d[j] = problem.variable(j).cost;
  for (int i = 0; i < m; ++i) {
    const auto& row = problem.row(i);
    for (std::size_t k = 0; k < row.columns.size(); ++k) {
      d[row.columns[k]] -= y[i] * row.values[k];
    }
  }
  const double tol = 1e-9;
  bool bounded = true;
  double dual_objective = 0.0;
  for (int j = 0; j < n; ++j) {
    const auto& v = problem.variable(j);
    double term = 0.0;
    bounded &= box_minimum(d[j], v.lower, v.upper, tol, term,
                           report.max_dual_infeasibility);
    dual_objective += term;
  }
  for (int i = 0; i < m; ++i) {
    const auto& row = problem.row(i);
    const double lo = row.sense == RowSense::kLessEqual ? -kInfinity : row.rhs;
    const double hi = row.sense == RowSense::kGreaterEqual ? kInfinity : row.rhs;
    double term = 0.0;
    bounded &= box_minimum(y[i], lo, hi, tol, term,
                           report.max_dual_infeasibility);
    dual_objective += term;
  }
  if (bounded) {
    report.duality_gap = std::abs(problem.objective(x) - dual_objective);
  }
  return report;
}

namespace {

std::string format_number(double v) {
  if (v == kInfinity) return "inf";
  if (v == -kInfinity) return "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_number(const std::string& token) {
  if (token == "inf") return kInfinity;
  if (token == "-inf") return -kInfinity;
  std::size_t used = 0;
  const double v = std::stod(token, &used);
  if (used != token.size()) {
    throw std::invalid_argument("bad numeral '" + token + "'");
  }
  return v;
}

char sense_code(RowSense sense) {
  switch (sense) {
    case RowSense::kLessEqual:
      return 'L';
    case RowSense::kEqual:
      return 'E';
    case RowSense::kGreaterEqual:
      return 'G';
  }
  return '?';
}

std::string name_or_dash(const std::string& name) {
  return name.empty() ? "-" : name;
}

}  // namespace

std::string to_text(const LpProblem& problem) {
  std::ostringstream out;
  out << "VARIABLES " << problem.num_variables() << '\n';
  for (int j = 0; j < problem.num_variables(); ++j) {
    const auto& v = problem.variable(j);
    out << j << ' ' << name_or_dash(v.name) << ' ' << format_number(v.lower)
        << ' ' << format_number(v.upper) << ' ' << format_number(v.cost)
        << '\n';
  }
  out << "ROWS " << problem.num_rows() << '\n';
  for (int i = 0; i < problem.num_rows(); ++i) {
    const auto& row = problem.row(i);
    out << i << ' ' << name_or_dash(row.name) << ' ' << sense_code(row.sense)
        << ' ' << format_number(row.rhs) << ' ' << row.columns.size();
    for (std::size_t k = 0; k < row.columns.size(); ++k) {
      out << ' ' << row.columns[k] << ':' << format_number(row.values[k]);
    }
    out << '\n';
  }
  out << "END\n";
  return out.str();
}

LpProblem from_text(const std::string& text) {
  std::istringstream in(text);
  std::string keyword;
  LpProblem problem;
  int count = 0;
  if (!(in >> keyword >> count) || keyword != "VARIABLES" || count < 0) {
    throw std::invalid_argument("LP text: expected 'VARIABLES <n>'");
  }
  for (int j = 0; j < count; ++j) {
    int index = 0;
    std::string name, lo, hi, cost;
    if (!(in >> index >> name >> lo >> hi >> cost) || index != j) {
      throw std::invalid_argument("LP text: bad variable line " +
                                  std::to_string(j));
    }
    problem.add_variable(parse_number(lo), parse_number(hi),
                         parse_number(cost), name == "-" ? "" : name);
  }
  if (!(in >> keyword >> count) || keyword != "ROWS" || count < 0) {
    throw std::invalid_argument("LP text: expected 'ROWS <m>'");
  }
  for (int i = 0; i < count; ++i) {
    int index = 0;
    std::string name, sense, rhs;
    std::size_t nnz = 0;
    if (!(in >> index >> name >> sense >> rhs >> nnz) || index != i) {
      throw std::invalid_argument("LP text: bad row line " + std::to_string(i));
    }
    RowSense row_sense;
    if (sense == "L") {
      row_sense = RowSense::kLessEqual;
    } else if (sense == "E") {
      row_sense = RowSense::kEqual;
    } else if (sense == "G") {
      row_sense = RowSense::kGreaterEqual;
    } else {
      throw std::invalid_argument("LP text: bad sense '" + sense + "'");
    }
    std::vector<int> cols(nnz);
    std::vector<double> vals(nnz);
    for (std::size_t k = 0; k < nnz; ++k) {
      std::string entry;
      in >> entry;
      const auto colon = entry.find(':');
      if (colon == std::string::npos) {
        throw std::invalid_argument("LP text: bad entry '" + entry + "'");
      }
      cols[k] = std::stoi(entry.substr(0, colon));
      vals[k] = parse_number(entry.substr(colon + 1));
    }
    problem.add_row(cols, vals, row_sense, parse_number(rhs),
                    name == "-" ? "" : name);
  }
  if (!(in >> keyword) || keyword != "END") {
    throw std::invalid_argument("LP text: missing END");
  }
  return problem;
}

}  // namespace gridharden::lp
