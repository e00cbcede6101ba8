#pragma once

// Bounded-variable revised primal simplex for sparse linear programs.
//
// Problems are stated as
//
//   minimize    c^T x
//   subject to  row_i(x) {<=, =, >=} rhs_i
//               lower_j <= x_j <= upper_j      (infinite bounds allowed)
//
// Internally every row gets a logical variable r_i with A x - r = 0 and the
// row sense becomes a bound on r_i, so equality rows need no special casing.

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gridharden::lp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class RowSense { kLessEqual, kEqual, kGreaterEqual };

struct Variable {
  double lower = 0.0;
  double upper = kInfinity;
  double cost = 0.0;
  std::string name;
};

struct Row {
  std::vector<int> columns;
  std::vector<double> values;
  RowSense sense = RowSense::kLessEqual;
  double rhs = 0.0;
  std::string name;
};

class LpProblem {
 public:
  int add_variable(double lower, double upper, double cost,
                   std::string name = {});
  int add_row(std::span<const int> columns, std::span<const double> values,
              RowSense sense, double rhs, std::string name = {});

  void set_cost(int column, double cost);
  void set_bounds(int column, double lower, double upper);
  void set_rhs(int row, double rhs);

  [[nodiscard]] int num_variables() const {
    return static_cast<int>(variables_.size());
  }
  [[nodiscard]] int num_rows() const { return static_cast<int>(rows_.size()); }
  [[nodiscard]] std::size_t num_nonzeros() const;

  [[nodiscard]] const Variable& variable(int j) const { return variables_.at(j); }
  [[nodiscard]] const Row& row(int i) const { return rows_.at(i); }
  [[nodiscard]] const std::vector<Variable>& variables() const {
    return variables_;
  }
  [[nodiscard]] const std::vector<Row>& rows() const { return rows_; }

  // Throws std::invalid_argument describing the first violated invariant.
  void validate() const;

  // Objective value of x; does not check feasibility.
  [[nodiscard]] double objective(std::span<const double> x) const;
  // Activity a_i^T x of every row.
  [[nodiscard]] std::vector<double> row_activities(
      std::span<const double> x) const;

 private:
  std::vector<Variable> variables_;
  std::vector<Row> rows_;
};

enum class SolveStatus {
  kOptimal,
  kInfeasible,
  kUnbounded,
  kIterationLimit,
  kNumericalFailure,
};

const char* to_string(SolveStatus status);

struct SolveOptions {
  double feasibility_tolerance = 1e-7;
  double optimality_tolerance = 1e-7;
  // 0 selects a limit proportional to the problem size.
  std::int64_t max_iterations = 0;
  int refactor_interval = 100;
  // Consecutive degenerate pivots before switching to Bland's rule.
  int degenerate_streak_for_bland = 50;
};

struct LpSolution {
  SolveStatus status = SolveStatus::kNumericalFailure;
  std::vector<double> primal;
  // Row duals y with reduced costs d = c - A^T y (minimization sign).
  std::vector<double> duals;
  std::vector<double> reduced_costs;
  double objective = 0.0;
  std::int64_t iterations = 0;
  std::int64_t phase_one_iterations = 0;
  std::string message;

  [[nodiscard]] bool optimal() const { return status == SolveStatus::kOptimal; }
};

LpSolution solve(const LpProblem& problem, const SolveOptions& options = {});

struct SolutionReport {
  double max_row_violation = 0.0;    // distance of a_i^T x outside its sense
  double max_bound_violation = 0.0;  // distance of x_j outside [l_j, u_j]
  double max_equality_residual = 0.0;
  // |primal objective - dual objective| when duals are present and the dual
  // objective is finite.
  std::optional<double> duality_gap;
  double max_dual_infeasibility = 0.0;
};

// Residuals are computed from the problem data alone, independent of the
// solver's internal state. Throws std::invalid_argument on a size mismatch.
SolutionReport check_solution(const LpProblem& problem,
                              const LpSolution& solution);

// Plain-text dump with stable ordering and 17 significant digits:
//
//   NAME? (none)
//   VARIABLES <n>
//   <index> <name> <lower> <upper> <cost>
//   ROWS <m>
//   <index> <name> <L|E|G> <rhs> <nnz> <col>:<value> ...
//   END
std::string to_text(const LpProblem& problem);
LpProblem from_text(const std::string& text);

}  // namespace gridharden::lp
