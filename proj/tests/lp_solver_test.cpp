#include <cmath>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "gridharden/lp_solver.hpp"
#include "oracles/lp_vertex_oracle.hpp"
#include "support/instances.hpp"

using namespace gridharden::lp;

using support::random_lp;
using support::to_problem;

TEST_CASE("single bound-limited variable") {
  LpProblem lp;
  const int x = lp.add_variable(0.0, 10.0, 1.0, "x");
  const int cols[] = {x};
  const double vals[] = {1.0};
  lp.add_row(cols, vals, RowSense::kGreaterEqual, 3.0);
  const auto sol = solve(lp);
  REQUIRE(sol.optimal());
  CHECK(sol.primal[0] == doctest::Approx(3.0));
  CHECK(sol.objective == doctest::Approx(3.0));
}

TEST_CASE("face of optima resolves to a vertex with objective -1") {
  LpProblem lp;
  lp.add_variable(0.0, 1.0, -1.0, "x");
  lp.add_variable(0.0, 1.0, -1.0, "y");
  const int cols[] = {0, 1};
  const double vals[] = {1.0, 1.0};
  lp.add_row(cols, vals, RowSense::kLessEqual, 1.0);
  const auto sol = solve(lp);
  REQUIRE(sol.optimal());
  CHECK(sol.objective == doctest::Approx(-1.0));
  // Ties in pricing go to the lowest index, so x enters first and stays.
  CHECK(sol.primal[0] == doctest::Approx(1.0));
  CHECK(sol.primal[1] == doctest::Approx(0.0));

  oracle::DenseLp dense{2, {{1.0, 1.0}}, {'L'}, {1.0}, {0, 0}, {1, 1}, {-1, -1}};
  CHECK(*oracle::vertex_enumeration(dense) == doctest::Approx(-1.0));
}

TEST_CASE("infeasible and unbounded statuses") {
  {
    LpProblem lp;
    lp.add_variable(0.0, kInfinity, 0.0);
    lp.add_variable(0.0, kInfinity, 0.0);
    const int cols[] = {0, 1};
    const double vals[] = {1.0, 1.0};
    lp.add_row(cols, vals, RowSense::kLessEqual, -1.0);
    CHECK(solve(lp).status == SolveStatus::kInfeasible);
  }
  {
    LpProblem lp;
    lp.add_variable(0.0, kInfinity, -1.0);
    CHECK(solve(lp).status == SolveStatus::kUnbounded);
    const int cols[] = {0};
    const double vals[] = {1.0};
    lp.add_row(cols, vals, RowSense::kGreaterEqual, 2.0);
    CHECK(solve(lp).status == SolveStatus::kUnbounded);
  }
}

TEST_CASE("free variables and equality rows") {
  // min |x - 2| style: x free, x - s = 2 with s free, minimize t >= s, t >= -s
  LpProblem lp;
  const int x = lp.add_variable(-kInfinity, kInfinity, 0.0, "x");
  const int t = lp.add_variable(-kInfinity, kInfinity, 1.0, "t");
  {
    const int cols[] = {x};
    const double vals[] = {1.0};
    lp.add_row(cols, vals, RowSense::kEqual, 2.5);
  }
  {
    const int cols[] = {t, x};
    const double vals[] = {1.0, -1.0};
    lp.add_row(cols, vals, RowSense::kGreaterEqual, -2.0);
  }
  {
    const int cols[] = {t, x};
    const double vals[] = {1.0, 1.0};
    lp.add_row(cols, vals, RowSense::kGreaterEqual, 2.0);
  }
  const auto sol = solve(lp);
  REQUIRE(sol.optimal());
  CHECK(sol.primal[x] == doctest::Approx(2.5));
  CHECK(sol.objective == doctest::Approx(0.5));
  const auto report = check_solution(lp, sol);
  REQUIRE(report.duality_gap.has_value());
  CHECK(*report.duality_gap < 1e-9);
}

TEST_CASE("check_solution reports residuals without throwing") {
  LpProblem lp;
  lp.add_variable(0.0, 1.0, 1.0);
  const int cols[] = {0};
  const double vals[] = {1.0};
  lp.add_row(cols, vals, RowSense::kGreaterEqual, 0.5);

  LpSolution bad;
  bad.primal = {2.0};
  auto report = check_solution(lp, bad);
  CHECK(report.max_bound_violation == doctest::Approx(1.0));
  CHECK(report.max_row_violation == doctest::Approx(0.0));
  bad.primal = {0.0};
  report = check_solution(lp, bad);
  CHECK(report.max_row_violation == doctest::Approx(0.5));

  LpSolution wrong_size;
  CHECK_THROWS_AS(check_solution(lp, wrong_size), std::invalid_argument);

  const auto empty = check_solution(LpProblem{}, LpSolution{});
  CHECK(empty.max_row_violation == 0.0);
  CHECK(empty.max_bound_violation == 0.0);

  const auto sol = solve(lp);
  report = check_solution(lp, sol);
  CHECK(report.max_row_violation <= 1e-7);
  CHECK(report.max_bound_violation <= 1e-7);
}

TEST_CASE("invalid problems are rejected") {
  LpProblem lp;
  lp.add_variable(1.0, 0.0, 0.0);
  CHECK_THROWS_AS(solve(lp), std::invalid_argument);
  LpProblem lp2;
  lp2.add_variable(0.0, 1.0, 0.0);
  const int cols[] = {3};
  const double vals[] = {1.0};
  lp2.add_row(cols, vals, RowSense::kEqual, 0.0);
  CHECK_THROWS_AS(solve(lp2), std::invalid_argument);
}

TEST_CASE("random small LPs agree with vertex enumeration") {
  std::mt19937_64 rng(20240611);
  int infeasible = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const auto dense = random_lp(rng);
    const auto expected = oracle::vertex_enumeration(dense);
    const auto lp = to_problem(dense);
    const auto sol = solve(lp);
    CAPTURE(trial);
    if (!expected) {
      ++infeasible;
      CHECK(sol.status == SolveStatus::kInfeasible);
      continue;
    }
    REQUIRE(sol.optimal());
    CHECK(std::abs(sol.objective - *expected) <= 1e-6 * (1.0 + std::abs(*expected)));
    const auto report = check_solution(lp, sol);
    CHECK(report.max_row_violation <= 1e-7);
    CHECK(report.max_bound_violation <= 1e-7);
    REQUIRE(report.duality_gap.has_value());
    CHECK(*report.duality_gap <= 1e-6 * (1.0 + std::abs(*expected)));
  }
  CHECK(infeasible > 0);
}

TEST_CASE("objective scaling and redundant rows") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 60; ++trial) {
    const auto dense = random_lp(rng);
    const auto base = solve(to_problem(dense));
    if (!base.optimal()) continue;

    auto scaled = dense;
    for (double& c : scaled.cost) c *= 3.5;
    const auto s = solve(to_problem(scaled));
    REQUIRE(s.optimal());
    CHECK(s.objective == doctest::Approx(3.5 * base.objective).epsilon(1e-9));

    // A row dominated by the variable bounds.
    auto redundant = dense;
    std::vector<double> row(dense.n, 1.0);
    double upper_sum = 0.0;
    for (double u : dense.upper) upper_sum += u;
    redundant.a.push_back(row);
    redundant.sense.push_back('L');
    redundant.rhs.push_back(upper_sum + 1.0);
    const auto r = solve(to_problem(redundant));
    REQUIRE(r.optimal());
    CHECK(std::abs(r.objective - base.objective) <= 1e-8);
  }
}

TEST_CASE("solve is deterministic and text export round-trips") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const auto lp = to_problem(random_lp(rng));
    const auto a = solve(lp);
    const auto b = solve(lp);
    CHECK(a.status == b.status);
    CHECK(a.primal == b.primal);
    CHECK(a.duals == b.duals);
    CHECK(a.iterations == b.iterations);
    const auto text = to_text(lp);
    CHECK(to_text(from_text(text)) == text);
  }
}
