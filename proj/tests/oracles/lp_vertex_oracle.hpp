#pragma once

// Brute-force LP oracle for tiny bounded problems: enumerate every basic
// point defined by n active constraints (rows or variable bounds), keep the
// feasible ones and return the cheapest. Shares no code with the simplex.

#include <cmath>
#include <optional>
#include <vector>

namespace oracle {

struct DenseLp {
  int n = 0;
  std::vector<std::vector<double>> a;  // m rows of n coefficients
  std::vector<char> sense;             // 'L', 'E', 'G'
  std::vector<double> rhs;
  std::vector<double> lower, upper;  // finite
  std::vector<double> cost;
};

// Solves M z = v in place by Gaussian elimination with partial pivoting.
inline bool solve_dense(std::vector<std::vector<double>> m,
                        std::vector<double> v, std::vector<double>& z) {
  const int n = static_cast<int>(v.size());
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r) {
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    }
    if (std::abs(m[pivot][col]) < 1e-10) return false;
    std::swap(m[pivot], m[col]);
    std::swap(v[pivot], v[col]);
    for (int r = col + 1; r < n; ++r) {
      const double f = m[r][col] / m[col][col];
      if (f == 0.0) continue;
      for (int c = col; c < n; ++c) m[r][c] -= f * m[col][c];
      v[r] -= f * v[col];
    }
  }
  z.assign(n, 0.0);
  for (int r = n - 1; r >= 0; --r) {
    double s = v[r];
    for (int c = r + 1; c < n; ++c) s -= m[r][c] * z[c];
    z[r] = s / m[r][r];
  }
  return true;
}

inline bool feasible(const DenseLp& lp, const std::vector<double>& x,
                     double tol) {
  for (int j = 0; j < lp.n; ++j) {
    if (x[j] < lp.lower[j] - tol || x[j] > lp.upper[j] + tol) return false;
  }
  for (std::size_t i = 0; i < lp.a.size(); ++i) {
    double act = 0.0;
    for (int j = 0; j < lp.n; ++j) act += lp.a[i][j] * x[j];
    const double d = act - lp.rhs[i];
    if (lp.sense[i] == 'L' && d > tol) return false;
    if (lp.sense[i] == 'G' && d < -tol) return false;
    if (lp.sense[i] == 'E' && std::abs(d) > tol) return false;
  }
  return true;
}

struct VertexSolution {
  double objective = 0.0;
  std::vector<double> x;
};

// Cheapest feasible vertex, or nullopt when none is feasible.
inline std::optional<VertexSolution> best_vertex(const DenseLp& lp) {
  struct Hyperplane {
    std::vector<double> coef;
    double rhs;
  };
  std::vector<Hyperplane> planes;
  for (std::size_t i = 0; i < lp.a.size(); ++i) planes.push_back({lp.a[i], lp.rhs[i]});
  for (int j = 0; j < lp.n; ++j) {
    std::vector<double> e(lp.n, 0.0);
    e[j] = 1.0;
    planes.push_back({e, lp.lower[j]});
    planes.push_back({e, lp.upper[j]});
  }
  const int total = static_cast<int>(planes.size());
  std::optional<VertexSolution> best;
  std::vector<int> pick(lp.n);
  // Iterate over all n-subsets of the hyperplanes.
  for (int k = 0; k < lp.n; ++k) pick[k] = k;
  if (lp.n == 0) {
    return feasible(lp, {}, 1e-9) ? std::optional<VertexSolution>(VertexSolution{})
                                  : std::nullopt;
  }
  while (true) {
    std::vector<std::vector<double>> m(lp.n);
    std::vector<double> v(lp.n);
    for (int k = 0; k < lp.n; ++k) {
      m[k] = planes[pick[k]].coef;
      v[k] = planes[pick[k]].rhs;
    }
    std::vector<double> x;
    if (solve_dense(m, v, x) && feasible(lp, x, 1e-9)) {
      double obj = 0.0;
      for (int j = 0; j < lp.n; ++j) obj += lp.cost[j] * x[j];
      if (!best || obj < best->objective) best = VertexSolution{obj, x};
    }
    int k = lp.n - 1;
    while (k >= 0 && pick[k] == total - lp.n + k) --k;
    if (k < 0) break;
    ++pick[k];
    for (int r = k + 1; r < lp.n; ++r) pick[r] = pick[r - 1] + 1;
  }
  return best;
}

// Optimal objective, or nullopt when no vertex is feasible.
inline std::optional<double> vertex_enumeration(const DenseLp& lp) {
  const auto best = best_vertex(lp);
  if (!best) return std::nullopt;
  return best->objective;
}

}  // namespace oracle
