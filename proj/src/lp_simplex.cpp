#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/SparseCore>
#include <Eigen/OrderingMethods>

#include "gridharden/lp_solver.hpp"

namespace gridharden::lp {
namespace {

constexpr double kPivotTolerance = 1e-9;
constexpr double kRelativePivotTolerance = 1e-9;
constexpr double kDropTolerance = 1e-14;
// Triangular solves switch from graph reach to a plain sweep once the
// right-hand side fills this fraction of the vector.
constexpr double kDenseFraction = 0.1;

// Dense values plus the list of positions that may be nonzero. The pivot
// columns and rows of the planning LPs touch a small share of the rows, so
// every per-iteration loop runs over the list rather than the full length.
struct SparseVector {
  std::vector<double> values;
  std::vector<int> pattern;
  std::vector<char> listed;

  void resize(int n) {
    values.assign(n, 0.0);
    listed.assign(n, 0);
    pattern.clear();
  }
  void touch(int i) {
    if (!listed[i]) {
      listed[i] = 1;
      pattern.push_back(i);
    }
  }
  void add(int i, double v) {
    touch(i);
    values[i] += v;
  }
  void clear() {
    for (int i : pattern) {
      values[i] = 0.0;
      listed[i] = 0;
    }
    pattern.clear();
  }
  void set_dense(const std::vector<double>& v) {
    clear();
    for (int i = 0; i < static_cast<int>(v.size()); ++i) {
      if (v[i] != 0.0) add(i, v[i]);
    }
  }
  // Re-lists exactly the nonzeros after a dense sweep.
  void rebuild() {
    for (int i : pattern) listed[i] = 0;
    pattern.clear();
    for (int i = 0; i < static_cast<int>(values.size()); ++i) {
      if (values[i] != 0.0) {
        listed[i] = 1;
        pattern.push_back(i);
      }
    }
  }
};

// Off-diagonal part of a triangular factor as adjacency lists: solving
// visits node j, divides by diag[j] (unit when diag is empty) and scatters
// -value * x[j] into the listed successors.
struct Triangle {
  std::vector<int> start;
  std::vector<int> index;
  std::vector<double> value;
  const std::vector<double>* diag = nullptr;
  bool forward = true;  // dense sweep order
};

// Left-looking sparse LU (Gilbert-Peierls) with partial pivoting on a
// COLAMD column order: L U = P B Q, L unit lower triangular.
class SparseLu {
 public:
  using Matrix = Eigen::SparseMatrix<double>;

  bool factorize(const Matrix& a) {
    const int n = static_cast<int>(a.cols());
    n_ = n;
    Eigen::COLAMDOrdering<int> ordering;
    Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> perm;
    ordering(a, perm);
    q_.assign(n, 0);
    for (int i = 0; i < n; ++i) q_[perm.indices()(i)] = i;

    const int* ap = a.outerIndexPtr();
    const int* ai = a.innerIndexPtr();
    const double* ax = a.valuePtr();
    pinv_.assign(n, -1);
    deficient_.clear();
    free_rows_.clear();
    int step = 0;
    // Columns of L (unit diagonal first) and U (pivot last).
    std::vector<int> lp{0}, li, up{0}, ui;
    std::vector<double> lx, ux;
    li.reserve(a.nonZeros() + n);
    ui.reserve(a.nonZeros() + n);

    std::vector<double> x(n, 0.0);
    std::vector<int> mark(n, -1);
    std::vector<int> stack, child, order;
    stack.reserve(n);
    child.reserve(n);
    order.reserve(n);

    for (int k = 0; k < n; ++k) {
      const int col = q_[k];
      double column_scale = 1.0;
      for (int p = ap[col]; p < ap[col + 1]; ++p) {
        column_scale = std::max(column_scale, std::abs(ax[p]));
      }
      const std::size_t u_mark = ui.size();
      // Reach of A(:, col) in the graph of L, in finish order.
      order.clear();
      for (int p = ap[col]; p < ap[col + 1]; ++p) {
        const int root = ai[p];
        if (mark[root] == k) continue;
        mark[root] = k;
        stack.push_back(root);
        child.push_back(pinv_[root] >= 0 ? lp[pinv_[root]] + 1 : 0);
        while (!stack.empty()) {
          const int node = stack.back();
          const int jcol = pinv_[node];
          bool descended = false;
          if (jcol >= 0) {
            const int stop = lp[jcol + 1];
            while (child.back() < stop) {
              const int next = li[child.back()++];
              if (mark[next] == k) continue;
              mark[next] = k;
              stack.push_back(next);
              child.push_back(pinv_[next] >= 0 ? lp[pinv_[next]] + 1 : 0);
              descended = true;
              break;
            }
          }
          if (!descended) {
            order.push_back(node);
            stack.pop_back();
            child.pop_back();
          }
        }
      }
      for (int p = ap[col]; p < ap[col + 1]; ++p) x[ai[p]] = ax[p];
      for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const int jcol = pinv_[*it];
        if (jcol < 0) continue;
        const double v = x[*it];
        if (v == 0.0) continue;
        for (int p = lp[jcol] + 1; p < lp[jcol + 1]; ++p) x[li[p]] -= lx[p] * v;
      }
      int pivot_row = -1;
      double best = 0.0;
      for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const int i = *it;
        if (pinv_[i] >= 0) {
          if (x[i] != 0.0) {
            ui.push_back(pinv_[i]);
            ux.push_back(x[i]);
          }
        } else if (std::abs(x[i]) > best) {
          best = std::abs(x[i]);
          pivot_row = i;
        }
      }
      if (pivot_row < 0 || best <= kSingularTolerance * column_scale) {
        // Dependent column: dropped here, reported for repair.
        ui.resize(u_mark);
        ux.resize(u_mark);
        for (int i : order) x[i] = 0.0;
        deficient_.push_back(col);
        continue;
      }
      const double pivot = x[pivot_row];
      q_[step] = col;
      ui.push_back(step);
      ux.push_back(pivot);
      up.push_back(static_cast<int>(ui.size()));
      pinv_[pivot_row] = step;
      ++step;
      li.push_back(pivot_row);
      lx.push_back(1.0);
      for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const int i = *it;
        if (pinv_[i] < 0 && x[i] != 0.0) {
          li.push_back(i);
          lx.push_back(x[i] / pivot);
        }
        x[i] = 0.0;
      }
      lp.push_back(static_cast<int>(li.size()));
    }
    if (!deficient_.empty()) {
      for (int i = 0; i < n; ++i) {
        if (pinv_[i] < 0) free_rows_.push_back(i);
      }
      return false;
    }
    for (int& i : li) i = pinv_[i];
    prow_.assign(n, 0);
    for (int i = 0; i < n; ++i) prow_[pinv_[i]] = i;
    qinv_.assign(n, 0);
    for (int k = 0; k < n; ++k) qinv_[q_[k]] = k;

    udiag_.resize(n);
    for (int j = 0; j < n; ++j) udiag_[j] = ux[up[j + 1] - 1];
    off_diagonal(lp, li, lx, 1, 0, l_);
    off_diagonal(up, ui, ux, 0, 1, u_);
    transpose(l_, lt_);
    transpose(u_, ut_);
    l_.forward = true;
    u_.forward = false;
    ut_.forward = true;
    lt_.forward = false;
    u_.diag = &udiag_;
    ut_.diag = &udiag_;
    work_.resize(n);
    mark_.assign(n, 0);
    stamp_ = 0;
    return true;
  }

  // After a failed factorize: dependent basis positions and the rows left
  // without a pivot, equally many.
  [[nodiscard]] const std::vector<int>& deficient() const { return deficient_; }
  [[nodiscard]] const std::vector<int>& free_rows() const { return free_rows_; }

  [[nodiscard]] std::int64_t nonzeros() const {
    return n_ + static_cast<std::int64_t>(l_.index.size() + u_.index.size());
  }

  // B x = b: b indexed by row on entry, x by basis position on exit.
  void solve(SparseVector& v) const {
    permute_in(v, pinv_);
    solve_triangle(l_);
    solve_triangle(u_);
    permute_out(v, q_);
  }

  // B^T y = c: c indexed by basis position on entry, y by row on exit.
  void solve_transposed(SparseVector& v) const {
    permute_in(v, qinv_);
    solve_triangle(ut_);
    solve_triangle(lt_);
    permute_out(v, prow_);
  }

 private:
  static constexpr double kSingularTolerance = 1e-11;

  void off_diagonal(const std::vector<int>& start, const std::vector<int>& index,
                    const std::vector<double>& value, int skip_front, int skip_back,
                    Triangle& out) const {
    out.start.assign(1, 0);
    out.index.clear();
    out.value.clear();
    for (int j = 0; j < n_; ++j) {
      for (int p = start[j] + skip_front; p < start[j + 1] - skip_back; ++p) {
        out.index.push_back(index[p]);
        out.value.push_back(value[p]);
      }
      out.start.push_back(static_cast<int>(out.index.size()));
    }
  }

  void transpose(const Triangle& in, Triangle& out) const {
    out.start.assign(n_ + 1, 0);
    for (int i : in.index) ++out.start[i + 1];
    for (int i = 0; i < n_; ++i) out.start[i + 1] += out.start[i];
    out.index.resize(in.index.size());
    out.value.resize(in.index.size());
    std::vector<int> fill(out.start.begin(), out.start.end() - 1);
    for (int j = 0; j < n_; ++j) {
      for (int p = in.start[j]; p < in.start[j + 1]; ++p) {
        const int slot = fill[in.index[p]]++;
        out.index[slot] = j;
        out.value[slot] = in.value[p];
      }
    }
  }

  void permute_in(SparseVector& v, const std::vector<int>& to) const {
    work_.clear();
    for (int i : v.pattern) {
      if (v.values[i] != 0.0) work_.add(to[i], v.values[i]);
    }
    v.clear();
  }

  void permute_out(SparseVector& v, const std::vector<int>& to) const {
    for (int k : work_.pattern) {
      if (work_.values[k] != 0.0) v.add(to[k], work_.values[k]);
    }
    work_.clear();
  }

  void solve_triangle(const Triangle& t) const {
    SparseVector& x = work_;
    const auto visit = [&](int j) {
      if (t.diag) x.values[j] /= (*t.diag)[j];
      const double w = x.values[j];
      if (w == 0.0) return;
      for (int p = t.start[j]; p < t.start[j + 1]; ++p) x.values[t.index[p]] -= t.value[p] * w;
    };
    if (static_cast<double>(x.pattern.size()) > kDenseFraction * n_) {
      if (t.forward) {
        for (int j = 0; j < n_; ++j) visit(j);
      } else {
        for (int j = n_ - 1; j >= 0; --j) visit(j);
      }
      x.rebuild();
      return;
    }
    // Depth-first reach; reverse finish order is a topological order.
    ++stamp_;
    order_.clear();
    const std::size_t roots = x.pattern.size();
    for (std::size_t r = 0; r < roots; ++r) {
      const int root = x.pattern[r];
      if (mark_[root] == stamp_) continue;
      mark_[root] = stamp_;
      stack_.push_back(root);
      child_.push_back(t.start[root]);
      while (!stack_.empty()) {
        const int node = stack_.back();
        if (child_.back() < t.start[node + 1]) {
          const int next = t.index[child_.back()++];
          if (mark_[next] != stamp_) {
            mark_[next] = stamp_;
            stack_.push_back(next);
            child_.push_back(t.start[next]);
          }
        } else {
          order_.push_back(node);
          stack_.pop_back();
          child_.pop_back();
        }
      }
    }
    for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
      x.touch(*it);
      visit(*it);
    }
  }

  int n_ = 0;
  std::vector<int> q_;     // pivot step -> basis position
  std::vector<int> qinv_;  // basis position -> pivot step
  std::vector<int> pinv_;  // row -> pivot step
  std::vector<int> prow_;  // pivot step -> row
  std::vector<double> udiag_;
  Triangle l_, u_, lt_, ut_;
  std::vector<int> deficient_;
  std::vector<int> free_rows_;

  mutable SparseVector work_;
  mutable std::vector<int> mark_;
  mutable int stamp_ = 0;
  mutable std::vector<int> stack_, child_, order_;
};

// LU of the basis at the last refactorization plus a product-form eta file
// for the pivots since then: B = B0 E1 E2 ... Ek.
class BasisFactor {
 public:
  using Matrix = SparseLu::Matrix;

  bool factorize(const Matrix& basis) {
    etas_.clear();
    eta_nonzeros_ = 0;
    return lu_.factorize(basis);
  }

  void ftran(SparseVector& v) const {
    lu_.solve(v);
    for (const auto& eta : etas_) {
      const double pivot_value = v.values[eta.position];
      if (pivot_value == 0.0) continue;
      const double z = pivot_value / eta.pivot;
      v.values[eta.position] = z;
      for (std::size_t k = 0; k < eta.index.size(); ++k) {
        v.add(eta.index[k], -eta.value[k] * z);
      }
    }
  }

  void btran(SparseVector& v) const {
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      double sum = v.values[it->position];
      for (std::size_t k = 0; k < it->index.size(); ++k) {
        sum -= it->value[k] * v.values[it->index[k]];
      }
      if (sum != 0.0) v.touch(it->position);
      v.values[it->position] = sum / it->pivot;
    }
    lu_.solve_transposed(v);
  }

  void push_eta(int position, const SparseVector& alpha) {
    Eta eta;
    eta.position = position;
    eta.pivot = alpha.values[position];
    for (int i : alpha.pattern) {
      if (i == position) continue;
      if (std::abs(alpha.values[i]) > kDropTolerance) {
        eta.index.push_back(i);
        eta.value.push_back(alpha.values[i]);
      }
    }
    eta_nonzeros_ += static_cast<std::int64_t>(eta.index.size()) + 1;
    etas_.push_back(std::move(eta));
  }

  [[nodiscard]] int num_etas() const { return static_cast<int>(etas_.size()); }
  [[nodiscard]] const SparseLu& lu() const { return lu_; }
  // True once applying the eta file costs more than a fresh factorization.
  [[nodiscard]] bool eta_file_heavy() const { return eta_nonzeros_ > 2 * lu_.nonzeros() + 1000; }

 private:
  struct Eta {
    int position = 0;
    double pivot = 1.0;
    std::vector<int> index;
    std::vector<double> value;
  };

  SparseLu lu_;
  std::vector<Eta> etas_;
  std::int64_t eta_nonzeros_ = 0;
};

// kBetween: nonbasic strictly inside its bounds (free variables at zero,
// crash starting points); may enter in either direction.
enum class VarState : std::uint8_t { kBasic, kAtLower, kAtUpper, kBetween };

enum class PhaseResult { kOptimal, kUnbounded, kIterationLimit, kNumerical };

class Simplex {
 public:
  Simplex(const LpProblem& problem, const SolveOptions& options)
      : problem_(problem), options_(options) {}

  LpSolution run();

 private:
  // Column layout: [0, n) structural, [n, n+m) logical, [n+m, ...) artificial.
  [[nodiscard]] int total() const { return static_cast<int>(lower_.size()); }
  [[nodiscard]] bool is_artificial(int j) const { return j >= n_ + m_; }

  template <typename F>
  void for_each_entry(int j, F&& f) const {
    if (j < n_) {
      for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) {
        f(row_index_[k], value_[k]);
      }
    } else if (j < n_ + m_) {
      f(j - n_, -1.0);
    } else {
      const int a = j - n_ - m_;
      f(artificial_row_[a], artificial_sign_[a]);
    }
  }

  void build();
  void initial_basis();
  bool refactor(bool repaired = false);
  bool recompute_basic_values();
  PhaseResult iterate(bool phase_one);
  void compute_duals(std::vector<double>& y);
  void price_all();
  void update_prices(int entering, int leaving_pos, double pivot);
  [[nodiscard]] double reduced_cost(int j, const std::vector<double>& y) const;
  [[nodiscard]] double phase_one_objective() const;
  [[nodiscard]] double max_basic_infeasibility() const;

  const LpProblem& problem_;
  SolveOptions options_;
  int n_ = 0;
  int m_ = 0;
  std::vector<int> col_start_;
  std::vector<int> row_index_;
  std::vector<double> value_;
  std::vector<int> artificial_row_;
  std::vector<double> artificial_sign_;
  // Row-wise copy of the structural columns, for pivot rows of B^-1 A.
  std::vector<int> row_start_;
  std::vector<int> row_column_;
  std::vector<double> row_value_;
  std::vector<int> artificial_of_row_;

  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<double> cost_;
  std::vector<double> x_;
  std::vector<VarState> state_;
  std::vector<char> excluded_;
  std::vector<int> basis_;
  std::vector<int> position_;

  // Duals and reduced costs, refreshed at every refactorization and updated
  // in between.
  std::vector<double> y_;
  std::vector<double> d_;
  SparseVector alpha_;
  SparseVector rho_;
  std::vector<double> pivot_row_;
  std::vector<int> touched_;

  BasisFactor factor_;
  std::int64_t iterations_ = 0;
  std::int64_t max_iterations_ = 0;
  std::string failure_;
};

void Simplex::build() {
  n_ = problem_.num_variables();
  m_ = problem_.num_rows();

  std::vector<int> counts(n_ + 1, 0);
  for (const auto& row : problem_.rows()) {
    for (int c : row.columns) ++counts[c + 1];
  }
  col_start_.assign(n_ + 1, 0);
  for (int j = 0; j < n_; ++j) col_start_[j + 1] = col_start_[j] + counts[j + 1];
  row_index_.resize(col_start_[n_]);
  value_.resize(col_start_[n_]);
  std::vector<int> fill(col_start_.begin(), col_start_.end() - 1);
  for (int i = 0; i < m_; ++i) {
    const auto& row = problem_.row(i);
    for (std::size_t k = 0; k < row.columns.size(); ++k) {
      if (row.values[k] == 0.0) continue;
      const int slot = fill[row.columns[k]]++;
      row_index_[slot] = i;
      value_[slot] = row.values[k];
    }
  }
  // Explicit zeros were skipped; compact each column.
  std::vector<int> start(n_ + 1, 0);
  int out = 0;
  for (int j = 0; j < n_; ++j) {
    start[j] = out;
    for (int k = col_start_[j]; k < fill[j]; ++k) {
      row_index_[out] = row_index_[k];
      value_[out] = value_[k];
      ++out;
    }
  }
  start[n_] = out;
  col_start_ = std::move(start);
  row_index_.resize(out);
  value_.resize(out);

  row_start_.assign(m_ + 1, 0);
  for (int k = 0; k < out; ++k) ++row_start_[row_index_[k] + 1];
  for (int i = 0; i < m_; ++i) row_start_[i + 1] += row_start_[i];
  row_column_.resize(out);
  row_value_.resize(out);
  std::vector<int> next(row_start_.begin(), row_start_.end() - 1);
  for (int j = 0; j < n_; ++j) {
    for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) {
      const int slot = next[row_index_[k]]++;
      row_column_[slot] = j;
      row_value_[slot] = value_[k];
    }
  }

  lower_.resize(n_ + m_);
  upper_.resize(n_ + m_);
  cost_.assign(n_ + m_, 0.0);
  for (int j = 0; j < n_; ++j) {
    lower_[j] = problem_.variable(j).lower;
    upper_[j] = problem_.variable(j).upper;
  }
  for (int i = 0; i < m_; ++i) {
    const auto& row = problem_.row(i);
    lower_[n_ + i] = row.sense == RowSense::kLessEqual ? -kInfinity : row.rhs;
    upper_[n_ + i] = row.sense == RowSense::kGreaterEqual ? kInfinity : row.rhs;
  }
}

void Simplex::initial_basis() {
  const int nm = n_ + m_;
  x_.assign(nm, 0.0);
  state_.assign(nm, VarState::kAtLower);
  // Start at zero where the bounds allow it, else at the nearer finite bound.
  for (int j = 0; j < n_; ++j) {
    const double lo = lower_[j];
    const double up = upper_[j];
    if (lo <= 0.0 && 0.0 <= up) {
      x_[j] = 0.0;
      state_[j] = lo == 0.0 ? VarState::kAtLower : up == 0.0 ? VarState::kAtUpper : VarState::kBetween;
    } else if (lo > 0.0) {
      x_[j] = lo;
      state_[j] = VarState::kAtLower;
    } else {
      x_[j] = up;
      state_[j] = VarState::kAtUpper;
    }
  }
  std::vector<double> activity(m_, 0.0);
  for (int j = 0; j < n_; ++j) {
    if (x_[j] == 0.0) continue;
    for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) {
      activity[row_index_[k]] += value_[k] * x_[j];
    }
  }
  basis_.assign(m_, -1);
  for (int i = 0; i < m_; ++i) {
    const int r = n_ + i;
    const double act = activity[i];
    if (act >= lower_[r] && act <= upper_[r]) {
      state_[r] = VarState::kBasic;
      x_[r] = act;
      basis_[i] = r;
      continue;
    }
    // The logical sits at the violated bound. A column singleton in this row
    // that can absorb the gap within its bounds becomes basic; otherwise an
    // artificial does.
    const bool below = act < lower_[r];
    const double bound = below ? lower_[r] : upper_[r];
    state_[r] = below ? VarState::kAtLower : VarState::kAtUpper;
    x_[r] = bound;
    const double gap = bound - act;
    bool crashed = false;
    for (int k = row_start_[i]; k < row_start_[i + 1] && !crashed; ++k) {
      const int j = row_column_[k];
      if (col_start_[j + 1] - col_start_[j] != 1 || state_[j] == VarState::kBasic) continue;
      const double target = x_[j] + gap / row_value_[k];
      if (target < lower_[j] || target > upper_[j]) continue;
      x_[j] = target;
      state_[j] = VarState::kBasic;
      basis_[i] = j;
      crashed = true;
    }
    if (crashed) continue;
    artificial_row_.push_back(i);
    artificial_sign_.push_back(gap >= 0.0 ? 1.0 : -1.0);
    lower_.push_back(0.0);
    upper_.push_back(kInfinity);
    cost_.push_back(0.0);
    x_.push_back(std::abs(gap));
    state_.push_back(VarState::kBasic);
    basis_[i] = total() - 1;
  }
  artificial_of_row_.assign(m_, -1);
  for (std::size_t a = 0; a < artificial_row_.size(); ++a) {
    artificial_of_row_[artificial_row_[a]] = n_ + m_ + static_cast<int>(a);
  }
  excluded_.assign(total(), 0);
  position_.assign(total(), -1);
  for (int p = 0; p < m_; ++p) position_[basis_[p]] = p;
}

bool Simplex::refactor(bool repaired) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(m_) * 3);
  for (int p = 0; p < m_; ++p) {
    for_each_entry(basis_[p], [&](int row, double v) {
      triplets.emplace_back(row, p, v);
    });
  }
  BasisFactor::Matrix basis(m_, m_);
  basis.setFromTriplets(triplets.begin(), triplets.end());
  basis.makeCompressed();
  if (factor_.factorize(basis)) return true;
  if (repaired) {
    failure_ = "basis factorization failed (singular basis)";
    return false;
  }
  // Swap dependent columns for the logicals of the rows left unpivoted; the
  // displaced variables stay where they are as nonbasic.
  const auto deficient = factor_.lu().deficient();
  const auto rows = factor_.lu().free_rows();
  for (std::size_t k = 0; k < deficient.size(); ++k) {
    const int p = deficient[k];
    const int out = basis_[p];
    const int in = n_ + rows[k];
    x_[out] = std::clamp(x_[out], lower_[out], upper_[out]);
    state_[out] = x_[out] == lower_[out]   ? VarState::kAtLower
                  : x_[out] == upper_[out] ? VarState::kAtUpper
                                           : VarState::kBetween;
    position_[out] = -1;
    if (is_artificial(out)) excluded_[out] = 1;
    basis_[p] = in;
    position_[in] = p;
    state_[in] = VarState::kBasic;
  }
  return refactor(true);
}

bool Simplex::recompute_basic_values() {
  std::vector<double> rhs(m_, 0.0);
  for (int j = 0; j < total(); ++j) {
    if (state_[j] == VarState::kBasic || x_[j] == 0.0) continue;
    const double xj = x_[j];
    for_each_entry(j, [&](int row, double v) { rhs[row] -= v * xj; });
  }
  SparseVector& v = alpha_;
  v.set_dense(rhs);
  factor_.ftran(v);
  std::vector<double> solved(v.values.begin(), v.values.end());
  v.clear();
  for (int p = 0; p < m_; ++p) x_[basis_[p]] = solved[p];

  // Residual of B x_B = rhs as a cheap conditioning check.
  std::vector<double> check(m_, 0.0);
  for (int p = 0; p < m_; ++p) {
    const double xb = solved[p];
    for_each_entry(basis_[p], [&](int row, double v) { check[row] += v * xb; });
  }
  double residual = 0.0;
  double scale = 1.0;
  for (int i = 0; i < m_; ++i) {
    residual = std::max(residual, std::abs(check[i] - rhs[i]));
    scale = std::max(scale, std::abs(rhs[i]));
  }
  if (!std::isfinite(residual) || residual > 1e-6 * scale) {
    failure_ = "basis is numerically unstable (residual " +
               std::to_string(residual) + ")";
    return false;
  }
  return true;
}

void Simplex::compute_duals(std::vector<double>& y) {
  y.assign(m_, 0.0);
  for (int p = 0; p < m_; ++p) y[p] = cost_[basis_[p]];
  rho_.set_dense(y);
  factor_.btran(rho_);
  y.assign(rho_.values.begin(), rho_.values.end());
  rho_.clear();
}

double Simplex::reduced_cost(int j, const std::vector<double>& y) const {
  double d = cost_[j];
  for_each_entry(j, [&](int row, double v) { d -= y[row] * v; });
  return d;
}

void Simplex::price_all() {
  compute_duals(y_);
  d_.assign(total(), 0.0);
  for (int j = 0; j < total(); ++j) {
    if (state_[j] != VarState::kBasic) d_[j] = reduced_cost(j, y_);
  }
}

// Basis change: entering replaces the column at leaving_pos. With
// rho = B^-T e_r and row alpha_r = rho^T A, d_j -= (d_q / alpha_rq) alpha_rj.
void Simplex::update_prices(int entering, int leaving_pos, double pivot) {
  rho_.clear();
  rho_.add(leaving_pos, 1.0);
  factor_.btran(rho_);
  const double theta = d_[entering] / pivot;
  pivot_row_.resize(total(), 0.0);
  for (int i : rho_.pattern) {
    const double r = rho_.values[i];
    if (r == 0.0) continue;
    y_[i] += theta * r;
    for (int k = row_start_[i]; k < row_start_[i + 1]; ++k) {
      const int j = row_column_[k];
      if (pivot_row_[j] == 0.0) touched_.push_back(j);
      pivot_row_[j] += r * row_value_[k];
    }
    const int logical = n_ + i;
    if (pivot_row_[logical] == 0.0) touched_.push_back(logical);
    pivot_row_[logical] -= r;
    const int art = artificial_of_row_[i];
    if (art >= 0) {
      if (pivot_row_[art] == 0.0) touched_.push_back(art);
      pivot_row_[art] += artificial_sign_[art - n_ - m_] * r;
    }
  }
  // A slot can cancel to zero and be listed twice; the second visit sees 0.
  for (int j : touched_) {
    if (state_[j] != VarState::kBasic) d_[j] -= theta * pivot_row_[j];
    pivot_row_[j] = 0.0;
  }
  touched_.clear();
  d_[entering] = 0.0;
  d_[basis_[leaving_pos]] = -theta;
}

double Simplex::phase_one_objective() const {
  double sum = 0.0;
  for (int j = n_ + m_; j < total(); ++j) sum += x_[j];
  return sum;
}

double Simplex::max_basic_infeasibility() const {
  double worst = 0.0;
  for (int p = 0; p < m_; ++p) {
    const int b = basis_[p];
    worst = std::max({worst, lower_[b] - x_[b], x_[b] - upper_[b]});
  }
  return worst;
}

PhaseResult Simplex::iterate(bool phase_one) {
  const double opt_tol = options_.optimality_tolerance;
  const double harris_tol = 0.5 * options_.feasibility_tolerance;
  SparseVector& alpha = alpha_;
  int degenerate_streak = 0;
  bool bland = false;

  if (!refactor() || !recompute_basic_values()) return PhaseResult::kNumerical;
  price_all();
  bool fresh = true;

  while (true) {
    if (phase_one && phase_one_objective() <= options_.feasibility_tolerance) {
      return PhaseResult::kOptimal;
    }
    if (iterations_ >= max_iterations_) return PhaseResult::kIterationLimit;
    if (factor_.num_etas() >= options_.refactor_interval || factor_.eta_file_heavy()) {
      if (!refactor() || !recompute_basic_values()) {
        return PhaseResult::kNumerical;
      }
      price_all();
      fresh = true;
    }

    // Pricing.
    int entering = -1;
    double entering_dir = 0.0;
    double best = 0.0;
    for (int j = 0; j < total(); ++j) {
      if (state_[j] == VarState::kBasic || excluded_[j]) continue;
      if (lower_[j] == upper_[j]) continue;
      const double d = d_[j];
      double dir = 0.0;
      switch (state_[j]) {
        case VarState::kAtLower:
          if (d < -opt_tol) dir = 1.0;
          break;
        case VarState::kAtUpper:
          if (d > opt_tol) dir = -1.0;
          break;
        case VarState::kBetween:
          if (std::abs(d) > opt_tol) dir = d < 0.0 ? 1.0 : -1.0;
          break;
        case VarState::kBasic:
          break;
      }
      if (dir == 0.0) continue;
      if (bland) {
        entering = j;
        entering_dir = dir;
        break;
      }
      if (std::abs(d) > best) {
        best = std::abs(d);
        entering = j;
        entering_dir = dir;
      }
    }
    if (entering < 0) {
      if (fresh) return PhaseResult::kOptimal;
      // Confirm against prices computed from scratch.
      price_all();
      fresh = true;
      continue;
    }

    alpha.clear();
    for_each_entry(entering, [&](int row, double v) { alpha.add(row, v); });
    factor_.ftran(alpha);

    // Ratio test; basic values move by -step * dir * alpha. Entries small
    // relative to the column are treated as zero.
    double alpha_scale = 0.0;
    for (int p : alpha.pattern) alpha_scale = std::max(alpha_scale, std::abs(alpha.values[p]));
    const double pivot_tol = std::max(kPivotTolerance, kRelativePivotTolerance * alpha_scale);
    double max_step = kInfinity;
    for (int p : alpha.pattern) {
      const double rate = -entering_dir * alpha.values[p];
      if (std::abs(alpha.values[p]) < pivot_tol) continue;
      const int b = basis_[p];
      double limit = kInfinity;
      if (rate < 0.0 && std::isfinite(lower_[b])) {
        limit = (x_[b] - lower_[b] + harris_tol) / -rate;
      } else if (rate > 0.0 && std::isfinite(upper_[b])) {
        limit = (upper_[b] - x_[b] + harris_tol) / rate;
      }
      max_step = std::min(max_step, limit);
    }
    // Distance the entering variable may travel before reaching its bound.
    const double range =
        entering_dir > 0.0 ? upper_[entering] - x_[entering] : x_[entering] - lower_[entering];
    if (!std::isfinite(max_step) && !std::isfinite(range)) {
      return PhaseResult::kUnbounded;
    }

    int leaving_pos = -1;
    double step = kInfinity;
    if (std::isfinite(max_step)) {
      double best_pivot = 0.0;
      for (int p : alpha.pattern) {
        if (std::abs(alpha.values[p]) < pivot_tol) continue;
        const double rate = -entering_dir * alpha.values[p];
        const int b = basis_[p];
        double ratio = kInfinity;
        if (rate < 0.0 && std::isfinite(lower_[b])) {
          ratio = std::max(0.0, (x_[b] - lower_[b]) / -rate);
        } else if (rate > 0.0 && std::isfinite(upper_[b])) {
          ratio = std::max(0.0, (upper_[b] - x_[b]) / rate);
        }
        if (!std::isfinite(ratio)) continue;
        if (bland) {
          if (ratio < step - 1e-12 ||
              (std::abs(ratio - step) <= 1e-12 && b < basis_[leaving_pos])) {
            step = ratio;
            leaving_pos = p;
          }
        } else if (ratio <= max_step && std::abs(alpha.values[p]) > best_pivot) {
          best_pivot = std::abs(alpha.values[p]);
          step = ratio;
          leaving_pos = p;
        }
      }
    }

    const bool bound_flip = std::isfinite(range) && range <= step;
    if (bound_flip) {
      step = range;
      leaving_pos = -1;
    }
    if (!std::isfinite(step)) return PhaseResult::kUnbounded;

    ++iterations_;
    if (step <= 1e-12) {
      if (++degenerate_streak >= options_.degenerate_streak_for_bland) {
        bland = true;
      }
    } else {
      degenerate_streak = 0;
      bland = false;
    }

    if (step != 0.0) {
      for (int p : alpha.pattern) {
        if (alpha.values[p] != 0.0) x_[basis_[p]] -= step * entering_dir * alpha.values[p];
      }
    }
    x_[entering] += step * entering_dir;

    if (bound_flip) {
      if (entering_dir > 0.0) {
        state_[entering] = VarState::kAtUpper;
        x_[entering] = upper_[entering];
      } else {
        state_[entering] = VarState::kAtLower;
        x_[entering] = lower_[entering];
      }
      continue;
    }

    const int leaving = basis_[leaving_pos];
    const double rate = -entering_dir * alpha.values[leaving_pos];
    if (rate < 0.0) {
      state_[leaving] = VarState::kAtLower;
      x_[leaving] = lower_[leaving];
    } else {
      state_[leaving] = VarState::kAtUpper;
      x_[leaving] = upper_[leaving];
    }
    update_prices(entering, leaving_pos, alpha.values[leaving_pos]);
    fresh = false;
    position_[leaving] = -1;
    if (is_artificial(leaving)) excluded_[leaving] = 1;
    basis_[leaving_pos] = entering;
    position_[entering] = leaving_pos;
    state_[entering] = VarState::kBasic;
    factor_.push_eta(leaving_pos, alpha);
  }
}

LpSolution Simplex::run() {
  LpSolution solution;
  problem_.validate();
  build();
  initial_basis();
  alpha_.resize(m_);
  rho_.resize(m_);
  max_iterations_ = options_.max_iterations > 0
                        ? options_.max_iterations
                        : 50LL * (n_ + m_) + 10000;

  const auto finish = [&](SolveStatus status, std::string message) {
    solution.status = status;
    solution.message = std::move(message);
    solution.iterations = iterations_;
    solution.primal.assign(x_.begin(), x_.begin() + n_);
    solution.objective = problem_.objective(solution.primal);
    return solution;
  };

  if (m_ == 0) {
    // Every variable is independent: sit at the cheaper finite bound.
    for (int j = 0; j < n_; ++j) {
      const double c = problem_.variable(j).cost;
      if (c > 0.0) {
        if (!std::isfinite(lower_[j])) return finish(SolveStatus::kUnbounded, "");
        x_[j] = lower_[j];
      } else if (c < 0.0) {
        if (!std::isfinite(upper_[j])) return finish(SolveStatus::kUnbounded, "");
        x_[j] = upper_[j];
      }
    }
    solution.reduced_costs.resize(n_);
    for (int j = 0; j < n_; ++j) solution.reduced_costs[j] = problem_.variable(j).cost;
    return finish(SolveStatus::kOptimal, "");
  }

  if (total() > n_ + m_) {
    std::fill(cost_.begin(), cost_.end(), 0.0);
    for (int j = n_ + m_; j < total(); ++j) cost_[j] = 1.0;
    const PhaseResult result = iterate(true);
    solution.phase_one_iterations = iterations_;
    switch (result) {
      case PhaseResult::kIterationLimit:
        return finish(SolveStatus::kIterationLimit, "phase one");
      case PhaseResult::kNumerical:
        return finish(SolveStatus::kNumericalFailure, failure_);
      case PhaseResult::kUnbounded:
        return finish(SolveStatus::kNumericalFailure,
                      "phase one reported an unbounded ray");
      case PhaseResult::kOptimal:
        break;
    }
    if (!recompute_basic_values()) {
      return finish(SolveStatus::kNumericalFailure, failure_);
    }
    if (phase_one_objective() > options_.feasibility_tolerance) {
      return finish(SolveStatus::kInfeasible,
                    "sum of infeasibilities " +
                        std::to_string(phase_one_objective()));
    }
    for (int j = n_ + m_; j < total(); ++j) {
      upper_[j] = 0.0;
      if (state_[j] != VarState::kBasic) {
        excluded_[j] = 1;
        x_[j] = 0.0;
      }
    }
  }

  for (int j = 0; j < total(); ++j) cost_[j] = j < n_ ? problem_.variable(j).cost : 0.0;
  const PhaseResult result = iterate(false);
  switch (result) {
    case PhaseResult::kIterationLimit:
      return finish(SolveStatus::kIterationLimit, "phase two");
    case PhaseResult::kNumerical:
      return finish(SolveStatus::kNumericalFailure, failure_);
    case PhaseResult::kUnbounded:
      return finish(SolveStatus::kUnbounded, "");
    case PhaseResult::kOptimal:
      break;
  }

  if (!refactor() || !recompute_basic_values()) {
    return finish(SolveStatus::kNumericalFailure, failure_);
  }
  // Snap nonbasic values and clean basic values that drifted within tolerance.
  const double infeasibility = max_basic_infeasibility();
  if (infeasibility > 10.0 * options_.feasibility_tolerance) {
    return finish(SolveStatus::kNumericalFailure,
                  "final basis infeasible by " + std::to_string(infeasibility));
  }

  std::vector<double> y;
  compute_duals(y);
  solution.duals = y;
  solution.reduced_costs.resize(n_);
  for (int j = 0; j < n_; ++j) solution.reduced_costs[j] = reduced_cost(j, y);
  return finish(SolveStatus::kOptimal, "");
}

}  // namespace

LpSolution solve(const LpProblem& problem, const SolveOptions& options) {
  Simplex simplex(problem, options);
  return simplex.run();
}

}  // namespace gridharden::lp
