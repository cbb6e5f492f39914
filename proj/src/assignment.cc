#include "maq/assignment.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>

#include "maq/errors.h"

namespace maq {
namespace assignment {

CostMatrix::CostMatrix(int rows, int cols, std::vector<double> cost)
    : rows_(rows), cols_(cols), cost_(std::move(cost)) {
  if (rows_ < 1 || cols_ < 1) {
    throw ShapeError("cost matrix needs at least one row and one column");
  }
  if (cost_.size() != static_cast<std::size_t>(rows_) * cols_) {
    throw ShapeError("cost matrix has " + std::to_string(cost_.size()) +
                     " entries, expected " + std::to_string(rows_ * cols_));
  }
  for (double c : cost_) {
    if (!std::isfinite(c)) throw NonFiniteError("cost matrix entry not finite");
  }
}

CostMatrix CostMatrix::FromRows(const std::vector<std::vector<double>> &rows) {
  if (rows.empty()) throw ShapeError("cost matrix needs at least one row");
  std::vector<double> flat;
  for (const auto &row : rows) {
    if (row.size() != rows.front().size()) {
      throw ShapeError("ragged cost matrix");
    }
    flat.insert(flat.end(), row.begin(), row.end());
  }
  return CostMatrix(static_cast<int>(rows.size()),
                    static_cast<int>(rows.front().size()), std::move(flat));
}

double CostOf(const CostMatrix &m, std::span<const int> mapping) {
  double total = 0.0;
  for (std::size_t r = 0; r < mapping.size(); ++r) {
    if (mapping[r] >= 0) total += m.at(static_cast<int>(r), mapping[r]);
  }
  return total;
}

namespace {

// Square working copy with dummy rows/columns at the end.
struct Padded {
  int n;
  std::vector<double> a;
  double at(int i, int j) const { return a[i * n + j]; }
};

Padded Pad(const CostMatrix &m) {
  Padded p;
  p.n = std::max(m.rows(), m.cols());
  p.a.assign(static_cast<std::size_t>(p.n) * p.n, 0.0);
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) p.a[i * p.n + j] = m.at(i, j);
  }
  return p;
}

// Rewires the perfect matching of the tight subgraph into the
// lexicographically smallest one. row_of/col_of describe the matching.
void LexicographicMinimum(const Padded &p, const std::vector<double> &u,
                          const std::vector<double> &v,
                          std::vector<int> &col_of, std::vector<int> &row_of,
                          double tol) {
  const int n = p.n;
  auto tight = [&](int i, int j) {
    return p.at(i, j) - u[i] - v[j] <= tol;
  };
  std::vector<bool> row_fixed(n, false), col_fixed(n, false);

  // Alternating path from free row `start` to free column `target`, avoiding
  // fixed rows/columns. Applies the augmentation on success.
  auto augment = [&](int start, int target) {
    std::vector<int> via_col(n, -1);  // column -> row it was reached from
    std::vector<bool> seen_row(n, false);
    std::queue<int> queue;
    queue.push(start);
    seen_row[start] = true;
    while (!queue.empty()) {
      int x = queue.front();
      queue.pop();
      for (int y = 0; y < n; ++y) {
        if (col_fixed[y] || via_col[y] >= 0 || !tight(x, y)) continue;
        via_col[y] = x;
        if (y == target) {
          int col = y;
          while (true) {
            int row = via_col[col];
            int prev = col_of[row];
            col_of[row] = col;
            row_of[col] = row;
            if (row == start) break;
            col = prev;
          }
          return true;
        }
        int next = row_of[y];
        if (next >= 0 && !row_fixed[next] && !seen_row[next]) {
          seen_row[next] = true;
          queue.push(next);
        }
      }
    }
    return false;
  };

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (col_fixed[j] || !tight(i, j)) continue;
      int current = col_of[i];
      if (j == current) break;
      int displaced = row_of[j];
      // Tentatively move i to j; displaced must reach the freed column.
      col_of[i] = j;
      row_of[j] = i;
      row_of[current] = -1;
      col_of[displaced] = -1;
      row_fixed[i] = true;
      col_fixed[j] = true;
      if (augment(displaced, current)) break;
      row_fixed[i] = false;
      col_fixed[j] = false;
      col_of[i] = current;
      row_of[current] = i;
      col_of[displaced] = j;
      row_of[j] = displaced;
    }
    row_fixed[i] = true;
    col_fixed[col_of[i]] = true;
  }
}

}  // namespace

Assignment Solve(const CostMatrix &m) {
  Padded p = Pad(m);
  const int n = p.n;
  const double inf = std::numeric_limits<double>::infinity();

  // Potentials and matching, 1-based with column 0 as the virtual source.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      int i0 = match[j0], j1 = 0;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = p.at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<double> row_pot(n), col_pot(n);
  std::vector<int> col_of(n), row_of(n);
  for (int i = 0; i < n; ++i) row_pot[i] = u[i + 1];
  for (int j = 0; j < n; ++j) {
    col_pot[j] = v[j + 1];
    row_of[j] = match[j + 1] - 1;
    col_of[match[j + 1] - 1] = j;
  }
  double scale = 1.0;
  for (double c : p.a) scale = std::max(scale, std::fabs(c));
  LexicographicMinimum(p, row_pot, col_pot, col_of, row_of,
                       1e-9 * scale * n);

  Assignment result;
  result.mapping.assign(m.rows(), -1);
  for (int i = 0; i < m.rows(); ++i) {
    if (col_of[i] < m.cols()) result.mapping[i] = col_of[i];
  }
  result.total_cost = CostOf(m, result.mapping);
  return result;
}

Assignment BruteForce(const CostMatrix &m) {
  if (std::min(m.rows(), m.cols()) > kBruteForceLimit) {
    throw SizeExceeded("brute force limited to min(rows, cols) <= " +
                       std::to_string(kBruteForceLimit));
  }
  const int rows = m.rows();
  const int cols = m.cols();
  std::vector<int> current(rows, -1);
  std::vector<bool> used(cols, false);
  Assignment best;
  bool found = false;

  // Rows beyond the column count must stay unassigned; "unassigned" is tried
  // after every column to mirror Solve's tie rule.
  std::function<void(int, int)> search = [&](int r, int spare) {
    if (r == rows) {
      double cost = CostOf(m, current);
      if (!found || cost < best.total_cost - 1e-12 * (1.0 + std::fabs(cost))) {
        best.mapping = current;
        best.total_cost = cost;
        found = true;
      }
      return;
    }
    for (int c = 0; c < cols; ++c) {
      if (used[c]) continue;
      used[c] = true;
      current[r] = c;
      search(r + 1, spare);
      used[c] = false;
    }
    current[r] = -1;
    if (spare > 0) search(r + 1, spare - 1);
  };
  search(0, std::max(0, rows - cols));
  return best;
}

}  // namespace assignment
}  // namespace maq
