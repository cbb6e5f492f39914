#ifndef MAQ_ASSIGNMENT_H_
#define MAQ_ASSIGNMENT_H_

#include <cstddef>
#include <span>
#include <vector>

// Minimum-cost one-to-one assignment between the rows and columns of a cost
// matrix. Used by the multiple-answer matching loss and by CEAF_e.
namespace maq {
namespace assignment {

// Dense row-major matrix of finite costs, at least 1x1.
class CostMatrix {
 public:
  // Throws ShapeError on bad dimensions, NonFiniteError on NaN/inf entries.
  CostMatrix(int rows, int cols, std::vector<double> cost);
  static CostMatrix FromRows(const std::vector<std::vector<double>> &rows);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double at(int r, int c) const { return cost_[r * cols_ + c]; }
  std::span<const double> values() const { return cost_; }

 private:
  int rows_;
  int cols_;
  std::vector<double> cost_;
};

struct Assignment {
  // mapping[row] = column, or -1 for rows left over in a tall matrix.
  std::vector<int> mapping;
  double total_cost = 0.0;
};

// Sum of cost[r][mapping[r]] over assigned rows, in row order.
double CostOf(const CostMatrix &m, std::span<const int> mapping);

// O(n^3) Hungarian method on the matrix padded to square with zero-cost dummy
// rows/columns. Among optimal mappings the lexicographically smallest (by
// row, with "unassigned" ordered after every column) is returned.
Assignment Solve(const CostMatrix &m);

inline constexpr int kBruteForceLimit = 8;

// Exhaustive search over every injective mapping. Same tie rule as Solve.
// Throws SizeExceeded when min(rows, cols) > kBruteForceLimit.
Assignment BruteForce(const CostMatrix &m);

}  // namespace assignment
}  // namespace maq

#endif  // MAQ_ASSIGNMENT_H_
