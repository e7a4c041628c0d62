#pragma once

#include <limits>
#include <utility>
#include <vector>

#include "mechlearn/errors.hpp"

namespace mechlearn::lp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// maximize c'x subject to row_lo <= A x <= row_hi and col_lo <= x <= col_hi.
struct Problem {
    std::vector<std::vector<std::pair<int, double>>> cols;  // structural columns: (row, coef)
    std::vector<double> col_lo, col_hi;
    std::vector<double> row_lo, row_hi;
    std::vector<double> objective;

    int num_structural() const { return static_cast<int>(cols.size()); }
    int num_rows() const { return static_cast<int>(row_lo.size()); }
};

enum class Status { Optimal, IterationLimit };

struct Solution {
    Status status = Status::Optimal;
    double objective = 0.0;
    std::vector<double> x;  // structural values
    long iterations = 0;
};

/// Revised simplex over bounded variables with logical slacks per row,
/// product-form eta updates between sparse-LU refactorizations, and a Bland
/// fallback after degenerate stalls. The initial point (all structural
/// variables at their lower bounds) must be row-feasible; the solver's only
/// clients construct problems where it is.
class BoundedSimplex {
  public:
    explicit BoundedSimplex(Problem p);
    ~BoundedSimplex();
    BoundedSimplex(const BoundedSimplex&) = delete;
    BoundedSimplex& operator=(const BoundedSimplex&) = delete;

    Solution solve();

    /// Append a constraint row over structural variables; its slack enters the
    /// basis at the current activity. Used for lexicographic re-solves.
    void add_row(const std::vector<std::pair<int, double>>& entries, double lo, double hi);
    void set_objective(std::vector<double> c);
    /// Continue optimizing from the current basis.
    Solution resolve();

  private:
    struct Impl;
    Impl* impl_;
};

}  // namespace mechlearn::lp
