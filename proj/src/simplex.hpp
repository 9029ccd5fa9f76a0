#pragma once

// Dense two-phase simplex for min c'x subject to Ax = b, x >= 0.

#include <cstddef>
#include <utility>
#include <vector>

namespace otcert::detail {

template <class T>
struct LinearProgram {
  std::size_t rows = 0;
  std::vector<std::vector<std::pair<std::size_t, T>>> columns;  // sparse (row, coefficient)
  std::vector<T> rhs;
  std::vector<T> cost;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

template <class T>
struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  std::vector<T> x;
  T objective{};
  std::vector<T> dual;  // one per row; dual-feasible and tight on the basis
};

/// Bland's rule throughout. With `feasibility_only` the second phase is
/// skipped and `x` is the phase-one point.
template <class T>
LpSolution<T> solve_lp(const LinearProgram<T>& lp, bool feasibility_only = false);

}  // namespace otcert::detail
