#pragma once

#include <cstddef>
#include <vector>

namespace cmv {

struct Assignment {
  std::vector<std::size_t> row_to_col;
  double cost = 0.0;
};

/// Minimum-cost perfect matching of an n x n cost matrix (row-major) by the
/// Hungarian method with potentials. O(n^3).
Assignment solve_assignment(const std::vector<double>& cost, std::size_t n);

}  // namespace cmv
