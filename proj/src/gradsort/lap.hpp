#pragma once

#include "gradsort/grid.hpp"
#include "gradsort/matrix.hpp"

namespace gradsort::lap {

struct Assignment {
  Permutation assignment;  // row i -> column assignment[i]
  double total_cost = 0.0;
};

// Exact minimum-cost bijection for a square cost matrix (shortest augmenting
// path with dual potentials, O(n^3)). Throws ErrorKind::data on non-finite
// costs and ErrorKind::dimension on non-square input.
Assignment solve(const Matrix& cost);

}  // namespace gradsort::lap
