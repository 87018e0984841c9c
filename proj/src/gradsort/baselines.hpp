#pragma once

#include <cstdint>

#include "gradsort/grid.hpp"
#include "gradsort/matrix.hpp"

namespace gradsort::baselines {

Permutation random_arrangement(std::size_t n, std::uint64_t seed);

// Kohonen map trained with exponentially decaying radius and learning rate.
// Zero radius fields select the defaults (initial: max(nx, ny) / 2).
struct SomConfig {
  std::size_t epochs = 40;  // passes over all n inputs
  double initial_radius = 0.0;
  double final_radius = 0.5;
  double initial_lr = 0.5;
  double final_lr = 0.01;
  std::uint64_t seed = 0;
};

void validate(const SomConfig& cfg);

// Trains the map, then assigns inputs to cells uniquely by solving the linear
// assignment on squared input-to-cell distances.
Permutation som_sort(const Matrix& x, const GridShape& grid, const SomConfig& cfg);

// Pairwise swap local search on L_nbr; stops after a pass without an improving
// swap or after max_passes passes.
Permutation swap_2opt(const Matrix& x, const GridShape& grid, Permutation start, std::size_t max_passes = 1000);

}  // namespace gradsort::baselines
