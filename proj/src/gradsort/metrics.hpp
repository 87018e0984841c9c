#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gradsort/diff.hpp"
#include "gradsort/grid.hpp"

namespace gradsort::metrics {

constexpr std::size_t brute_force_limit = 9;

struct QualityReport {
  double q_nbr = 0.0;          // 1 - l_nbr_raw
  double qap_quality_p = 0.0;  // 1 - L*_nbr at exponent p
  double p = 16.0;
  double l_nbr_raw = 0.0;
  double runtime = 0.0;  // seconds spent evaluating
};

// Y[c] = X[order[c]].
Matrix apply_permutation(const Permutation& order, const Matrix& x);

// Throws ErrorKind::data when perm is not a bijection of the right size.
QualityReport quality(const Permutation& perm, const Matrix& x, const GridShape& grid, double p = 16.0);

struct BruteForceResult {
  Permutation permutation;
  double l_nbr_min = 0.0;
  std::size_t evaluated = 0;
};

// Exhaustive minimum of L_nbr over all n! arrangements (n <= 9). Ties resolve
// to the lexicographically smallest permutation.
BruteForceResult brute_force_optimum(const Matrix& x, const GridShape& grid);

struct GradcheckEntry {
  std::string term;
  double max_rel_error = 0.0;
  std::size_t points = 0;
};

struct GradcheckReport {
  std::vector<GradcheckEntry> entries;
  double worst() const;
};

// Finite-difference check of every loss term and every generator composed
// into the total loss, on a 2x2 grid with 3-dim vectors at `points` random
// generic points each.
GradcheckReport gradcheck_suite(std::uint64_t seed, std::size_t points = 10,
                                std::optional<diff::FaultInjection> fault = std::nullopt);

}  // namespace gradsort::metrics
