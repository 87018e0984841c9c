#include "gradsort/lap.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace gradsort::lap {

Assignment solve(const Matrix& cost) {
  const std::size_t n = cost.rows();
  if (cost.cols() != n) fail(ErrorKind::dimension, "lap: cost matrix must be square, got " + cost.shape_str());
  for (std::size_t i = 0; i < cost.size(); ++i)
    if (!std::isfinite(cost[i]))
      fail(ErrorKind::data, "lap: non-finite cost at (" + std::to_string(i / n) + "," +
                                std::to_string(i % n) + ")");

  Assignment out;
  if (n == 0) return out;

  constexpr double inf = std::numeric_limits<double>::infinity();
  // 1-based working arrays; column 0 is the virtual source.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);

  for (std::size_t row = 1; row <= n; ++row) {
    match[0] = row;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      const double* crow = cost.data() + (i0 - 1) * n;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double reduced = crow[j - 1] - u[i0] - v[j];
        if (reduced < minv[j]) {
          minv[j] = reduced;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
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
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  out.assignment.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) out.assignment[match[j] - 1] = j - 1;
  for (std::size_t i = 0; i < n; ++i) out.total_cost += cost(i, out.assignment[i]);
  return out;
}

}  // namespace gradsort::lap
