#include "gradsort/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "gradsort/lap.hpp"
#include "gradsort/loss.hpp"

namespace gradsort::baselines {

Permutation random_arrangement(std::size_t n, std::uint64_t seed) {
  Permutation p(n);
  std::iota(p.begin(), p.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

void validate(const SomConfig& cfg) {
  if (cfg.epochs < 1) fail(ErrorKind::usage, "som epochs must be >= 1");
  if (cfg.initial_radius < 0.0 || !(cfg.final_radius > 0.0))
    fail(ErrorKind::usage, "som radii must be positive");
  if (!(cfg.initial_lr > 0.0) || !(cfg.final_lr > 0.0)) fail(ErrorKind::usage, "som learning rates must be positive");
  if (cfg.final_lr > cfg.initial_lr) fail(ErrorKind::usage, "som learning rate schedule must decrease");
  if (cfg.initial_radius != 0.0 && cfg.final_radius > cfg.initial_radius)
    fail(ErrorKind::usage, "som radius schedule must decrease");
}

Permutation som_sort(const Matrix& x, const GridShape& grid, const SomConfig& cfg) {
  validate(cfg);
  const std::size_t n = x.rows(), d = x.cols();
  if (grid.size() != n) fail(ErrorKind::usage, "grid " + grid.str() + " does not hold " + std::to_string(n) + " vectors");
  const double r0 = cfg.initial_radius > 0.0 ? cfg.initial_radius
                                             : std::max(0.5, static_cast<double>(std::max(grid.nx(), grid.ny())) / 2.0);
  const double r1 = std::min(cfg.final_radius, r0);

  std::mt19937_64 rng(cfg.seed);
  std::vector<double> lo(d, std::numeric_limits<double>::infinity()), hi(d, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < d; ++k) {
      lo[k] = std::min(lo[k], x(i, k));
      hi[k] = std::max(hi[k], x(i, k));
    }
  Matrix map(n, d);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t c = 0; c < n; ++c)
    for (std::size_t k = 0; k < d; ++k) map(c, k) = lo[k] + (hi[k] - lo[k]) * unit(rng);

  const std::size_t total = cfg.epochs * n;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t idx : order) {
      const double frac = total > 1 ? static_cast<double>(step) / static_cast<double>(total - 1) : 1.0;
      const double radius = r0 * std::pow(r1 / r0, frac);
      const double lr = cfg.initial_lr * std::pow(cfg.final_lr / cfg.initial_lr, frac);
      ++step;

      auto sample = x.row(idx);
      std::size_t bmu = 0;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < n; ++c) {
        double s = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
          const double diff = map(c, k) - sample[k];
          s += diff * diff;
        }
        if (s < best) {
          best = s;
          bmu = c;
        }
      }
      const double bx = static_cast<double>(grid.col(bmu)), by = static_cast<double>(grid.row(bmu));
      const double two_r2 = 2.0 * radius * radius;
      for (std::size_t c = 0; c < n; ++c) {
        const double dx = static_cast<double>(grid.col(c)) - bx, dy = static_cast<double>(grid.row(c)) - by;
        const double h = lr * std::exp(-(dx * dx + dy * dy) / two_r2);
        if (h < 1e-12) continue;
        for (std::size_t k = 0; k < d; ++k) map(c, k) += h * (sample[k] - map(c, k));
      }
    }
  }

  Matrix cost(n, n);
  for (std::size_t c = 0; c < n; ++c)
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = map(c, k) - x(i, k);
        s += diff * diff;
      }
      cost(c, i) = s;
    }
  return lap::solve(cost).assignment;
}

Permutation swap_2opt(const Matrix& x, const GridShape& grid, Permutation start, std::size_t max_passes) {
  const std::size_t n = x.rows();
  if (start.size() != n || !is_bijection(start)) fail(ErrorKind::data, "swap_2opt: start is not a bijection");
  if (grid.size() != n) fail(ErrorKind::usage, "grid " + grid.str() + " does not hold " + std::to_string(n) + " vectors");
  const Matrix dx = loss::sqdist_matrix(x);
  const double d_bar = loss::mean_sqdist(dx);
  const Matrix w = loss::neighbor_weights(grid, d_bar);

  // Neighbor edges per cell with their L_nbr weights.
  struct Edge { std::size_t other; double w; };
  std::vector<std::vector<Edge>> adj(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (w(i, j) != 0.0) {
        adj[i].push_back({j, w(i, j)});
        adj[j].push_back({i, w(i, j)});
      }

  Permutation& order = start;
  // Edge cost sum around cells a and b; an a-b edge is counted twice on both
  // sides of the comparison, which leaves the difference intact.
  auto local = [&](std::size_t a, std::size_t b) {
    double s = 0.0;
    for (const Edge& e : adj[a]) s += e.w * dx(order[a], order[e.other]);
    for (const Edge& e : adj[b]) s += e.w * dx(order[b], order[e.other]);
    return s;
  };
  const double tol = 1e-12;
  for (std::size_t pass = 0; pass < max_passes; ++pass) {
    bool changed = false;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b) {
        const double before = local(a, b);
        std::swap(order[a], order[b]);
        const double after = local(a, b);
        if (after < before - tol) changed = true;
        else std::swap(order[a], order[b]);
      }
    if (!changed) break;
  }
  return order;
}

}  // namespace gradsort::baselines
