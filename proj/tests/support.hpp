#pragma once

// Shared helpers for the unit tests: seeded random inputs and naive
// reference implementations used as oracles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "gradsort/grid.hpp"
#include "gradsort/matrix.hpp"

namespace testing {

using gradsort::GridShape;
using gradsort::Matrix;
using gradsort::Permutation;

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = u(rng);
  return m;
}

inline Permutation random_permutation(std::size_t n, std::mt19937_64& rng) {
  Permutation p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

inline double sqdist(const Matrix& x, std::size_t i, std::size_t j) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.cols(); ++k) s += (x(i, k) - x(j, k)) * (x(i, k) - x(j, k));
  return s;
}

// Mean squared distance over ordered pairs i != j, by double loop.
inline double naive_d_bar(const Matrix& x) {
  const std::size_t n = x.rows();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) s += sqdist(x, i, j);
  return s / static_cast<double>(n * (n - 1));
}

// Neighbor loss written directly from the grid definition: mean squared
// distance of horizontal pairs and of vertical pairs, averaged over the
// directions that have pairs, divided by the global mean.
inline double naive_neighbor_loss(const Matrix& y, const GridShape& g, double d_bar) {
  double hor = 0.0, ver = 0.0;
  std::size_t nh = 0, nv = 0;
  for (std::size_t r = 0; r < g.ny(); ++r)
    for (std::size_t c = 0; c < g.nx(); ++c) {
      const std::size_t i = r * g.nx() + c;
      if (c + 1 < g.nx()) { hor += sqdist(y, i, i + 1); ++nh; }
      if (r + 1 < g.ny()) { ver += sqdist(y, i, i + g.nx()); ++nv; }
    }
  double sum = 0.0;
  int dirs = 0;
  if (nh) { sum += hor / static_cast<double>(nh); ++dirs; }
  if (nv) { sum += ver / static_cast<double>(nv); ++dirs; }
  return sum / (dirs * d_bar);
}

inline double naive_qap_loss(const Matrix& y, const GridShape& g, double p, double d_bar) {
  const std::size_t n = g.size();
  auto dist = [&](std::size_t a, std::size_t b) {
    const double dx = double(g.col(a)) - double(g.col(b));
    const double dy = double(g.row(a)) - double(g.row(b));
    return std::sqrt(dx * dx + dy * dy);
  };
  double dmax = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) dmax = std::max(dmax, dist(i, j));
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double sim = std::pow((dmax - dist(i, j)) / (dmax - 1.0), p);
      num += sqdist(y, i, j) * sim;
      den += sim;
    }
  return num / (d_bar * den);
}

// Y[c] = X[order[c]]
inline Matrix permute_rows(const Permutation& order, const Matrix& x) {
  Matrix y(x.rows(), x.cols());
  for (std::size_t c = 0; c < order.size(); ++c)
    for (std::size_t k = 0; k < x.cols(); ++k) y(c, k) = x(order[c], k);
  return y;
}

inline bool is_perm(const Permutation& p, std::size_t n) {
  if (p.size() != n) return false;
  std::vector<bool> seen(n, false);
  for (std::size_t v : p) {
    if (v >= n || seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

}  // namespace testing
