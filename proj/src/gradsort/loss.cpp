#include "gradsort/loss.hpp"

#include <algorithm>
#include <cmath>

namespace gradsort::loss {

using diff::Tape;
using diff::Var;

void validate(const LossWeights& w) {
  if (!(w.lambda_s >= 0.0)) fail(ErrorKind::usage, "lambda_s must be >= 0");
  if (!(w.lambda_p >= 0.0)) fail(ErrorKind::usage, "lambda_p must be >= 0");
  if (!(w.p_exponent >= 1.0)) fail(ErrorKind::usage, "p_exponent must be >= 1");
}

Matrix sqdist_matrix(const Matrix& x) {
  const std::size_t n = x.rows(), d = x.cols();
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = x(i, k) - x(j, k);
        s += diff * diff;
      }
      out(i, j) = out(j, i) = s;
    }
  return out;
}

Var pairwise_sqdist(Var x) { return diff::pairwise_sqdist(x); }

double mean_sqdist(const Matrix& d_x) {
  const std::size_t n = d_x.rows();
  if (n < 2) fail(ErrorKind::data, "mean_sqdist: need at least 2 vectors");
  double s = 0.0;
  for (std::size_t i = 0; i < d_x.size(); ++i) s += d_x[i];
  return s / static_cast<double>(n * (n - 1));
}

Var mean_sqdist(Var d_x) {
  const std::size_t n = d_x.tape->value(d_x).rows();
  if (n < 2) fail(ErrorKind::data, "mean_sqdist: need at least 2 vectors");
  return diff::scalar_mul(diff::sum_all(d_x), 1.0 / static_cast<double>(n * (n - 1)));
}

namespace {

void check_d_bar(double d_bar) {
  if (!(d_bar > 0.0) || !std::isfinite(d_bar))
    fail(ErrorKind::data, "mean squared distance must be positive (all vectors identical?)");
}

void check_rows(const Matrix& y, const GridShape& grid, const char* what) {
  if (y.rows() != grid.size())
    fail(ErrorKind::dimension, std::string(what) + ": " + std::to_string(y.rows()) +
                                   " vectors for a " + grid.str() + " grid");
}

}  // namespace

Matrix neighbor_weights(const GridShape& grid, double d_bar) {
  check_d_bar(d_bar);
  const std::size_t n = grid.size(), nx = grid.nx(), ny = grid.ny();
  const std::size_t hor_pairs = (nx - 1) * ny;
  const std::size_t ver_pairs = nx * (ny - 1);
  const double directions = (hor_pairs > 0 ? 1.0 : 0.0) + (ver_pairs > 0 ? 1.0 : 0.0);
  Matrix w(n, n);
  if (directions == 0.0) return w;
  for (std::size_t i = 0; i < n; ++i) {
    if (hor_pairs > 0 && grid.col(i) + 1 < nx)
      w(i, i + 1) += 1.0 / (static_cast<double>(hor_pairs) * directions * d_bar);
    if (ver_pairs > 0 && i + nx < n)
      w(i, i + nx) += 1.0 / (static_cast<double>(ver_pairs) * directions * d_bar);
  }
  return w;
}

Matrix grid_similarity(const GridShape& grid, double p) {
  const std::size_t n = grid.size();
  if (n < 2) fail(ErrorKind::data, "grid_similarity: grid needs at least 2 cells");
  if (!(p >= 1.0)) fail(ErrorKind::usage, "grid_similarity: p must be >= 1");
  Matrix dist(n, n);
  double dmax = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double dx = static_cast<double>(grid.col(i)) - static_cast<double>(grid.col(j));
      const double dy = static_cast<double>(grid.row(i)) - static_cast<double>(grid.row(j));
      dist(i, j) = std::sqrt(dx * dx + dy * dy);
      dmax = std::max(dmax, dist(i, j));
    }
  Matrix sim(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      // every pair is adjacent when dmax == 1
      sim(i, j) = dmax > 1.0 ? std::pow((dmax - dist(i, j)) / (dmax - 1.0), p) : 1.0;
    }
  return sim;
}

namespace {

Matrix qap_weights(const GridShape& grid, double p, double d_bar) {
  check_d_bar(d_bar);
  Matrix sim = grid_similarity(grid, p);
  double total = 0.0;
  for (std::size_t i = 0; i < sim.size(); ++i) total += sim[i];
  for (std::size_t i = 0; i < sim.size(); ++i) sim[i] /= d_bar * total;
  return sim;
}

double weighted_sum(const Matrix& d, const Matrix& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) s += d[i] * w[i];
  return s;
}

}  // namespace

Var neighbor_loss(Var y, const GridShape& grid, double d_bar) {
  Tape& tape = *y.tape;
  check_rows(tape.value(y), grid, "neighbor_loss");
  Var w = tape.constant(neighbor_weights(grid, d_bar));
  return diff::sum_all(diff::mul(diff::pairwise_sqdist(y), w));
}

Var qap_neighbor_loss(Var y, const GridShape& grid, double p, double d_bar) {
  Tape& tape = *y.tape;
  check_rows(tape.value(y), grid, "qap_neighbor_loss");
  Var w = tape.constant(qap_weights(grid, p, d_bar));
  return diff::sum_all(diff::mul(diff::pairwise_sqdist(y), w));
}

Var stochastic_loss(Var p_soft) {
  Tape& tape = *p_soft.tape;
  const double n = static_cast<double>(tape.value(p_soft).rows());
  Var a = diff::abs_elem(p_soft);
  Var rows = diff::sum_all(diff::square(diff::add_scalar(diff::sum_rows(a), -1.0)));
  Var cols = diff::sum_all(diff::square(diff::add_scalar(diff::sum_cols(a), -1.0)));
  return diff::scalar_mul(diff::add(rows, cols), 1.0 / n);
}

namespace {

Matrix sort_cols_then_rows(const Matrix& m) {
  Tape tape;
  return tape.value(diff::sort_rows_asc(diff::sort_cols_asc(tape.constant(m))));
}

Var distmatrix_loss_sorted(const Matrix& sorted_dx, double dx_sum, Var d_y) {
  Tape& tape = *d_y.tape;
  if (!(dx_sum > 0.0)) fail(ErrorKind::data, "distmatrix_loss: sum of D_X is zero");
  if (!tape.value(d_y).same_shape(sorted_dx))
    fail(ErrorKind::dimension, "distmatrix_loss: D_X and D_Y shapes differ");
  Var sorted_dy = diff::sort_rows_asc(diff::sort_cols_asc(d_y));
  Var gap = diff::abs_elem(diff::sub(sorted_dy, tape.constant(sorted_dx)));
  return diff::scalar_mul(diff::sum_all(gap), 1.0 / dx_sum);
}

}  // namespace

Var distmatrix_loss(const Matrix& d_x, Var d_y) {
  double sum = 0.0;
  for (std::size_t i = 0; i < d_x.size(); ++i) sum += d_x[i];
  return distmatrix_loss_sorted(sort_cols_then_rows(d_x), sum, d_y);
}

double neighbor_loss_value(const Matrix& y, const GridShape& grid, double d_bar) {
  check_rows(y, grid, "neighbor_loss");
  check_d_bar(d_bar);
  const std::size_t n = grid.size(), nx = grid.nx(), d = y.cols();
  auto dist = [&](std::size_t i, std::size_t j) {
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double diff = y(i, k) - y(j, k);
      s += diff * diff;
    }
    return s;
  };
  double hor = 0.0, ver = 0.0;
  std::size_t hor_n = 0, ver_n = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (grid.col(i) + 1 < nx) { hor += dist(i, i + 1); ++hor_n; }
    if (i + nx < n) { ver += dist(i, i + nx); ++ver_n; }
  }
  double sum = 0.0;
  double directions = 0.0;
  if (hor_n) { sum += hor / static_cast<double>(hor_n); directions += 1.0; }
  if (ver_n) { sum += ver / static_cast<double>(ver_n); directions += 1.0; }
  return directions > 0.0 ? sum / (directions * d_bar) : 0.0;
}

double qap_neighbor_loss_value(const Matrix& y, const GridShape& grid, double p, double d_bar) {
  check_rows(y, grid, "qap_neighbor_loss");
  return weighted_sum(sqdist_matrix(y), qap_weights(grid, p, d_bar));
}

LossContext::LossContext(Matrix x, const GridShape& grid, const LossWeights& weights)
    : x_(std::move(x)), grid_(grid), weights_(weights) {
  validate(weights_);
  check_rows(x_, grid_, "loss context");
  const Matrix dx = sqdist_matrix(x_);
  d_bar_ = mean_sqdist(dx);
  check_d_bar(d_bar_);
  for (std::size_t i = 0; i < dx.size(); ++i) dx_sum_ += dx[i];
  sorted_dx_ = sort_cols_then_rows(dx);
  smooth_weights_ = weights_.use_qap_neighbor ? qap_weights(grid_, weights_.p_exponent, d_bar_)
                                              : neighbor_weights(grid_, d_bar_);
}

TotalLoss total_loss(Var p_soft, const LossContext& ctx, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) fail(ErrorKind::usage, "alpha must lie in [0, 1]");
  Tape& tape = *p_soft.tape;
  const Matrix& p = tape.value(p_soft);
  if (p.rows() != ctx.x().rows() || p.cols() != ctx.x().rows())
    fail(ErrorKind::dimension, "total_loss: P_soft is " + p.shape_str() + " for " +
                                   std::to_string(ctx.x().rows()) + " vectors");
  const LossWeights& w = ctx.weights();
  Var y = diff::matmul(p_soft, tape.constant(ctx.x()));
  Var d_y = diff::pairwise_sqdist(y);
  Var nbr = diff::sum_all(diff::mul(d_y, tape.constant(ctx.smooth_weights())));
  Var ls = stochastic_loss(p_soft);
  Var lp = distmatrix_loss_sorted(ctx.sorted_dx(), ctx.dx_sum(), d_y);
  Var total = diff::add(diff::add(nbr, diff::scalar_mul(ls, w.lambda_s)),
                        diff::scalar_mul(lp, alpha * w.lambda_p));
  TotalLoss out{total, {}};
  out.terms.nbr = tape.scalar(nbr);
  out.terms.s = tape.scalar(ls);
  out.terms.p = tape.scalar(lp);
  out.terms.total = tape.scalar(total);
  return out;
}

}  // namespace gradsort::loss
