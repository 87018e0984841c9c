#pragma once

// Loss terms for learning grid arrangements. All differentiable terms are
// assembled from diffcore ops; the *_value helpers evaluate the same
// quantities on plain matrices for metrics and baselines.

#include "gradsort/diff.hpp"
#include "gradsort/grid.hpp"

namespace gradsort::loss {

struct LossWeights {
  double lambda_s = 100.0;
  double lambda_p = 5.0;
  double p_exponent = 16.0;
  bool use_qap_neighbor = false;
};

void validate(const LossWeights& w);

// Plain squared-distance matrix of the rows of x.
Matrix sqdist_matrix(const Matrix& x);

// Differentiable squared-distance matrix (n x n, zero diagonal).
diff::Var pairwise_sqdist(diff::Var x);

// Global mean squared distance over ordered pairs i != j.
double mean_sqdist(const Matrix& d_x);
diff::Var mean_sqdist(diff::Var d_x);

// Constant weights W with L_nbr(Y) = sum(D_Y .* W). Horizontal and vertical
// neighbor pairs are stored once (upper triangle). A grid direction without
// any pairs (nx == 1 or ny == 1) is dropped from the average.
Matrix neighbor_weights(const GridShape& grid, double d_bar);

// sim_ij = ((dmax - d_ij) / (dmax - 1))^p with sim_ii = 0.
Matrix grid_similarity(const GridShape& grid, double p);

diff::Var neighbor_loss(diff::Var y, const GridShape& grid, double d_bar);
diff::Var qap_neighbor_loss(diff::Var y, const GridShape& grid, double p, double d_bar);
diff::Var stochastic_loss(diff::Var p_soft);
// d_x is constant; both matrices are column-sorted then row-sorted.
diff::Var distmatrix_loss(const Matrix& d_x, diff::Var d_y);

double neighbor_loss_value(const Matrix& y, const GridShape& grid, double d_bar);
double qap_neighbor_loss_value(const Matrix& y, const GridShape& grid, double p, double d_bar);

// Per-dataset constants, computed once from X.
class LossContext {
 public:
  LossContext(Matrix x, const GridShape& grid, const LossWeights& weights);

  const Matrix& x() const noexcept { return x_; }
  const GridShape& grid() const noexcept { return grid_; }
  const LossWeights& weights() const noexcept { return weights_; }
  double d_bar() const noexcept { return d_bar_; }
  const Matrix& sorted_dx() const noexcept { return sorted_dx_; }
  double dx_sum() const noexcept { return dx_sum_; }
  const Matrix& smooth_weights() const noexcept { return smooth_weights_; }

 private:
  Matrix x_;
  GridShape grid_;
  LossWeights weights_;
  double d_bar_ = 0.0;
  Matrix sorted_dx_;
  double dx_sum_ = 0.0;
  Matrix smooth_weights_;  // neighbor or QAP weights, already scaled by 1/D_bar
};

struct LossTerms {
  double nbr = 0.0;
  double s = 0.0;
  double p = 0.0;
  double total = 0.0;
};

struct TotalLoss {
  diff::Var total;
  LossTerms terms;
};

// L_nbr (or L*_nbr) + lambda_s * L_s + alpha * lambda_p * L_p with Y = P_soft X.
TotalLoss total_loss(diff::Var p_soft, const LossContext& ctx, double alpha);

}  // namespace gradsort::loss
