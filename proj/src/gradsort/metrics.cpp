#include "gradsort/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <numeric>
#include <random>

#include "gradsort/loss.hpp"
#include "gradsort/permgen.hpp"

namespace gradsort::metrics {

Matrix apply_permutation(const Permutation& order, const Matrix& x) {
  Matrix y(order.size(), x.cols());
  for (std::size_t c = 0; c < order.size(); ++c) {
    auto src = x.row(order[c]);
    std::copy(src.begin(), src.end(), y.row(c).begin());
  }
  return y;
}

QualityReport quality(const Permutation& perm, const Matrix& x, const GridShape& grid, double p) {
  const auto start = std::chrono::steady_clock::now();
  if (perm.size() != x.rows() || !is_bijection(perm))
    fail(ErrorKind::data, "quality: permutation is not a bijection over " + std::to_string(x.rows()) + " vectors");
  if (grid.size() != x.rows())
    fail(ErrorKind::data, "quality: grid " + grid.str() + " does not hold " + std::to_string(x.rows()) + " vectors");
  const double d_bar = loss::mean_sqdist(loss::sqdist_matrix(x));
  const Matrix y = apply_permutation(perm, x);
  QualityReport r;
  r.p = p;
  r.l_nbr_raw = loss::neighbor_loss_value(y, grid, d_bar);
  r.q_nbr = 1.0 - r.l_nbr_raw;
  r.qap_quality_p = 1.0 - loss::qap_neighbor_loss_value(y, grid, p, d_bar);
  r.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

BruteForceResult brute_force_optimum(const Matrix& x, const GridShape& grid) {
  const std::size_t n = x.rows();
  if (n > brute_force_limit)
    fail(ErrorKind::usage, "brute force refuses n = " + std::to_string(n) + " (limit " +
                               std::to_string(brute_force_limit) + ")");
  if (grid.size() != n) fail(ErrorKind::usage, "grid " + grid.str() + " does not hold " + std::to_string(n) + " vectors");
  const Matrix dx = loss::sqdist_matrix(x);
  const double d_bar = loss::mean_sqdist(dx);
  const Matrix w = loss::neighbor_weights(grid, d_bar);
  struct Edge { std::size_t a, b; double w; };
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (w(i, j) != 0.0) edges.push_back({i, j, w(i, j)});

  BruteForceResult best;
  best.l_nbr_min = std::numeric_limits<double>::infinity();
  Permutation order(n);
  std::iota(order.begin(), order.end(), 0);
  do {
    double l = 0.0;
    for (const Edge& e : edges) l += e.w * dx(order[e.a], order[e.b]);
    ++best.evaluated;
    if (l < best.l_nbr_min) {
      best.l_nbr_min = l;
      best.permutation = order;
    }
  } while (std::next_permutation(order.begin(), order.end()));
  return best;
}

double GradcheckReport::worst() const {
  double w = 0.0;
  for (const auto& e : entries) w = std::max(w, e.max_rel_error);
  return w;
}

GradcheckReport gradcheck_suite(std::uint64_t seed, std::size_t points, std::optional<diff::FaultInjection> fault) {
  using diff::Tape;
  using diff::Var;
  const GridShape grid(2, 2);
  const std::size_t n = grid.size(), d = 3;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto random_matrix = [&](std::size_t r, std::size_t c, bool positive) {
    Matrix m(r, c);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = positive ? 0.1 + unit(rng) : normal(rng);
    return m;
  };

  GradcheckReport report;
  auto record = [&](const std::string& term, const diff::ScalarFn& f, const Matrix& at) {
    auto it = std::find_if(report.entries.begin(), report.entries.end(),
                           [&](const GradcheckEntry& e) { return e.term == term; });
    if (it == report.entries.end()) {
      report.entries.push_back({term, 0.0, 0});
      it = report.entries.end() - 1;
    }
    const double err = diff::grad_check(f, at, 1e-5, fault).max_rel_error;
    it->max_rel_error = std::max(it->max_rel_error, err);
    ++it->points;
  };

  for (std::size_t pt = 0; pt < points; ++pt) {
    const Matrix x = random_matrix(n, d, true);
    const loss::LossWeights weights;
    const loss::LossContext ctx(x, grid, weights);
    loss::LossWeights qap_weights = weights;
    qap_weights.use_qap_neighbor = true;
    qap_weights.p_exponent = 2.0;
    const loss::LossContext qap_ctx(x, grid, qap_weights);
    const double d_bar = ctx.d_bar();
    const double alpha = 0.25 + 0.5 * unit(rng);

    const Matrix y = random_matrix(n, d, false);
    record("neighbor_loss", [&](Tape&, Var v) { return loss::neighbor_loss(v, grid, d_bar); }, y);
    record("qap_neighbor_loss", [&](Tape&, Var v) { return loss::qap_neighbor_loss(v, grid, 2.0, d_bar); }, y);
    record("stochastic_loss", [&](Tape&, Var v) { return loss::stochastic_loss(v); }, random_matrix(n, n, true));
    const Matrix dx = loss::sqdist_matrix(x);
    record("distmatrix_loss",
           [&](Tape&, Var v) { return loss::distmatrix_loss(dx, loss::pairwise_sqdist(v)); }, y);

    perm::GeneratorConfig gs = perm::GeneratorConfig::defaults(perm::GeneratorKind::full_rank_gumbel_sinkhorn);
    const perm::GumbelStream noise(seed + pt);
    record("total_loss[FullRankGumbelSinkhorn]",
           [&](Tape&, Var w) {
             perm::GumbelStream replay = noise;
             return loss::total_loss(perm::gumbel_sinkhorn(w, gs, &replay), ctx, alpha).total;
           },
           random_matrix(n, n, false));
    record("total_loss[FullRankGumbelSinkhorn,qap]",
           [&](Tape&, Var w) {
             perm::GumbelStream replay = noise;
             return loss::total_loss(perm::gumbel_sinkhorn(w, gs, &replay), qap_ctx, alpha).total;
           },
           random_matrix(n, n, false));

    // V and W stacked as one 2n x m input so both receive checked gradients.
    const std::size_t rank = 2;
    const double lr_tau = 0.5;
    record("total_loss[LowRank]",
           [&](Tape& tape, Var vw) {
             Matrix top_sel(n, 2 * n), bottom_sel(n, 2 * n);
             for (std::size_t i = 0; i < n; ++i) {
               top_sel(i, i) = 1.0;
               bottom_sel(i, n + i) = 1.0;
             }
             Var v = diff::matmul(tape.constant(top_sel), vw);
             Var w = diff::matmul(tape.constant(bottom_sel), vw);
             return loss::total_loss(perm::lowrank_soft(v, w, lr_tau), ctx, alpha).total;
           },
           random_matrix(2 * n, rank, false));

    record("total_loss[SoftSort]",
           [&](Tape&, Var s) { return loss::total_loss(perm::softsort_soft(s, 1.0), ctx, alpha).total; },
           random_matrix(n, 1, false));
  }
  return report;
}

}  // namespace gradsort::metrics
