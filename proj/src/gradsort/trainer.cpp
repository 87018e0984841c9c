#include "gradsort/trainer.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace gradsort::train {

void validate(const TrainConfig& cfg) {
  if (cfg.max_steps < 1) fail(ErrorKind::usage, "max_steps must be >= 1");
  if (!(cfg.learning_rate > 0.0)) fail(ErrorKind::usage, "learning_rate must be > 0");
  if (!(cfg.adam_beta1 >= 0.0 && cfg.adam_beta1 < 1.0)) fail(ErrorKind::usage, "adam_beta1 must lie in [0, 1)");
  if (!(cfg.adam_beta2 >= 0.0 && cfg.adam_beta2 < 1.0)) fail(ErrorKind::usage, "adam_beta2 must lie in [0, 1)");
  if (!(cfg.adam_eps > 0.0)) fail(ErrorKind::usage, "adam_eps must be > 0");
  if (cfg.duplicate_check_interval < 1) fail(ErrorKind::usage, "duplicate_check_interval must be >= 1");
  loss::validate(cfg.loss_weights());
}

double alpha_schedule(std::size_t t, std::size_t max_steps) {
  if (max_steps == 0) fail(ErrorKind::usage, "alpha_schedule: T must be >= 1");
  if (t > max_steps) fail(ErrorKind::usage, "alpha_schedule: t exceeds T");
  return static_cast<double>(t) / static_cast<double>(max_steps);
}

void adam_step(std::vector<Matrix>& weights, const std::vector<Matrix>& grads, AdamState& state,
               std::size_t t, const TrainConfig& cfg) {
  if (t < 1) fail(ErrorKind::usage, "adam_step: t must be >= 1");
  if (weights.size() != grads.size()) fail(ErrorKind::dimension, "adam_step: weight/gradient count mismatch");
  if (state.m.empty()) {
    for (const Matrix& w : weights) {
      state.m.emplace_back(w.rows(), w.cols());
      state.v.emplace_back(w.rows(), w.cols());
    }
  }
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
  for (std::size_t k = 0; k < weights.size(); ++k) {
    Matrix& w = weights[k];
    const Matrix& g = grads[k];
    if (!w.same_shape(g)) fail(ErrorKind::dimension, "adam_step: gradient shape " + g.shape_str() +
                                                         " for weight " + w.shape_str());
    Matrix& m = state.m[k];
    Matrix& v = state.v[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i];
      if (!std::isfinite(gi))
        fail(ErrorKind::numeric, "adam_step: non-finite gradient at step " + std::to_string(t));
      m[i] = b1 * m[i] + (1.0 - b1) * gi;
      v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      w[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
    }
  }
}

namespace {

std::string describe(const TraceRecord& r) {
  std::ostringstream os;
  os.precision(17);
  os << "step " << r.step << " (alpha " << r.alpha << ", L_nbr " << r.nbr << ", L_s " << r.s
     << ", L_p " << r.p << ", total " << r.total << ")";
  return os.str();
}

}  // namespace

TrainResult train(const Matrix& x, const GridShape& grid, const TrainConfig& cfg, const StepObserver& observer) {
  validate(cfg);
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = x.rows();
  if (n != grid.size())
    fail(ErrorKind::usage, "grid " + grid.str() + " has " + std::to_string(grid.size()) +
                               " cells for " + std::to_string(n) + " vectors");
  if (x.cols() < 1) fail(ErrorKind::data, "vectors must have at least one dimension");

  const loss::LossContext ctx(x, grid, cfg.loss_weights());
  perm::Generator generator(cfg.generator, n, cfg.seed);
  perm::GumbelStream noise(cfg.seed ^ 0x6a09e667f3bcc909ULL);
  AdamState adam;

  TrainResult result;
  result.loss_trace.reserve(cfg.max_steps);
  std::vector<Matrix> grads;
  TraceRecord last_good;

  for (std::size_t t = 1; t <= cfg.max_steps; ++t) {
    const double alpha = alpha_schedule(t, cfg.max_steps);
    diff::Tape tape;
    std::vector<diff::Var> vars;
    for (const Matrix& p : generator.params()) vars.push_back(tape.variable(p));
    const diff::Var p_soft = generator.forward(tape, vars, &noise);
    const loss::TotalLoss loss = loss::total_loss(p_soft, ctx, alpha);

    const TraceRecord rec{t, alpha, loss.terms.nbr, loss.terms.s, loss.terms.p, loss.terms.total};
    if (!std::isfinite(rec.total))
      fail(ErrorKind::numeric, "non-finite loss at " + describe(rec) + "; last good " + describe(last_good));
    tape.backward(loss.total);
    grads.clear();
    for (const diff::Var& v : vars) grads.push_back(tape.grad(v));
    for (const Matrix& g : grads)
      for (std::size_t i = 0; i < g.size(); ++i)
        if (!std::isfinite(g[i]))
          fail(ErrorKind::numeric, "non-finite gradient at " + describe(rec) + "; last good " + describe(last_good));
    adam_step(generator.params(), grads, adam, t, cfg);

    result.loss_trace.push_back(rec);
    last_good = rec;
    result.steps_run = t;
    if (observer) observer(rec);

    if (alpha >= 0.5 && t % cfg.duplicate_check_interval == 0) {
      Matrix p = generator.soft_matrix();
      auto hard = perm::harden(p);
      if (auto* order = std::get_if<Permutation>(&hard)) {
        result.permutation = std::move(*order);
        result.converged_step = t;
        result.final_p_soft = std::move(p);
        break;
      }
    }
  }

  if (!result.converged_step) {
    result.final_p_soft = generator.soft_matrix();
    auto hard = perm::harden(result.final_p_soft);
    if (auto* order = std::get_if<Permutation>(&hard)) {
      result.permutation = std::move(*order);
      result.converged_step = result.steps_run;
    } else {
      result.permutation = perm::resolve_duplicates(result.final_p_soft);
      result.resolved_by_lap = true;
    }
  }

  result.final_weights = generator.params();
  result.final_quality = metrics::quality(result.permutation, x, grid, cfg.p_exponent);
  result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace gradsort::train
