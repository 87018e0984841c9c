#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "gradsort/loss.hpp"
#include "gradsort/metrics.hpp"
#include "gradsort/permgen.hpp"

namespace gradsort::train {

struct TrainConfig {
  perm::GeneratorConfig generator;
  std::size_t max_steps = 100000;
  double learning_rate = 0.03;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double lambda_s = 100.0;
  double lambda_p = 5.0;
  double p_exponent = 16.0;
  std::size_t duplicate_check_interval = 10;
  std::uint64_t seed = 0;
  bool use_qap_neighbor = false;

  loss::LossWeights loss_weights() const {
    return {lambda_s, lambda_p, p_exponent, use_qap_neighbor};
  }
};

void validate(const TrainConfig& cfg);

struct TraceRecord {
  std::size_t step = 0;
  double alpha = 0.0;
  double nbr = 0.0;
  double s = 0.0;
  double p = 0.0;
  double total = 0.0;
};

struct TrainResult {
  Permutation permutation;
  std::optional<std::size_t> converged_step;
  bool resolved_by_lap = false;
  std::size_t steps_run = 0;
  std::vector<TraceRecord> loss_trace;
  metrics::QualityReport final_quality;
  double wall_time = 0.0;
  Matrix final_p_soft;  // noise-free, at the step the permutation was taken
  std::vector<Matrix> final_weights;
};

// Linear ramp t / T.
double alpha_schedule(std::size_t t, std::size_t max_steps);

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
};

// One bias-corrected Adam update at step t >= 1.
void adam_step(std::vector<Matrix>& weights, const std::vector<Matrix>& grads, AdamState& state,
               std::size_t t, const TrainConfig& cfg);

using StepObserver = std::function<void(const TraceRecord&)>;

TrainResult train(const Matrix& x, const GridShape& grid, const TrainConfig& cfg,
                  const StepObserver& observer = {});

}  // namespace gradsort::train
