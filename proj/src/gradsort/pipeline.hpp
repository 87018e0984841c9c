#pragma once

// Method dispatch plus the JSON config and results formats.

#include <optional>
#include <string>

#include "json.hpp"

#include "gradsort/baselines.hpp"
#include "gradsort/dataset.hpp"
#include "gradsort/trainer.hpp"

namespace gradsort {

inline constexpr const char* tool_version = "1.0.0";

struct RunConfig {
  std::string method = "gradsort";
  train::TrainConfig train;
  baselines::SomConfig som;
  std::size_t max_passes = 1000;  // 2opt
  std::size_t trace_stride = 0;   // 0: keep at most ~1000 trace records
};

// gradsort | gradsort-lowrank | gradsort-softsort | som | random | 2opt
bool is_known_method(const std::string& method);

// Defaults for `method`, then every key of `config` applied on top. Keys are
// the TrainConfig field names at top level plus "generator", "som" and
// "swap_2opt" objects. Unknown keys are usage errors.
RunConfig make_run_config(const std::string& method, const nlohmann::json& config);
nlohmann::json to_json(const RunConfig& cfg);

struct RunOutput {
  Permutation permutation;
  std::optional<train::TrainResult> training;
  metrics::QualityReport quality;
  double wall_time = 0.0;
};

RunOutput run_method(const io::Dataset& ds, const GridShape& grid, const RunConfig& cfg,
                     const train::StepObserver& observer = {});

// Results file. Everything except the "timing" object is deterministic for a
// fixed dataset and config.
nlohmann::json make_results(const io::Dataset& ds, const GridShape& grid, const RunConfig& cfg,
                            const RunOutput& out);

struct EvalOutcome {
  metrics::QualityReport recomputed;
  double stored_q_nbr = 0.0;
  bool matches = false;
};

// Recomputes quality from dataset + stored permutation and compares it with
// the stored q_nbr (tolerance 1e-9).
EvalOutcome evaluate_results(const io::Dataset& ds, const nlohmann::json& results);

Permutation permutation_from_results(const nlohmann::json& results);
GridShape grid_from_results(const nlohmann::json& results);

}  // namespace gradsort
