#include "gradsort/pipeline.hpp"

#include <chrono>
#include <cmath>

namespace gradsort {

using nlohmann::json;

namespace {

const char* const methods[] = {"gradsort", "gradsort-lowrank", "gradsort-softsort", "som", "random", "2opt"};

std::optional<perm::GeneratorKind> generator_for(const std::string& method) {
  if (method == "gradsort") return perm::GeneratorKind::full_rank_gumbel_sinkhorn;
  if (method == "gradsort-lowrank") return perm::GeneratorKind::low_rank;
  if (method == "gradsort-softsort") return perm::GeneratorKind::soft_sort;
  return std::nullopt;
}

[[noreturn]] void bad_key(const std::string& where, const std::string& key, const char* what) {
  fail(ErrorKind::usage, "config " + where + key + ": " + what);
}

double get_real(const json& v, const std::string& where, const std::string& key) {
  if (!v.is_number()) bad_key(where, key, "expected a number");
  return v.get<double>();
}

std::size_t get_count(const json& v, const std::string& where, const std::string& key) {
  if (v.is_number_unsigned()) return v.get<std::size_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::size_t>(v.get<long long>());
  bad_key(where, key, "expected a non-negative integer");
}

std::uint64_t get_seed(const json& v, const std::string& where, const std::string& key) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
  bad_key(where, key, "expected a non-negative integer seed");
}

bool get_flag(const json& v, const std::string& where, const std::string& key) {
  if (!v.is_boolean()) bad_key(where, key, "expected true or false");
  return v.get<bool>();
}

void apply_generator(perm::GeneratorConfig& g, const json& j) {
  if (!j.is_object()) bad_key("", "generator", "expected an object");
  for (const auto& [key, v] : j.items()) {
    const std::string where = "generator.";
    if (key == "kind") {
      if (!v.is_string()) bad_key(where, key, "expected a string");
      if (perm::parse_generator_kind(v.get<std::string>()) != g.kind)
        bad_key(where, key, "does not match the selected method");
    } else if (key == "sinkhorn_iters") g.sinkhorn_iters = get_count(v, where, key);
    else if (key == "tau") g.tau = get_real(v, where, key);
    else if (key == "beta") g.beta = get_real(v, where, key);
    else if (key == "rank") g.rank = get_count(v, where, key);
    else if (key == "init_std") g.init_std = get_real(v, where, key);
    else bad_key(where, key, "unknown key");
  }
}

void apply_som(baselines::SomConfig& s, const json& j) {
  if (!j.is_object()) bad_key("", "som", "expected an object");
  for (const auto& [key, v] : j.items()) {
    const std::string where = "som.";
    if (key == "epochs") s.epochs = get_count(v, where, key);
    else if (key == "initial_radius") s.initial_radius = get_real(v, where, key);
    else if (key == "final_radius") s.final_radius = get_real(v, where, key);
    else if (key == "initial_lr") s.initial_lr = get_real(v, where, key);
    else if (key == "final_lr") s.final_lr = get_real(v, where, key);
    else if (key == "seed") s.seed = get_seed(v, where, key);
    else bad_key(where, key, "unknown key");
  }
}

}  // namespace

bool is_known_method(const std::string& method) {
  for (const char* m : methods)
    if (method == m) return true;
  return false;
}

RunConfig make_run_config(const std::string& method, const json& config) {
  if (!is_known_method(method)) fail(ErrorKind::usage, "unknown method '" + method + "'");
  RunConfig cfg;
  cfg.method = method;
  if (auto kind = generator_for(method)) cfg.train.generator = perm::GeneratorConfig::defaults(*kind);
  if (config.is_null()) return cfg;
  if (!config.is_object()) fail(ErrorKind::usage, "config must be a JSON object");

  train::TrainConfig& t = cfg.train;
  for (const auto& [key, v] : config.items()) {
    if (key == "method") {
      if (!v.is_string() || v.get<std::string>() != method) bad_key("", key, "does not match the selected method");
    } else if (key == "generator") apply_generator(t.generator, v);
    else if (key == "max_steps") t.max_steps = get_count(v, "", key);
    else if (key == "learning_rate") t.learning_rate = get_real(v, "", key);
    else if (key == "adam_beta1") t.adam_beta1 = get_real(v, "", key);
    else if (key == "adam_beta2") t.adam_beta2 = get_real(v, "", key);
    else if (key == "adam_eps") t.adam_eps = get_real(v, "", key);
    else if (key == "lambda_s") t.lambda_s = get_real(v, "", key);
    else if (key == "lambda_p") t.lambda_p = get_real(v, "", key);
    else if (key == "p_exponent") t.p_exponent = get_real(v, "", key);
    else if (key == "duplicate_check_interval") t.duplicate_check_interval = get_count(v, "", key);
    else if (key == "seed") t.seed = get_seed(v, "", key);
    else if (key == "use_qap_neighbor") t.use_qap_neighbor = get_flag(v, "", key);
    else if (key == "som") apply_som(cfg.som, v);
    else if (key == "swap_2opt") {
      if (!v.is_object()) bad_key("", key, "expected an object");
      for (const auto& [k2, v2] : v.items()) {
        if (k2 == "max_passes") cfg.max_passes = get_count(v2, "swap_2opt.", k2);
        else bad_key("swap_2opt.", k2, "unknown key");
      }
    } else bad_key("", key, "unknown key");
  }
  train::validate(t);
  baselines::validate(cfg.som);
  return cfg;
}

json to_json(const RunConfig& cfg) {
  const train::TrainConfig& t = cfg.train;
  json j;
  j["method"] = cfg.method;
  j["generator"] = {{"kind", perm::to_string(t.generator.kind)},
                    {"sinkhorn_iters", t.generator.sinkhorn_iters},
                    {"tau", t.generator.tau},
                    {"beta", t.generator.beta},
                    {"rank", t.generator.rank},
                    {"init_std", t.generator.init_std}};
  j["max_steps"] = t.max_steps;
  j["learning_rate"] = t.learning_rate;
  j["adam_beta1"] = t.adam_beta1;
  j["adam_beta2"] = t.adam_beta2;
  j["adam_eps"] = t.adam_eps;
  j["lambda_s"] = t.lambda_s;
  j["lambda_p"] = t.lambda_p;
  j["p_exponent"] = t.p_exponent;
  j["duplicate_check_interval"] = t.duplicate_check_interval;
  j["seed"] = t.seed;
  j["use_qap_neighbor"] = t.use_qap_neighbor;
  j["som"] = {{"epochs", cfg.som.epochs},         {"initial_radius", cfg.som.initial_radius},
              {"final_radius", cfg.som.final_radius}, {"initial_lr", cfg.som.initial_lr},
              {"final_lr", cfg.som.final_lr},     {"seed", cfg.som.seed}};
  j["swap_2opt"] = {{"max_passes", cfg.max_passes}};
  return j;
}

RunOutput run_method(const io::Dataset& ds, const GridShape& grid, const RunConfig& cfg,
                     const train::StepObserver& observer) {
  io::validate(ds);
  const Matrix& x = ds.vectors;
  if (grid.size() != x.rows())
    fail(ErrorKind::usage, "grid " + grid.str() + " has " + std::to_string(grid.size()) + " cells but the dataset has " +
                               std::to_string(x.rows()) + " vectors");
  const auto start = std::chrono::steady_clock::now();
  RunOutput out;
  if (generator_for(cfg.method)) {
    out.training = train::train(x, grid, cfg.train, observer);
    out.permutation = out.training->permutation;
  } else if (cfg.method == "som") {
    out.permutation = baselines::som_sort(x, grid, cfg.som);
  } else if (cfg.method == "random") {
    out.permutation = baselines::random_arrangement(x.rows(), cfg.train.seed);
  } else if (cfg.method == "2opt") {
    out.permutation = baselines::swap_2opt(x, grid, baselines::random_arrangement(x.rows(), cfg.train.seed),
                                           cfg.max_passes);
  } else {
    fail(ErrorKind::usage, "unknown method '" + cfg.method + "'");
  }
  out.quality = metrics::quality(out.permutation, x, grid, cfg.train.p_exponent);
  out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

json make_results(const io::Dataset& ds, const GridShape& grid, const RunConfig& cfg, const RunOutput& out) {
  json j;
  j["tool"] = {{"name", "gradsort"}, {"version", tool_version}};
  j["dataset"] = {{"name", ds.name},
                  {"n", ds.vectors.rows()},
                  {"d", ds.vectors.cols()},
                  {"kind", io::to_string(ds.kind)},
                  {"provenance", ds.provenance}};
  j["grid"] = {{"nx", grid.nx()}, {"ny", grid.ny()}};
  j["config"] = to_json(cfg);
  j["permutation_convention"] = "cell_to_input";
  j["permutation"] = out.permutation;
  j["quality"] = {{"q_nbr", out.quality.q_nbr},
                  {"qap_quality_p", out.quality.qap_quality_p},
                  {"p", out.quality.p},
                  {"l_nbr_raw", out.quality.l_nbr_raw}};
  if (out.training) {
    const train::TrainResult& tr = *out.training;
    json training;
    training["converged_step"] = tr.converged_step ? json(*tr.converged_step) : json(nullptr);
    training["resolved_by_lap"] = tr.resolved_by_lap;
    training["steps_run"] = tr.steps_run;
    std::size_t stride = cfg.trace_stride;
    if (stride == 0) stride = std::max<std::size_t>(1, (tr.loss_trace.size() + 999) / 1000);
    training["trace_stride"] = stride;
    json trace = json::array();
    for (std::size_t i = 0; i < tr.loss_trace.size(); ++i) {
      if (i % stride != 0 && i + 1 != tr.loss_trace.size()) continue;
      const auto& r = tr.loss_trace[i];
      trace.push_back({{"step", r.step}, {"alpha", r.alpha}, {"nbr", r.nbr}, {"s", r.s}, {"p", r.p}, {"total", r.total}});
    }
    training["loss_trace"] = std::move(trace);
    j["training"] = std::move(training);
  }
  j["timing"] = {{"wall_time", out.wall_time}, {"quality_runtime", out.quality.runtime}};
  return j;
}

Permutation permutation_from_results(const json& results) {
  if (!results.is_object() || !results.contains("permutation") || !results["permutation"].is_array())
    fail(ErrorKind::data, "results file has no permutation array");
  Permutation p;
  for (const auto& v : results["permutation"]) {
    if (!v.is_number_unsigned()) fail(ErrorKind::data, "results permutation holds a non-index entry");
    p.push_back(v.get<std::size_t>());
  }
  if (!is_bijection(p)) fail(ErrorKind::data, "results permutation is not a bijection");
  return p;
}

GridShape grid_from_results(const json& results) {
  try {
    return GridShape(results.at("grid").at("nx").get<std::size_t>(), results.at("grid").at("ny").get<std::size_t>());
  } catch (const json::exception& e) {
    fail(ErrorKind::data, std::string("results file has no valid grid: ") + e.what());
  }
}

EvalOutcome evaluate_results(const io::Dataset& ds, const json& results) {
  io::validate(ds);
  const Permutation p = permutation_from_results(results);
  const GridShape grid = grid_from_results(results);
  if (p.size() != ds.vectors.rows() || grid.size() != ds.vectors.rows())
    fail(ErrorKind::data, "results describe " + std::to_string(p.size()) + " cells but the dataset has " +
                              std::to_string(ds.vectors.rows()) + " vectors");
  double p_exp = 16.0;
  EvalOutcome out;
  try {
    const json& q = results.at("quality");
    out.stored_q_nbr = q.at("q_nbr").get<double>();
    if (q.contains("p")) p_exp = q.at("p").get<double>();
  } catch (const json::exception& e) {
    fail(ErrorKind::data, std::string("results file has no valid quality record: ") + e.what());
  }
  out.recomputed = metrics::quality(p, ds.vectors, grid, p_exp);
  out.matches = std::fabs(out.recomputed.q_nbr - out.stored_q_nbr) <= 1e-9;
  return out;
}

}  // namespace gradsort
