// gradsort command-line tool. Talks to the library only through gradsort.h.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gradsort.h"

namespace {

using nlohmann::json;

// Exit codes: 0 ok, 1 usage, 2 data, 3 numeric.
struct Failure {
  int code;
  std::string kind;
  std::string message;
};

[[noreturn]] void raise(gs_status s) { throw Failure{static_cast<int>(s), gs_last_error_kind(), gs_last_error()}; }
[[noreturn]] void usage_error(const std::string& msg) { throw Failure{1, "usage", msg}; }

void check(gs_status s) {
  if (s != GS_OK) raise(s);
}

struct DatasetDeleter {
  void operator()(gs_dataset* d) const { gs_dataset_free(d); }
};
struct ResultsDeleter {
  void operator()(gs_results* r) const { gs_results_free(r); }
};
using DatasetPtr = std::unique_ptr<gs_dataset, DatasetDeleter>;
using ResultsPtr = std::unique_ptr<gs_results, ResultsDeleter>;

DatasetPtr load_dataset(const std::string& path) {
  gs_dataset* ds = nullptr;
  check(gs_dataset_load_csv(path.c_str(), &ds));
  return DatasetPtr(ds);
}

ResultsPtr load_results(const std::string& path) {
  gs_results* r = nullptr;
  check(gs_results_load(path.c_str(), &r));
  return ResultsPtr(r);
}

std::string take_string(char* s) {
  std::string out(s);
  gs_string_free(s);
  return out;
}

std::pair<std::size_t, std::size_t> parse_grid(const std::string& spec) {
  const auto x = spec.find_first_of("xX");
  try {
    if (x == std::string::npos) throw std::invalid_argument("no x");
    std::size_t used_w = 0, used_h = 0;
    const std::string ws = spec.substr(0, x), hs = spec.substr(x + 1);
    const unsigned long w = std::stoul(ws, &used_w), h = std::stoul(hs, &used_h);
    if (used_w != ws.size() || used_h != hs.size() || w == 0 || h == 0) throw std::invalid_argument("bad");
    return {w, h};
  } catch (const std::exception&) {
    usage_error("grid must look like WxH, got '" + spec + "'");
  }
}

std::vector<std::uint64_t> parse_seeds(const std::string& list) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      seeds.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      usage_error("bad seed '" + item + "' in --seeds");
    }
  }
  if (seeds.empty()) usage_error("--seeds needs at least one value");
  return seeds;
}

std::string with_seed_suffix(const std::string& path, std::uint64_t seed) {
  const auto dot = path.rfind('.');
  const auto slash = path.rfind('/');
  const std::string suffix = "-seed" + std::to_string(seed);
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path + suffix;
  return path.substr(0, dot) + suffix + path.substr(dot);
}

void progress_line(void* user, size_t step, double alpha, double nbr, double s, double p, double total) {
  const auto every = *static_cast<std::size_t*>(user);
  if (every == 0 || step % every != 0) return;
  std::fprintf(stderr, "step %zu alpha %.4f L_nbr %.6f L_s %.6f L_p %.6f total %.6f\n", step, alpha, nbr, s, p,
               total);
}

struct SortOptions {
  std::string dataset;
  std::string method = "gradsort";
  std::string grid;
  std::size_t steps = 0;
  std::uint64_t seed = 0;
  std::string seeds;
  std::string config;
  std::string out = "results.json";
  std::size_t trace_stride = 0;
  std::size_t progress = 0;
};

int run_sort(const SortOptions& o, bool steps_set, bool seed_set) {
  const auto [w, h] = parse_grid(o.grid);
  json config = json::object();
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw Failure{2, "data", "cannot open config '" + o.config + "'"};
    try {
      config = json::parse(in);
    } catch (const json::parse_error& e) {
      usage_error("config '" + o.config + "' is not valid JSON: " + e.what());
    }
    if (!config.is_object()) usage_error("config '" + o.config + "' must be a JSON object");
  }
  if (steps_set) config["max_steps"] = o.steps;

  std::vector<std::uint64_t> seeds;
  if (!o.seeds.empty()) seeds = parse_seeds(o.seeds);
  else if (seed_set) seeds.push_back(o.seed);

  DatasetPtr ds = load_dataset(o.dataset);

  auto run_one = [&](std::optional<std::uint64_t> seed, const std::string& out_path, std::size_t progress) {
    json cfg = config;
    if (seed) {
      cfg["seed"] = *seed;
      cfg["som"]["seed"] = *seed;
    }
    const std::string cfg_text = cfg.dump();
    gs_results* raw = nullptr;
    std::size_t every = progress;
    const gs_status s = gs_sort(ds.get(), o.method.c_str(), w, h, cfg_text.c_str(), o.trace_stride,
                                progress ? progress_line : nullptr, &every, &raw);
    if (s != GS_OK) raise(s);
    ResultsPtr r(raw);
    check(gs_results_save(r.get(), out_path.c_str()));
    double q = 0.0;
    check(gs_results_q_nbr(r.get(), &q));
    return q;
  };

  if (seeds.size() <= 1) {
    std::optional<std::uint64_t> seed;
    if (!seeds.empty()) seed = seeds.front();
    const double q = run_one(seed, o.out, o.progress);
    std::cout << json{{"results", o.out}, {"q_nbr", q}}.dump() << "\n";
    return 0;
  }

  // Independent runs fan out across threads; each writes its own file.
  std::vector<std::thread> workers;
  std::vector<double> q(seeds.size(), 0.0);
  std::vector<std::optional<Failure>> errors(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i)
    workers.emplace_back([&, i] {
      try {
        q[i] = run_one(seeds[i], with_seed_suffix(o.out, seeds[i]), 0);
      } catch (const Failure& f) {
        errors[i] = f;
      }
    });
  for (auto& t : workers) t.join();
  json summary = json::array();
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (errors[i]) throw *errors[i];
    summary.push_back({{"seed", seeds[i]}, {"results", with_seed_suffix(o.out, seeds[i])}, {"q_nbr", q[i]}});
  }
  std::cout << summary.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Arrange vectors on a 2D grid so that neighbors are similar"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(gs_version()));

  std::size_t gen_n = 256;
  std::uint64_t gen_seed = 0;
  std::string gen_out = "colors.csv";
  auto* gen = app.add_subcommand("gen-colors", "Generate random RGB colors as CSV");
  gen->add_option("-n", gen_n, "Number of colors")->check(CLI::Range(std::size_t{2}, std::size_t{1} << 24));
  gen->add_option("--seed", gen_seed, "Random seed");
  gen->add_option("--out,-o", gen_out, "Output CSV path");

  SortOptions so;
  auto* sort = app.add_subcommand("sort", "Arrange a dataset on a grid");
  sort->add_option("--dataset,-d", so.dataset, "Vector CSV")->required();
  sort->add_option("--method,-m", so.method, "gradsort|gradsort-lowrank|gradsort-softsort|som|random|2opt");
  sort->add_option("--grid,-g", so.grid, "Grid size WxH")->required();
  auto* steps_opt = sort->add_option("--steps,-T", so.steps, "Maximum training steps");
  auto* seed_opt = sort->add_option("--seed,-s", so.seed, "Random seed");
  sort->add_option("--seeds", so.seeds, "Comma-separated seeds; one results file per seed")->excludes(seed_opt);
  sort->add_option("--config,-c", so.config, "JSON config file");
  sort->add_option("--out,-o", so.out, "Results JSON path");
  sort->add_option("--trace-stride", so.trace_stride, "Keep every k-th loss trace record (0 = auto)");
  sort->add_option("--progress", so.progress, "Print training progress every k steps to stderr");

  std::string ev_dataset, ev_results;
  auto* eval = app.add_subcommand("eval", "Recompute quality of a results file");
  eval->add_option("--dataset,-d", ev_dataset, "Vector CSV")->required();
  eval->add_option("--results,-r", ev_results, "Results JSON")->required();

  std::string rd_dataset, rd_results, rd_grid, rd_out = "grid.ppm";
  std::size_t rd_cell = 8;
  auto* render = app.add_subcommand("render", "Render a color arrangement as PPM");
  render->add_option("--dataset,-d", rd_dataset, "RGB color CSV")->required();
  auto* rd_results_opt = render->add_option("--results,-r", rd_results, "Results JSON (omit for input order)");
  render->add_option("--grid,-g", rd_grid, "Grid size WxH (input order only)")->excludes(rd_results_opt);
  render->add_option("--cell-px", rd_cell, "Pixels per cell")->check(CLI::PositiveNumber);
  render->add_option("--out,-o", rd_out, "Output PPM path");

  std::uint64_t gc_seed = 1;
  std::size_t gc_points = 10;
  bool gc_fault = false;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of all gradients");
  gradcheck->add_option("--seed", gc_seed, "Random seed");
  gradcheck->add_option("--points", gc_points, "Random points per term")->check(CLI::PositiveNumber);
  gradcheck->add_flag("--inject-fault", gc_fault, "Break one backward rule (negative control)");

  std::string or_dataset, or_grid;
  auto* oracle = app.add_subcommand("oracle", "Exhaustive optimum for tiny instances (n <= 9)");
  oracle->add_option("--dataset,-d", or_dataset, "Vector CSV")->required();
  oracle->add_option("--grid,-g", or_grid, "Grid size WxH")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) {
      gs_dataset* raw = nullptr;
      check(gs_dataset_gen_colors(gen_n, gen_seed, &raw));
      DatasetPtr ds(raw);
      check(gs_dataset_save_csv(ds.get(), gen_out.c_str()));
      std::cout << json{{"dataset", gen_out}, {"n", gen_n}, {"d", 3}, {"seed", gen_seed}}.dump() << "\n";
      return 0;
    }
    if (*sort) return run_sort(so, steps_opt->count() > 0, seed_opt->count() > 0);
    if (*eval) {
      DatasetPtr ds = load_dataset(ev_dataset);
      ResultsPtr r = load_results(ev_results);
      double recomputed = 0.0, stored = 0.0;
      const gs_status s = gs_eval(ds.get(), r.get(), &recomputed, &stored);
      std::cout << json{{"q_nbr", recomputed}, {"stored_q_nbr", stored}, {"match", s == GS_OK}}.dump() << "\n";
      if (s != GS_OK) raise(s);
      return 0;
    }
    if (*render) {
      DatasetPtr ds = load_dataset(rd_dataset);
      const std::size_t n = gs_dataset_rows(ds.get());
      std::vector<std::size_t> order(n);
      std::size_t w = 0, h = 0;
      if (!rd_results.empty()) {
        ResultsPtr r = load_results(rd_results);
        if (gs_results_size(r.get()) != n) throw Failure{2, "data", "results do not match the dataset size"};
        check(gs_results_permutation(r.get(), order.data(), n));
        check(gs_results_grid(r.get(), &w, &h));
      } else {
        if (rd_grid.empty()) usage_error("render needs --results or --grid");
        std::tie(w, h) = parse_grid(rd_grid);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
      }
      check(gs_render_ppm(ds.get(), order.data(), n, w, h, rd_cell, rd_out.c_str()));
      std::cout << json{{"image", rd_out}, {"width", w * rd_cell}, {"height", h * rd_cell}}.dump() << "\n";
      return 0;
    }
    if (*gradcheck) {
      char* report = nullptr;
      check(gs_gradcheck(gc_seed, gc_points, gc_fault ? 1 : 0, &report));
      const std::string text = take_string(report);
      std::cout << text << "\n";
      return json::parse(text).at("pass").get<bool>() ? 0 : 3;
    }
    if (*oracle) {
      const auto [w, h] = parse_grid(or_grid);
      DatasetPtr ds = load_dataset(or_dataset);
      char* report = nullptr;
      check(gs_oracle(ds.get(), w, h, &report));
      std::cout << take_string(report) << "\n";
      return 0;
    }
  } catch (const Failure& f) {
    std::cerr << "error: " << json{{"code", f.code}, {"kind", f.kind}, {"message", f.message}}.dump() << "\n";
    return f.code;
  }
  return 1;
}
