#include "gradsort.h"

#include <cstdio>
#include <cstring>
#include <string>

#include "gradsort/pipeline.hpp"

using gradsort::Error;
using gradsort::ErrorKind;
using nlohmann::json;

struct gs_dataset {
  gradsort::io::Dataset ds;
};

struct gs_results {
  json doc;
};

namespace {

thread_local std::string last_error;
thread_local std::string last_kind = "none";

gs_status status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage: return GS_ERR_USAGE;
    case ErrorKind::numeric: return GS_ERR_NUMERIC;
    case ErrorKind::dimension:
    case ErrorKind::data:
    case ErrorKind::unsupported: return GS_ERR_DATA;
  }
  return GS_ERR_DATA;
}

gs_status record(const char* kind, const std::string& msg, gs_status status) {
  last_kind = kind;
  last_error = msg;
  return status;
}

template <class F>
gs_status guarded(F&& body) {
  try {
    body();
    return GS_OK;
  } catch (const Error& e) {
    return record(gradsort::to_string(e.kind()), e.what(), status_for(e.kind()));
  } catch (const json::exception& e) {
    return record("data", e.what(), GS_ERR_DATA);
  } catch (const std::exception& e) {
    return record("internal", e.what(), GS_ERR_DATA);
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) gradsort::fail(ErrorKind::usage, std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* gs_version(void) { return gradsort::tool_version; }
const char* gs_last_error(void) { return last_error.c_str(); }
const char* gs_last_error_kind(void) { return last_kind.c_str(); }
void gs_string_free(char* s) { delete[] s; }

gs_status gs_dataset_gen_colors(size_t n, uint64_t seed, gs_dataset** out) {
  return guarded([&] {
    require(out, "out");
    *out = new gs_dataset{gradsort::io::gen_colors(n, seed)};
  });
}

gs_status gs_dataset_load_csv(const char* path, gs_dataset** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new gs_dataset{gradsort::io::load_csv(path)};
  });
}

gs_status gs_dataset_from_array(const double* values, size_t n, size_t d, gs_dataset** out) {
  return guarded([&] {
    require(values, "values");
    require(out, "out");
    gradsort::io::Dataset ds;
    ds.name = "array";
    ds.provenance = "in-memory";
    ds.vectors = gradsort::Matrix(n, d, std::vector<double>(values, values + n * d));
    gradsort::io::validate(ds);
    *out = new gs_dataset{std::move(ds)};
  });
}

gs_status gs_dataset_save_csv(const gs_dataset* ds, const char* path) {
  return guarded([&] {
    require(ds, "dataset");
    require(path, "path");
    gradsort::io::save_csv(ds->ds, path);
  });
}

size_t gs_dataset_rows(const gs_dataset* ds) { return ds ? ds->ds.vectors.rows() : 0; }
size_t gs_dataset_cols(const gs_dataset* ds) { return ds ? ds->ds.vectors.cols() : 0; }

gs_status gs_dataset_values(const gs_dataset* ds, double* out, size_t len) {
  return guarded([&] {
    require(ds, "dataset");
    require(out, "out");
    const auto& v = ds->ds.vectors.values();
    if (len != v.size()) gradsort::fail(ErrorKind::usage, "output length does not match rows*cols");
    std::memcpy(out, v.data(), v.size() * sizeof(double));
  });
}

void gs_dataset_free(gs_dataset* ds) { delete ds; }

gs_status gs_sort(const gs_dataset* ds, const char* method, size_t grid_w, size_t grid_h, const char* config_json,
                  size_t trace_stride, gs_progress_fn progress, void* user, gs_results** out) {
  return guarded([&] {
    require(ds, "dataset");
    require(method, "method");
    require(out, "out");
    json config;
    if (config_json != nullptr && *config_json != '\0') {
      try {
        config = json::parse(config_json);
      } catch (const json::parse_error& e) {
        gradsort::fail(ErrorKind::usage, std::string("config is not valid JSON: ") + e.what());
      }
    }
    gradsort::RunConfig cfg = gradsort::make_run_config(method, config);
    cfg.trace_stride = trace_stride;
    const gradsort::GridShape grid(grid_w, grid_h);
    gradsort::train::StepObserver observer;
    if (progress != nullptr)
      observer = [&](const gradsort::train::TraceRecord& r) {
        progress(user, r.step, r.alpha, r.nbr, r.s, r.p, r.total);
      };
    const gradsort::RunOutput result = gradsort::run_method(ds->ds, grid, cfg, observer);
    *out = new gs_results{gradsort::make_results(ds->ds, grid, cfg, result)};
  });
}

gs_status gs_results_parse(const char* json_text, gs_results** out) {
  return guarded([&] {
    require(json_text, "json_text");
    require(out, "out");
    json doc = json::parse(json_text);
    gradsort::permutation_from_results(doc);
    gradsort::grid_from_results(doc);
    *out = new gs_results{std::move(doc)};
  });
}

gs_status gs_results_load(const char* path, gs_results** out) {
  return guarded([&] {
    require(path, "path");
    const std::string text = gradsort::io::read_file(path);
    if (gs_status s = gs_results_parse(text.c_str(), out); s != GS_OK)
      throw Error(ErrorKind::data, std::string(path) + ": " + last_error);
  });
}

gs_status gs_results_save(const gs_results* r, const char* path) {
  return guarded([&] {
    require(r, "results");
    require(path, "path");
    gradsort::io::write_file(path, r->doc.dump(2) + "\n");
  });
}

gs_status gs_results_to_json(const gs_results* r, char** out) {
  return guarded([&] {
    require(r, "results");
    require(out, "out");
    *out = dup_string(r->doc.dump(2));
  });
}

size_t gs_results_size(const gs_results* r) {
  if (r == nullptr || !r->doc.contains("permutation")) return 0;
  return r->doc["permutation"].size();
}

gs_status gs_results_permutation(const gs_results* r, size_t* out, size_t len) {
  return guarded([&] {
    require(r, "results");
    require(out, "out");
    const gradsort::Permutation p = gradsort::permutation_from_results(r->doc);
    if (len != p.size()) gradsort::fail(ErrorKind::usage, "output length does not match the permutation size");
    for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i];
  });
}

gs_status gs_results_grid(const gs_results* r, size_t* grid_w, size_t* grid_h) {
  return guarded([&] {
    require(r, "results");
    require(grid_w, "grid_w");
    require(grid_h, "grid_h");
    const gradsort::GridShape g = gradsort::grid_from_results(r->doc);
    *grid_w = g.nx();
    *grid_h = g.ny();
  });
}

gs_status gs_results_q_nbr(const gs_results* r, double* q_nbr) {
  return guarded([&] {
    require(r, "results");
    require(q_nbr, "q_nbr");
    *q_nbr = r->doc.at("quality").at("q_nbr").get<double>();
  });
}

void gs_results_free(gs_results* r) { delete r; }

gs_status gs_eval(const gs_dataset* ds, const gs_results* r, double* recomputed_q_nbr, double* stored_q_nbr) {
  return guarded([&] {
    require(ds, "dataset");
    require(r, "results");
    const gradsort::EvalOutcome e = gradsort::evaluate_results(ds->ds, r->doc);
    if (recomputed_q_nbr) *recomputed_q_nbr = e.recomputed.q_nbr;
    if (stored_q_nbr) *stored_q_nbr = e.stored_q_nbr;
    if (!e.matches) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "stored q_nbr %.17g does not match recomputed %.17g", e.stored_q_nbr,
                    e.recomputed.q_nbr);
      gradsort::fail(ErrorKind::data, buf);
    }
  });
}

gs_status gs_oracle(const gs_dataset* ds, size_t grid_w, size_t grid_h, char** out) {
  return guarded([&] {
    require(ds, "dataset");
    require(out, "out");
    gradsort::io::validate(ds->ds);
    const gradsort::GridShape grid(grid_w, grid_h);
    const auto best = gradsort::metrics::brute_force_optimum(ds->ds.vectors, grid);
    json j = {{"grid", {{"nx", grid.nx()}, {"ny", grid.ny()}}},
              {"permutation_convention", "cell_to_input"},
              {"permutation", best.permutation},
              {"l_nbr_min", best.l_nbr_min},
              {"q_nbr_max", 1.0 - best.l_nbr_min},
              {"evaluated", best.evaluated}};
    *out = dup_string(j.dump(2));
  });
}

gs_status gs_gradcheck(uint64_t seed, size_t points, int inject_fault, char** out) {
  return guarded([&] {
    require(out, "out");
    std::optional<gradsort::diff::FaultInjection> fault;
    if (inject_fault) fault = gradsort::diff::FaultInjection{gradsort::diff::Op::pairwise_sqdist, 1.5};
    const auto report = gradsort::metrics::gradcheck_suite(seed, points, fault);
    json terms = json::array();
    for (const auto& e : report.entries)
      terms.push_back({{"term", e.term}, {"max_rel_error", e.max_rel_error}, {"points", e.points}});
    json j = {{"seed", seed},
              {"fault_injected", inject_fault != 0},
              {"terms", terms},
              {"worst", report.worst()},
              {"tolerance", 1e-4},
              {"pass", report.worst() < 1e-4}};
    *out = dup_string(j.dump(2));
  });
}

gs_status gs_render_ppm(const gs_dataset* ds, const size_t* order, size_t n, size_t grid_w, size_t grid_h,
                        size_t cell_px, const char* path) {
  return guarded([&] {
    require(ds, "dataset");
    require(order, "order");
    require(path, "path");
    const gradsort::Permutation p(order, order + n);
    gradsort::io::render_ppm(ds->ds, p, gradsort::GridShape(grid_w, grid_h), cell_px, path);
  });
}

}  // extern "C"
