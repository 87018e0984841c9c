#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "gradsort.h"

using nlohmann::json;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("gradsort_capi_" + name)).string();
}

struct Session {
  gs_dataset* ds = nullptr;
  gs_results* res = nullptr;
  ~Session() {
    gs_results_free(res);
    gs_dataset_free(ds);
  }
};

std::string results_text(const gs_results* r) {
  char* s = nullptr;
  REQUIRE(gs_results_to_json(r, &s) == GS_OK);
  std::string out(s);
  gs_string_free(s);
  return out;
}

}  // namespace

TEST_CASE("version and error state") {
  CHECK(std::string(gs_version()) == "1.0.0");
  gs_dataset* ds = nullptr;
  CHECK(gs_dataset_gen_colors(1, 0, &ds) == GS_ERR_USAGE);
  CHECK(ds == nullptr);
  CHECK(std::string(gs_last_error_kind()) == "usage");
  CHECK(std::strlen(gs_last_error()) > 0);
  CHECK(gs_dataset_gen_colors(4, 0, nullptr) == GS_ERR_USAGE);
}

TEST_CASE("datasets through the C API") {
  Session s;
  const std::vector<double> v{0, 0, 1, 0, 0, 1, 1, 1};
  REQUIRE(gs_dataset_from_array(v.data(), 4, 2, &s.ds) == GS_OK);
  CHECK(gs_dataset_rows(s.ds) == 4);
  CHECK(gs_dataset_cols(s.ds) == 2);
  std::vector<double> back(8);
  CHECK(gs_dataset_values(s.ds, back.data(), back.size()) == GS_OK);
  CHECK(back == v);
  CHECK(gs_dataset_values(s.ds, back.data(), 3) == GS_ERR_USAGE);

  const std::string path = temp_path("data.csv");
  CHECK(gs_dataset_save_csv(s.ds, path.c_str()) == GS_OK);
  gs_dataset* loaded = nullptr;
  REQUIRE(gs_dataset_load_csv(path.c_str(), &loaded) == GS_OK);
  CHECK(gs_dataset_rows(loaded) == 4);
  gs_dataset_free(loaded);
  std::remove(path.c_str());

  CHECK(gs_dataset_load_csv(temp_path("missing.csv").c_str(), &loaded) == GS_ERR_DATA);
  const std::vector<double> same(6, 0.5);
  gs_dataset* flat = nullptr;
  CHECK(gs_dataset_from_array(same.data(), 3, 2, &flat) == GS_ERR_DATA);
}

TEST_CASE("sort, save, load and evaluate") {
  Session s;
  REQUIRE(gs_dataset_gen_colors(16, 2, &s.ds) == GS_OK);
  std::size_t calls = 0;
  auto progress = [](void* user, size_t, double, double, double, double, double) {
    ++*static_cast<std::size_t*>(user);
  };
  REQUIRE(gs_sort(s.ds, "gradsort", 4, 4, R"({"max_steps": 100, "seed": 3})", 0, progress, &calls, &s.res) == GS_OK);
  CHECK(calls > 0);
  CHECK(gs_results_size(s.res) == 16);
  std::vector<size_t> order(16);
  CHECK(gs_results_permutation(s.res, order.data(), order.size()) == GS_OK);
  double q = 0.0;
  CHECK(gs_results_q_nbr(s.res, &q) == GS_OK);

  const std::string path = temp_path("results.json");
  CHECK(gs_results_save(s.res, path.c_str()) == GS_OK);
  gs_results* loaded = nullptr;
  REQUIRE(gs_results_load(path.c_str(), &loaded) == GS_OK);
  double recomputed = 0.0, stored = 0.0;
  CHECK(gs_eval(s.ds, loaded, &recomputed, &stored) == GS_OK);
  CHECK(stored == q);
  gs_results_free(loaded);
  std::remove(path.c_str());

  json doc = json::parse(results_text(s.res));
  CHECK(doc["config"]["max_steps"] == 100);
  doc["quality"]["q_nbr"] = q + 0.5;
  gs_results* tampered = nullptr;
  REQUIRE(gs_results_parse(doc.dump().c_str(), &tampered) == GS_OK);
  CHECK(gs_eval(s.ds, tampered, &recomputed, &stored) == GS_ERR_DATA);
  CHECK(recomputed == doctest::Approx(q));
  gs_results_free(tampered);
}

TEST_CASE("sort argument errors") {
  Session s;
  REQUIRE(gs_dataset_gen_colors(16, 2, &s.ds) == GS_OK);
  CHECK(gs_sort(s.ds, "gradsort", 4, 5, nullptr, 0, nullptr, nullptr, &s.res) == GS_ERR_USAGE);
  CHECK(gs_sort(s.ds, "bogus", 4, 4, nullptr, 0, nullptr, nullptr, &s.res) == GS_ERR_USAGE);
  CHECK(gs_sort(s.ds, "som", 4, 4, "{not json", 0, nullptr, nullptr, &s.res) == GS_ERR_USAGE);
  CHECK(gs_sort(s.ds, "som", 4, 4, R"({"unknown": 1})", 0, nullptr, nullptr, &s.res) == GS_ERR_USAGE);
  CHECK(gs_sort(s.ds, "som", 0, 4, nullptr, 0, nullptr, nullptr, &s.res) == GS_ERR_USAGE);
  CHECK(s.res == nullptr);
  gs_results* r = nullptr;
  CHECK(gs_results_parse(R"({"permutation": [0, 0]})", &r) == GS_ERR_DATA);
  CHECK(gs_results_parse("[", &r) == GS_ERR_DATA);
}

TEST_CASE("two identical sorts agree byte for byte outside timing") {
  Session a, b;
  REQUIRE(gs_dataset_gen_colors(16, 4, &a.ds) == GS_OK);
  const char* cfg = R"({"max_steps": 300, "seed": 5})";
  REQUIRE(gs_sort(a.ds, "gradsort", 4, 4, cfg, 0, nullptr, nullptr, &a.res) == GS_OK);
  REQUIRE(gs_sort(a.ds, "gradsort", 4, 4, cfg, 0, nullptr, nullptr, &b.res) == GS_OK);
  json x = json::parse(results_text(a.res)), y = json::parse(results_text(b.res));
  x.erase("timing");
  y.erase("timing");
  CHECK(x.dump() == y.dump());
}

TEST_CASE("oracle, gradcheck and render") {
  Session s;
  REQUIRE(gs_dataset_gen_colors(6, 1, &s.ds) == GS_OK);
  char* text = nullptr;
  REQUIRE(gs_oracle(s.ds, 3, 2, &text) == GS_OK);
  const json oracle = json::parse(text);
  gs_string_free(text);
  CHECK(oracle["evaluated"] == 720);
  CHECK(oracle["q_nbr_max"].get<double>() == doctest::Approx(1.0 - oracle["l_nbr_min"].get<double>()));

  REQUIRE(gs_gradcheck(1, 2, 0, &text) == GS_OK);
  CHECK(json::parse(text)["pass"] == true);
  gs_string_free(text);
  REQUIRE(gs_gradcheck(1, 2, 1, &text) == GS_OK);
  CHECK(json::parse(text)["pass"] == false);
  gs_string_free(text);

  const size_t order[6] = {5, 4, 3, 2, 1, 0};
  const std::string path = temp_path("grid.ppm");
  CHECK(gs_render_ppm(s.ds, order, 6, 3, 2, 4, path.c_str()) == GS_OK);
  CHECK(std::filesystem::file_size(path) == std::string("P6\n12 8\n255\n").size() + 12 * 8 * 3);
  std::remove(path.c_str());
  CHECK(gs_render_ppm(s.ds, order, 6, 2, 2, 4, path.c_str()) != GS_OK);

  gs_dataset* big = nullptr;
  REQUIRE(gs_dataset_gen_colors(16, 1, &big) == GS_OK);
  CHECK(gs_oracle(big, 4, 4, &text) == GS_ERR_USAGE);
  gs_dataset_free(big);
}
