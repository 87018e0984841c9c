#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "support.hpp"

#include "gradsort/baselines.hpp"
#include "gradsort/loss.hpp"
#include "gradsort/metrics.hpp"

using namespace gradsort;
using namespace gradsort::metrics;
using testing::random_matrix;

namespace {

Permutation identity(std::size_t n) {
  Permutation p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  return p;
}

// Arrangement transforms on the cell index.
Permutation remap(const Permutation& p, const GridShape& g, int kind) {
  Permutation out(p.size());
  const std::size_t nx = g.nx(), ny = g.ny();
  for (std::size_t c = 0; c < p.size(); ++c) {
    const std::size_t x = g.col(c), y = g.row(c);
    std::size_t target = 0;
    switch (kind) {
      case 0: target = y * nx + (nx - 1 - x); break;    // horizontal flip
      case 1: target = (ny - 1 - y) * nx + x; break;    // vertical flip
      default: target = x * nx + (nx - 1 - y); break;   // 90 degree rotation (square grids)
    }
    out[target] = p[c];
  }
  return out;
}

}  // namespace

TEST_CASE("apply_permutation places input order[c] in cell c") {
  const Matrix x{{10}, {20}, {30}};
  CHECK(apply_permutation({2, 0, 1}, x) == Matrix{{30}, {10}, {20}});
}

TEST_CASE("quality of the 2x2 hand example") {
  const QualityReport q = quality(identity(4), Matrix{{0}, {1}, {2}, {3}}, GridShape(2, 2));
  CHECK(q.l_nbr_raw == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(q.q_nbr == doctest::Approx(0.25).epsilon(1e-13));
  CHECK(q.p == 16.0);
}

TEST_CASE("smooth data in grid order beats shuffles") {
  const GridShape g(5, 4);
  Matrix x(20, 2);
  for (std::size_t c = 0; c < 20; ++c) {
    x(c, 0) = static_cast<double>(g.col(c));
    x(c, 1) = static_cast<double>(g.row(c));
  }
  const double smooth = quality(identity(20), x, g).q_nbr;
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial)
    CHECK(smooth > quality(testing::random_permutation(20, rng), x, g).q_nbr);
}

TEST_CASE("quality rejects bad permutations and degenerate data") {
  const Matrix x = Matrix{{0}, {1}, {2}, {3}};
  CHECK_THROWS_AS(quality({0, 1, 1, 3}, x, GridShape(2, 2)), Error);
  CHECK_THROWS_AS(quality({0, 1, 2}, x, GridShape(2, 2)), Error);
  CHECK_THROWS_AS(quality(identity(4), Matrix(4, 2, 1.0), GridShape(2, 2)), Error);
}

TEST_CASE("quality is invariant under grid symmetries and scaling") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const GridShape sq(4, 4), rect(5, 3);
    const Matrix xs = random_matrix(16, 3, rng);
    const Matrix xr = random_matrix(15, 3, rng);
    const Permutation ps = testing::random_permutation(16, rng);
    const Permutation pr = testing::random_permutation(15, rng);
    const double qs = quality(ps, xs, sq).q_nbr;
    const double qr = quality(pr, xr, rect).q_nbr;
    for (int kind = 0; kind < 3; ++kind) CHECK(std::fabs(quality(remap(ps, sq, kind), xs, sq).q_nbr - qs) < 1e-12);
    for (int kind = 0; kind < 2; ++kind)
      CHECK(std::fabs(quality(remap(pr, rect, kind), xr, rect).q_nbr - qr) < 1e-12);
    Matrix scaled = xs;
    for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] *= -7.5;
    CHECK(std::fabs(quality(ps, scaled, sq).q_nbr - qs) < 1e-9);
  }
}

TEST_CASE("brute force: tiny symmetric cases") {
  const auto two = brute_force_optimum(Matrix{{0}, {1}}, GridShape(1, 2));
  CHECK(two.evaluated == 2);
  CHECK(two.l_nbr_min == doctest::Approx(1.0));
  CHECK(two.permutation == Permutation{0, 1});
}

TEST_CASE("brute force: 1-d values on 2x2 keep consecutive values adjacent") {
  const Matrix x{{0}, {1}, {2}, {3}};
  const GridShape g(2, 2);
  const auto best = brute_force_optimum(x, g);
  CHECK(best.evaluated == 24);
  // 0 and 3 must sit on a diagonal
  const Permutation& p = best.permutation;
  const auto pos = [&](std::size_t v) { return std::size_t(std::find(p.begin(), p.end(), v) - p.begin()); };
  CHECK(pos(0) + pos(3) == 3);
  CHECK(best.l_nbr_min == doctest::Approx(quality(p, x, g).l_nbr_raw).epsilon(1e-14));
  // independent evaluation of every arrangement
  Permutation q = identity(4);
  double min = 1e300;
  do min = std::min(min, testing::naive_neighbor_loss(testing::permute_rows(q, x), g, testing::naive_d_bar(x)));
  while (std::next_permutation(q.begin(), q.end()));
  CHECK(best.l_nbr_min == doctest::Approx(min).epsilon(1e-13));
}

TEST_CASE("brute force is a lower bound for every method and random arrangements") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const GridShape g(3, 2);
    const Matrix x = random_matrix(6, 3, rng);
    const auto best = brute_force_optimum(x, g);
    CHECK(best.evaluated == 720);
    for (int k = 0; k < 100; ++k)
      CHECK(best.l_nbr_min <= quality(testing::random_permutation(6, rng), x, g).l_nbr_raw + 1e-12);
    CHECK(best.l_nbr_min <= quality(baselines::som_sort(x, g, {}), x, g).l_nbr_raw + 1e-12);
    CHECK(best.l_nbr_min <=
          quality(baselines::swap_2opt(x, g, testing::random_permutation(6, rng)), x, g).l_nbr_raw + 1e-12);
  }
}

TEST_CASE("brute force refuses large inputs") {
  std::mt19937_64 rng(4);
  try {
    brute_force_optimum(random_matrix(10, 2, rng), GridShape(5, 2));
    FAIL("expected refusal");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::usage);
  }
}

TEST_CASE("gradient check suite covers every term and passes") {
  const GradcheckReport r = gradcheck_suite(1, 10);
  CHECK(r.entries.size() == 8);
  for (const auto& e : r.entries) {
    INFO(e.term);
    CHECK(e.points == 10);
    CHECK(e.max_rel_error < 1e-4);
  }
}

TEST_CASE("gradient check suite flags an injected fault") {
  const GradcheckReport r = gradcheck_suite(2, 3, diff::FaultInjection{diff::Op::pairwise_sqdist, 1.5});
  CHECK(r.worst() > 1e-2);
}
