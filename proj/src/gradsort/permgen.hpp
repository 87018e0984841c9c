#pragma once

// Differentiable soft permutation generators and hardening.
//
// Every generator produces an n x n matrix P_soft whose rows index grid cells
// and whose columns index input vectors, so that Y = P_soft * X.

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gradsort/diff.hpp"
#include "gradsort/grid.hpp"

namespace gradsort::perm {

enum class GeneratorKind { full_rank_gumbel_sinkhorn, low_rank, soft_sort };

const char* to_string(GeneratorKind kind);
GeneratorKind parse_generator_kind(const std::string& name);

struct GeneratorConfig {
  GeneratorKind kind = GeneratorKind::full_rank_gumbel_sinkhorn;
  std::size_t sinkhorn_iters = 10;
  double tau = 1.0;
  double beta = 0.1;
  std::size_t rank = 0;  // LowRank only; 0 selects min(n, 2*ceil(sqrt(n)))
  double init_std = 0.1;

  static GeneratorConfig defaults(GeneratorKind kind);
};

std::size_t default_rank(std::size_t n);

// Throws ErrorKind::usage when a parameter is out of range for size n.
void validate(const GeneratorConfig& cfg, std::size_t n);

// Counter-based Gumbel noise source: the value of draw k depends only on
// (seed, k), so copies of a stream replay the same noise.
class GumbelStream {
 public:
  explicit GumbelStream(std::uint64_t seed, std::uint64_t counter = 0) : seed_(seed), counter_(counter) {}

  // Uniform in (0, 1), clamped to [1e-12, 1 - 1e-12].
  double next_uniform();
  double next_gumbel();
  Matrix sample(std::size_t rows, std::size_t cols);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

// exp once, then `iters` rounds of column- then row-normalization. The input
// is shifted by its (constant) maximum before exp; the shift cancels exactly
// in the first normalization.
diff::Var sinkhorn(diff::Var m, std::size_t iters);

// sinkhorn((weights + beta * eps) / tau). Pass noise == nullptr or beta == 0
// for the noise-free operator.
diff::Var gumbel_sinkhorn(diff::Var weights, const GeneratorConfig& cfg, GumbelStream* noise);

// softmax_rows(rownorm(v) * rownorm(w)^T, tau); v and w are n x m.
diff::Var lowrank_soft(diff::Var v, diff::Var w, double tau);

// softmax_rows(-|sort_desc(s) 1^T - 1 s^T| / tau); s is n x 1.
diff::Var softsort_soft(diff::Var s, double tau);

// Trainable parameters plus the forward map to P_soft.
class Generator {
 public:
  Generator(const GeneratorConfig& cfg, std::size_t n, std::uint64_t seed);

  const GeneratorConfig& config() const noexcept { return cfg_; }
  std::size_t n() const noexcept { return n_; }
  std::vector<Matrix>& params() noexcept { return params_; }
  const std::vector<Matrix>& params() const noexcept { return params_; }

  // Builds P_soft on `tape` from parameter nodes (same order as params()).
  diff::Var forward(diff::Tape& tape, std::span<const diff::Var> params, GumbelStream* noise) const;

  // Noise-free P_soft value for the current parameters.
  Matrix soft_matrix() const;

 private:
  GeneratorConfig cfg_;
  std::size_t n_;
  std::vector<Matrix> params_;
};

struct DuplicateReport {
  Permutation argmax;                              // raw row-wise argmax
  std::vector<std::size_t> duplicated_targets;     // columns hit more than once
  std::vector<std::vector<std::size_t>> rows;      // rows hitting each of them
  std::size_t collisions = 0;                      // n - #distinct targets
};

// Row-wise argmax (lowest index wins ties).
Permutation row_argmax(const Matrix& p);

// Permutation when the row-wise argmax has no duplicates, report otherwise.
std::variant<Permutation, DuplicateReport> harden(const Matrix& p);

// Bijection maximizing the assigned soft mass sum_i p[i, sigma(i)].
Permutation resolve_duplicates(const Matrix& p);

Matrix permutation_matrix(const Permutation& order);

}  // namespace gradsort::perm
