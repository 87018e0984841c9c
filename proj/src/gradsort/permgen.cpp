#include "gradsort/permgen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "gradsort/lap.hpp"

namespace gradsort::perm {

using diff::Tape;
using diff::Var;

const char* to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::full_rank_gumbel_sinkhorn: return "FullRankGumbelSinkhorn";
    case GeneratorKind::low_rank: return "LowRank";
    case GeneratorKind::soft_sort: return "SoftSort";
  }
  return "?";
}

GeneratorKind parse_generator_kind(const std::string& name) {
  if (name == "FullRankGumbelSinkhorn") return GeneratorKind::full_rank_gumbel_sinkhorn;
  if (name == "LowRank") return GeneratorKind::low_rank;
  if (name == "SoftSort") return GeneratorKind::soft_sort;
  fail(ErrorKind::usage, "unknown generator kind '" + name + "'");
}

GeneratorConfig GeneratorConfig::defaults(GeneratorKind kind) {
  GeneratorConfig cfg;
  cfg.kind = kind;
  switch (kind) {
    case GeneratorKind::full_rank_gumbel_sinkhorn:
      break;
    case GeneratorKind::low_rank:
      // cosine logits live in [-1, 1]; a sharp temperature is needed for rows
      // to become near one-hot
      cfg.tau = 0.05;
      cfg.beta = 0.0;
      cfg.init_std = 1.0;
      break;
    case GeneratorKind::soft_sort:
      cfg.beta = 0.0;
      cfg.init_std = 1.0;
      break;
  }
  return cfg;
}

std::size_t default_rank(std::size_t n) {
  const auto root = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  return std::min(n, 2 * root);
}

void validate(const GeneratorConfig& cfg, std::size_t n) {
  if (cfg.sinkhorn_iters < 1) fail(ErrorKind::usage, "sinkhorn_iters must be >= 1");
  if (!(cfg.tau > 0.0)) fail(ErrorKind::usage, "tau must be > 0");
  if (!(cfg.beta >= 0.0 && cfg.beta <= 1.0)) fail(ErrorKind::usage, "beta must lie in [0, 1]");
  if (!(cfg.init_std > 0.0)) fail(ErrorKind::usage, "init_std must be > 0");
  if (cfg.kind == GeneratorKind::low_rank && cfg.rank != 0 && (cfg.rank < 1 || cfg.rank > n))
    fail(ErrorKind::usage, "rank must lie in [1, n]");
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

double GumbelStream::next_uniform() {
  const std::uint64_t bits = splitmix64(splitmix64(seed_) ^ counter_++);
  const double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
  return std::clamp(u, 1e-12, 1.0 - 1e-12);
}

double GumbelStream::next_gumbel() { return -std::log(-std::log(next_uniform())); }

Matrix GumbelStream::sample(std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = next_gumbel();
  return m;
}

Var sinkhorn(Var m, std::size_t iters) {
  Tape& tape = *m.tape;
  const Matrix& v = tape.value(m);
  if (v.rows() != v.cols()) fail(ErrorKind::dimension, "sinkhorn: matrix must be square, got " + v.shape_str());
  if (iters < 1) fail(ErrorKind::usage, "sinkhorn: iters must be >= 1");
  return diff::sinkhorn_normalize(m, iters);
}

Var gumbel_sinkhorn(Var weights, const GeneratorConfig& cfg, GumbelStream* noise) {
  Tape& tape = *weights.tape;
  const Matrix& w = tape.value(weights);
  if (w.rows() != w.cols()) fail(ErrorKind::dimension, "gumbel_sinkhorn: weights must be square");
  Var logits = weights;
  if (noise != nullptr && cfg.beta > 0.0) {
    Matrix eps = noise->sample(w.rows(), w.cols());
    for (std::size_t i = 0; i < eps.size(); ++i) eps[i] *= cfg.beta;
    logits = diff::add(weights, tape.constant(std::move(eps)));
  }
  if (cfg.tau != 1.0) logits = diff::scalar_mul(logits, 1.0 / cfg.tau);
  return sinkhorn(logits, cfg.sinkhorn_iters);
}

Var lowrank_soft(Var v, Var w, double tau) {
  const Matrix& vv = v.tape->value(v);
  const Matrix& wv = w.tape->value(w);
  if (!vv.same_shape(wv)) fail(ErrorKind::dimension, "lowrank_soft: V and W must have equal shapes");
  Var cosines = diff::matmul(diff::row_l2_normalize(v), diff::transpose(diff::row_l2_normalize(w)));
  return diff::softmax_rows(cosines, tau);
}

Var softsort_soft(Var s, double tau) {
  if (!(tau > 0.0)) fail(ErrorKind::usage, "softsort_soft: tau must be > 0");
  Tape& tape = *s.tape;
  const Matrix& sv = tape.value(s);
  if (sv.cols() != 1) fail(ErrorKind::dimension, "softsort_soft: scores must be an n x 1 column");
  const std::size_t n = sv.rows();
  Var row = diff::transpose(s);                                            // 1 x n
  Var sorted_desc = diff::scalar_mul(diff::sort_rows_asc(diff::scalar_mul(row, -1.0)), -1.0);
  Var ones_col = tape.constant(Matrix(n, 1, 1.0));
  Var ones_row = tape.constant(Matrix(1, n, 1.0));
  Var left = diff::matmul(diff::transpose(sorted_desc), ones_row);         // [i][j] = sorted_i
  Var right = diff::matmul(ones_col, row);                                 // [i][j] = s_j
  Var logits = diff::scalar_mul(diff::abs_elem(diff::sub(left, right)), -1.0);
  return diff::softmax_rows(logits, tau);
}

Generator::Generator(const GeneratorConfig& cfg, std::size_t n, std::uint64_t seed) : cfg_(cfg), n_(n) {
  validate(cfg_, n);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, cfg_.init_std);
  auto init = [&](std::size_t r, std::size_t c) {
    Matrix m(r, c);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = normal(rng);
    return m;
  };
  switch (cfg_.kind) {
    case GeneratorKind::full_rank_gumbel_sinkhorn:
      params_.push_back(init(n, n));
      break;
    case GeneratorKind::low_rank: {
      if (cfg_.rank == 0) cfg_.rank = default_rank(n);
      params_.push_back(init(n, cfg_.rank));
      params_.push_back(init(n, cfg_.rank));
      break;
    }
    case GeneratorKind::soft_sort:
      params_.push_back(init(n, 1));
      break;
  }
}

Var Generator::forward(Tape& tape, std::span<const Var> params, GumbelStream* noise) const {
  (void)tape;
  switch (cfg_.kind) {
    case GeneratorKind::full_rank_gumbel_sinkhorn:
      return gumbel_sinkhorn(params[0], cfg_, noise);
    case GeneratorKind::low_rank:
      return lowrank_soft(params[0], params[1], cfg_.tau);
    case GeneratorKind::soft_sort:
      return softsort_soft(params[0], cfg_.tau);
  }
  fail(ErrorKind::usage, "unknown generator kind");
}

Matrix Generator::soft_matrix() const {
  Tape tape;
  std::vector<Var> vars;
  for (const Matrix& p : params_) vars.push_back(tape.constant(p));
  return tape.value(forward(tape, vars, nullptr));
}

Permutation row_argmax(const Matrix& p) {
  Permutation out(p.rows());
  for (std::size_t r = 0; r < p.rows(); ++r) {
    auto row = p.row(r);
    out[r] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

std::variant<Permutation, DuplicateReport> harden(const Matrix& p) {
  if (p.rows() != p.cols()) fail(ErrorKind::dimension, "harden: matrix must be square, got " + p.shape_str());
  Permutation order = row_argmax(p);
  std::map<std::size_t, std::vector<std::size_t>> hits;
  for (std::size_t r = 0; r < order.size(); ++r) hits[order[r]].push_back(r);
  if (hits.size() == order.size()) return order;
  DuplicateReport report;
  report.collisions = order.size() - hits.size();
  for (auto& [target, rows] : hits) {
    if (rows.size() < 2) continue;
    report.duplicated_targets.push_back(target);
    report.rows.push_back(rows);
  }
  report.argmax = std::move(order);
  return report;
}

Permutation resolve_duplicates(const Matrix& p) {
  Matrix cost(p.rows(), p.cols());
  for (std::size_t i = 0; i < p.size(); ++i) cost[i] = -p[i];
  return lap::solve(cost).assignment;
}

Matrix permutation_matrix(const Permutation& order) {
  Matrix m(order.size(), order.size());
  for (std::size_t r = 0; r < order.size(); ++r) m(r, order[r]) = 1.0;
  return m;
}

}  // namespace gradsort::perm
