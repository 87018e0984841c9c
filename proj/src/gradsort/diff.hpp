#pragma once

// Minimal define-by-run reverse-mode differentiation over dense matrices.
//
// A Tape owns every node created during one forward evaluation. Nodes are
// appended in evaluation order, so the tape index is a topological order and
// backward() is a single reverse sweep. Build a fresh tape per step.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "gradsort/matrix.hpp"

namespace gradsort::diff {

enum class Op : std::uint8_t {
  leaf,
  add,
  sub,
  mul,
  square,
  abs,
  scalar_mul,
  add_scalar,
  sum_all,
  sum_rows,
  sum_cols,
  matmul,
  transpose,
  exp,
  row_normalize,
  col_normalize,
  softmax_rows,
  sort_rows_asc,
  sort_cols_asc,
  pairwise_sqdist,
  row_l2_normalize,
  sinkhorn,
};

const char* op_name(Op op);

class Tape;

// Lightweight handle to a node on a tape.
struct Var {
  Tape* tape = nullptr;
  std::uint32_t id = 0;
};

// Scales the gradient flowing through every node of one op kind. Only used to
// prove that gradient checks catch a broken backward rule.
struct FaultInjection {
  Op op;
  double factor;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var variable(Matrix value);
  Var constant(Matrix value);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  double scalar(Var v) const;

  // Gradient of the last backward() output w.r.t. v; zeros if unreachable.
  Matrix grad(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id].needs_grad; }

  // Reverse sweep from a 1x1 output. May be called once per tape.
  void backward(Var out);

  void inject_fault(std::optional<FaultInjection> fault) { fault_ = fault; }
  std::size_t size() const noexcept { return nodes_.size(); }

  struct Node {
    Op op = Op::leaf;
    Matrix value;
    Matrix grad;
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    std::uint8_t arity = 0;
    bool needs_grad = false;
    double param = 0.0;                 // scalar factor / temperature
    std::vector<std::uint32_t> index;   // sort permutations
    std::vector<double> cache;          // normalizer sums / norms
  };

  Var record(Op op, Matrix value, std::initializer_list<Var> parents);
  Node& node(Var v) { return nodes_[v.id]; }
  const Node& node(Var v) const { return nodes_[v.id]; }

 private:
  void backward_node(std::uint32_t id);
  Matrix& grad_slot(std::uint32_t id);

  std::vector<Node> nodes_;
  std::optional<FaultInjection> fault_;
  bool backward_done_ = false;
};

// Binary elementwise ops require equal shapes; there is no broadcasting.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var square(Var a);
// Subgradient 0 at exactly 0.
Var abs_elem(Var a);
Var scalar_mul(Var a, double s);
Var add_scalar(Var a, double s);
Var sum_all(Var a);
// n x m -> n x 1 (sum across each row).
Var sum_rows(Var a);
// n x m -> 1 x m (sum down each column).
Var sum_cols(Var a);
Var matmul(Var a, Var b);
Var transpose(Var a);

Var exp_elem(Var a);
Var row_normalize(Var a);
Var col_normalize(Var a);
Var softmax_rows(Var a, double tau);

// Sorting is stable (ties keep original index order); backward scatters the
// upstream gradient through the recorded argsort.
Var sort_rows_asc(Var a);
Var sort_cols_asc(Var a);

// n x d -> n x n matrix of squared Euclidean row distances.
Var pairwise_sqdist(Var a);
// Scales each row to unit Euclidean norm.
Var row_l2_normalize(Var a);

// exp(a - max(a)) followed by `iters` rounds of column- then row-normalization,
// as one node. Equivalent to composing exp_elem, col_normalize and
// row_normalize, but works in place and keeps only the normalizer sums; the
// backward pass recovers each intermediate by undoing the normalizations.
Var sinkhorn_normalize(Var a, std::size_t iters);

using ScalarFn = std::function<Var(Tape&, Var)>;

struct GradCheck {
  double max_rel_error = 0.0;
  Matrix analytic;
  Matrix numeric;
};

// Compares backward() against central differences. Relative error per entry
// is |analytic - numeric| / max(1, |numeric|).
GradCheck grad_check(const ScalarFn& f, const Matrix& x, double h = 1e-5,
                     std::optional<FaultInjection> fault = std::nullopt);

}  // namespace gradsort::diff
