#include "gradsort/diff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

namespace gradsort::diff {

const char* op_name(Op op) {
  switch (op) {
    case Op::leaf: return "leaf";
    case Op::add: return "add";
    case Op::sub: return "sub";
    case Op::mul: return "mul";
    case Op::square: return "square";
    case Op::abs: return "abs";
    case Op::scalar_mul: return "scalar_mul";
    case Op::add_scalar: return "add_scalar";
    case Op::sum_all: return "sum_all";
    case Op::sum_rows: return "sum_rows";
    case Op::sum_cols: return "sum_cols";
    case Op::matmul: return "matmul";
    case Op::transpose: return "transpose";
    case Op::exp: return "exp";
    case Op::row_normalize: return "row_normalize";
    case Op::col_normalize: return "col_normalize";
    case Op::softmax_rows: return "softmax_rows";
    case Op::sort_rows_asc: return "sort_rows_asc";
    case Op::sort_cols_asc: return "sort_cols_asc";
    case Op::pairwise_sqdist: return "pairwise_sqdist";
    case Op::row_l2_normalize: return "row_l2_normalize";
    case Op::sinkhorn: return "sinkhorn";
  }
  return "?";
}

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (!a.same_shape(b))
    fail(ErrorKind::dimension,
         std::string(what) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

Tape& tape_of(Var a) { return *a.tape; }

Tape& tape_of(Var a, Var b) {
  if (a.tape != b.tape) fail(ErrorKind::usage, "operands live on different tapes");
  return *a.tape;
}

// c += a * b (c: n x m, a: n x k, b: k x m)
void gemm_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  if (m < 8) {
    // narrow b (P X with a few feature columns): dot products against b^T
    std::vector<double> bt(m * k);
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t j = 0; j < m; ++j) bt[j * k + p] = b.data()[p * m + j];
    for (std::size_t i = 0; i < n; ++i) {
      const double* arow = a.data() + i * k;
      for (std::size_t j = 0; j < m; ++j) {
        const double* bcol = bt.data() + j * k;
        double s = 0.0;
#pragma omp simd reduction(+ : s)
        for (std::size_t p = 0; p < k; ++p) s += arow[p] * bcol[p];
        c.data()[i * m + j] += s;
      }
    }
    return;
  }
  for (std::size_t i = 0; i < n; ++i) {
    double* crow = c.data() + i * m;
    const double* arow = a.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
}

// c += a * b^T (c: n x m, a: n x k, b: m x k)
void gemm_nt_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  for (std::size_t i = 0; i < n; ++i) {
    const double* arow = a.data() + i * k;
    double* crow = c.data() + i * m;
    for (std::size_t j = 0; j < m; ++j) {
      const double* brow = b.data() + j * k;
      double s = 0.0;
#pragma omp simd reduction(+ : s)
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      crow[j] += s;
    }
  }
}

// c += a^T * b (c: k x m, a: n x k, b: n x m)
void gemm_tn_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    const double* arow = a.data() + i * k;
    const double* brow = b.data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      double* crow = c.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
}

Matrix transposed(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

// Stable ascending argsort of each row; returns sorted values and indices.
void sort_rows(const Matrix& in, Matrix& out, std::vector<std::uint32_t>& index) {
  const std::size_t n = in.rows(), m = in.cols();
  out = Matrix(n, m);
  index.resize(n * m);
  std::vector<std::pair<double, std::uint32_t>> buf(m);
  for (std::size_t r = 0; r < n; ++r) {
    const double* src = in.data() + r * m;
    for (std::size_t c = 0; c < m; ++c) buf[c] = {src[c], static_cast<std::uint32_t>(c)};
    std::sort(buf.begin(), buf.end());
    double* dst = out.data() + r * m;
    std::uint32_t* idx = index.data() + r * m;
    for (std::size_t c = 0; c < m; ++c) {
      dst[c] = buf[c].first;
      idx[c] = buf[c].second;
    }
  }
}

}  // namespace

Var Tape::variable(Matrix value) {
  Var v = record(Op::leaf, std::move(value), {});
  nodes_[v.id].needs_grad = true;
  return v;
}

Var Tape::constant(Matrix value) { return record(Op::leaf, std::move(value), {}); }

double Tape::scalar(Var v) const {
  const Matrix& m = nodes_[v.id].value;
  if (m.rows() != 1 || m.cols() != 1)
    fail(ErrorKind::dimension, "expected 1x1 value, got " + m.shape_str());
  return m[0];
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (n.grad.size() == n.value.size() && n.value.size() != 0) return n.grad;
  return Matrix(n.value.rows(), n.value.cols());
}

Var Tape::record(Op op, Matrix value, std::initializer_list<Var> parents) {
  Node n;
  n.op = op;
  n.value = std::move(value);
  n.arity = static_cast<std::uint8_t>(parents.size());
  auto it = parents.begin();
  if (n.arity > 0) {
    n.a = it->id;
    n.needs_grad = nodes_[n.a].needs_grad;
  }
  if (n.arity > 1) {
    ++it;
    n.b = it->id;
    n.needs_grad = n.needs_grad || nodes_[n.b].needs_grad;
  }
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Matrix& Tape::grad_slot(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.grad.size() != n.value.size() || n.grad.size() == 0)
    n.grad = Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var out) {
  if (backward_done_) fail(ErrorKind::usage, "backward() already ran on this tape");
  const Matrix& v = nodes_[out.id].value;
  if (v.rows() != 1 || v.cols() != 1)
    fail(ErrorKind::dimension, "backward() needs a 1x1 output, got " + v.shape_str());
  backward_done_ = true;
  grad_slot(out.id)[0] = 1.0;
  for (std::uint32_t id = out.id + 1; id-- > 0;) {
    const Node& n = nodes_[id];
    if (n.arity == 0 || !n.needs_grad || n.grad.size() == 0) continue;
    backward_node(id);
  }
}

void Tape::backward_node(std::uint32_t id) {
  Matrix faulted;
  const Matrix* gp = &nodes_[id].grad;
  if (fault_ && fault_->op == nodes_[id].op) {
    faulted = *gp;
    for (std::size_t i = 0; i < faulted.size(); ++i) faulted[i] *= fault_->factor;
    gp = &faulted;
  }
  const Matrix& g = *gp;
  // grad_slot() may reallocate other nodes' grads but never resizes nodes_,
  // so this reference stays valid.
  const Node& n = nodes_[id];
  const bool ga = nodes_[n.a].needs_grad;
  const bool gb = n.arity > 1 && nodes_[n.b].needs_grad;
  const Matrix& y = n.value;

  switch (n.op) {
    case Op::leaf:
      break;
    case Op::add: {
      if (ga) { Matrix& d = grad_slot(n.a); for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i]; }
      if (gb) { Matrix& d = grad_slot(n.b); for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i]; }
      break;
    }
    case Op::sub: {
      if (ga) { Matrix& d = grad_slot(n.a); for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i]; }
      if (gb) { Matrix& d = grad_slot(n.b); for (std::size_t i = 0; i < g.size(); ++i) d[i] -= g[i]; }
      break;
    }
    case Op::mul: {
      const Matrix& av = nodes_[n.a].value;
      const Matrix& bv = nodes_[n.b].value;
      if (ga) { Matrix& d = grad_slot(n.a); for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * bv[i]; }
      if (gb) { Matrix& d = grad_slot(n.b); for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * av[i]; }
      break;
    }
    case Op::square: {
      const Matrix& av = nodes_[n.a].value;
      Matrix& d = grad_slot(n.a);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += 2.0 * av[i] * g[i];
      break;
    }
    case Op::abs: {
      const Matrix& av = nodes_[n.a].value;
      Matrix& d = grad_slot(n.a);
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (av[i] > 0.0) d[i] += g[i];
        else if (av[i] < 0.0) d[i] -= g[i];
      }
      break;
    }
    case Op::scalar_mul: {
      Matrix& d = grad_slot(n.a);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += n.param * g[i];
      break;
    }
    case Op::add_scalar: {
      Matrix& d = grad_slot(n.a);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
      break;
    }
    case Op::sum_all: {
      Matrix& d = grad_slot(n.a);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[0];
      break;
    }
    case Op::sum_rows: {
      Matrix& d = grad_slot(n.a);
      for (std::size_t r = 0; r < d.rows(); ++r)
        for (std::size_t c = 0; c < d.cols(); ++c) d(r, c) += g[r];
      break;
    }
    case Op::sum_cols: {
      Matrix& d = grad_slot(n.a);
      for (std::size_t r = 0; r < d.rows(); ++r)
        for (std::size_t c = 0; c < d.cols(); ++c) d(r, c) += g[c];
      break;
    }
    case Op::matmul: {
      if (ga) gemm_nt_acc(g, nodes_[n.b].value, grad_slot(n.a));
      if (gb) gemm_tn_acc(nodes_[n.a].value, g, grad_slot(n.b));
      break;
    }
    case Op::transpose: {
      Matrix& d = grad_slot(n.a);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) d(c, r) += g(r, c);
      break;
    }
    case Op::exp: {
      Matrix& d = grad_slot(n.a);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * y[i];
      break;
    }
    case Op::row_normalize: {
      // y = x / s_r  =>  dx_rc = (g_rc - <g_r, y_r>) / s_r
      Matrix& d = grad_slot(n.a);
      const std::size_t m = y.cols();
      for (std::size_t r = 0; r < y.rows(); ++r) {
        const double* gr = g.data() + r * m;
        const double* yr = y.data() + r * m;
        double dot = 0.0;
        for (std::size_t c = 0; c < m; ++c) dot += gr[c] * yr[c];
        const double inv = 1.0 / n.cache[r];
        double* dr = d.data() + r * m;
        for (std::size_t c = 0; c < m; ++c) dr[c] += (gr[c] - dot) * inv;
      }
      break;
    }
    case Op::col_normalize: {
      Matrix& d = grad_slot(n.a);
      const std::size_t m = y.cols();
      std::vector<double> dot(m, 0.0);
      for (std::size_t r = 0; r < y.rows(); ++r) {
        const double* gr = g.data() + r * m;
        const double* yr = y.data() + r * m;
        for (std::size_t c = 0; c < m; ++c) dot[c] += gr[c] * yr[c];
      }
      for (std::size_t r = 0; r < y.rows(); ++r) {
        const double* gr = g.data() + r * m;
        double* dr = d.data() + r * m;
        for (std::size_t c = 0; c < m; ++c) dr[c] += (gr[c] - dot[c]) / n.cache[c];
      }
      break;
    }
    case Op::softmax_rows: {
      Matrix& d = grad_slot(n.a);
      const std::size_t m = y.cols();
      const double inv_tau = 1.0 / n.param;
      for (std::size_t r = 0; r < y.rows(); ++r) {
        const double* gr = g.data() + r * m;
        const double* yr = y.data() + r * m;
        double dot = 0.0;
        for (std::size_t c = 0; c < m; ++c) dot += gr[c] * yr[c];
        double* dr = d.data() + r * m;
        for (std::size_t c = 0; c < m; ++c) dr[c] += inv_tau * yr[c] * (gr[c] - dot);
      }
      break;
    }
    case Op::sort_rows_asc: {
      Matrix& d = grad_slot(n.a);
      const std::size_t m = y.cols();
      for (std::size_t r = 0; r < y.rows(); ++r)
        for (std::size_t k = 0; k < m; ++k) d(r, n.index[r * m + k]) += g(r, k);
      break;
    }
    case Op::sort_cols_asc: {
      // index is stored per column: index[c * rows + k] = source row of rank k.
      Matrix& d = grad_slot(n.a);
      const std::size_t rows = y.rows();
      for (std::size_t c = 0; c < y.cols(); ++c)
        for (std::size_t k = 0; k < rows; ++k) d(n.index[c * rows + k], c) += g(k, c);
      break;
    }
    case Op::pairwise_sqdist: {
      // dY_i = 2 * sum_j S_ij (y_i - y_j), S = G + G^T
      const Matrix& x = nodes_[n.a].value;
      Matrix& d = grad_slot(n.a);
      const std::size_t rows = x.rows(), dim = x.cols();
      Matrix s(rows, rows);
      std::vector<double> rowsum(rows, 0.0);
      for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < rows; ++j) {
          const double v = g(i, j) + g(j, i);
          s(i, j) = v;
          rowsum[i] += v;
        }
      }
      Matrix sy(rows, dim);
      gemm_acc(s, x, sy);
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t k = 0; k < dim; ++k) d(i, k) += 2.0 * (rowsum[i] * x(i, k) - sy(i, k));
      break;
    }
    case Op::row_l2_normalize: {
      Matrix& d = grad_slot(n.a);
      const std::size_t m = y.cols();
      for (std::size_t r = 0; r < y.rows(); ++r) {
        const double* gr = g.data() + r * m;
        const double* yr = y.data() + r * m;
        double dot = 0.0;
        for (std::size_t c = 0; c < m; ++c) dot += gr[c] * yr[c];
        double* dr = d.data() + r * m;
        for (std::size_t c = 0; c < m; ++c) dr[c] += (gr[c] - yr[c] * dot) / n.cache[r];
      }
      break;
    }
    case Op::sinkhorn: {
      // cache holds, per round, the n column sums followed by the n row sums.
      const std::size_t rows = y.rows(), m = y.cols();
      const std::size_t iters = static_cast<std::size_t>(n.param);
      Matrix work = y;  // intermediate value, walked backwards
      Matrix gw = g;    // gradient w.r.t. the current intermediate
      std::vector<double> dot(m), inv(m);
      for (std::size_t l = iters; l-- > 0;) {
        const double* cs = n.cache.data() + l * (rows + m);
        const double* rs = cs + m;
        // row pass: dx = (g - <g_r, y_r>) / s_r, then restore the row scale
        for (std::size_t r = 0; r < rows; ++r) {
          double* gr = gw.data() + r * m;
          double* wr = work.data() + r * m;
          double d = 0.0;
#pragma omp simd reduction(+ : d)
          for (std::size_t c = 0; c < m; ++c) d += gr[c] * wr[c];
          const double s = rs[r], is = 1.0 / s;
#pragma omp simd
          for (std::size_t c = 0; c < m; ++c) {
            gr[c] = (gr[c] - d) * is;
            wr[c] *= s;
          }
        }
        // column pass
        std::fill(dot.begin(), dot.end(), 0.0);
        for (std::size_t r = 0; r < rows; ++r) {
          const double* gr = gw.data() + r * m;
          const double* wr = work.data() + r * m;
#pragma omp simd
          for (std::size_t c = 0; c < m; ++c) dot[c] += gr[c] * wr[c];
        }
        for (std::size_t c = 0; c < m; ++c) inv[c] = 1.0 / cs[c];
        for (std::size_t r = 0; r < rows; ++r) {
          double* gr = gw.data() + r * m;
          double* wr = work.data() + r * m;
#pragma omp simd
          for (std::size_t c = 0; c < m; ++c) {
            gr[c] = (gr[c] - dot[c]) * inv[c];
            wr[c] *= cs[c];
          }
        }
      }
      // work now holds exp(a - max); the shift is constant.
      Matrix& d = grad_slot(n.a);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += gw[i] * work[i];
      break;
    }
  }
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Matrix& x = t.value(a);
  const Matrix& z = t.value(b);
  require_same_shape(x, z, "add");
  Matrix out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += z[i];
  return t.record(Op::add, std::move(out), {a, b});
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Matrix& x = t.value(a);
  const Matrix& z = t.value(b);
  require_same_shape(x, z, "sub");
  Matrix out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= z[i];
  return t.record(Op::sub, std::move(out), {a, b});
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Matrix& x = t.value(a);
  const Matrix& z = t.value(b);
  require_same_shape(x, z, "mul");
  Matrix out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= z[i];
  return t.record(Op::mul, std::move(out), {a, b});
}

Var square(Var a) {
  Tape& t = tape_of(a);
  Matrix out = t.value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= out[i];
  return t.record(Op::square, std::move(out), {a});
}

Var abs_elem(Var a) {
  Tape& t = tape_of(a);
  Matrix out = t.value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::fabs(out[i]);
  return t.record(Op::abs, std::move(out), {a});
}

Var scalar_mul(Var a, double s) {
  Tape& t = tape_of(a);
  Matrix out = t.value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= s;
  Var v = t.record(Op::scalar_mul, std::move(out), {a});
  t.node(v).param = s;
  return v;
}

Var add_scalar(Var a, double s) {
  Tape& t = tape_of(a);
  Matrix out = t.value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += s;
  Var v = t.record(Op::add_scalar, std::move(out), {a});
  t.node(v).param = s;
  return v;
}

Var sum_all(Var a) {
  Tape& t = tape_of(a);
  const Matrix& x = t.value(a);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i];
  return t.record(Op::sum_all, Matrix(1, 1, s), {a});
}

Var sum_rows(Var a) {
  Tape& t = tape_of(a);
  const Matrix& x = t.value(a);
  Matrix out(x.rows(), 1);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double s = 0.0;
    for (double v : x.row(r)) s += v;
    out[r] = s;
  }
  return t.record(Op::sum_rows, std::move(out), {a});
}

Var sum_cols(Var a) {
  Tape& t = tape_of(a);
  const Matrix& x = t.value(a);
  Matrix out(1, x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) out[c] += x(r, c);
  return t.record(Op::sum_cols, std::move(out), {a});
}

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Matrix& x = t.value(a);
  const Matrix& z = t.value(b);
  if (x.cols() != z.rows())
    fail(ErrorKind::dimension, "matmul: inner dimensions differ " + x.shape_str() + " * " + z.shape_str());
  Matrix out(x.rows(), z.cols());
  gemm_acc(x, z, out);
  return t.record(Op::matmul, std::move(out), {a, b});
}

Var transpose(Var a) {
  Tape& t = tape_of(a);
  return t.record(Op::transpose, transposed(t.value(a)), {a});
}

Var exp_elem(Var a) {
  Tape& t = tape_of(a);
  Matrix out = t.value(a);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double in = out[i];
    out[i] = std::exp(in);
    if (!std::isfinite(out[i])) {
      std::ostringstream os;
      os << "exp overflow at entry (" << i / out.cols() << "," << i % out.cols()
         << "), input magnitude " << in;
      fail(ErrorKind::numeric, os.str());
    }
  }
  return t.record(Op::exp, std::move(out), {a});
}

Var row_normalize(Var a) {
  Tape& t = tape_of(a);
  Matrix out = t.value(a);
  std::vector<double> sums(out.rows());
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    double s = 0.0;
    for (double v : row) s += v;
    if (s == 0.0 || !std::isfinite(s))
      fail(ErrorKind::numeric, "row_normalize: row " + std::to_string(r) + " sums to " + std::to_string(s));
    for (double& v : row) v /= s;
    sums[r] = s;
  }
  Var v = t.record(Op::row_normalize, std::move(out), {a});
  t.node(v).cache = std::move(sums);
  return v;
}

Var col_normalize(Var a) {
  Tape& t = tape_of(a);
  Matrix out = t.value(a);
  const std::size_t m = out.cols();
  std::vector<double> sums(m, 0.0);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    const double* row = out.data() + r * m;
    for (std::size_t c = 0; c < m; ++c) sums[c] += row[c];
  }
  for (std::size_t c = 0; c < m; ++c)
    if (sums[c] == 0.0 || !std::isfinite(sums[c]))
      fail(ErrorKind::numeric, "col_normalize: column " + std::to_string(c) + " sums to " + std::to_string(sums[c]));
  std::vector<double> inv(m);
  for (std::size_t c = 0; c < m; ++c) inv[c] = 1.0 / sums[c];
  for (std::size_t r = 0; r < out.rows(); ++r) {
    double* row = out.data() + r * m;
    for (std::size_t c = 0; c < m; ++c) row[c] *= inv[c];
  }
  Var v = t.record(Op::col_normalize, std::move(out), {a});
  t.node(v).cache = std::move(sums);
  return v;
}

Var softmax_rows(Var a, double tau) {
  if (!(tau > 0.0)) fail(ErrorKind::usage, "softmax_rows: tau must be positive, got " + std::to_string(tau));
  Tape& t = tape_of(a);
  Matrix out = t.value(a);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double s = 0.0;
    for (double& v : row) {
      v = std::exp((v - mx) / tau);
      s += v;
    }
    for (double& v : row) v /= s;
  }
  Var v = t.record(Op::softmax_rows, std::move(out), {a});
  t.node(v).param = tau;
  return v;
}

Var sort_rows_asc(Var a) {
  Tape& t = tape_of(a);
  Matrix out;
  std::vector<std::uint32_t> index;
  sort_rows(t.value(a), out, index);
  Var v = t.record(Op::sort_rows_asc, std::move(out), {a});
  t.node(v).index = std::move(index);
  return v;
}

Var sort_cols_asc(Var a) {
  Tape& t = tape_of(a);
  Matrix sorted_t;
  std::vector<std::uint32_t> index;
  sort_rows(transposed(t.value(a)), sorted_t, index);
  Var v = t.record(Op::sort_cols_asc, transposed(sorted_t), {a});
  t.node(v).index = std::move(index);
  return v;
}

Var pairwise_sqdist(Var a) {
  Tape& t = tape_of(a);
  const Matrix& x = t.value(a);
  const std::size_t n = x.rows(), d = x.cols();
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x.data() + i * d;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double* xj = x.data() + j * d;
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = xi[k] - xj[k];
        s += diff * diff;
      }
      out(i, j) = s;
      out(j, i) = s;
    }
  }
  return t.record(Op::pairwise_sqdist, std::move(out), {a});
}

Var row_l2_normalize(Var a) {
  Tape& t = tape_of(a);
  Matrix out = t.value(a);
  std::vector<double> norms(out.rows());
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    double s = 0.0;
    for (double v : row) s += v * v;
    const double norm = std::sqrt(s);
    if (norm == 0.0) fail(ErrorKind::numeric, "row_l2_normalize: row " + std::to_string(r) + " has zero norm");
    for (double& v : row) v /= norm;
    norms[r] = norm;
  }
  Var v = t.record(Op::row_l2_normalize, std::move(out), {a});
  t.node(v).cache = std::move(norms);
  return v;
}

Var sinkhorn_normalize(Var a, std::size_t iters) {
  Tape& t = tape_of(a);
  const Matrix& x = t.value(a);
  if (iters < 1) fail(ErrorKind::usage, "sinkhorn: iters must be >= 1");
  const std::size_t rows = x.rows(), m = x.cols();
  double shift = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) {
      std::ostringstream os;
      os << "sinkhorn: non-finite input at entry (" << i / m << "," << i % m << ")";
      fail(ErrorKind::numeric, os.str());
    }
    shift = std::max(shift, x[i]);
  }
  Matrix p(rows, m);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::exp(x[i] - shift);
  std::vector<double> sums(iters * (rows + m));
  std::vector<double> inv(m), next(m, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* pr = p.data() + r * m;
#pragma omp simd
    for (std::size_t c = 0; c < m; ++c) next[c] += pr[c];
  }
  for (std::size_t l = 0; l < iters; ++l) {
    double* cs = sums.data() + l * (rows + m);
    double* rs = cs + m;
    for (std::size_t c = 0; c < m; ++c) {
      cs[c] = next[c];
      next[c] = 0.0;
      if (cs[c] == 0.0 || !std::isfinite(cs[c]))
        fail(ErrorKind::numeric, "sinkhorn: column " + std::to_string(c) + " sums to " + std::to_string(cs[c]) +
                                     " in round " + std::to_string(l + 1));
      inv[c] = 1.0 / cs[c];
    }
    // column scaling, row sums, row scaling and the next column sums in one pass
    for (std::size_t r = 0; r < rows; ++r) {
      double* pr = p.data() + r * m;
      double s = 0.0;
#pragma omp simd reduction(+ : s)
      for (std::size_t c = 0; c < m; ++c) {
        pr[c] *= inv[c];
        s += pr[c];
      }
      if (s == 0.0 || !std::isfinite(s))
        fail(ErrorKind::numeric, "sinkhorn: row " + std::to_string(r) + " sums to " + std::to_string(s) +
                                     " in round " + std::to_string(l + 1));
      rs[r] = s;
      const double is = 1.0 / s;
#pragma omp simd
      for (std::size_t c = 0; c < m; ++c) {
        pr[c] *= is;
        next[c] += pr[c];
      }
    }
  }
  Var v = t.record(Op::sinkhorn, std::move(p), {a});
  t.node(v).param = static_cast<double>(iters);
  t.node(v).cache = std::move(sums);
  return v;
}

GradCheck grad_check(const ScalarFn& f, const Matrix& x, double h, std::optional<FaultInjection> fault) {
  GradCheck result;
  {
    Tape tape;
    tape.inject_fault(fault);
    Var in = tape.variable(x);
    Var out = f(tape, in);
    if (!std::isfinite(tape.scalar(out))) fail(ErrorKind::numeric, "grad_check: function value is not finite");
    tape.backward(out);
    result.analytic = tape.grad(in);
  }
  auto eval = [&](const Matrix& point) {
    Tape tape;
    Var out = f(tape, tape.constant(point));
    const double v = tape.scalar(out);
    if (!std::isfinite(v)) fail(ErrorKind::numeric, "grad_check: function value is not finite near x");
    return v;
  };
  result.numeric = Matrix(x.rows(), x.cols());
  Matrix probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = eval(probe);
    probe[i] = x[i] - h;
    const double down = eval(probe);
    probe[i] = x[i];
    const double num = (up - down) / (2.0 * h);
    result.numeric[i] = num;
    const double err = std::fabs(result.analytic[i] - num) / std::max(1.0, std::fabs(num));
    result.max_rel_error = std::max(result.max_rel_error, err);
  }
  return result;
}

}  // namespace gradsort::diff
