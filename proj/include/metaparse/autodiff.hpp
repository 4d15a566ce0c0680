#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "metaparse/tensor.hpp"

// Reverse-mode differentiation over rank-2 tensors. A Tape records every
// primitive op in execution order; Tape::backward walks it once in reverse.
// Gradients are plain tensors, so a gradient of a gradient cannot be taken.

namespace metaparse::ad {

class Tape;

struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

class BackwardContext {
 public:
  const Tensor& grad_out() const { return *grad_out_; }
  const Tensor& output() const { return *output_; }
  const Tensor& input(std::size_t i) const;
  /// Accumulator for parent i, or nullptr when that parent needs no gradient.
  Tensor* grad_in(std::size_t i);

 private:
  friend class Tape;
  BackwardContext(Tape& tape, std::size_t node, const Tensor& grad_out, const Tensor& output)
      : tape_(&tape), node_(node), grad_out_(&grad_out), output_(&output) {}

  Tape* tape_;
  std::size_t node_;
  const Tensor* grad_out_;
  const Tensor* output_;
};

using BackwardFn = std::function<void(BackwardContext&)>;

/// Gradients produced by one backward pass, indexed by node id.
class GradientMap {
 public:
  GradientMap() = default;
  explicit GradientMap(std::vector<Tensor> grads, const Tape& tape) : grads_(std::move(grads)), tape_(&tape) {}

  /// Gradient for `v`; a zero tensor when `v` did not influence the root.
  Tensor at(Var v) const;
  /// Moves the gradient out; zeros when untouched.
  Tensor take(Var v);
  bool touched(Var v) const { return v.id < grads_.size() && !grads_[v.id].empty(); }

 private:
  std::vector<Tensor> grads_;
  const Tape* tape_ = nullptr;
};

class Tape {
 public:
  Tape() { nodes_.reserve(256); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  /// Trainable input; receives a gradient.
  Var leaf(Tensor value) { return push(std::move(value), {}, nullptr, true); }
  /// Input that never receives a gradient (masks, fixed encodings).
  Var constant(Tensor value) { return push(std::move(value), {}, nullptr, false); }

  Var record(Tensor value, std::vector<std::size_t> parents, BackwardFn fn, const char* op) {
    if (!value.all_finite()) {
      throw NumericalError(std::string("non-finite output in op '") + op + "'");
    }
    bool needs = false;
    for (auto p : parents) needs = needs || nodes_[p].requires_grad;
    return push(std::move(value), std::move(parents), needs ? std::move(fn) : BackwardFn{}, needs);
  }

  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  std::size_t size() const { return nodes_.size(); }
  bool owns(Var v) const { return v.tape == this && v.id < nodes_.size(); }

  GradientMap backward(Var root) {
    if (!owns(root)) throw Error("backward: root is not recorded on this tape");
    const Tensor& rv = nodes_[root.id].value;
    if (rv.size() != 1) throw ShapeError("backward: root must be a scalar, got " + rv.shape_string());
    grads_.assign(nodes_.size(), Tensor{});
    grads_[root.id] = Tensor(rv.shape(), real(1));
    for (std::size_t i = root.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (grads_[i].empty() || !n.backward) continue;
      BackwardContext ctx(*this, i, grads_[i], n.value);
      n.backward(ctx);
    }
    std::vector<Tensor> out = std::move(grads_);
    grads_.clear();
    return GradientMap(std::move(out), *this);
  }

 private:
  friend class BackwardContext;
  friend class GradientMap;

  struct Node {
    Tensor value;
    std::vector<std::size_t> parents;
    BackwardFn backward;
    bool requires_grad = false;
  };

  Var push(Tensor value, std::vector<std::size_t> parents, BackwardFn fn, bool requires_grad) {
    nodes_.push_back(Node{std::move(value), std::move(parents), std::move(fn), requires_grad});
    return Var{this, nodes_.size() - 1};
  }

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
};

inline const Tensor& Var::value() const { return tape->value(id); }

inline const Tensor& BackwardContext::input(std::size_t i) const {
  return tape_->nodes_[tape_->nodes_[node_].parents[i]].value;
}

inline Tensor* BackwardContext::grad_in(std::size_t i) {
  std::size_t p = tape_->nodes_[node_].parents[i];
  if (!tape_->nodes_[p].requires_grad) return nullptr;
  Tensor& g = tape_->grads_[p];
  if (g.empty()) g = tape_->nodes_[p].value.zeros_like();
  return &g;
}

inline Tensor GradientMap::at(Var v) const {
  if (touched(v)) return grads_[v.id];
  return tape_->value(v.id).zeros_like();
}

inline Tensor GradientMap::take(Var v) {
  if (touched(v)) return std::move(grads_[v.id]);
  return tape_->value(v.id).zeros_like();
}

// ---------------------------------------------------------------------------
// Kernels

namespace kernel {

// C += A * B
inline void gemm_nn(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  const real* ap = a.data().data();
  const real* bp = b.data().data();
  real* cp = c.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    real* crow = cp + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const real av = ap[i * k + p];
      if (av == real(0)) continue;
      const real* brow = bp + p * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
}

// C += A * B^T
inline void gemm_nt(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  const real* ap = a.data().data();
  const real* bp = b.data().data();
  real* cp = c.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    const real* arow = ap + i * k;
    for (std::size_t j = 0; j < m; ++j) {
      const real* brow = bp + j * k;
      real s = 0;
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      cp[i * m + j] += s;
    }
  }
}

// C += A^T * B
inline void gemm_tn(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  const real* ap = a.data().data();
  const real* bp = b.data().data();
  real* cp = c.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    const real* brow = bp + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const real av = ap[i * k + p];
      if (av == real(0)) continue;
      real* crow = cp + p * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace kernel

// ---------------------------------------------------------------------------
// Primitive ops

inline void require_same_tape(Var a, Var b, const char* op) {
  if (a.tape != b.tape || a.tape == nullptr) throw Error(std::string(op) + ": operands on different tapes");
}

inline Var matmul(Var a, Var b) {
  require_same_tape(a, b, "matmul");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw ShapeError("matmul: " + av.shape_string() + " x " + bv.shape_string());
  }
  Tensor out = Tensor::matrix(av.rows(), bv.cols());
  kernel::gemm_nn(av, bv, out);
  return a.tape->record(std::move(out), {a.id, b.id}, [](BackwardContext& ctx) {
    if (Tensor* ga = ctx.grad_in(0)) kernel::gemm_nt(ctx.grad_out(), ctx.input(1), *ga);
    if (Tensor* gb = ctx.grad_in(1)) kernel::gemm_tn(ctx.input(0), ctx.grad_out(), *gb);
  }, "matmul");
}

/// a * b^T
inline Var matmul_nt(Var a, Var b) {
  require_same_tape(a, b, "matmul_nt");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.cols()) {
    throw ShapeError("matmul_nt: " + av.shape_string() + " x " + bv.shape_string() + "^T");
  }
  Tensor out = Tensor::matrix(av.rows(), bv.rows());
  kernel::gemm_nt(av, bv, out);
  return a.tape->record(std::move(out), {a.id, b.id}, [](BackwardContext& ctx) {
    // C = A B^T: dA = dC B, dB = dC^T A
    if (Tensor* ga = ctx.grad_in(0)) kernel::gemm_nn(ctx.grad_out(), ctx.input(1), *ga);
    if (Tensor* gb = ctx.grad_in(1)) kernel::gemm_tn(ctx.grad_out(), ctx.input(0), *gb);
  }, "matmul_nt");
}

inline Var transpose(Var a) {
  const Tensor& av = a.value();
  const std::size_t r = av.rows(), c = av.cols();
  Tensor out = Tensor::matrix(c, r);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out(j, i) = av(i, j);
  return a.tape->record(std::move(out), {a.id}, [r, c](BackwardContext& ctx) {
    if (Tensor* ga = ctx.grad_in(0)) {
      const Tensor& g = ctx.grad_out();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) (*ga)(i, j) += g(j, i);
    }
  }, "transpose");
}

inline Var add(Var a, Var b) {
  require_same_tape(a, b, "add");
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  const auto& bv = b.value().values();
  auto& o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
  return a.tape->record(std::move(out), {a.id, b.id}, [](BackwardContext& ctx) {
    const auto& g = ctx.grad_out().values();
    for (std::size_t k = 0; k < 2; ++k)
      if (Tensor* gi = ctx.grad_in(k))
        for (std::size_t i = 0; i < g.size(); ++i) (*gi)[i] += g[i];
  }, "add");
}

inline Var sub(Var a, Var b) {
  require_same_tape(a, b, "sub");
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  const auto& bv = b.value().values();
  auto& o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bv[i];
  return a.tape->record(std::move(out), {a.id, b.id}, [](BackwardContext& ctx) {
    const auto& g = ctx.grad_out().values();
    if (Tensor* ga = ctx.grad_in(0))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
    if (Tensor* gb = ctx.grad_in(1))
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] -= g[i];
  }, "sub");
}

/// a (r x c) + row (1 x c), broadcast over rows.
inline Var add_row(Var a, Var row) {
  require_same_tape(a, row, "add_row");
  const Tensor& av = a.value();
  const Tensor& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols()) {
    throw ShapeError("add_row: " + av.shape_string() + " + " + rv.shape_string());
  }
  Tensor out = av;
  const std::size_t r = av.rows(), c = av.cols();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out(i, j) += rv[j];
  return a.tape->record(std::move(out), {a.id, row.id}, [r, c](BackwardContext& ctx) {
    const Tensor& g = ctx.grad_out();
    if (Tensor* ga = ctx.grad_in(0))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
    if (Tensor* gr = ctx.grad_in(1))
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) (*gr)[j] += g(i, j);
  }, "add_row");
}

/// a (r x c) + col (r x 1), broadcast over columns.
inline Var add_col(Var a, Var col) {
  require_same_tape(a, col, "add_col");
  const Tensor& av = a.value();
  const Tensor& cv = col.value();
  if (cv.cols() != 1 || cv.rows() != av.rows()) {
    throw ShapeError("add_col: " + av.shape_string() + " + " + cv.shape_string());
  }
  Tensor out = av;
  const std::size_t r = av.rows(), c = av.cols();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out(i, j) += cv[i];
  return a.tape->record(std::move(out), {a.id, col.id}, [r, c](BackwardContext& ctx) {
    const Tensor& g = ctx.grad_out();
    if (Tensor* ga = ctx.grad_in(0))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
    if (Tensor* gc = ctx.grad_in(1))
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) (*gc)[i] += g(i, j);
  }, "add_col");
}

/// Elementwise product.
inline Var mul(Var a, Var b) {
  require_same_tape(a, b, "mul");
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  const auto& bv = b.value().values();
  auto& o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bv[i];
  return a.tape->record(std::move(out), {a.id, b.id}, [](BackwardContext& ctx) {
    const auto& g = ctx.grad_out().values();
    if (Tensor* ga = ctx.grad_in(0)) {
      const auto& bv = ctx.input(1).values();
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * bv[i];
    }
    if (Tensor* gb = ctx.grad_in(1)) {
      const auto& av = ctx.input(0).values();
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * av[i];
    }
  }, "mul");
}

inline Var scale(Var a, real s) {
  Tensor out = a.value();
  for (auto& v : out.values()) v *= s;
  return a.tape->record(std::move(out), {a.id}, [s](BackwardContext& ctx) {
    if (Tensor* ga = ctx.grad_in(0)) {
      const auto& g = ctx.grad_out().values();
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += s * g[i];
    }
  }, "scale");
}

/// a * s where s is a 1x1 tensor on the tape.
inline Var scale_by(Var a, Var s) {
  require_same_tape(a, s, "scale_by");
  if (s.value().size() != 1) throw ShapeError("scale_by: scale must be 1x1, got " + s.value().shape_string());
  const real sv = s.value()[0];
  Tensor out = a.value();
  for (auto& v : out.values()) v *= sv;
  return a.tape->record(std::move(out), {a.id, s.id}, [sv](BackwardContext& ctx) {
    const auto& g = ctx.grad_out().values();
    if (Tensor* ga = ctx.grad_in(0))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += sv * g[i];
    if (Tensor* gs = ctx.grad_in(1)) {
      const auto& av = ctx.input(0).values();
      real acc = 0;
      for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * av[i];
      (*gs)[0] += acc;
    }
  }, "scale_by");
}

inline Var tanh(Var a) {
  Tensor out = a.value();
  for (auto& v : out.values()) v = std::tanh(v);
  return a.tape->record(std::move(out), {a.id}, [](BackwardContext& ctx) {
    if (Tensor* ga = ctx.grad_in(0)) {
      const auto& g = ctx.grad_out().values();
      const auto& y = ctx.output().values();
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * (real(1) - y[i] * y[i]);
    }
  }, "tanh");
}

inline Var sigmoid(Var a) {
  Tensor out = a.value();
  for (auto& v : out.values()) v = real(1) / (real(1) + std::exp(-v));
  return a.tape->record(std::move(out), {a.id}, [](BackwardContext& ctx) {
    if (Tensor* ga = ctx.grad_in(0)) {
      const auto& g = ctx.grad_out().values();
      const auto& y = ctx.output().values();
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * y[i] * (real(1) - y[i]);
    }
  }, "sigmoid");
}

inline Var relu(Var a) {
  Tensor out = a.value();
  for (auto& v : out.values()) v = v > real(0) ? v : real(0);
  return a.tape->record(std::move(out), {a.id}, [](BackwardContext& ctx) {
    if (Tensor* ga = ctx.grad_in(0)) {
      const auto& g = ctx.grad_out().values();
      const auto& x = ctx.input(0).values();
      for (std::size_t i = 0; i < g.size(); ++i)
        if (x[i] > real(0)) (*ga)[i] += g[i];
    }
  }, "relu");
}

/// Axis a softmax normalizes over: `cols` makes every row a distribution,
/// `rows` makes every column one.
enum class Axis { rows, cols };

namespace detail {

inline Tensor transpose_value(const Tensor& t) {
  Tensor out = Tensor::matrix(t.cols(), t.rows());
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) out(j, i) = t(i, j);
  return out;
}

}  // namespace detail

/// Row-wise log-softmax with max subtraction. Entries where `mask` is nonzero
/// are excluded from the normalizer and come out as 0 with zero gradient.
inline Var log_softmax_rows(Var a, const std::vector<std::uint8_t>& mask = {}) {
  const Tensor& av = a.value();
  const std::size_t r = av.rows(), c = av.cols();
  if (!mask.empty() && mask.size() != av.size()) throw ShapeError("log_softmax_rows: mask size mismatch");
  Tensor out = Tensor::matrix(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    real mx = -std::numeric_limits<real>::infinity();
    for (std::size_t j = 0; j < c; ++j)
      if (mask.empty() || !mask[i * c + j]) mx = std::max(mx, av(i, j));
    if (!std::isfinite(mx)) throw NumericalError("log_softmax_rows: row " + std::to_string(i) + " fully masked or non-finite");
    real z = 0;
    for (std::size_t j = 0; j < c; ++j)
      if (mask.empty() || !mask[i * c + j]) z += std::exp(av(i, j) - mx);
    const real lz = mx + std::log(z);
    for (std::size_t j = 0; j < c; ++j)
      out(i, j) = (mask.empty() || !mask[i * c + j]) ? av(i, j) - lz : real(0);
  }
  return a.tape->record(std::move(out), {a.id}, [r, c, mask](BackwardContext& ctx) {
    Tensor* ga = ctx.grad_in(0);
    if (!ga) return;
    const Tensor& g = ctx.grad_out();
    const Tensor& y = ctx.output();
    for (std::size_t i = 0; i < r; ++i) {
      real gs = 0;
      for (std::size_t j = 0; j < c; ++j)
        if (mask.empty() || !mask[i * c + j]) gs += g(i, j);
      for (std::size_t j = 0; j < c; ++j)
        if (mask.empty() || !mask[i * c + j]) (*ga)(i, j) += g(i, j) - std::exp(y(i, j)) * gs;
    }
  }, "log_softmax");
}

inline Var softmax_rows(Var a) {
  const Tensor& av = a.value();
  const std::size_t r = av.rows(), c = av.cols();
  Tensor out = Tensor::matrix(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    real mx = -std::numeric_limits<real>::infinity();
    for (std::size_t j = 0; j < c; ++j) mx = std::max(mx, av(i, j));
    real z = 0;
    for (std::size_t j = 0; j < c; ++j) {
      out(i, j) = std::exp(av(i, j) - mx);
      z += out(i, j);
    }
    for (std::size_t j = 0; j < c; ++j) out(i, j) /= z;
  }
  return a.tape->record(std::move(out), {a.id}, [r, c](BackwardContext& ctx) {
    Tensor* ga = ctx.grad_in(0);
    if (!ga) return;
    const Tensor& g = ctx.grad_out();
    const Tensor& y = ctx.output();
    for (std::size_t i = 0; i < r; ++i) {
      real dot = 0;
      for (std::size_t j = 0; j < c; ++j) dot += g(i, j) * y(i, j);
      for (std::size_t j = 0; j < c; ++j) (*ga)(i, j) += y(i, j) * (g(i, j) - dot);
    }
  }, "softmax");
}

inline Var softmax(Var a, Axis axis = Axis::cols) {
  if (axis == Axis::cols) return softmax_rows(a);
  return transpose(softmax_rows(transpose(a)));
}

inline Var log_softmax(Var a, Axis axis = Axis::cols) {
  if (axis == Axis::cols) return log_softmax_rows(a);
  return transpose(log_softmax_rows(transpose(a)));
}

/// -sum_i logp[i, target[i]]; targets < 0 are skipped.
inline Var nll(Var logp, const std::vector<int>& targets) {
  const Tensor& lv = logp.value();
  if (targets.size() != lv.rows()) throw ShapeError("nll: target count does not match rows");
  real s = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] < 0) continue;
    if (static_cast<std::size_t>(targets[i]) >= lv.cols()) throw ShapeError("nll: target out of range");
    s -= lv(i, static_cast<std::size_t>(targets[i]));
  }
  return logp.tape->record(Tensor::scalar(s), {logp.id}, [targets](BackwardContext& ctx) {
    if (Tensor* ga = ctx.grad_in(0)) {
      const real g = ctx.grad_out()[0];
      for (std::size_t i = 0; i < targets.size(); ++i)
        if (targets[i] >= 0) (*ga)(i, static_cast<std::size_t>(targets[i])) -= g;
    }
  }, "nll");
}

inline Var sum(Var a) {
  real s = 0;
  for (real v : a.value().values()) s += v;
  return a.tape->record(Tensor::scalar(s), {a.id}, [](BackwardContext& ctx) {
    if (Tensor* ga = ctx.grad_in(0)) {
      const real g = ctx.grad_out()[0];
      for (auto& v : ga->values()) v += g;
    }
  }, "sum");
}

/// Sum of 1x1 vars.
inline Var add_scalars(const std::vector<Var>& terms) {
  if (terms.empty()) throw Error("add_scalars: no terms");
  real s = 0;
  std::vector<std::size_t> parents;
  parents.reserve(terms.size());
  for (const Var& t : terms) {
    if (t.value().size() != 1) throw ShapeError("add_scalars: term is not a scalar");
    s += t.value()[0];
    parents.push_back(t.id);
  }
  const std::size_t n = terms.size();
  return terms.front().tape->record(Tensor::scalar(s), std::move(parents), [n](BackwardContext& ctx) {
    const real g = ctx.grad_out()[0];
    for (std::size_t i = 0; i < n; ++i)
      if (Tensor* gi = ctx.grad_in(i)) (*gi)[0] += g;
  }, "add_scalars");
}

inline Var concat_rows(Var a, Var b) {
  require_same_tape(a, b, "concat_rows");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.cols()) throw ShapeError("concat_rows: " + av.shape_string() + " ++ " + bv.shape_string());
  Tensor out = Tensor::matrix(av.rows() + bv.rows(), av.cols());
  std::copy(av.values().begin(), av.values().end(), out.values().begin());
  std::copy(bv.values().begin(), bv.values().end(), out.values().begin() + static_cast<std::ptrdiff_t>(av.size()));
  const std::size_t split = av.size();
  return a.tape->record(std::move(out), {a.id, b.id}, [split](BackwardContext& ctx) {
    const auto& g = ctx.grad_out().values();
    if (Tensor* ga = ctx.grad_in(0))
      for (std::size_t i = 0; i < split; ++i) (*ga)[i] += g[i];
    if (Tensor* gb = ctx.grad_in(1))
      for (std::size_t i = split; i < g.size(); ++i) (*gb)[i - split] += g[i];
  }, "concat_rows");
}

/// Rows [begin, end).
inline Var slice_rows(Var a, std::size_t begin, std::size_t end) {
  const Tensor& av = a.value();
  if (begin > end || end > av.rows()) throw ShapeError("slice_rows: bad range");
  const std::size_t c = av.cols();
  Tensor out = Tensor::matrix(end - begin, c);
  std::copy(av.values().begin() + static_cast<std::ptrdiff_t>(begin * c),
            av.values().begin() + static_cast<std::ptrdiff_t>(end * c), out.values().begin());
  return a.tape->record(std::move(out), {a.id}, [begin, c](BackwardContext& ctx) {
    if (Tensor* ga = ctx.grad_in(0)) {
      const auto& g = ctx.grad_out().values();
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[begin * c + i] += g[i];
    }
  }, "slice_rows");
}

/// out[i] = a[index[i]]; used for embedding lookup and head selection.
inline Var gather_rows(Var a, const std::vector<int>& index) {
  const Tensor& av = a.value();
  const std::size_t c = av.cols();
  Tensor out = Tensor::matrix(index.size(), c);
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || static_cast<std::size_t>(index[i]) >= av.rows()) {
      throw ShapeError("gather_rows: index " + std::to_string(index[i]) + " out of range");
    }
    std::copy_n(av.values().begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(index[i]) * c), c,
                out.values().begin() + static_cast<std::ptrdiff_t>(i * c));
  }
  return a.tape->record(std::move(out), {a.id}, [index, c](BackwardContext& ctx) {
    if (Tensor* ga = ctx.grad_in(0)) {
      const auto& g = ctx.grad_out().values();
      for (std::size_t i = 0; i < index.size(); ++i) {
        const std::size_t base = static_cast<std::size_t>(index[i]) * c;
        for (std::size_t j = 0; j < c; ++j) (*ga)[base + j] += g[i * c + j];
      }
    }
  }, "gather_rows");
}

/// sum_i w[i] * parts[i]; w is 1 x parts.size().
inline Var weighted_sum(const std::vector<Var>& parts, Var w) {
  if (parts.empty()) throw ShapeError("weighted_sum: no parts");
  const Tensor& wv = w.value();
  if (wv.size() != parts.size()) throw ShapeError("weighted_sum: weight count mismatch");
  Tensor out = parts[0].value().zeros_like();
  std::vector<std::size_t> parents{w.id};
  for (std::size_t k = 0; k < parts.size(); ++k) {
    require_same_tape(parts[k], w, "weighted_sum");
    require_same_shape(parts[k].value(), out, "weighted_sum");
    const auto& pv = parts[k].value().values();
    for (std::size_t i = 0; i < pv.size(); ++i) out[i] += wv[k] * pv[i];
    parents.push_back(parts[k].id);
  }
  const std::size_t m = parts.size();
  return w.tape->record(std::move(out), std::move(parents), [m](BackwardContext& ctx) {
    const auto& g = ctx.grad_out().values();
    const Tensor& wv = ctx.input(0);
    Tensor* gw = ctx.grad_in(0);
    for (std::size_t k = 0; k < m; ++k) {
      const auto& pv = ctx.input(k + 1).values();
      if (gw) {
        real acc = 0;
        for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * pv[i];
        (*gw)[k] += acc;
      }
      if (Tensor* gp = ctx.grad_in(k + 1))
        for (std::size_t i = 0; i < g.size(); ++i) (*gp)[i] += wv[k] * g[i];
    }
  }, "weighted_sum");
}

/// out[i, l] = sum_j m[i, l*width + j] * d[i, j] with width = d.cols().
/// Together with matmul this evaluates one bilinear form per block.
inline Var rowblock_dot(Var m, Var d) {
  require_same_tape(m, d, "rowblock_dot");
  const Tensor& mv = m.value();
  const Tensor& dv = d.value();
  const std::size_t n = dv.rows(), width = dv.cols();
  if (mv.rows() != n || width == 0 || mv.cols() % width != 0) {
    throw ShapeError("rowblock_dot: " + mv.shape_string() + " vs " + dv.shape_string());
  }
  const std::size_t blocks = mv.cols() / width;
  Tensor out = Tensor::matrix(n, blocks);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t l = 0; l < blocks; ++l) {
      real s = 0;
      for (std::size_t j = 0; j < width; ++j) s += mv(i, l * width + j) * dv(i, j);
      out(i, l) = s;
    }
  return m.tape->record(std::move(out), {m.id, d.id}, [n, width, blocks](BackwardContext& ctx) {
    const Tensor& g = ctx.grad_out();
    const Tensor& mv = ctx.input(0);
    const Tensor& dv = ctx.input(1);
    Tensor* gm = ctx.grad_in(0);
    Tensor* gd = ctx.grad_in(1);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t l = 0; l < blocks; ++l) {
        const real gl = g(i, l);
        for (std::size_t j = 0; j < width; ++j) {
          if (gm) (*gm)(i, l * width + j) += gl * dv(i, j);
          if (gd) (*gd)(i, j) += gl * mv(i, l * width + j);
        }
      }
  }, "rowblock_dot");
}

/// Multiplies by a fixed mask (e.g. inverted dropout, entries 0 or 1/(1-p)).
inline Var apply_mask(Var a, Tensor mask) {
  require_same_shape(a.value(), mask, "apply_mask");
  return mul(a, a.tape->constant(std::move(mask)));
}

}  // namespace metaparse::ad
