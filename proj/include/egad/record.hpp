#pragma once

// Reverse-mode differentiation over a recorded log of matrix primitives.
//
// Every primitive appends one node holding its forward value and a closure
// that pushes the incoming gradient to its operands. Nodes are appended in
// evaluation order, so a reverse sweep over the log is a valid topological
// order for backpropagation.

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "egad/errors.hpp"
#include "egad/matrix.hpp"

namespace egad {

class Recorder;

/// Handle to a value recorded in a Recorder. Cheap to copy.
class Var {
 public:
  Var() = default;
  Var(Recorder* rec, std::size_t id) : rec_(rec), id_(id) {}

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  std::size_t id() const noexcept { return id_; }
  Recorder& recorder() const noexcept { return *rec_; }
  bool valid() const noexcept { return rec_ != nullptr; }

 private:
  Recorder* rec_ = nullptr;
  std::size_t id_ = 0;
};

class Recorder {
 public:
  using BackwardFn = std::function<void(Recorder&, std::size_t self, const Matrix& grad)>;

  Recorder() = default;
  Recorder(const Recorder&) = delete;
  Recorder& operator=(const Recorder&) = delete;

  /// Trainable leaf: receives a gradient on backward().
  Var parameter(Matrix value) { return push(std::move(value), true, true, {}); }
  /// Constant leaf: never receives a gradient.
  Var constant(Matrix value) { return push(std::move(value), false, false, {}); }

  /// Appends the result of a primitive. The node requires a gradient if any
  /// operand does; otherwise the closure is dropped.
  Var record(Matrix value, std::initializer_list<Var> operands, BackwardFn fn) {
    bool needs = false;
    for (const Var& v : operands) needs = needs || nodes_[v.id()].requires_grad;
    return push(std::move(value), needs, false, needs ? std::move(fn) : BackwardFn{});
  }

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  const Matrix& value(Var v) const { return nodes_[v.id()].value; }

  /// Gradient of the last backward() target with respect to v. Zero-filled
  /// when v was unreachable from the target.
  Matrix grad(Var v) const {
    const Node& n = nodes_[v.id()];
    if (n.grad.size() == 0 && n.value.size() != 0) return Matrix(n.value.rows(), n.value.cols());
    return n.grad;
  }

  bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  std::vector<Var> trainable_leaves() {
    std::vector<Var> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (nodes_[i].trainable) out.emplace_back(this, i);
    return out;
  }

  /// Accumulates g into the gradient buffer of node id (no-op for constants).
  void accumulate(std::size_t id, const Matrix& g) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0 && n.value.size() != 0) {
      n.grad = g;
      return;
    }
    require_same_shape(n.grad, g, "accumulate");
    auto dst = n.grad.data();
    auto src = g.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
  void accumulate(Var v, const Matrix& g) { accumulate(v.id(), g); }

  /// Backpropagates from a 1x1 terminal. Clears gradients from earlier sweeps.
  void backward(Var loss) {
    const Matrix& lv = nodes_[loss.id()].value;
    if (lv.rows() != 1 || lv.cols() != 1) {
      throw ContractError("backward: terminal must be a scalar, got " + lv.shape_str());
    }
    for (Node& n : nodes_) n.grad = Matrix();
    if (!nodes_[loss.id()].requires_grad) return;
    nodes_[loss.id()].grad = Matrix(1, 1, 1.0);
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.backward || n.grad.size() == 0) continue;
      // The closure may append to other nodes' grads but never resizes nodes_.
      n.backward(*this, i, n.grad);
    }
  }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool trainable = false;
    BackwardFn backward;
  };

  Var push(Matrix value, bool requires_grad, bool trainable, BackwardFn fn) {
    nodes_.push_back(Node{std::move(value), Matrix(), requires_grad, trainable, std::move(fn)});
    return Var(this, nodes_.size() - 1);
  }

  std::vector<Node> nodes_;
};

inline const Matrix& Var::value() const { return rec_->value(id_); }

// ---------------------------------------------------------------------------
// Primitives
// ---------------------------------------------------------------------------

inline Var matmul(Var a, Var b) {
  Recorder& r = a.recorder();
  Matrix out = kernels::matmul(a.value(), b.value());
  const std::size_t ia = a.id(), ib = b.id();
  return r.record(std::move(out), {a, b}, [ia, ib](Recorder& r, std::size_t, const Matrix& g) {
    if (r.requires_grad(Var(&r, ia))) r.accumulate(ia, kernels::matmul_nt(g, r.value(ib)));
    if (r.requires_grad(Var(&r, ib))) r.accumulate(ib, kernels::matmul_tn(r.value(ia), g));
  });
}

inline Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  Matrix out = a.value();
  auto o = out.data();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.recorder().record(std::move(out), {a, b}, [ia, ib](Recorder& r, std::size_t, const Matrix& g) {
    r.accumulate(ia, g);
    r.accumulate(ib, g);
  });
}

inline Var scale(Var a, double c) {
  Matrix out = a.value();
  for (double& x : out.data()) x *= c;
  const std::size_t ia = a.id();
  return a.recorder().record(std::move(out), {a}, [ia, c](Recorder& r, std::size_t, const Matrix& g) {
    Matrix d = g;
    for (double& x : d.data()) x *= c;
    r.accumulate(ia, d);
  });
}

inline Var sub(Var a, Var b) { return add(a, scale(b, -1.0)); }

inline Var hadamard(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "hadamard");
  Matrix out = a.value();
  auto o = out.data();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.recorder().record(std::move(out), {a, b}, [ia, ib](Recorder& r, std::size_t, const Matrix& g) {
    for (auto [self, other] : {std::pair{ia, ib}, std::pair{ib, ia}}) {
      if (!r.requires_grad(Var(&r, self))) continue;
      Matrix d = g;
      auto dv = d.data();
      auto ov = r.value(other).data();
      for (std::size_t i = 0; i < dv.size(); ++i) dv[i] *= ov[i];
      r.accumulate(self, d);
    }
  });
}

inline Var concat_cols(Var a, Var b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("concat_cols: " + a.value().shape_str() + " | " + b.value().shape_str());
  }
  const std::size_t ca = a.cols(), cb = b.cols();
  Matrix out(a.rows(), ca + cb);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < ca; ++j) out(i, j) = a.value()(i, j);
    for (std::size_t j = 0; j < cb; ++j) out(i, ca + j) = b.value()(i, j);
  }
  const std::size_t ia = a.id(), ib = b.id();
  return a.recorder().record(std::move(out), {a, b}, [ia, ib, ca, cb](Recorder& r, std::size_t, const Matrix& g) {
    Matrix da(g.rows(), ca), db(g.rows(), cb);
    for (std::size_t i = 0; i < g.rows(); ++i) {
      for (std::size_t j = 0; j < ca; ++j) da(i, j) = g(i, j);
      for (std::size_t j = 0; j < cb; ++j) db(i, j) = g(i, ca + j);
    }
    r.accumulate(ia, da);
    r.accumulate(ib, db);
  });
}

inline Var transpose(Var a) {
  const std::size_t ia = a.id();
  return a.recorder().record(kernels::transpose(a.value()), {a}, [ia](Recorder& r, std::size_t, const Matrix& g) {
    r.accumulate(ia, kernels::transpose(g));
  });
}

inline Var relu(Var a) {
  Matrix out = a.value();
  for (double& x : out.data()) x = x > 0.0 ? x : 0.0;
  const std::size_t ia = a.id();
  return a.recorder().record(std::move(out), {a}, [ia](Recorder& r, std::size_t, const Matrix& g) {
    Matrix d = g;
    auto x = r.value(ia).data();
    auto dv = d.data();
    for (std::size_t i = 0; i < dv.size(); ++i)
      if (!(x[i] > 0.0)) dv[i] = 0.0;
    r.accumulate(ia, d);
  });
}

/// ELU with alpha = 1.
inline Var elu(Var a) {
  Matrix out = kernels::apply(a.value(), kernels::elu);
  const std::size_t ia = a.id();
  return a.recorder().record(std::move(out), {a}, [ia](Recorder& r, std::size_t, const Matrix& g) {
    Matrix d = g;
    auto x = r.value(ia).data();
    auto dv = d.data();
    for (std::size_t i = 0; i < dv.size(); ++i)
      if (!(x[i] > 0.0)) dv[i] *= std::exp(x[i]);
    r.accumulate(ia, d);
  });
}

inline Var sigmoid(Var a) {
  Matrix out = kernels::apply(a.value(), kernels::sigmoid);
  const std::size_t ia = a.id();
  return a.recorder().record(std::move(out), {a}, [ia](Recorder& r, std::size_t self, const Matrix& g) {
    Matrix d = g;
    auto y = r.value(self).data();
    auto dv = d.data();
    for (std::size_t i = 0; i < dv.size(); ++i) dv[i] *= y[i] * (1.0 - y[i]);
    r.accumulate(ia, d);
  });
}

/// Row-wise softmax restricted to entries where mask != 0. Masked entries are
/// exactly 0. Every row needs at least one unmasked entry.
inline Var masked_softmax_rows(Var a, const Matrix& mask) {
  require_same_shape(a.value(), mask, "masked_softmax_rows");
  const Matrix& x = a.value();
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double mx = -INFINITY;
    for (std::size_t j = 0; j < x.cols(); ++j)
      if (mask(i, j) != 0.0) mx = std::max(mx, x(i, j));
    if (mx == -INFINITY) {
      throw DegenerateSoftmaxError("masked_softmax_rows: row " + std::to_string(i) + " is fully masked");
    }
    if (!std::isfinite(mx)) throw NumericError("masked_softmax_rows: non-finite score in row " + std::to_string(i));
    double total = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) {
      if (mask(i, j) == 0.0) continue;
      out(i, j) = std::exp(x(i, j) - mx);
      total += out(i, j);
    }
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) /= total;
  }
  const std::size_t ia = a.id();
  return a.recorder().record(std::move(out), {a}, [ia](Recorder& r, std::size_t self, const Matrix& g) {
    const Matrix& y = r.value(self);
    Matrix d(y.rows(), y.cols());
    for (std::size_t i = 0; i < y.rows(); ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < y.cols(); ++j) dot += y(i, j) * g(i, j);
      for (std::size_t j = 0; j < y.cols(); ++j) d(i, j) = y(i, j) * (g(i, j) - dot);
    }
    r.accumulate(ia, d);
  });
}

/// sqrt(mean((a - target)^2)) over every entry, as a 1x1 value.
inline Var rms_error(Var a, const Matrix& target) {
  require_same_shape(a.value(), target, "rms_error");
  const auto x = a.value().data();
  const auto t = target.data();
  if (x.empty()) throw ShapeError("rms_error: empty operand");
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) ss += (x[i] - t[i]) * (x[i] - t[i]);
  const double loss = std::sqrt(ss / static_cast<double>(x.size()));
  const std::size_t ia = a.id();
  return a.recorder().record(Matrix(1, 1, loss), {a},
                             [ia, target, loss](Recorder& r, std::size_t, const Matrix& g) {
                               const Matrix& xv = r.value(ia);
                               Matrix d(xv.rows(), xv.cols());
                               // d sqrt(m)/dx is undefined at m = 0; use the zero subgradient.
                               if (loss > 0.0) {
                                 const double c = g[0] / (static_cast<double>(xv.size()) * loss);
                                 for (std::size_t i = 0; i < d.size(); ++i) d[i] = c * (xv[i] - target[i]);
                               }
                               r.accumulate(ia, d);
                             });
}

/// Sum of all entries, as a 1x1 value.
inline Var sum(Var a) {
  double s = 0.0;
  for (double x : a.value().data()) s += x;
  const std::size_t ia = a.id();
  return a.recorder().record(Matrix(1, 1, s), {a}, [ia](Recorder& r, std::size_t, const Matrix& g) {
    const Matrix& xv = r.value(ia);
    r.accumulate(ia, Matrix(xv.rows(), xv.cols(), g[0]));
  });
}

/// Rows idx[0], idx[1], ... of a, stacked.
inline Var gather_rows(Var a, std::span<const std::size_t> idx) {
  const Matrix& x = a.value();
  Matrix out(idx.size(), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= x.rows()) throw ShapeError("gather_rows: row " + std::to_string(idx[i]) + " of " + x.shape_str());
    std::copy(x.row(idx[i]).begin(), x.row(idx[i]).end(), out.row(i).begin());
  }
  std::vector<std::size_t> rows(idx.begin(), idx.end());
  const std::size_t ia = a.id(), n = x.rows();
  return a.recorder().record(std::move(out), {a}, [ia, n, rows = std::move(rows)](Recorder& r, std::size_t, const Matrix& g) {
    Matrix d(n, g.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) d(rows[i], j) += g(i, j);
    r.accumulate(ia, d);
  });
}

/// Copy of base with row idx[i] replaced by row i of values. idx must be distinct.
inline Var scatter_rows(Var base, std::span<const std::size_t> idx, Var values) {
  const Matrix& b = base.value();
  const Matrix& v = values.value();
  if (v.rows() != idx.size() || v.cols() != b.cols()) {
    throw ShapeError("scatter_rows: " + v.shape_str() + " into " + b.shape_str());
  }
  Matrix out = b;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= b.rows()) throw ShapeError("scatter_rows: row " + std::to_string(idx[i]) + " of " + b.shape_str());
    std::copy(v.row(i).begin(), v.row(i).end(), out.row(idx[i]).begin());
  }
  std::vector<std::size_t> rows(idx.begin(), idx.end());
  const std::size_t ib = base.id(), iv = values.id();
  return base.recorder().record(std::move(out), {base, values},
                                [ib, iv, rows = std::move(rows)](Recorder& r, std::size_t, const Matrix& g) {
                                  Matrix dv(rows.size(), g.cols());
                                  Matrix db = g;
                                  for (std::size_t i = 0; i < rows.size(); ++i) {
                                    for (std::size_t j = 0; j < g.cols(); ++j) {
                                      dv(i, j) = g(rows[i], j);
                                      db(rows[i], j) = 0.0;
                                    }
                                  }
                                  r.accumulate(ib, db);
                                  r.accumulate(iv, dv);
                                });
}

/// Rows [begin, end) of a.
inline Var slice_rows(Var a, std::size_t begin, std::size_t end) {
  const Matrix& x = a.value();
  if (begin > end || end > x.rows()) throw ShapeError("slice_rows: out of range for " + x.shape_str());
  std::vector<std::size_t> idx(end - begin);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = begin + i;
  return gather_rows(a, idx);
}

/// Adds a 1 x cols row vector to every row of a.
inline Var add_row_broadcast(Var a, Var bias) {
  const Matrix& x = a.value();
  const Matrix& b = bias.value();
  if (b.rows() != 1 || b.cols() != x.cols()) {
    throw ShapeError("add_row_broadcast: " + b.shape_str() + " onto " + x.shape_str());
  }
  Matrix out = x;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) += b[j];
  const std::size_t ia = a.id(), ib = bias.id();
  return a.recorder().record(std::move(out), {a, bias}, [ia, ib](Recorder& r, std::size_t, const Matrix& g) {
    r.accumulate(ia, g);
    Matrix db(1, g.cols());
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) db[j] += g(i, j);
    r.accumulate(ib, db);
  });
}

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(double c, Var a) { return scale(a, c); }

}  // namespace egad
