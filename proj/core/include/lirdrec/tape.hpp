#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lirdrec/errors.hpp"
#include "lirdrec/parallel.hpp"
#include "lirdrec/sparse.hpp"
#include "lirdrec/tensor.hpp"

namespace lirdrec {

// Trainable tensor with its gradient accumulator and Adam moments.
template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  Tensor<T> adam_m, adam_v;  // sized lazily by the optimizer

  Parameter(std::string n, Tensor<T> v)
      : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}

  void zero_grad() { grad.fill(T(0)); }
};

using ValueId = int32_t;

namespace detail {

// C += A * B (row-major); parallel over rows of A.
template <typename T>
void gemm_nn_acc(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& c) {
  const size_t n = a.rows(), k = a.cols(), m = b.cols();
  parallel_for(n, [&](size_t r0, size_t r1) {
    for (size_t i = r0; i < r1; ++i) {
      T* crow = c.data() + i * m;
      const T* arow = a.data() + i * k;
      for (size_t p = 0; p < k; ++p) {
        const T av = arow[p];
        if (av == T(0)) continue;
        const T* brow = b.data() + p * m;
        for (size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
      }
    }
  });
}

// C += A * B^T; parallel over rows of A.
template <typename T>
void gemm_nt_acc(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& c) {
  const size_t n = a.rows(), k = a.cols(), m = b.rows();
  parallel_for(n, [&](size_t r0, size_t r1) {
    for (size_t i = r0; i < r1; ++i) {
      const T* arow = a.data() + i * k;
      T* crow = c.data() + i * m;
      for (size_t j = 0; j < m; ++j) {
        const T* brow = b.data() + j * k;
        T s = T(0);
        for (size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
        crow[j] += s;
      }
    }
  });
}

// C += A^T * B; parallel over rows of C (columns of A).
template <typename T>
void gemm_tn_acc(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& c) {
  const size_t n = a.rows(), k = a.cols(), m = b.cols();
  parallel_for(k, [&](size_t k0, size_t k1) {
    for (size_t i = 0; i < n; ++i) {
      const T* arow = a.data() + i * k;
      const T* brow = b.data() + i * m;
      for (size_t p = k0; p < k1; ++p) {
        const T av = arow[p];
        if (av == T(0)) continue;
        T* crow = c.data() + p * m;
        for (size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
      }
    }
  });
}

template <typename T>
T stable_softplus_neg(T z) {
  // softplus(-z) = -ln sigmoid(z), computed without overflow at large |z|.
  const double zd = static_cast<double>(z);
  if (zd > 0) return static_cast<T>(std::log1p(std::exp(-zd)));
  return static_cast<T>(-zd + std::log1p(std::exp(zd)));
}

template <typename T>
T sigmoid_neg(T z) {
  // sigma(-z), stable on both tails.
  const double zd = static_cast<double>(z);
  if (zd >= 0) {
    const double e = std::exp(-zd);
    return static_cast<T>(e / (1.0 + e));
  }
  return static_cast<T>(1.0 / (1.0 + std::exp(zd)));
}

}  // namespace detail

// Reverse-mode tape over dense tensors plus the sparse products the model
// needs. Ops append nodes in execution order; backward() replays the exact
// reverse order, accumulating into every reachable Parameter's grad.
template <typename T>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;             // backward closures capture `this`
  Tape& operator=(const Tape&) = delete;

  ValueId constant(Tensor<T> v) { return push(std::move(v), false, nullptr, "constant"); }

  // Zero-copy constant; *v must outlive the tape. For large frozen inputs
  // (feature matrices) that would otherwise be copied every batch.
  ValueId constant_ref(const Tensor<T>* v) {
    Node n;
    n.view = v;
    nodes_.push_back(std::move(n));
    return static_cast<ValueId>(nodes_.size() - 1);
  }

  ValueId leaf(Parameter<T>& p) {
    const ValueId id = push(p.value, true, nullptr, "leaf");
    nodes_[id].param = &p;
    return id;
  }

  // The reference is invalidated by the next op on this tape; copy the
  // tensor before recording further nodes.
  const Tensor<T>& value(ValueId id) const {
    const Node& n = nodes_[id];
    return n.view != nullptr ? *n.view : n.value;
  }

  // Gradient of the last backward() root w.r.t. this node; empty if none flowed.
  const Tensor<T>& grad(ValueId id) const { return nodes_[id].grad; }

  bool requires_grad(ValueId id) const { return nodes_[id].requires_grad; }

  void set_check_finite(bool on) { check_finite_ = on; }

  size_t num_nodes() const { return nodes_.size(); }

  void clear() { nodes_.clear(); }

  // ---- ops -----------------------------------------------------------------

  ValueId matmul(ValueId a, ValueId b) {
    const auto& av = value(a);
    const auto& bv = value(b);
    if (av.cols() != bv.rows()) throw ContractError("matmul: inner dimensions differ");
    Tensor<T> out(av.rows(), bv.cols());
    detail::gemm_nn_acc(av, bv, out);
    return push(std::move(out), requires_grad(a) || requires_grad(b),
                [this, a, b](ValueId self) {
                  const auto& g = nodes_[self].grad;
                  if (requires_grad(a)) detail::gemm_nt_acc(g, value(b), grad_buf(a));
                  if (requires_grad(b)) detail::gemm_tn_acc(value(a), g, grad_buf(b));
                },
                "matmul");
  }

  // X + broadcast row bias; bias shape 1 x cols.
  ValueId add_bias(ValueId x, ValueId bias) {
    const auto& xv = value(x);
    const auto& bv = value(bias);
    if (bv.rows() != 1 || bv.cols() != xv.cols())
      throw ContractError("add_bias: bias must be 1 x cols");
    Tensor<T> out = xv;
    for (size_t r = 0; r < out.rows(); ++r)
      for (size_t c = 0; c < out.cols(); ++c) out(r, c) += bv(0, c);
    return push(std::move(out), requires_grad(x) || requires_grad(bias),
                [this, x, bias](ValueId self) {
                  const auto& g = nodes_[self].grad;
                  if (requires_grad(x)) {
                    auto& gx = grad_buf(x);
                    for (size_t i = 0; i < g.size(); ++i) gx.at(i) += g.at(i);
                  }
                  if (requires_grad(bias)) {
                    auto& gb = grad_buf(bias);
                    for (size_t r = 0; r < g.rows(); ++r)
                      for (size_t c = 0; c < g.cols(); ++c) gb(0, c) += g(r, c);
                  }
                },
                "add_bias");
  }

  ValueId add(ValueId a, ValueId b) { return add_scaled(a, b, T(1)); }
  ValueId sub(ValueId a, ValueId b) { return add_scaled(a, b, T(-1)); }

  // a + cb * b, elementwise on identical shapes.
  ValueId add_scaled(ValueId a, ValueId b, T cb) {
    const auto& av = value(a);
    const auto& bv = value(b);
    if (!av.same_shape(bv)) throw ContractError("add_scaled: shape mismatch");
    Tensor<T> out = av;
    for (size_t i = 0; i < out.size(); ++i) out.at(i) += cb * bv.at(i);
    return push(std::move(out), requires_grad(a) || requires_grad(b),
                [this, a, b, cb](ValueId self) {
                  const auto& g = nodes_[self].grad;
                  if (requires_grad(a)) {
                    auto& ga = grad_buf(a);
                    for (size_t i = 0; i < g.size(); ++i) ga.at(i) += g.at(i);
                  }
                  if (requires_grad(b)) {
                    auto& gb = grad_buf(b);
                    for (size_t i = 0; i < g.size(); ++i) gb.at(i) += cb * g.at(i);
                  }
                },
                "add_scaled");
  }

  ValueId scale(ValueId x, T c) {
    Tensor<T> out = value(x);
    for (size_t i = 0; i < out.size(); ++i) out.at(i) *= c;
    return push(std::move(out), requires_grad(x),
                [this, x, c](ValueId self) {
                  const auto& g = nodes_[self].grad;
                  if (!requires_grad(x)) return;
                  auto& gx = grad_buf(x);
                  for (size_t i = 0; i < g.size(); ++i) gx.at(i) += c * g.at(i);
                },
                "scale");
  }

  // c * x + offset; offset broadcasts over rows when it is a single row.
  ValueId scale_add_const(ValueId x, T c, Tensor<T> offset) {
    const auto& xv = value(x);
    const bool bcast = offset.rows() == 1 && xv.rows() != 1;
    if (!bcast && !offset.same_shape(xv))
      throw ContractError("scale_add_const: offset shape mismatch");
    if (offset.cols() != xv.cols())
      throw ContractError("scale_add_const: offset shape mismatch");
    Tensor<T> out(xv.rows(), xv.cols());
    for (size_t r = 0; r < xv.rows(); ++r)
      for (size_t col = 0; col < xv.cols(); ++col)
        out(r, col) = c * xv(r, col) + (bcast ? offset(0, col) : offset(r, col));
    return push(std::move(out), requires_grad(x),
                [this, x, c](ValueId self) {
                  if (!requires_grad(x)) return;
                  const auto& g = nodes_[self].grad;
                  auto& gx = grad_buf(x);
                  for (size_t i = 0; i < g.size(); ++i) gx.at(i) += c * g.at(i);
                },
                "scale_add_const");
  }

  ValueId leaky_relu(ValueId x, T slope) {
    const auto& xv = value(x);
    Tensor<T> out(xv.rows(), xv.cols());
    for (size_t i = 0; i < xv.size(); ++i)
      out.at(i) = xv.at(i) > T(0) ? xv.at(i) : slope * xv.at(i);
    return push(std::move(out), requires_grad(x),
                [this, x, slope](ValueId self) {
                  if (!requires_grad(x)) return;
                  const auto& g = nodes_[self].grad;
                  const auto& xv = value(x);
                  auto& gx = grad_buf(x);
                  for (size_t i = 0; i < g.size(); ++i)
                    gx.at(i) += (xv.at(i) > T(0) ? T(1) : slope) * g.at(i);
                },
                "leaky_relu");
  }

  ValueId concat_cols(std::span<const ValueId> parts) {
    if (parts.empty()) throw ContractError("concat_cols: empty input");
    const size_t rows = value(parts[0]).rows();
    size_t total = 0;
    bool req = false;
    for (const ValueId p : parts) {
      if (value(p).rows() != rows) throw ContractError("concat_cols: row counts differ");
      total += value(p).cols();
      req = req || requires_grad(p);
    }
    Tensor<T> out(rows, total);
    size_t off = 0;
    for (const ValueId p : parts) {
      const auto& pv = value(p);
      for (size_t r = 0; r < rows; ++r)
        for (size_t c = 0; c < pv.cols(); ++c) out(r, off + c) = pv(r, c);
      off += pv.cols();
    }
    std::vector<ValueId> ids(parts.begin(), parts.end());
    return push(std::move(out), req,
                [this, ids](ValueId self) {
                  const auto& g = nodes_[self].grad;
                  size_t off = 0;
                  for (const ValueId p : ids) {
                    const size_t pc = value(p).cols();
                    if (requires_grad(p)) {
                      auto& gp = grad_buf(p);
                      for (size_t r = 0; r < g.rows(); ++r)
                        for (size_t c = 0; c < pc; ++c) gp(r, c) += g(r, off + c);
                    }
                    off += pc;
                  }
                },
                "concat_cols");
  }

  ValueId slice_cols(ValueId x, size_t c0, size_t c1) {
    const auto& xv = value(x);
    if (c0 >= c1 || c1 > xv.cols()) throw ContractError("slice_cols: bad range");
    Tensor<T> out(xv.rows(), c1 - c0);
    for (size_t r = 0; r < xv.rows(); ++r)
      for (size_t c = c0; c < c1; ++c) out(r, c - c0) = xv(r, c);
    return push(std::move(out), requires_grad(x),
                [this, x, c0](ValueId self) {
                  if (!requires_grad(x)) return;
                  const auto& g = nodes_[self].grad;
                  auto& gx = grad_buf(x);
                  for (size_t r = 0; r < g.rows(); ++r)
                    for (size_t c = 0; c < g.cols(); ++c) gx(r, c0 + c) += g(r, c);
                },
                "slice_cols");
  }

  ValueId gather_rows(ValueId table, std::vector<int32_t> idx) {
    const auto& tv = value(table);
    Tensor<T> out(idx.size(), tv.cols());
    for (size_t k = 0; k < idx.size(); ++k) {
      const auto r = idx[k];
      if (r < 0 || static_cast<size_t>(r) >= tv.rows())
        throw ContractError("gather_rows: index out of range");
      for (size_t c = 0; c < tv.cols(); ++c) out(k, c) = tv(r, c);
    }
    return push(std::move(out), requires_grad(table),
                [this, table, idx = std::move(idx)](ValueId self) {
                  if (!requires_grad(table)) return;
                  const auto& g = nodes_[self].grad;
                  auto& gt = grad_buf(table);
                  // sequential scatter keeps repeated indices deterministic
                  for (size_t k = 0; k < idx.size(); ++k)
                    for (size_t c = 0; c < g.cols(); ++c) gt(idx[k], c) += g(k, c);
                },
                "gather_rows");
  }

  // y = fwd * x; bwd must be fwd^T and both must outlive the tape.
  ValueId spmm(const Csr<T>* fwd, const Csr<T>* bwd, ValueId x) {
    if (fwd->cols != value(x).rows()) throw ContractError("spmm: shape mismatch");
    if (bwd->rows != fwd->cols || bwd->cols != fwd->rows)
      throw ContractError("spmm: bwd operator is not the transpose shape");
    Tensor<T> out;
    fwd->multiply(value(x), out);
    return push(std::move(out), requires_grad(x),
                [this, bwd, x](ValueId self) {
                  if (!requires_grad(x)) return;
                  const auto& g = nodes_[self].grad;
                  Tensor<T> gx;
                  bwd->multiply(g, gx);
                  auto& acc = grad_buf(x);
                  for (size_t i = 0; i < gx.size(); ++i) acc.at(i) += gx.at(i);
                },
                "spmm");
  }

  // Row-wise dot product of two equal-shape matrices -> n x 1.
  ValueId dot_rows(ValueId a, ValueId b) {
    const auto& av = value(a);
    const auto& bv = value(b);
    if (!av.same_shape(bv)) throw ContractError("dot_rows: shape mismatch");
    Tensor<T> out(av.rows(), 1);
    for (size_t r = 0; r < av.rows(); ++r) {
      T s = T(0);
      for (size_t c = 0; c < av.cols(); ++c) s += av(r, c) * bv(r, c);
      out(r, 0) = s;
    }
    return push(std::move(out), requires_grad(a) || requires_grad(b),
                [this, a, b](ValueId self) {
                  const auto& g = nodes_[self].grad;
                  const auto& av = value(a);
                  const auto& bv = value(b);
                  if (requires_grad(a)) {
                    auto& ga = grad_buf(a);
                    for (size_t r = 0; r < av.rows(); ++r)
                      for (size_t c = 0; c < av.cols(); ++c) ga(r, c) += g(r, 0) * bv(r, c);
                  }
                  if (requires_grad(b)) {
                    auto& gb = grad_buf(b);
                    for (size_t r = 0; r < av.rows(); ++r)
                      for (size_t c = 0; c < av.cols(); ++c) gb(r, c) += g(r, 0) * av(r, c);
                  }
                },
                "dot_rows");
  }

  // Elementwise -ln sigmoid(z), the BPR per-triple loss.
  ValueId softplus_neg(ValueId z) {
    const auto& zv = value(z);
    Tensor<T> out(zv.rows(), zv.cols());
    for (size_t i = 0; i < zv.size(); ++i) out.at(i) = detail::stable_softplus_neg(zv.at(i));
    return push(std::move(out), requires_grad(z),
                [this, z](ValueId self) {
                  if (!requires_grad(z)) return;
                  const auto& g = nodes_[self].grad;
                  const auto& zv = value(z);
                  auto& gz = grad_buf(z);
                  for (size_t i = 0; i < g.size(); ++i)
                    gz.at(i) -= detail::sigmoid_neg(zv.at(i)) * g.at(i);
                },
                "softplus_neg");
  }

  ValueId softmax_rows(ValueId x) {
    const auto& xv = value(x);
    Tensor<T> out(xv.rows(), xv.cols());
    for (size_t r = 0; r < xv.rows(); ++r) {
      T mx = xv(r, 0);
      for (size_t c = 1; c < xv.cols(); ++c) mx = std::max(mx, xv(r, c));
      double s = 0.0;
      for (size_t c = 0; c < xv.cols(); ++c) {
        out(r, c) = static_cast<T>(std::exp(static_cast<double>(xv(r, c) - mx)));
        s += out(r, c);
      }
      for (size_t c = 0; c < xv.cols(); ++c) out(r, c) = static_cast<T>(out(r, c) / s);
    }
    return push(std::move(out), requires_grad(x),
                [this, x](ValueId self) {
                  if (!requires_grad(x)) return;
                  const auto& g = nodes_[self].grad;
                  const auto& y = nodes_[self].value;
                  auto& gx = grad_buf(x);
                  for (size_t r = 0; r < y.rows(); ++r) {
                    T dot = T(0);
                    for (size_t c = 0; c < y.cols(); ++c) dot += g(r, c) * y(r, c);
                    for (size_t c = 0; c < y.cols(); ++c)
                      gx(r, c) += y(r, c) * (g(r, c) - dot);
                  }
                },
                "softmax_rows");
  }

  // x viewed as B contiguous column chunks; chunk b of row r scales by w(r, b).
  ValueId scale_chunks(ValueId x, ValueId w) {
    const auto& xv = value(x);
    const auto& wv = value(w);
    if (wv.rows() != xv.rows()) throw ContractError("scale_chunks: row counts differ");
    if (wv.cols() == 0 || xv.cols() % wv.cols() != 0)
      throw ContractError("scale_chunks: width not divisible into chunks");
    const size_t chunk = xv.cols() / wv.cols();
    Tensor<T> out(xv.rows(), xv.cols());
    for (size_t r = 0; r < xv.rows(); ++r)
      for (size_t c = 0; c < xv.cols(); ++c) out(r, c) = xv(r, c) * wv(r, c / chunk);
    return push(std::move(out), requires_grad(x) || requires_grad(w),
                [this, x, w, chunk](ValueId self) {
                  const auto& g = nodes_[self].grad;
                  const auto& xv = value(x);
                  const auto& wv = value(w);
                  if (requires_grad(x)) {
                    auto& gx = grad_buf(x);
                    for (size_t r = 0; r < g.rows(); ++r)
                      for (size_t c = 0; c < g.cols(); ++c)
                        gx(r, c) += g(r, c) * wv(r, c / chunk);
                  }
                  if (requires_grad(w)) {
                    auto& gw = grad_buf(w);
                    for (size_t r = 0; r < g.rows(); ++r)
                      for (size_t c = 0; c < g.cols(); ++c)
                        gw(r, c / chunk) += g(r, c) * xv(r, c);
                  }
                },
                "scale_chunks");
  }

  ValueId mean_all(ValueId x) {
    const auto& xv = value(x);
    if (xv.size() == 0) throw ContractError("mean_all: empty input");
    double s = 0.0;
    for (size_t i = 0; i < xv.size(); ++i) s += static_cast<double>(xv.at(i));
    Tensor<T> out(1, 1);
    out(0, 0) = static_cast<T>(s / static_cast<double>(xv.size()));
    return push(std::move(out), requires_grad(x),
                [this, x](ValueId self) {
                  if (!requires_grad(x)) return;
                  const auto& g = nodes_[self].grad;
                  auto& gx = grad_buf(x);
                  const T c = g(0, 0) / static_cast<T>(gx.size());
                  for (size_t i = 0; i < gx.size(); ++i) gx.at(i) += c;
                },
                "mean_all");
  }

  // (1/rows) * sum of squared entries; the representation penalty term.
  ValueId mean_row_sumsq(ValueId x) {
    const auto& xv = value(x);
    if (xv.rows() == 0) throw ContractError("mean_row_sumsq: empty input");
    double s = 0.0;
    for (size_t i = 0; i < xv.size(); ++i)
      s += static_cast<double>(xv.at(i)) * static_cast<double>(xv.at(i));
    Tensor<T> out(1, 1);
    out(0, 0) = static_cast<T>(s / static_cast<double>(xv.rows()));
    return push(std::move(out), requires_grad(x),
                [this, x](ValueId self) {
                  if (!requires_grad(x)) return;
                  const auto& g = nodes_[self].grad;
                  const auto& xv = value(x);
                  auto& gx = grad_buf(x);
                  const T c = T(2) * g(0, 0) / static_cast<T>(xv.rows());
                  for (size_t i = 0; i < gx.size(); ++i) gx.at(i) += c * xv.at(i);
                },
                "mean_row_sumsq");
  }

  // ---- backward --------------------------------------------------------------

  // Seeds the scalar root and walks nodes in exact reverse creation order.
  void backward(ValueId root, T seed = T(1)) {
    if (value(root).size() != 1) throw ContractError("backward: root must be scalar");
    grad_buf(root)(0, 0) += seed;
    for (ValueId id = root; id >= 0; --id) {
      Node& n = nodes_[id];
      if (n.grad.empty()) continue;
      if (n.param != nullptr) {
        auto& pg = n.param->grad;
        for (size_t i = 0; i < pg.size(); ++i) pg.at(i) += n.grad.at(i);
      }
      if (n.backward) n.backward(id);
    }
  }

 private:
  struct Node {
    Tensor<T> value;
    const Tensor<T>* view = nullptr;  // set for zero-copy constants
    Tensor<T> grad;                   // empty until gradient first flows here
    std::function<void(ValueId)> backward;
    Parameter<T>* param = nullptr;
    bool requires_grad = false;
  };

  Tensor<T>& grad_buf(ValueId id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) n.grad = Tensor<T>(value(id).rows(), value(id).cols());
    return n.grad;
  }

  ValueId push(Tensor<T> v, bool needs_grad, std::function<void(ValueId)> bwd, const char* op) {
    if (check_finite_ && !v.all_finite())
      throw NumericError(std::string("non-finite values produced by op '") + op + "'");
    Node n;
    n.value = std::move(v);
    n.backward = std::move(bwd);
    n.requires_grad = needs_grad;
    nodes_.push_back(std::move(n));
    return static_cast<ValueId>(nodes_.size() - 1);
  }

  std::vector<Node> nodes_;
  bool check_finite_ = false;
};

}  // namespace lirdrec
