#pragma once

// Minimal dense-tensor engine with reverse-mode automatic differentiation.
// Tensors are value handles over shared storage; operations execute eagerly
// and, when a tape is active and gradients are requested, record a backward
// rule onto the tape. TapeT::backward replays the rules in reverse recording
// order, which is a valid topological order because execution is eager.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "thcrl/common.hpp"

namespace thcrl {

template <typename T>
struct TensorStorage {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // empty until first accumulation
  bool requires_grad = false;
};

template <typename T>
class TensorT {
 public:
  TensorT() = default;

  explicit TensorT(Shape shape, bool requires_grad = false)
      : d_(std::make_shared<TensorStorage<T>>()) {
    d_->shape = std::move(shape);
    d_->value.assign(size_t(thcrl::numel(d_->shape)), T(0));
    d_->requires_grad = requires_grad;
  }

  TensorT(Shape shape, std::vector<T> data, bool requires_grad = false)
      : d_(std::make_shared<TensorStorage<T>>()) {
    if (thcrl::numel(shape) != int64_t(data.size()))
      throw ShapeError("tensor: shape " + shape_str(shape) + " does not match data length " +
                       std::to_string(data.size()));
    d_->shape = std::move(shape);
    d_->value = std::move(data);
    d_->requires_grad = requires_grad;
  }

  static TensorT scalar(T v) { return TensorT({1}, std::vector<T>{v}); }

  static TensorT full(Shape shape, T v, bool requires_grad = false) {
    TensorT t(std::move(shape), requires_grad);
    std::fill(t.value().begin(), t.value().end(), v);
    return t;
  }

  // TensorT is a handle over shared storage; a const handle still exposes
  // mutable storage, the way smart pointers do.
  bool defined() const { return bool(d_); }
  const Shape& shape() const { return d_->shape; }
  int64_t dim(size_t i) const { return d_->shape[i]; }
  size_t rank() const { return d_->shape.size(); }
  int64_t size() const { return int64_t(d_->value.size()); }

  std::vector<T>& value() const { return d_->value; }

  bool requires_grad() const { return d_->requires_grad; }

  // Gradient buffer, allocated (zero-filled) on first access.
  std::vector<T>& grad() const {
    if (d_->grad.empty()) d_->grad.assign(d_->value.size(), T(0));
    return d_->grad;
  }
  bool has_grad() const { return !d_->grad.empty(); }
  const std::vector<T>& grad_view() const { return d_->grad; }
  void clear_grad() const { d_->grad.clear(); }

  T item() const {
    if (size() != 1)
      throw ContractError("item(): tensor is not scalar, shape " + shape_str(shape()));
    return d_->value[0];
  }

  std::shared_ptr<TensorStorage<T>> ptr() const { return d_; }

 private:
  std::shared_ptr<TensorStorage<T>> d_;
};

// ---------------------------------------------------------------------------
// Tape
// ---------------------------------------------------------------------------

template <typename T>
class TapeT {
 public:
  void record(std::function<void()> fn) { nodes_.push_back(std::move(fn)); }
  size_t size() const { return nodes_.size(); }

  // Seeds d(loss)/d(loss) = 1 and replays recorded rules newest-first.
  // A tape may be consumed once; clear() resets it.
  void backward(TensorT<T> loss) {
    if (consumed_)
      throw ContractError("backward() called twice on the same tape without clear()");
    if (loss.size() != 1)
      throw ContractError("backward(): loss must be scalar, got " + shape_str(loss.shape()));
    if (nodes_.empty()) throw ContractError("backward(): tape is empty");
    loss.grad()[0] = T(1);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
    consumed_ = true;
  }

  void clear() {
    nodes_.clear();
    consumed_ = false;
  }

 private:
  std::vector<std::function<void()>> nodes_;
  bool consumed_ = false;
};

template <typename T>
inline TapeT<T>*& active_tape() {
  thread_local TapeT<T>* tape = nullptr;
  return tape;
}

// RAII activation of a tape on the current thread.
template <typename T>
class TapeScopeT {
 public:
  explicit TapeScopeT(TapeT<T>& tape) : prev_(active_tape<T>()) { active_tape<T>() = &tape; }
  ~TapeScopeT() { active_tape<T>() = prev_; }
  TapeScopeT(const TapeScopeT&) = delete;
  TapeScopeT& operator=(const TapeScopeT&) = delete;

 private:
  TapeT<T>* prev_;
};

namespace detail {

template <typename T>
inline bool tracing(const TensorT<T>& out) {
  return out.requires_grad() && active_tape<T>() != nullptr;
}

template <typename T>
inline void record(std::function<void()> fn) {
  active_tape<T>()->record(std::move(fn));
}

// Decomposition of a shape around one axis: strides for generic axis ops.
struct AxisSplit {
  int64_t outer = 1, len = 1, inner = 1;
};

inline AxisSplit axis_split(const Shape& s, size_t axis) {
  if (axis >= s.size()) throw ShapeError("axis " + std::to_string(axis) + " out of range for " + shape_str(s));
  AxisSplit r;
  for (size_t i = 0; i < axis; ++i) r.outer *= s[i];
  r.len = s[axis];
  for (size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise operations
// ---------------------------------------------------------------------------

template <typename T>
inline void check_same_shape(const char* op, const TensorT<T>& a, const TensorT<T>& b) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
}

template <typename T>
TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b) {
  check_same_shape("add", a, b);
  TensorT<T> out(a.shape(), a.requires_grad() || b.requires_grad());
  const auto& av = a.value();
  const auto& bv = b.value();
  auto& ov = out.value();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + bv[i];
  if (detail::tracing(out)) {
    detail::record<T>([a, b, out]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad_view();
      if (a.requires_grad()) {
        auto& ga = a.grad();
        for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (b.requires_grad()) {
        auto& gb = b.grad();
        for (size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
      }
    });
  }
  return out;
}

template <typename T>
TensorT<T> sub(const TensorT<T>& a, const TensorT<T>& b) {
  check_same_shape("sub", a, b);
  TensorT<T> out(a.shape(), a.requires_grad() || b.requires_grad());
  const auto& av = a.value();
  const auto& bv = b.value();
  auto& ov = out.value();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] - bv[i];
  if (detail::tracing(out)) {
    detail::record<T>([a, b, out]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad_view();
      if (a.requires_grad()) {
        auto& ga = a.grad();
        for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (b.requires_grad()) {
        auto& gb = b.grad();
        for (size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
      }
    });
  }
  return out;
}

template <typename T>
TensorT<T> hadamard(const TensorT<T>& a, const TensorT<T>& b) {
  check_same_shape("hadamard", a, b);
  TensorT<T> out(a.shape(), a.requires_grad() || b.requires_grad());
  const auto& av = a.value();
  const auto& bv = b.value();
  auto& ov = out.value();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * bv[i];
  if (detail::tracing(out)) {
    detail::record<T>([a, b, out]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad_view();
      if (a.requires_grad()) {
        auto& ga = a.grad();
        const auto& bv2 = b.value();
        for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv2[i];
      }
      if (b.requires_grad()) {
        auto& gb = b.grad();
        const auto& av2 = a.value();
        for (size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av2[i];
      }
    });
  }
  return out;
}

template <typename T>
TensorT<T> relu(const TensorT<T>& x) {
  TensorT<T> out(x.shape(), x.requires_grad());
  const auto& xv = x.value();
  auto& ov = out.value();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = xv[i] > T(0) ? xv[i] : T(0);
  if (detail::tracing(out)) {
    detail::record<T>([x, out]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad_view();
      const auto& xv2 = x.value();
      auto& gx = x.grad();
      for (size_t i = 0; i < g.size(); ++i)
        if (xv2[i] > T(0)) gx[i] += g[i];
    });
  }
  return out;
}

template <typename T>
TensorT<T> sigmoid(const TensorT<T>& x) {
  TensorT<T> out(x.shape(), x.requires_grad());
  const auto& xv = x.value();
  auto& ov = out.value();
  for (size_t i = 0; i < ov.size(); ++i) {
    T v = xv[i];
    ov[i] = v >= T(0) ? T(1) / (T(1) + std::exp(-v)) : std::exp(v) / (T(1) + std::exp(v));
  }
  if (detail::tracing(out)) {
    detail::record<T>([x, out]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad_view();
      const auto& ov2 = out.value();
      auto& gx = x.grad();
      for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * ov2[i] * (T(1) - ov2[i]);
    });
  }
  return out;
}

template <typename T>
TensorT<T> exp(const TensorT<T>& x) {
  TensorT<T> out(x.shape(), x.requires_grad());
  const auto& xv = x.value();
  auto& ov = out.value();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = std::exp(xv[i]);
  if (detail::tracing(out)) {
    detail::record<T>([x, out]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad_view();
      const auto& ov2 = out.value();
      auto& gx = x.grad();
      for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * ov2[i];
    });
  }
  return out;
}

template <typename T>
TensorT<T> log(const TensorT<T>& x) {
  TensorT<T> out(x.shape(), x.requires_grad());
  const auto& xv = x.value();
  auto& ov = out.value();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = std::log(xv[i]);
  if (detail::tracing(out)) {
    detail::record<T>([x, out]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad_view();
      const auto& xv2 = x.value();
      auto& gx = x.grad();
      for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i] / xv2[i];
    });
  }
  return out;
}

template <typename T>
TensorT<T> scale(const TensorT<T>& x, T c) {
  TensorT<T> out(x.shape(), x.requires_grad());
  const auto& xv = x.value();
  auto& ov = out.value();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = xv[i] * c;
  if (detail::tracing(out)) {
    detail::record<T>([x, out, c]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad_view();
      auto& gx = x.grad();
      for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * c;
    });
  }
  return out;
}

template <typename T>
TensorT<T> add_scalar(const TensorT<T>& x, T c) {
  TensorT<T> out(x.shape(), x.requires_grad());
  const auto& xv = x.value();
  auto& ov = out.value();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = xv[i] + c;
  if (detail::tracing(out)) {
    detail::record<T>([x, out]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad_view();
      auto& gx = x.grad();
      for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
  }
  return out;
}

// max(x, c) elementwise; gradient passes only where x > c.
template <typename T>
TensorT<T> clamp_min(const TensorT<T>& x, T c) {
  TensorT<T> out(x.shape(), x.requires_grad());
  const auto& xv = x.value();
  auto& ov = out.value();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = xv[i] > c ? xv[i] : c;
  if (detail::tracing(out)) {
    detail::record<T>([x, out, c]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad_view();
      const auto& xv2 = x.value();
      auto& gx = x.grad();
      for (size_t i = 0; i < g.size(); ++i)
        if (xv2[i] > c) gx[i] += g[i];
    });
  }
  return out;
}

// Inverted dropout. In eval mode (train == false) this is exactly identity:
// the input handle is returned untouched.
template <typename T>
TensorT<T> dropout(const TensorT<T>& x, double p, bool train, Rng* rng) {
  if (!train || p <= 0.0) return x;
  if (p >= 1.0) throw ConfigError("dropout: p must be in [0,1), got " + std::to_string(p));
  if (rng == nullptr) throw ContractError("dropout: train mode requires an rng");
  auto mask = std::make_shared<std::vector<T>>(x.value().size());
  T keep_scale = T(1.0 / (1.0 - p));
  for (auto& m : *mask) m = rng->uniform() >= p ? keep_scale : T(0);
  TensorT<T> out(x.shape(), x.requires_grad());
  const auto& xv = x.value();
  auto& ov = out.value();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = xv[i] * (*mask)[i];
  if (detail::tracing(out)) {
    detail::record<T>([x, out, mask]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad_view();
      auto& gx = x.grad();
      for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (*mask)[i];
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Shape operations
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> reshape(const TensorT<T>& x, Shape new_shape) {
  if (numel(new_shape) != x.size())
    throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " +
                     shape_str(new_shape));
  TensorT<T> out(std::move(new_shape), x.value(), x.requires_grad());
  if (detail::tracing(out)) {
    detail::record<T>([x, out]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad_view();
      auto& gx = x.grad();
      for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
  }
  return out;
}

template <typename T>
TensorT<T> concat(const std::vector<TensorT<T>>& parts, size_t axis) {
  if (parts.empty()) throw ContractError("concat: empty input list");
  const Shape& s0 = parts[0].shape();
  Shape out_shape = s0;
  bool rg = false;
  int64_t total = 0;
  for (const auto& p : parts) {
    if (p.rank() != s0.size()) throw ShapeError("concat: rank mismatch");
    for (size_t i = 0; i < s0.size(); ++i)
      if (i != axis && p.shape()[i] != s0[i])
        throw ShapeError("concat: shape mismatch " + shape_str(p.shape()) + " vs " +
                         shape_str(s0) + " on non-concat axis");
    total += p.shape()[axis];
    rg = rg || p.requires_grad();
  }
  out_shape[axis] = total;
  TensorT<T> out(out_shape, rg);
  auto split = detail::axis_split(out_shape, axis);
  auto& ov = out.value();
  int64_t off = 0;
  for (const auto& p : parts) {
    int64_t len = p.shape()[axis];
    const auto& pv = p.value();
    for (int64_t o = 0; o < split.outer; ++o) {
      const T* src = pv.data() + o * len * split.inner;
      T* dst = ov.data() + (o * total + off) * split.inner;
      std::copy(src, src + len * split.inner, dst);
    }
    off += len;
  }
  if (detail::tracing(out)) {
    detail::record<T>([parts, out, split, total]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad_view();
      int64_t offset = 0;
      for (auto& p : parts) {
        int64_t len = p.size() / (split.outer * split.inner);
        if (p.requires_grad()) {
          auto& gp = p.grad();
          for (int64_t o = 0; o < split.outer; ++o) {
            const T* src = g.data() + (o * total + offset) * split.inner;
            T* dst = gp.data() + o * len * split.inner;
            for (int64_t i = 0; i < len * split.inner; ++i) dst[i] += src[i];
          }
        }
        offset += len;
      }
    });
  }
  return out;
}

// Stacks M matrices [R x C] into [R x M x C] (rows become channel stacks).
template <typename T>
TensorT<T> stack_rows(const std::vector<TensorT<T>>& mats) {
  if (mats.empty()) throw ContractError("stack_rows: empty input list");
  const Shape& s0 = mats[0].shape();
  if (s0.size() != 2) throw ShapeError("stack_rows: expects rank-2 inputs, got " + shape_str(s0));
  bool rg = false;
  for (const auto& m : mats) {
    check_same_shape("stack_rows", mats[0], m);
    rg = rg || m.requires_grad();
  }
  int64_t R = s0[0], C = s0[1], M = int64_t(mats.size());
  TensorT<T> out({R, M, C}, rg);
  auto& ov = out.value();
  for (int64_t m = 0; m < M; ++m) {
    const auto& mv = mats[size_t(m)].value();
    for (int64_t r = 0; r < R; ++r)
      std::copy(mv.data() + r * C, mv.data() + (r + 1) * C, ov.data() + (r * M + m) * C);
  }
  if (detail::tracing(out)) {
    detail::record<T>([mats, out, R, C, M]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad_view();
      for (int64_t m = 0; m < M; ++m) {
        if (!mats[size_t(m)].requires_grad()) continue;
        auto& gm = mats[size_t(m)].grad();
        for (int64_t r = 0; r < R; ++r) {
          const T* src = g.data() + (r * M + m) * C;
          T* dst = gm.data() + r * C;
          for (int64_t c = 0; c < C; ++c) dst[c] += src[c];
        }
      }
    });
  }
  return out;
}

// Gathers rows of x (along the first axis) at the given indices.
template <typename T>
TensorT<T> take_rows(const TensorT<T>& x, const std::vector<int64_t>& rows) {
  if (x.rank() < 1) throw ShapeError("take_rows: scalar input");
  int64_t R = x.shape()[0];
  int64_t inner = x.size() / std::max<int64_t>(R, 1);
  for (int64_t r : rows)
    if (r < 0 || r >= R) throw ContractError("take_rows: index out of range");
  Shape out_shape = x.shape();
  out_shape[0] = int64_t(rows.size());
  TensorT<T> out(out_shape, x.requires_grad());
  auto& ov = out.value();
  const auto& xv = x.value();
  for (size_t i = 0; i < rows.size(); ++i)
    std::copy(xv.data() + rows[i] * inner, xv.data() + (rows[i] + 1) * inner,
              ov.data() + int64_t(i) * inner);
  if (detail::tracing(out)) {
    auto idx = std::make_shared<std::vector<int64_t>>(rows);
    detail::record<T>([x, out, idx, inner]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad_view();
      auto& gx = x.grad();
      for (size_t i = 0; i < idx->size(); ++i) {
        const T* src = g.data() + int64_t(i) * inner;
        T* dst = gx.data() + (*idx)[i] * inner;
        for (int64_t j = 0; j < inner; ++j) dst[j] += src[j];
      }
    });
  }
  return out;
}

// out[r] = x[r, cols[r]] for a rank-2 x.
template <typename T>
TensorT<T> gather_cols(const TensorT<T>& x, const std::vector<int64_t>& cols) {
  if (x.rank() != 2) throw ShapeError("gather_cols: expects rank-2 input, got " + shape_str(x.shape()));
  int64_t R = x.shape()[0], C = x.shape()[1];
  if (int64_t(cols.size()) != R) throw ShapeError("gather_cols: one column index per row required");
  for (int64_t c : cols)
    if (c < 0 || c >= C) throw ContractError("gather_cols: index out of range");
  TensorT<T> out({R}, x.requires_grad());
  auto& ov = out.value();
  const auto& xv = x.value();
  for (int64_t r = 0; r < R; ++r) ov[size_t(r)] = xv[size_t(r * C + cols[size_t(r)])];
  if (detail::tracing(out)) {
    auto idx = std::make_shared<std::vector<int64_t>>(cols);
    detail::record<T>([x, out, idx, C]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad_view();
      auto& gx = x.grad();
      for (size_t r = 0; r < idx->size(); ++r) gx[r * size_t(C) + size_t((*idx)[r])] += g[r];
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> sum_axis(const TensorT<T>& x, size_t axis) {
  auto split = detail::axis_split(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape.erase(out_shape.begin() + std::ptrdiff_t(axis));
  if (out_shape.empty()) out_shape = {1};
  TensorT<T> out(out_shape, x.requires_grad());
  const auto& xv = x.value();
  auto& ov = out.value();
  for (int64_t o = 0; o < split.outer; ++o)
    for (int64_t j = 0; j < split.len; ++j) {
      const T* src = xv.data() + (o * split.len + j) * split.inner;
      T* dst = ov.data() + o * split.inner;
      for (int64_t i = 0; i < split.inner; ++i) dst[i] += src[i];
    }
  if (detail::tracing(out)) {
    detail::record<T>([x, out, split]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad_view();
      auto& gx = x.grad();
      for (int64_t o = 0; o < split.outer; ++o)
        for (int64_t j = 0; j < split.len; ++j) {
          const T* src = g.data() + o * split.inner;
          T* dst = gx.data() + (o * split.len + j) * split.inner;
          for (int64_t i = 0; i < split.inner; ++i) dst[i] += src[i];
        }
    });
  }
  return out;
}

template <typename T>
TensorT<T> mean_axis(const TensorT<T>& x, size_t axis) {
  int64_t len = x.shape()[axis];
  return scale(sum_axis(x, axis), T(1.0 / double(len)));
}

template <typename T>
TensorT<T> sum_all(const TensorT<T>& x) {
  TensorT<T> out({1}, x.requires_grad());
  const auto& xv = x.value();
  T s = T(0);
  for (T v : xv) s += v;
  out.value()[0] = s;
  if (detail::tracing(out)) {
    detail::record<T>([x, out]() mutable {
      if (!out.has_grad()) return;
      T g = out.grad_view()[0];
      auto& gx = x.grad();
      for (size_t i = 0; i < gx.size(); ++i) gx[i] += g;
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Broadcast helpers (targeted, no general broadcasting)
// ---------------------------------------------------------------------------

// y[r,c] = x[r,c] + v[c]
template <typename T>
TensorT<T> add_rowvec(const TensorT<T>& x, const TensorT<T>& v) {
  if (x.rank() != 2 || v.rank() != 1 || v.shape()[0] != x.shape()[1])
    throw ShapeError("add_rowvec: incompatible shapes " + shape_str(x.shape()) + " and " +
                     shape_str(v.shape()));
  int64_t R = x.shape()[0], C = x.shape()[1];
  TensorT<T> out(x.shape(), x.requires_grad() || v.requires_grad());
  const auto& xv = x.value();
  const auto& vv = v.value();
  auto& ov = out.value();
  for (int64_t r = 0; r < R; ++r)
    for (int64_t c = 0; c < C; ++c) ov[size_t(r * C + c)] = xv[size_t(r * C + c)] + vv[size_t(c)];
  if (detail::tracing(out)) {
    detail::record<T>([x, v, out, R, C]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad_view();
      if (x.requires_grad()) {
        auto& gx = x.grad();
        for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
      }
      if (v.requires_grad()) {
        auto& gv = v.grad();
        for (int64_t r = 0; r < R; ++r)
          for (int64_t c = 0; c < C; ++c) gv[size_t(c)] += g[size_t(r * C + c)];
      }
    });
  }
  return out;
}

// y[b,c,l] = x[b,c,l] * v[c]  (per-channel scale by a plain vector)
template <typename T>
TensorT<T> scale_channels_vec(const TensorT<T>& x, const TensorT<T>& v) {
  if (x.rank() != 3 || v.rank() != 1 || v.shape()[0] != x.shape()[1])
    throw ShapeError("scale_channels_vec: incompatible shapes " + shape_str(x.shape()) + " and " +
                     shape_str(v.shape()));
  int64_t B = x.shape()[0], C = x.shape()[1], L = x.shape()[2];
  TensorT<T> out(x.shape(), x.requires_grad() || v.requires_grad());
  const auto& xv = x.value();
  const auto& vv = v.value();
  auto& ov = out.value();
  for (int64_t b = 0; b < B; ++b)
    for (int64_t c = 0; c < C; ++c) {
      T s = vv[size_t(c)];
      const T* src = xv.data() + (b * C + c) * L;
      T* dst = ov.data() + (b * C + c) * L;
      for (int64_t l = 0; l < L; ++l) dst[l] = src[l] * s;
    }
  if (detail::tracing(out)) {
    detail::record<T>([x, v, out, B, C, L]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad_view();
      if (x.requires_grad()) {
        auto& gx = x.grad();
        const auto& vv2 = v.value();
        for (int64_t b = 0; b < B; ++b)
          for (int64_t c = 0; c < C; ++c) {
            T s = vv2[size_t(c)];
            const T* src = g.data() + (b * C + c) * L;
            T* dst = gx.data() + (b * C + c) * L;
            for (int64_t l = 0; l < L; ++l) dst[l] += src[l] * s;
          }
      }
      if (v.requires_grad()) {
        auto& gv = v.grad();
        const auto& xv2 = x.value();
        for (int64_t b = 0; b < B; ++b)
          for (int64_t c = 0; c < C; ++c) {
            const T* gs = g.data() + (b * C + c) * L;
            const T* xs = xv2.data() + (b * C + c) * L;
            T acc = T(0);
            for (int64_t l = 0; l < L; ++l) acc += gs[l] * xs[l];
            gv[size_t(c)] += acc;
          }
      }
    });
  }
  return out;
}

// y[b,c,l] = x[b,c,l] * s[b,c]  (per-sample per-channel gate)
template <typename T>
TensorT<T> scale_channels(const TensorT<T>& x, const TensorT<T>& s) {
  if (x.rank() != 3 || s.rank() != 2 || s.shape()[0] != x.shape()[0] ||
      s.shape()[1] != x.shape()[1])
    throw ShapeError("scale_channels: incompatible shapes " + shape_str(x.shape()) + " and " +
                     shape_str(s.shape()));
  int64_t B = x.shape()[0], C = x.shape()[1], L = x.shape()[2];
  TensorT<T> out(x.shape(), x.requires_grad() || s.requires_grad());
  const auto& xv = x.value();
  const auto& sv = s.value();
  auto& ov = out.value();
  for (int64_t b = 0; b < B; ++b)
    for (int64_t c = 0; c < C; ++c) {
      T gate = sv[size_t(b * C + c)];
      const T* src = xv.data() + (b * C + c) * L;
      T* dst = ov.data() + (b * C + c) * L;
      for (int64_t l = 0; l < L; ++l) dst[l] = src[l] * gate;
    }
  if (detail::tracing(out)) {
    detail::record<T>([x, s, out, B, C, L]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad_view();
      if (x.requires_grad()) {
        auto& gx = x.grad();
        const auto& sv2 = s.value();
        for (int64_t b = 0; b < B; ++b)
          for (int64_t c = 0; c < C; ++c) {
            T gate = sv2[size_t(b * C + c)];
            const T* src = g.data() + (b * C + c) * L;
            T* dst = gx.data() + (b * C + c) * L;
            for (int64_t l = 0; l < L; ++l) dst[l] += src[l] * gate;
          }
      }
      if (s.requires_grad()) {
        auto& gs = s.grad();
        const auto& xv2 = x.value();
        for (int64_t b = 0; b < B; ++b)
          for (int64_t c = 0; c < C; ++c) {
            const T* gg = g.data() + (b * C + c) * L;
            const T* xs = xv2.data() + (b * C + c) * L;
            T acc = T(0);
            for (int64_t l = 0; l < L; ++l) acc += gg[l] * xs[l];
            gs[size_t(b * C + c)] += acc;
          }
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Matrix products
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> matmul(const TensorT<T>& a, const TensorT<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0])
    throw ShapeError("matmul: inner dimensions differ: " + shape_str(a.shape()) + " x " +
                     shape_str(b.shape()));
  int64_t R = a.shape()[0], K = a.shape()[1], C = b.shape()[1];
  TensorT<T> out({R, C}, a.requires_grad() || b.requires_grad());
  const auto& av = a.value();
  const auto& bv = b.value();
  auto& ov = out.value();
  for (int64_t i = 0; i < R; ++i)
    for (int64_t k = 0; k < K; ++k) {
      T aik = av[size_t(i * K + k)];
      const T* brow = bv.data() + k * C;
      T* orow = ov.data() + i * C;
      for (int64_t j = 0; j < C; ++j) orow[j] += aik * brow[j];
    }
  if (detail::tracing(out)) {
    detail::record<T>([a, b, out, R, K, C]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad_view();
      if (a.requires_grad()) {
        auto& ga = a.grad();
        const auto& bv2 = b.value();
        for (int64_t i = 0; i < R; ++i)
          for (int64_t k = 0; k < K; ++k) {
            const T* grow = g.data() + i * C;
            const T* brow = bv2.data() + k * C;
            T acc = T(0);
            for (int64_t j = 0; j < C; ++j) acc += grow[j] * brow[j];
            ga[size_t(i * K + k)] += acc;
          }
      }
      if (b.requires_grad()) {
        auto& gb = b.grad();
        const auto& av2 = a.value();
        for (int64_t i = 0; i < R; ++i)
          for (int64_t k = 0; k < K; ++k) {
            T aik = av2[size_t(i * K + k)];
            const T* grow = g.data() + i * C;
            T* gbrow = gb.data() + k * C;
            for (int64_t j = 0; j < C; ++j) gbrow[j] += aik * grow[j];
          }
      }
    });
  }
  return out;
}

// out = a * b^T for a:[R x K], b:[C x K].
template <typename T>
TensorT<T> matmul_nt(const TensorT<T>& a, const TensorT<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[1])
    throw ShapeError("matmul_nt: inner dimensions differ: " + shape_str(a.shape()) + " x " +
                     shape_str(b.shape()) + "^T");
  int64_t R = a.shape()[0], K = a.shape()[1], C = b.shape()[0];
  TensorT<T> out({R, C}, a.requires_grad() || b.requires_grad());
  const auto& av = a.value();
  const auto& bv = b.value();
  auto& ov = out.value();
  for (int64_t i = 0; i < R; ++i)
    for (int64_t c = 0; c < C; ++c) {
      const T* arow = av.data() + i * K;
      const T* brow = bv.data() + c * K;
      T acc = T(0);
      for (int64_t k = 0; k < K; ++k) acc += arow[k] * brow[k];
      ov[size_t(i * C + c)] = acc;
    }
  if (detail::tracing(out)) {
    detail::record<T>([a, b, out, R, K, C]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad_view();
      if (a.requires_grad()) {
        auto& ga = a.grad();
        const auto& bv2 = b.value();
        for (int64_t i = 0; i < R; ++i)
          for (int64_t c = 0; c < C; ++c) {
            T gic = g[size_t(i * C + c)];
            const T* brow = bv2.data() + c * K;
            T* garow = ga.data() + i * K;
            for (int64_t k = 0; k < K; ++k) garow[k] += gic * brow[k];
          }
      }
      if (b.requires_grad()) {
        auto& gb = b.grad();
        const auto& av2 = a.value();
        for (int64_t i = 0; i < R; ++i)
          for (int64_t c = 0; c < C; ++c) {
            T gic = g[size_t(i * C + c)];
            const T* arow = av2.data() + i * K;
            T* gbrow = gb.data() + c * K;
            for (int64_t k = 0; k < K; ++k) gbrow[k] += gic * arow[k];
          }
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// 1-D convolutions (cross-correlation convention) and pooling.
// Primary layout is batched [B x C x L]; rank-2 [C x L] overloads wrap it.
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> conv1d(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& bias,
                  int64_t stride, int64_t padding) {
  if (x.rank() != 3 || w.rank() != 3)
    throw ShapeError("conv1d: expects x [B,Cin,L] and w [Cout,Cin,k], got " +
                     shape_str(x.shape()) + " and " + shape_str(w.shape()));
  int64_t B = x.shape()[0], Cin = x.shape()[1], L = x.shape()[2];
  int64_t Cout = w.shape()[0], k = w.shape()[2];
  if (w.shape()[1] != Cin)
    throw ShapeError("conv1d: channel mismatch " + shape_str(x.shape()) + " vs " +
                     shape_str(w.shape()));
  if (bias.rank() != 1 || bias.shape()[0] != Cout)
    throw ShapeError("conv1d: bias shape " + shape_str(bias.shape()) + " does not match Cout");
  if (stride < 1) throw ConfigError("conv1d: stride must be >= 1");
  if (L + 2 * padding < k)
    throw ShapeError("conv1d: kernel " + std::to_string(k) + " larger than padded input length " +
                     std::to_string(L + 2 * padding));
  int64_t Lout = (L + 2 * padding - k) / stride + 1;
  TensorT<T> out({B, Cout, Lout}, x.requires_grad() || w.requires_grad() || bias.requires_grad());
  const auto& xv = x.value();
  const auto& wv = w.value();
  const auto& bv = bias.value();
  auto& ov = out.value();
  for (int64_t b = 0; b < B; ++b)
    for (int64_t co = 0; co < Cout; ++co) {
      T* orow = ov.data() + (b * Cout + co) * Lout;
      for (int64_t o = 0; o < Lout; ++o) orow[o] = bv[size_t(co)];
      for (int64_t ci = 0; ci < Cin; ++ci) {
        const T* xrow = xv.data() + (b * Cin + ci) * L;
        const T* wrow = wv.data() + (co * Cin + ci) * k;
        for (int64_t t = 0; t < k; ++t) {
          T wt = wrow[t];
          for (int64_t o = 0; o < Lout; ++o) {
            int64_t i = o * stride - padding + t;
            if (i >= 0 && i < L) orow[o] += wt * xrow[i];
          }
        }
      }
    }
  if (detail::tracing(out)) {
    detail::record<T>([x, w, bias, out, B, Cin, Cout, L, Lout, k, stride, padding]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad_view();
      if (bias.requires_grad()) {
        auto& gb = bias.grad();
        for (int64_t b = 0; b < B; ++b)
          for (int64_t co = 0; co < Cout; ++co) {
            const T* grow = g.data() + (b * Cout + co) * Lout;
            T acc = T(0);
            for (int64_t o = 0; o < Lout; ++o) acc += grow[o];
            gb[size_t(co)] += acc;
          }
      }
      if (x.requires_grad()) {
        auto& gx = x.grad();
        const auto& wv2 = w.value();
        for (int64_t b = 0; b < B; ++b)
          for (int64_t co = 0; co < Cout; ++co) {
            const T* grow = g.data() + (b * Cout + co) * Lout;
            for (int64_t ci = 0; ci < Cin; ++ci) {
              T* gxrow = gx.data() + (b * Cin + ci) * L;
              const T* wrow = wv2.data() + (co * Cin + ci) * k;
              for (int64_t t = 0; t < k; ++t) {
                T wt = wrow[t];
                for (int64_t o = 0; o < Lout; ++o) {
                  int64_t i = o * stride - padding + t;
                  if (i >= 0 && i < L) gxrow[i] += wt * grow[o];
                }
              }
            }
          }
      }
      if (w.requires_grad()) {
        auto& gw = w.grad();
        const auto& xv2 = x.value();
        for (int64_t b = 0; b < B; ++b)
          for (int64_t co = 0; co < Cout; ++co) {
            const T* grow = g.data() + (b * Cout + co) * Lout;
            for (int64_t ci = 0; ci < Cin; ++ci) {
              const T* xrow = xv2.data() + (b * Cin + ci) * L;
              T* gwrow = gw.data() + (co * Cin + ci) * k;
              for (int64_t t = 0; t < k; ++t) {
                T acc = T(0);
                for (int64_t o = 0; o < Lout; ++o) {
                  int64_t i = o * stride - padding + t;
                  if (i >= 0 && i < L) acc += grow[o] * xrow[i];
                }
                gwrow[t] += acc;
              }
            }
          }
      }
    });
  }
  return out;
}

// Rank-2 convenience: [C x L] treated as a batch of one.
template <typename T>
TensorT<T> conv1d_single(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& bias,
                         int64_t stride, int64_t padding) {
  if (x.rank() != 2) throw ShapeError("conv1d_single: expects [C,L], got " + shape_str(x.shape()));
  auto y = conv1d(reshape(x, {1, x.shape()[0], x.shape()[1]}), w, bias, stride, padding);
  return reshape(y, {y.shape()[1], y.shape()[2]});
}

// Transposed convolution. x:[B,Cin,L], w:[Cin,Cout,k] -> [B,Cout,(L-1)*stride+k].
// With k = stride = 2 the output length is exactly 2L.
template <typename T>
TensorT<T> conv1d_transposed(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& bias,
                             int64_t stride) {
  if (x.rank() != 3 || w.rank() != 3)
    throw ShapeError("conv1d_transposed: expects x [B,Cin,L] and w [Cin,Cout,k], got " +
                     shape_str(x.shape()) + " and " + shape_str(w.shape()));
  int64_t B = x.shape()[0], Cin = x.shape()[1], L = x.shape()[2];
  int64_t Cout = w.shape()[1], k = w.shape()[2];
  if (w.shape()[0] != Cin)
    throw ShapeError("conv1d_transposed: channel mismatch " + shape_str(x.shape()) + " vs " +
                     shape_str(w.shape()));
  if (bias.rank() != 1 || bias.shape()[0] != Cout)
    throw ShapeError("conv1d_transposed: bias shape " + shape_str(bias.shape()) +
                     " does not match Cout");
  if (stride < 1) throw ConfigError("conv1d_transposed: stride must be >= 1");
  int64_t Lout = (L - 1) * stride + k;
  TensorT<T> out({B, Cout, Lout}, x.requires_grad() || w.requires_grad() || bias.requires_grad());
  const auto& xv = x.value();
  const auto& wv = w.value();
  const auto& bv = bias.value();
  auto& ov = out.value();
  for (int64_t b = 0; b < B; ++b) {
    for (int64_t co = 0; co < Cout; ++co) {
      T* orow = ov.data() + (b * Cout + co) * Lout;
      for (int64_t o = 0; o < Lout; ++o) orow[o] = bv[size_t(co)];
    }
    for (int64_t ci = 0; ci < Cin; ++ci) {
      const T* xrow = xv.data() + (b * Cin + ci) * L;
      for (int64_t co = 0; co < Cout; ++co) {
        T* orow = ov.data() + (b * Cout + co) * Lout;
        const T* wrow = wv.data() + (ci * Cout + co) * k;
        for (int64_t t = 0; t < L; ++t) {
          T xt = xrow[t];
          for (int64_t r = 0; r < k; ++r) orow[t * stride + r] += xt * wrow[r];
        }
      }
    }
  }
  if (detail::tracing(out)) {
    detail::record<T>([x, w, bias, out, B, Cin, Cout, L, Lout, k, stride]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad_view();
      if (bias.requires_grad()) {
        auto& gb = bias.grad();
        for (int64_t b = 0; b < B; ++b)
          for (int64_t co = 0; co < Cout; ++co) {
            const T* grow = g.data() + (b * Cout + co) * Lout;
            T acc = T(0);
            for (int64_t o = 0; o < Lout; ++o) acc += grow[o];
            gb[size_t(co)] += acc;
          }
      }
      if (x.requires_grad()) {
        auto& gx = x.grad();
        const auto& wv2 = w.value();
        for (int64_t b = 0; b < B; ++b)
          for (int64_t ci = 0; ci < Cin; ++ci) {
            T* gxrow = gx.data() + (b * Cin + ci) * L;
            for (int64_t co = 0; co < Cout; ++co) {
              const T* grow = g.data() + (b * Cout + co) * Lout;
              const T* wrow = wv2.data() + (ci * Cout + co) * k;
              for (int64_t t = 0; t < L; ++t) {
                T acc = T(0);
                for (int64_t r = 0; r < k; ++r) acc += grow[t * stride + r] * wrow[r];
                gxrow[t] += acc;
              }
            }
          }
      }
      if (w.requires_grad()) {
        auto& gw = w.grad();
        const auto& xv2 = x.value();
        for (int64_t b = 0; b < B; ++b)
          for (int64_t ci = 0; ci < Cin; ++ci) {
            const T* xrow = xv2.data() + (b * Cin + ci) * L;
            for (int64_t co = 0; co < Cout; ++co) {
              const T* grow = g.data() + (b * Cout + co) * Lout;
              T* gwrow = gw.data() + (ci * Cout + co) * k;
              for (int64_t r = 0; r < k; ++r) {
                T acc = T(0);
                for (int64_t t = 0; t < L; ++t) acc += xrow[t] * grow[t * stride + r];
                gwrow[r] += acc;
              }
            }
          }
      }
    });
  }
  return out;
}

// Per-window maximum; gradient routes to the argmax, ties to the lowest index.
template <typename T>
TensorT<T> maxpool1d(const TensorT<T>& x, int64_t window) {
  if (x.rank() != 3) throw ShapeError("maxpool1d: expects [B,C,L], got " + shape_str(x.shape()));
  int64_t B = x.shape()[0], C = x.shape()[1], L = x.shape()[2];
  if (window < 1) throw ConfigError("maxpool1d: window must be >= 1");
  if (L % window != 0)
    throw ShapeError("maxpool1d: length " + std::to_string(L) + " not divisible by window " +
                     std::to_string(window) +
                     "; adjust d_psi or the network depth so every stage length is even");
  int64_t Lout = L / window;
  TensorT<T> out({B, C, Lout}, x.requires_grad());
  auto argmax = std::make_shared<std::vector<int64_t>>(size_t(B * C * Lout));
  const auto& xv = x.value();
  auto& ov = out.value();
  for (int64_t b = 0; b < B; ++b)
    for (int64_t c = 0; c < C; ++c) {
      const T* xrow = xv.data() + (b * C + c) * L;
      T* orow = ov.data() + (b * C + c) * Lout;
      int64_t* arow = argmax->data() + (b * C + c) * Lout;
      for (int64_t o = 0; o < Lout; ++o) {
        int64_t base = o * window;
        T best = xrow[base];
        int64_t besti = base;
        for (int64_t j = 1; j < window; ++j)
          if (xrow[base + j] > best) {
            best = xrow[base + j];
            besti = base + j;
          }
        orow[o] = best;
        arow[o] = besti;
      }
    }
  if (detail::tracing(out)) {
    detail::record<T>([x, out, argmax, B, C, L, Lout]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad_view();
      auto& gx = x.grad();
      for (int64_t b = 0; b < B; ++b)
        for (int64_t c = 0; c < C; ++c) {
          const T* grow = g.data() + (b * C + c) * Lout;
          const int64_t* arow = argmax->data() + (b * C + c) * Lout;
          T* gxrow = gx.data() + (b * C + c) * L;
          for (int64_t o = 0; o < Lout; ++o) gxrow[arow[o]] += grow[o];
        }
    });
  }
  return out;
}

template <typename T>
TensorT<T> maxpool1d_single(const TensorT<T>& x, int64_t window) {
  if (x.rank() != 2) throw ShapeError("maxpool1d_single: expects [C,L], got " + shape_str(x.shape()));
  auto y = maxpool1d(reshape(x, {1, x.shape()[0], x.shape()[1]}), window);
  return reshape(y, {y.shape()[1], y.shape()[2]});
}

// ---------------------------------------------------------------------------
// Row-normalized cosine similarity
// ---------------------------------------------------------------------------

// y[r,:] = x[r,:] / max(||x[r,:]||, eps). A zero row maps to zero, never NaN.
template <typename T>
TensorT<T> row_normalize(const TensorT<T>& x, T eps) {
  if (x.rank() != 2) throw ShapeError("row_normalize: expects rank-2, got " + shape_str(x.shape()));
  int64_t R = x.shape()[0], C = x.shape()[1];
  TensorT<T> out(x.shape(), x.requires_grad());
  auto norms = std::make_shared<std::vector<T>>(static_cast<size_t>(R), 0);
  const auto& xv = x.value();
  auto& ov = out.value();
  for (int64_t r = 0; r < R; ++r) {
    const T* xrow = xv.data() + r * C;
    T s = T(0);
    for (int64_t c = 0; c < C; ++c) s += xrow[c] * xrow[c];
    T n = std::sqrt(s);
    T d = n > eps ? n : eps;
    (*norms)[size_t(r)] = d;
    T* orow = ov.data() + r * C;
    for (int64_t c = 0; c < C; ++c) orow[c] = xrow[c] / d;
  }
  if (detail::tracing(out)) {
    detail::record<T>([x, out, norms, R, C, eps]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad_view();
      const auto& ov2 = out.value();
      auto& gx = x.grad();
      for (int64_t r = 0; r < R; ++r) {
        T d = (*norms)[size_t(r)];
        const T* grow = g.data() + r * C;
        const T* yrow = ov2.data() + r * C;
        T* gxrow = gx.data() + r * C;
        if (d > eps) {
          T dot = T(0);
          for (int64_t c = 0; c < C; ++c) dot += grow[c] * yrow[c];
          for (int64_t c = 0; c < C; ++c) gxrow[c] += (grow[c] - yrow[c] * dot) / d;
        } else {
          // norm clamped: denominator is effectively the constant eps
          for (int64_t c = 0; c < C; ++c) gxrow[c] += grow[c] / d;
        }
      }
    });
  }
  return out;
}

// Per-row cosine similarity of two equal-shape matrices -> [R].
// cos(a,b) = <a,b> / (max(||a||,eps) * max(||b||,eps)); zero rows yield 0.
template <typename T>
TensorT<T> cosine_rows(const TensorT<T>& a, const TensorT<T>& b, T eps = T(1e-12)) {
  TensorT<T> a2 = a.rank() == 1 ? reshape(a, {1, a.shape()[0]}) : a;
  TensorT<T> b2 = b.rank() == 1 ? reshape(b, {1, b.shape()[0]}) : b;
  check_same_shape("cosine_rows", a2, b2);
  return sum_axis(hadamard(row_normalize(a2, eps), row_normalize(b2, eps)), 1);
}

// Full cross matrix of row cosines: out[i,j] = cos(a[i,:], b[j,:]).
template <typename T>
TensorT<T> cosine_matrix(const TensorT<T>& a, const TensorT<T>& b, T eps = T(1e-12)) {
  if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[1])
    throw ShapeError("cosine_matrix: incompatible shapes " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()));
  return matmul_nt(row_normalize(a, eps), row_normalize(b, eps));
}

// ---------------------------------------------------------------------------
// Adam optimizer (beta1=0.9, beta2=0.999, eps=1e-8 unless overridden)
// ---------------------------------------------------------------------------

template <typename T>
class AdamT {
 public:
  AdamT(std::vector<TensorT<T>> params, T lr, T beta1 = T(0.9), T beta2 = T(0.999),
        T eps = T(1e-8))
      : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    slots_.resize(params_.size());
    for (size_t i = 0; i < params_.size(); ++i) {
      slots_[i].m.assign(size_t(params_[i].size()), T(0));
      slots_[i].v.assign(size_t(params_[i].size()), T(0));
    }
  }

  void step() {
    ++t_;
    T c1 = T(1) - std::pow(beta1_, T(t_));
    T c2 = T(1) - std::pow(beta2_, T(t_));
    for (size_t p = 0; p < params_.size(); ++p) {
      auto& par = params_[p];
      if (!par.has_grad()) continue;  // untouched leaf: zero grad, no update
      const auto& g = par.grad_view();
      auto& m = slots_[p].m;
      auto& v = slots_[p].v;
      auto& w = par.value();
      for (size_t i = 0; i < w.size(); ++i) {
        m[i] = beta1_ * m[i] + (T(1) - beta1_) * g[i];
        v[i] = beta2_ * v[i] + (T(1) - beta2_) * g[i] * g[i];
        T mhat = m[i] / c1;
        T vhat = v[i] / c2;
        w[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
      }
    }
  }

  void zero_grad() {
    for (auto& p : params_) p.clear_grad();
  }

  int64_t steps_taken() const { return t_; }

 private:
  struct Slot {
    std::vector<T> m, v;
  };
  std::vector<TensorT<T>> params_;
  std::vector<Slot> slots_;
  T lr_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
};

}  // namespace thcrl
