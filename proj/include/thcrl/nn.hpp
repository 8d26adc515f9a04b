#pragma once

#include <string>
#include <utility>
#include <vector>

#include "thcrl/tensor.hpp"

namespace thcrl {

// Shared forward-pass context. Dropout draws from rng only in train mode;
// eval mode is deterministic.
struct ForwardCtx {
  bool train = false;
  Rng* rng = nullptr;
};

template <typename T>
using NamedParams = std::vector<std::pair<std::string, TensorT<T>>>;

// Uniform Kaiming-style fan-in init: U(-sqrt(6/fan_in), sqrt(6/fan_in)).
template <typename T>
void init_uniform_fan_in(TensorT<T>& w, int64_t fan_in, Rng& rng) {
  double bound = std::sqrt(6.0 / double(fan_in));
  for (auto& v : w.value()) v = T(rng.uniform(-bound, bound));
}

template <typename T>
struct LinearT {
  TensorT<T> w;  // [in, out]
  TensorT<T> b;  // [out]

  LinearT() = default;
  LinearT(int64_t in, int64_t out, Rng& rng) : w({in, out}, true), b({out}, true) {
    init_uniform_fan_in(w, in, rng);
  }

  TensorT<T> forward(const TensorT<T>& x) const { return add_rowvec(matmul(x, w), b); }

  int64_t in_dim() const { return w.shape()[0]; }
  int64_t out_dim() const { return w.shape()[1]; }

  void collect(const std::string& prefix, NamedParams<T>& out) const {
    out.emplace_back(prefix + ".w", w);
    out.emplace_back(prefix + ".b", b);
  }
};

template <typename T>
struct Conv1dT {
  TensorT<T> w;  // [out, in, k]
  TensorT<T> b;  // [out]
  int64_t stride = 1;
  int64_t padding = 0;

  Conv1dT() = default;
  Conv1dT(int64_t in, int64_t out, int64_t k, int64_t stride_, int64_t padding_, Rng& rng)
      : w({out, in, k}, true), b({out}, true), stride(stride_), padding(padding_) {
    init_uniform_fan_in(w, in * k, rng);
  }

  TensorT<T> forward(const TensorT<T>& x) const { return conv1d(x, w, b, stride, padding); }

  void collect(const std::string& prefix, NamedParams<T>& out) const {
    out.emplace_back(prefix + ".w", w);
    out.emplace_back(prefix + ".b", b);
  }
};

template <typename T>
struct ConvTr1dT {
  TensorT<T> w;  // [in, out, k]
  TensorT<T> b;  // [out]
  int64_t stride = 2;

  ConvTr1dT() = default;
  ConvTr1dT(int64_t in, int64_t out, int64_t k, int64_t stride_, Rng& rng)
      : w({in, out, k}, true), b({out}, true), stride(stride_) {
    init_uniform_fan_in(w, in * k, rng);
  }

  TensorT<T> forward(const TensorT<T>& x) const { return conv1d_transposed(x, w, b, stride); }

  void collect(const std::string& prefix, NamedParams<T>& out) const {
    out.emplace_back(prefix + ".w", w);
    out.emplace_back(prefix + ".b", b);
  }
};

// Plain MLP: ReLU + dropout after each hidden layer, linear output layer.
template <typename T>
struct MlpT {
  std::vector<LinearT<T>> layers;
  double dropout_p = 0.0;

  MlpT() = default;
  MlpT(int64_t in, const std::vector<int64_t>& hidden, int64_t out, double dropout, Rng& rng)
      : dropout_p(dropout) {
    int64_t prev = in;
    for (int64_t h : hidden) {
      layers.emplace_back(prev, h, rng);
      prev = h;
    }
    layers.emplace_back(prev, out, rng);
  }

  TensorT<T> forward(TensorT<T> x, const ForwardCtx& ctx) const {
    for (size_t i = 0; i + 1 < layers.size(); ++i) {
      x = relu(layers[i].forward(x));
      x = dropout(x, dropout_p, ctx.train, ctx.rng);
    }
    return layers.back().forward(x);
  }

  int64_t in_dim() const { return layers.front().in_dim(); }
  int64_t out_dim() const { return layers.back().out_dim(); }

  void collect(const std::string& prefix, NamedParams<T>& out) const {
    for (size_t i = 0; i < layers.size(); ++i)
      layers[i].collect(prefix + ".l" + std::to_string(i), out);
  }
};

}  // namespace thcrl
