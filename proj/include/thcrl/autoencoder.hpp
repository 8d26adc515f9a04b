#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "thcrl/nn.hpp"

namespace thcrl {

// Per-view encoder/decoder pair. Views never share parameters; each pair is
// built from its own rng stream.
template <typename T>
struct ViewAutoencoderT {
  int64_t view_index = 0;
  int64_t input_dim = 0;
  int64_t d_psi = 0;
  MlpT<T> encoder;  // D_m -> hidden... -> d_psi
  MlpT<T> decoder;  // d_psi -> reversed hidden... -> D_m

  ViewAutoencoderT() = default;
  ViewAutoencoderT(int64_t view_index_, int64_t input_dim_, const std::vector<int64_t>& hidden,
                   int64_t d_psi_, double dropout, Rng& rng)
      : view_index(view_index_), input_dim(input_dim_), d_psi(d_psi_) {
    std::vector<int64_t> mirrored(hidden.rbegin(), hidden.rend());
    encoder = MlpT<T>(input_dim, hidden, d_psi, dropout, rng);
    decoder = MlpT<T>(d_psi, mirrored, input_dim, dropout, rng);
  }

  TensorT<T> encode(const TensorT<T>& x, const ForwardCtx& ctx) const {
    if (x.rank() != 2 || x.shape()[1] != input_dim)
      throw ShapeError("encode view " + std::to_string(view_index) + ": expected [b," +
                       std::to_string(input_dim) + "], got " + shape_str(x.shape()));
    return encoder.forward(x, ctx);
  }

  TensorT<T> decode(const TensorT<T>& z, const ForwardCtx& ctx) const {
    if (z.rank() != 2 || z.shape()[1] != d_psi)
      throw ShapeError("decode view " + std::to_string(view_index) + ": expected [b," +
                       std::to_string(d_psi) + "], got " + shape_str(z.shape()));
    return decoder.forward(z, ctx);
  }

  void collect(const std::string& prefix, NamedParams<T>& out) const {
    encoder.collect(prefix + ".enc", out);
    decoder.collect(prefix + ".dec", out);
  }
};

// Sum of squared errors over views and batch samples (a batch sum, not a
// mean).
template <typename T>
TensorT<T> reconstruction_loss_from(const std::vector<TensorT<T>>& xs,
                                    const std::vector<TensorT<T>>& xhats) {
  if (xs.empty() || xs.size() != xhats.size())
    throw ContractError("reconstruction_loss: view lists differ in length");
  TensorT<T> total;
  for (size_t m = 0; m < xs.size(); ++m) {
    auto diff = sub(xs[m], xhats[m]);
    auto sq = sum_all(hadamard(diff, diff));
    total = m == 0 ? sq : add(total, sq);
  }
  return total;
}

template <typename T>
TensorT<T> reconstruction_loss(const std::vector<ViewAutoencoderT<T>>& aes,
                               const std::vector<TensorT<T>>& xs, const ForwardCtx& ctx) {
  if (aes.size() != xs.size())
    throw ContractError("reconstruction_loss: expected " + std::to_string(aes.size()) +
                        " views, got " + std::to_string(xs.size()));
  std::vector<TensorT<T>> xhats;
  xhats.reserve(xs.size());
  for (size_t m = 0; m < xs.size(); ++m)
    xhats.push_back(aes[m].decode(aes[m].encode(xs[m], ctx), ctx));
  return reconstruction_loss_from(xs, xhats);
}

}  // namespace thcrl
