#pragma once

// Averaged-KNN contrastive learning. The loss aligns the fused projection
// with each view projection and relaxes the repulsion between graph
// neighbors:
//
//   L = -(1/(2 b)) sum_i sum_m [ C(hhat_i, h^m_i)/tau - log den_i^m ]
//   den_i^m = sum_j exp((1 - S_ij) C(hhat_i, h^m_j)/tau) - e^(1/tau)
//
// The subtraction can push a denominator to or below zero in adversarial
// configurations (C(hhat_i,h^m_i) != 1 in general), so it is clamped at 1e-8
// before the log and the clamp activations are counted.

#include <cmath>
#include <numeric>
#include <vector>

#include "thcrl/graph.hpp"
#include "thcrl/nn.hpp"

namespace thcrl {

template <typename T>
struct ProjectionHeadsT {
  LinearT<T> fused_head;                // M*d_psi -> d_phi
  std::vector<LinearT<T>> view_heads;   // per view: d_psi -> d_phi

  ProjectionHeadsT() = default;
  ProjectionHeadsT(int64_t m_views, int64_t d_psi, int64_t d_phi, Rng& rng) {
    fused_head = LinearT<T>(m_views * d_psi, d_phi, rng);
    for (int64_t m = 0; m < m_views; ++m) view_heads.emplace_back(d_psi, d_phi, rng);
  }

  TensorT<T> project_fused(const TensorT<T>& z_fused) const { return fused_head.forward(z_fused); }
  TensorT<T> project_view(size_t m, const TensorT<T>& z_m) const {
    return view_heads[m].forward(z_m);
  }

  void collect(const std::string& prefix, NamedParams<T>& out) const {
    fused_head.collect(prefix + ".mlp2", out);
    for (size_t m = 0; m < view_heads.size(); ++m)
      view_heads[m].collect(prefix + ".mlp3_" + std::to_string(m), out);
  }
};

struct AkclStats {
  int64_t clamp_hits = 0;  // denominators that needed the 1e-8 floor
};

inline constexpr double kAkclDenominatorFloor = 1e-8;

// General form: rows i of h_hat are contrasted against rows j of each
// h_views[m]; s_rows is the averaged graph restricted to [i x j] and
// self_cols maps each i to its own column. Differentiable through h_hat and
// every h_views[m].
template <typename T>
TensorT<T> akcl_loss(const TensorT<T>& h_hat, const std::vector<TensorT<T>>& h_views,
                     const Matrix& s_rows, const std::vector<int64_t>& self_cols, double tau,
                     AkclStats* stats = nullptr) {
  if (tau <= 0.0) throw ConfigError("akcl_loss: tau must be > 0, got " + std::to_string(tau));
  if (h_views.empty()) throw ContractError("akcl_loss: no view projections");
  if (h_hat.rank() != 2) throw ShapeError("akcl_loss: h_hat must be [b,d]");
  int64_t b = h_hat.shape()[0];
  int64_t n = h_views[0].shape()[0];
  if (s_rows.rows != b || s_rows.cols != n)
    throw ShapeError("akcl_loss: graph slice is " + std::to_string(s_rows.rows) + "x" +
                     std::to_string(s_rows.cols) + ", expected " + std::to_string(b) + "x" +
                     std::to_string(n));
  if (int64_t(self_cols.size()) != b)
    throw ShapeError("akcl_loss: one self column per batch row required");

  // constant (1 - S)/tau weights, gradient-free
  TensorT<T> weights({b, n}, false);
  for (int64_t i = 0; i < b; ++i)
    for (int64_t j = 0; j < n; ++j)
      weights.value()[size_t(i * n + j)] = T((1.0 - s_rows.at(i, j)) / tau);
  const T self_term = T(std::exp(1.0 / tau));

  TensorT<T> total;
  for (size_t m = 0; m < h_views.size(); ++m) {
    if (h_views[m].rank() != 2 || h_views[m].shape()[0] != n ||
        h_views[m].shape()[1] != h_hat.shape()[1])
      throw ShapeError("akcl_loss: view projection " + std::to_string(m) + " has shape " +
                       shape_str(h_views[m].shape()));
    auto cos = cosine_matrix(h_hat, h_views[m]);                    // [b,n]
    auto aligned = scale(gather_cols(cos, self_cols), T(1.0 / tau));  // C(hhat_i,h^m_i)/tau
    auto den_raw = add_scalar(sum_axis(thcrl::exp(hadamard(cos, weights)), 1), -self_term);
    if (stats)
      for (T v : den_raw.value())
        if (v <= T(kAkclDenominatorFloor)) ++stats->clamp_hits;
    auto den = clamp_min(den_raw, T(kAkclDenominatorFloor));
    auto term = sum_all(sub(aligned, thcrl::log(den)));
    total = m == 0 ? term : add(total, term);
  }
  return scale(total, T(-1.0 / (2.0 * double(b))));
}

// Batch-local scope: candidates j are the batch itself, S is the b x b slice.
template <typename T>
TensorT<T> akcl_loss(const TensorT<T>& h_hat, const std::vector<TensorT<T>>& h_views,
                     const Matrix& s_batch, double tau, AkclStats* stats = nullptr) {
  std::vector<int64_t> self(size_t(h_hat.shape()[0]));
  std::iota(self.begin(), self.end(), 0);
  return akcl_loss(h_hat, h_views, s_batch, self, tau, stats);
}

// L = L_Rec + lambda * L_Akc.
template <typename T>
TensorT<T> total_loss(const TensorT<T>& l_rec, const TensorT<T>& l_akc, double lambda) {
  if (lambda < 0.0) throw ConfigError("total_loss: lambda must be >= 0");
  return add(l_rec, scale(l_akc, T(lambda)));
}

}  // namespace thcrl
