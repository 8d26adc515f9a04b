#pragma once

// Independent oracles and pinned fixtures shared by the unit suites and the
// acceptance binary. Everything here is a deliberately separate code path
// from the library: plain scalar loops, full sorts and exhaustive
// permutations, never the library kernels under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "thcrl/common.hpp"
#include "thcrl/tensor.hpp"

namespace thcrl::test {

inline Matrix tensor_to_matrix(const TensorT<double>& t) {
  if (t.rank() != 2) throw ContractError("tensor_to_matrix: rank-2 expected");
  Matrix m(t.shape()[0], t.shape()[1]);
  m.a = t.value();
  return m;
}

inline TensorT<double> matrix_to_tensor(const Matrix& m, bool requires_grad = false) {
  return TensorT<double>({m.rows, m.cols}, m.a, requires_grad);
}

// --------------------------------------------------------------------------
// KNN oracle: full stable sort over (squared distance, index).
// --------------------------------------------------------------------------
inline std::vector<std::vector<int64_t>> knn_bruteforce(const Matrix& z, int64_t k) {
  std::vector<std::vector<int64_t>> rows;
  rows.resize(static_cast<size_t>(z.rows));
  for (int64_t i = 0; i < z.rows; ++i) {
    std::vector<std::pair<double, int64_t>> all;
    for (int64_t j = 0; j < z.rows; ++j) {
      if (j == i) continue;
      all.emplace_back(squared_distance(z.row(i), z.row(j), z.cols), j);
    }
    std::sort(all.begin(), all.end());
    for (int64_t t = 0; t < k; ++t) rows[size_t(i)].push_back(all[size_t(t)].second);
  }
  return rows;
}

// --------------------------------------------------------------------------
// ACC oracle: exhaustive maximum over label permutations (k <= ~7).
// --------------------------------------------------------------------------
inline double accuracy_bruteforce(const std::vector<int64_t>& pred,
                                  const std::vector<int64_t>& truth) {
  int64_t kp = 0, kt = 0;
  for (int64_t v : pred) kp = std::max(kp, v + 1);
  for (int64_t v : truth) kt = std::max(kt, v + 1);
  int64_t k = std::max(kp, kt);
  std::vector<std::vector<int64_t>> c(size_t(k), std::vector<int64_t>(size_t(k), 0));
  for (size_t i = 0; i < pred.size(); ++i) ++c[size_t(pred[i])][size_t(truth[i])];
  std::vector<int64_t> perm(static_cast<size_t>(k), 0);
  std::iota(perm.begin(), perm.end(), 0);
  int64_t best = 0;
  do {
    int64_t total = 0;
    for (int64_t i = 0; i < k; ++i) total += c[size_t(i)][size_t(perm[size_t(i)])];
    best = std::max(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return double(best) / double(pred.size());
}

// --------------------------------------------------------------------------
// Cosine and AKCL oracles: direct formula evaluation in scalar loops.
// --------------------------------------------------------------------------
inline double cosine_oracle(const double* a, const double* b, int64_t d, double eps = 1e-12) {
  double dot = 0, na = 0, nb = 0;
  for (int64_t i = 0; i < d; ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / (std::max(std::sqrt(na), eps) * std::max(std::sqrt(nb), eps));
}

// Exact mirror of the printed loss: row i against candidates j with graph
// relaxation (1 - S_ij), self-term subtraction e^(1/tau), denominator floored
// at 1e-8.
inline double akcl_oracle(const Matrix& h_hat, const std::vector<Matrix>& h_views,
                          const Matrix& s_rows, const std::vector<int64_t>& self_cols,
                          double tau) {
  int64_t b = h_hat.rows, n = h_views[0].rows, d = h_hat.cols;
  double total = 0.0;
  for (int64_t i = 0; i < b; ++i) {
    for (const auto& hv : h_views) {
      double aligned = cosine_oracle(h_hat.row(i), hv.row(self_cols[size_t(i)]), d) / tau;
      double den = 0.0;
      for (int64_t j = 0; j < n; ++j)
        den += std::exp((1.0 - s_rows.at(i, j)) * cosine_oracle(h_hat.row(i), hv.row(j), d) / tau);
      den -= std::exp(1.0 / tau);
      den = std::max(den, 1e-8);
      total += aligned - std::log(den);
    }
  }
  return -total / (2.0 * double(b));
}

inline double akcl_oracle(const Matrix& h_hat, const std::vector<Matrix>& h_views,
                          const Matrix& s_batch, double tau) {
  std::vector<int64_t> self(static_cast<size_t>(h_hat.rows), 0);
  std::iota(self.begin(), self.end(), 0);
  return akcl_oracle(h_hat, h_views, s_batch, self, tau);
}

// Instance-level contrastive loss with the self-term subtraction but no graph
// weighting: what the AKCL formula degenerates to at S == 0.
inline double infonce_subtract_oracle(const Matrix& h_hat, const std::vector<Matrix>& h_views,
                                      double tau) {
  int64_t b = h_hat.rows, d = h_hat.cols;
  double total = 0.0;
  for (int64_t i = 0; i < b; ++i) {
    for (const auto& hv : h_views) {
      double aligned = cosine_oracle(h_hat.row(i), hv.row(i), d) / tau;
      double den = 0.0;
      for (int64_t j = 0; j < b; ++j)
        den += std::exp(cosine_oracle(h_hat.row(i), hv.row(j), d) / tau);
      den -= std::exp(1.0 / tau);
      den = std::max(den, 1e-8);
      total += aligned - std::log(den);
    }
  }
  return -total / (2.0 * double(b));
}

// --------------------------------------------------------------------------
// Pinned metric fixtures. Values computed with an independent contingency
// evaluation (natural log, geometric-mean NMI normalization) and frozen.
// --------------------------------------------------------------------------
struct MetricFixture {
  std::vector<int64_t> pred;
  std::vector<int64_t> truth;
  double nmi;
  double pur;
  double acc;
};

inline const std::vector<MetricFixture>& metric_fixtures() {
  static const std::vector<MetricFixture> fixtures = {
      {{0, 0, 1, 1}, {0, 1, 1, 1}, 0.34559202994421129, 0.75, 0.75},
      {{0, 1, 1, 1}, {0, 0, 1, 1}, 0.34559202994421129, 0.75, 0.75},
      {{0, 0, 1, 1, 2, 2}, {0, 0, 1, 1, 1, 2}, 0.7402999407999733, 0.83333333333333337,
       0.83333333333333337},
      {{0, 1, 2, 0, 1, 2}, {0, 0, 0, 1, 1, 1}, 0.0, 0.5, 0.33333333333333331},
      {{0, 0, 0, 1, 1, 2}, {1, 1, 0, 0, 2, 2}, 0.52111051964000032, 0.66666666666666663,
       0.66666666666666663},
      {{0, 1, 0, 1, 0, 1, 0, 1}, {0, 0, 1, 1, 2, 2, 3, 3}, 0.0, 0.25, 0.25},
      {{2, 2, 0, 0, 1, 1}, {0, 0, 1, 1, 2, 2}, 1.0, 1.0, 1.0},
      {{0, 0, 0, 0, 0, 1}, {0, 1, 0, 1, 0, 1}, 0.23674660197196537, 0.66666666666666663,
       0.66666666666666663},
      {{0, 1, 2, 3, 0, 1, 2, 3}, {0, 1, 0, 1, 2, 3, 2, 3}, 0.5, 0.5, 0.5},
      {{1, 1, 1, 2, 2, 0, 0, 0, 0, 2}, {0, 1, 2, 0, 1, 2, 0, 1, 2, 0}, 0.140025469163997, 0.5,
       0.5},
  };
  return fixtures;
}

inline std::vector<int64_t> random_labels(Rng& rng, int64_t n, int64_t k) {
  std::vector<int64_t> v(static_cast<size_t>(n), 0);
  for (auto& x : v) x = rng.uniform_int(k);
  return v;
}

}  // namespace thcrl::test
