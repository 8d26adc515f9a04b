#include "thcrl/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace thcrl {

namespace {

void check_labels(const std::vector<int64_t>& pred, const std::vector<int64_t>& truth) {
  if (pred.size() != truth.size())
    throw ContractError("metrics: label vectors differ in length: " + std::to_string(pred.size()) +
                        " vs " + std::to_string(truth.size()));
  if (pred.empty()) throw ContractError("metrics: empty label vectors");
  for (int64_t v : pred)
    if (v < 0) throw ContractError("metrics: negative predicted label");
  for (int64_t v : truth)
    if (v < 0) throw ContractError("metrics: negative true label");
}

int64_t label_count(const std::vector<int64_t>& v) {
  int64_t m = -1;
  for (int64_t x : v) m = std::max(m, x);
  return m + 1;
}

std::vector<std::vector<int64_t>> contingency(const std::vector<int64_t>& pred,
                                              const std::vector<int64_t>& truth, int64_t kp,
                                              int64_t kt) {
  std::vector<std::vector<int64_t>> c(size_t(kp), std::vector<int64_t>(size_t(kt), 0));
  for (size_t i = 0; i < pred.size(); ++i) ++c[size_t(pred[i])][size_t(truth[i])];
  return c;
}

// Square min-cost assignment via shortest augmenting paths with potentials.
// Returns for each column the assigned row (p[j]), 1-indexed internally.
std::vector<int> hungarian_min(const std::vector<std::vector<int64_t>>& cost) {
  int n = int(cost.size());
  const int64_t kInf = std::numeric_limits<int64_t>::max() / 4;
  std::vector<int64_t> u(size_t(n) + 1, 0), v(size_t(n) + 1, 0);
  std::vector<int> p(size_t(n) + 1, 0), way(size_t(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<int64_t> minv(size_t(n) + 1, kInf);
    std::vector<char> used(size_t(n) + 1, 0);
    do {
      used[size_t(j0)] = 1;
      int i0 = p[size_t(j0)], j1 = 0;
      int64_t delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[size_t(j)]) continue;
        int64_t cur = cost[size_t(i0 - 1)][size_t(j - 1)] - u[size_t(i0)] - v[size_t(j)];
        if (cur < minv[size_t(j)]) {
          minv[size_t(j)] = cur;
          way[size_t(j)] = j0;
        }
        if (minv[size_t(j)] < delta) {
          delta = minv[size_t(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[size_t(j)]) {
          u[size_t(p[size_t(j)])] += delta;
          v[size_t(j)] -= delta;
        } else {
          minv[size_t(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[size_t(j0)] != 0);
    do {
      int j1 = way[size_t(j0)];
      p[size_t(j0)] = p[size_t(j1)];
      j0 = j1;
    } while (j0);
  }
  return p;
}

}  // namespace

int64_t assignment_max_gain(const std::vector<std::vector<int64_t>>& gain) {
  int n = int(gain.size());
  if (n == 0) return 0;
  int64_t max_entry = 0;
  for (const auto& row : gain) {
    if (int(row.size()) != n) throw ContractError("assignment_max_gain: matrix must be square");
    for (int64_t g : row) max_entry = std::max(max_entry, g);
  }
  std::vector<std::vector<int64_t>> cost(size_t(n), std::vector<int64_t>(size_t(n), 0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) cost[size_t(i)][size_t(j)] = max_entry - gain[size_t(i)][size_t(j)];
  auto p = hungarian_min(cost);
  int64_t total = 0;
  for (int j = 1; j <= n; ++j)
    if (p[size_t(j)] != 0) total += gain[size_t(p[size_t(j)] - 1)][size_t(j - 1)];
  return total;
}

double accuracy(const std::vector<int64_t>& pred, const std::vector<int64_t>& truth) {
  check_labels(pred, truth);
  int64_t kp = label_count(pred), kt = label_count(truth);
  int64_t n = std::max(kp, kt);
  auto c = contingency(pred, truth, kp, kt);
  std::vector<std::vector<int64_t>> gain(size_t(n), std::vector<int64_t>(size_t(n), 0));
  for (int64_t i = 0; i < kp; ++i)
    for (int64_t j = 0; j < kt; ++j) gain[size_t(i)][size_t(j)] = c[size_t(i)][size_t(j)];
  return double(assignment_max_gain(gain)) / double(pred.size());
}

double nmi(const std::vector<int64_t>& pred, const std::vector<int64_t>& truth, NmiNorm norm) {
  check_labels(pred, truth);
  int64_t kp = label_count(pred), kt = label_count(truth);
  auto c = contingency(pred, truth, kp, kt);
  double n = double(pred.size());

  std::vector<int64_t> np(size_t(kp), 0), nt(size_t(kt), 0);
  for (int64_t i = 0; i < kp; ++i)
    for (int64_t j = 0; j < kt; ++j) {
      np[size_t(i)] += c[size_t(i)][size_t(j)];
      nt[size_t(j)] += c[size_t(i)][size_t(j)];
    }

  // identical up to relabeling: at most one nonzero per row and per column
  bool identical = true;
  for (int64_t i = 0; i < kp && identical; ++i) {
    int nz = 0;
    for (int64_t j = 0; j < kt; ++j) nz += c[size_t(i)][size_t(j)] > 0;
    if (nz > 1) identical = false;
  }
  for (int64_t j = 0; j < kt && identical; ++j) {
    int nz = 0;
    for (int64_t i = 0; i < kp; ++i) nz += c[size_t(i)][size_t(j)] > 0;
    if (nz > 1) identical = false;
  }
  if (identical) return 1.0;

  double hp = 0.0, ht = 0.0;
  for (int64_t i = 0; i < kp; ++i)
    if (np[size_t(i)] > 0) hp -= double(np[size_t(i)]) / n * std::log(double(np[size_t(i)]) / n);
  for (int64_t j = 0; j < kt; ++j)
    if (nt[size_t(j)] > 0) ht -= double(nt[size_t(j)]) / n * std::log(double(nt[size_t(j)]) / n);
  if (hp <= 0.0 || ht <= 0.0) return 0.0;

  double mi = 0.0;
  for (int64_t i = 0; i < kp; ++i)
    for (int64_t j = 0; j < kt; ++j) {
      int64_t nij = c[size_t(i)][size_t(j)];
      if (nij == 0) continue;
      mi += double(nij) / n *
            std::log(n * double(nij) / (double(np[size_t(i)]) * double(nt[size_t(j)])));
    }
  double denom = norm == NmiNorm::kGeometric ? std::sqrt(hp * ht) : 0.5 * (hp + ht);
  return mi / denom;
}

double purity(const std::vector<int64_t>& pred, const std::vector<int64_t>& truth) {
  check_labels(pred, truth);
  int64_t kp = label_count(pred), kt = label_count(truth);
  auto c = contingency(pred, truth, kp, kt);
  int64_t total = 0;
  for (int64_t i = 0; i < kp; ++i) {
    int64_t best = 0;
    for (int64_t j = 0; j < kt; ++j) best = std::max(best, c[size_t(i)][size_t(j)]);
    total += best;
  }
  return double(total) / double(pred.size());
}

MetricReport evaluate_clustering(const std::vector<int64_t>& pred,
                                 const std::vector<int64_t>& truth, NmiNorm norm) {
  return {accuracy(pred, truth), nmi(pred, truth, norm), purity(pred, truth)};
}

namespace {

struct LloydState {
  std::vector<int64_t> assign;
  double inertia = 0.0;
};

// Assign every point to its nearest centroid (ties toward the lower index).
LloydState assign_points(const Matrix& pts, const Matrix& cent) {
  LloydState st;
  st.assign.resize(size_t(pts.rows));
  for (int64_t i = 0; i < pts.rows; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int64_t bi = 0;
    for (int64_t c = 0; c < cent.rows; ++c) {
      double d = squared_distance(pts.row(i), cent.row(c), pts.cols);
      if (d < best) {
        best = d;
        bi = c;
      }
    }
    st.assign[size_t(i)] = bi;
    st.inertia += best;
  }
  return st;
}

Matrix kmeanspp_seed(const Matrix& pts, int64_t k, Rng& rng) {
  int64_t n = pts.rows;
  Matrix cent(k, pts.cols);
  std::vector<double> d2(size_t(n), std::numeric_limits<double>::infinity());
  int64_t first = rng.uniform_int(n);
  std::copy(pts.row(first), pts.row(first) + pts.cols, cent.row(0));
  for (int64_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (int64_t i = 0; i < n; ++i) {
      double d = squared_distance(pts.row(i), cent.row(c - 1), pts.cols);
      d2[size_t(i)] = std::min(d2[size_t(i)], d);
      total += d2[size_t(i)];
    }
    int64_t pick;
    if (total <= 0.0) {
      pick = rng.uniform_int(n);  // all remaining points coincide with chosen centers
    } else {
      double target = rng.uniform() * total;
      double cum = 0.0;
      pick = n - 1;
      for (int64_t i = 0; i < n; ++i) {
        cum += d2[size_t(i)];
        if (cum >= target) {
          pick = i;
          break;
        }
      }
    }
    std::copy(pts.row(pick), pts.row(pick) + pts.cols, cent.row(c));
  }
  return cent;
}

}  // namespace

ClusterResult kmeans(const Matrix& points, int64_t k, uint64_t seed, int64_t max_iter,
                     int64_t n_restarts) {
  int64_t n = points.rows, d = points.cols;
  if (k < 1) throw ConfigError("kmeans: k must be >= 1");
  if (k > n)
    throw ConfigError("kmeans: k = " + std::to_string(k) + " exceeds N = " + std::to_string(n));
  if (n_restarts < 1) throw ConfigError("kmeans: n_restarts must be >= 1");

  ClusterResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  Rng root(seed);

  for (int64_t r = 0; r < n_restarts; ++r) {
    Rng rng = root.fork(uint64_t(r));
    Matrix cent = kmeanspp_seed(points, k, rng);
    LloydState st = assign_points(points, cent);
    std::vector<double> history = {st.inertia};
    int64_t iter = 0;
    while (iter < max_iter) {
      ++iter;
      // means
      Matrix sums(k, d);
      std::vector<int64_t> counts(size_t(k), 0);
      for (int64_t i = 0; i < n; ++i) {
        int64_t c = st.assign[size_t(i)];
        ++counts[size_t(c)];
        const double* p = points.row(i);
        double* s = sums.row(c);
        for (int64_t j = 0; j < d; ++j) s[j] += p[j];
      }
      for (int64_t c = 0; c < k; ++c)
        if (counts[size_t(c)] > 0)
          for (int64_t j = 0; j < d; ++j) cent.at(c, j) = sums.at(c, j) / double(counts[size_t(c)]);
      // re-seed empty clusters to the point farthest from its centroid
      std::vector<char> taken(size_t(n), 0);
      for (int64_t c = 0; c < k; ++c) {
        if (counts[size_t(c)] > 0) continue;
        double far_d = -1.0;
        int64_t far_i = 0;
        for (int64_t i = 0; i < n; ++i) {
          if (taken[size_t(i)]) continue;
          double dd = squared_distance(points.row(i), cent.row(st.assign[size_t(i)]), d);
          if (dd > far_d) {
            far_d = dd;
            far_i = i;
          }
        }
        taken[size_t(far_i)] = 1;
        std::copy(points.row(far_i), points.row(far_i) + d, cent.row(c));
      }
      LloydState next = assign_points(points, cent);
      history.push_back(next.inertia);
      bool stable = next.assign == st.assign;
      st = std::move(next);
      if (stable) break;
    }
    if (st.inertia < best.inertia) {
      best.assignments = st.assign;
      best.centroids = cent;
      best.inertia = st.inertia;
      best.n_iter = iter;
      best.inertia_history = std::move(history);
    }
  }
  return best;
}

}  // namespace thcrl
