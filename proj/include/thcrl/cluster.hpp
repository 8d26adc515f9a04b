#pragma once

#include <vector>

#include "thcrl/common.hpp"

namespace thcrl {

struct ClusterResult {
  std::vector<int64_t> assignments;      // length N, ids in [0,k)
  Matrix centroids;                      // k x d
  double inertia = 0.0;
  int64_t n_iter = 0;
  std::vector<double> inertia_history;   // after each assignment pass (best restart)
};

// Lloyd iterations with k-means++ seeding, run to an assignment fixpoint or
// max_iter, best inertia over n_restarts. Empty clusters are re-seeded to the
// point farthest from its assigned centroid. Deterministic per seed.
ClusterResult kmeans(const Matrix& points, int64_t k, uint64_t seed, int64_t max_iter = 300,
                     int64_t n_restarts = 10);

enum class NmiNorm { kGeometric, kArithmetic };

// Clustering accuracy: best cluster-to-class matching on the contingency
// table, solved by an optimal-assignment routine.
double accuracy(const std::vector<int64_t>& pred, const std::vector<int64_t>& truth);

// I(pred;truth) normalized by the geometric (default) or arithmetic mean of
// the two entropies, natural log. Identical partitions (up to relabeling)
// score 1; if either entropy is zero and the partitions differ, 0.
double nmi(const std::vector<int64_t>& pred, const std::vector<int64_t>& truth,
           NmiNorm norm = NmiNorm::kGeometric);

// Fraction of samples lying in the majority true class of their cluster.
double purity(const std::vector<int64_t>& pred, const std::vector<int64_t>& truth);

struct MetricReport {
  double acc = 0.0, nmi = 0.0, pur = 0.0;
};

MetricReport evaluate_clustering(const std::vector<int64_t>& pred,
                                 const std::vector<int64_t>& truth,
                                 NmiNorm norm = NmiNorm::kGeometric);

// Maximum-total-gain row/column matching on a square gain matrix (the
// accuracy backend, exposed for oracle tests).
int64_t assignment_max_gain(const std::vector<std::vector<int64_t>>& gain);

}  // namespace thcrl
