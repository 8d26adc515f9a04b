#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

#include "thcrl/common.hpp"

namespace thcrl {

// Directed KNN relation: row i lists the K nearest distinct j != i by squared
// Euclidean distance, ties broken toward the smaller index. Not symmetrized.
std::vector<std::vector<int64_t>> knn_adjacency(const Matrix& z, int64_t k);

// Entrywise mean of the M per-view adjacencies, kept sparse. Entries are
// exact multiples of 1/M; the diagonal is empty (self excluded from every
// neighbor set) and every row sums to exactly K.
struct NeighborGraph {
  int64_t n = 0;
  int64_t k = 0;
  int64_t n_views = 0;
  std::vector<std::vector<std::pair<int64_t, double>>> rows;  // sorted by j

  double at(int64_t i, int64_t j) const;
  double row_sum(int64_t i) const;

  // Dense S restricted to idx x idx (batch-local denominator scope).
  Matrix dense_slice(const std::vector<int64_t>& idx) const;
  // Dense S restricted to idx x [0,n) (full denominator scope).
  Matrix dense_rows(const std::vector<int64_t>& idx) const;

  // Diagnostic dump, one "i j s_ij" line per nonzero entry.
  void export_text(std::ostream& os) const;
};

NeighborGraph average_graph(const std::vector<std::vector<std::vector<int64_t>>>& per_view);

}  // namespace thcrl
