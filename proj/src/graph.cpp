#include "thcrl/graph.hpp"

#include <algorithm>
#include <ostream>

namespace thcrl {

std::vector<std::vector<int64_t>> knn_adjacency(const Matrix& z, int64_t k) {
  int64_t n = z.rows;
  if (k < 1) throw ConfigError("knn_adjacency: K must be >= 1");
  if (k >= n)
    throw ConfigError("knn_adjacency: K = " + std::to_string(k) + " must be < N = " +
                      std::to_string(n));
  std::vector<std::vector<int64_t>> rows(static_cast<size_t>(n));
  std::vector<std::pair<double, int64_t>> cand;
  cand.reserve(size_t(n - 1));
  for (int64_t i = 0; i < n; ++i) {
    cand.clear();
    for (int64_t j = 0; j < n; ++j) {
      if (j == i) continue;
      cand.emplace_back(squared_distance(z.row(i), z.row(j), z.cols), j);
    }
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
    auto& out = rows[size_t(i)];
    out.reserve(size_t(k));
    for (int64_t t = 0; t < k; ++t) out.push_back(cand[size_t(t)].second);
  }
  return rows;
}

double NeighborGraph::at(int64_t i, int64_t j) const {
  const auto& row = rows[size_t(i)];
  auto it = std::lower_bound(row.begin(), row.end(), j,
                             [](const std::pair<int64_t, double>& e, int64_t v) { return e.first < v; });
  return (it != row.end() && it->first == j) ? it->second : 0.0;
}

double NeighborGraph::row_sum(int64_t i) const {
  double s = 0.0;
  for (const auto& [j, v] : rows[size_t(i)]) s += v;
  return s;
}

Matrix NeighborGraph::dense_slice(const std::vector<int64_t>& idx) const {
  int64_t b = int64_t(idx.size());
  std::vector<int64_t> local(size_t(n), -1);
  for (int64_t l = 0; l < b; ++l) local[size_t(idx[size_t(l)])] = l;
  Matrix s(b, b);
  for (int64_t l = 0; l < b; ++l)
    for (const auto& [j, v] : rows[size_t(idx[size_t(l)])])
      if (local[size_t(j)] >= 0) s.at(l, local[size_t(j)]) = v;
  return s;
}

Matrix NeighborGraph::dense_rows(const std::vector<int64_t>& idx) const {
  int64_t b = int64_t(idx.size());
  Matrix s(b, n);
  for (int64_t l = 0; l < b; ++l)
    for (const auto& [j, v] : rows[size_t(idx[size_t(l)])]) s.at(l, j) = v;
  return s;
}

void NeighborGraph::export_text(std::ostream& os) const {
  for (int64_t i = 0; i < n; ++i)
    for (const auto& [j, v] : rows[size_t(i)]) os << i << ' ' << j << ' ' << v << '\n';
}

NeighborGraph average_graph(const std::vector<std::vector<std::vector<int64_t>>>& per_view) {
  if (per_view.empty()) throw ContractError("average_graph: no views");
  size_t n = per_view[0].size();
  for (const auto& adj : per_view)
    if (adj.size() != n) throw ShapeError("average_graph: adjacency row counts differ across views");

  NeighborGraph g;
  g.n = int64_t(n);
  g.n_views = int64_t(per_view.size());
  g.k = n > 0 ? int64_t(per_view[0][0].size()) : 0;
  g.rows.resize(n);
  std::vector<int64_t> merged;
  for (size_t i = 0; i < n; ++i) {
    merged.clear();
    for (const auto& adj : per_view)
      merged.insert(merged.end(), adj[i].begin(), adj[i].end());
    std::sort(merged.begin(), merged.end());
    auto& row = g.rows[i];
    for (size_t t = 0; t < merged.size();) {
      size_t u = t;
      while (u < merged.size() && merged[u] == merged[t]) ++u;
      row.emplace_back(merged[t], double(u - t) / double(g.n_views));
      t = u;
    }
  }
  return g;
}

}  // namespace thcrl
