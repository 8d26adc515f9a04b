#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "thcrl/common.hpp"

namespace thcrl {

// N samples described by M heterogeneous feature views. Row i of every view
// refers to the same underlying instance. Datasets are read-only after load.
struct MultiViewDataset {
  int64_t n_samples = 0;
  std::vector<Matrix> views;       // view m: n_samples x view_dims[m]
  std::vector<int64_t> view_dims;
  std::optional<std::vector<int64_t>> labels;  // values in [0, n_classes)

  int64_t n_views() const { return int64_t(views.size()); }
  int64_t n_classes() const;  // requires labels
  void validate() const;
};

// Directory format: manifest.json {n_samples, view_dims, has_labels, dtype},
// view_{m}.f32 (1-based, little-endian row-major f32), optional labels.i64.
MultiViewDataset load_dataset(const std::string& dir);
void save_dataset(const MultiViewDataset& ds, const std::string& dir);

// Per-view, per-column min-max scaling to [0,1]; constant columns map to 0.
MultiViewDataset min_max_normalize(const MultiViewDataset& ds);

// Gaussian mixture generator: one random mean per cluster per view, means
// rescaled so the minimum pairwise mean distance within each view is 1,
// per-view noise sigmas, labels assigned round-robin. Values are snapped to
// f32 so the on-disk round trip is exact.
MultiViewDataset make_synthetic(int64_t n_samples, int64_t n_clusters,
                                const std::vector<int64_t>& view_dims,
                                const std::vector<double>& noise_sigmas, uint64_t seed);

// Shuffled partition of [0,N) into batches of size b; the last batch may be
// short but is never empty.
struct BatchPlan {
  uint64_t seed = 0;
  int64_t batch_size = 0;
  std::vector<int64_t> order;                       // permutation of [0,N)
  std::vector<std::pair<int64_t, int64_t>> ranges;  // [begin,end) into order

  size_t n_batches() const { return ranges.size(); }
  std::vector<int64_t> batch(size_t b) const {
    return {order.begin() + ranges[b].first, order.begin() + ranges[b].second};
  }
};

BatchPlan plan_batches(int64_t n, int64_t batch_size, uint64_t seed);

}  // namespace thcrl
