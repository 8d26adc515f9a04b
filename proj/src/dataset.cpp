#include "thcrl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace thcrl {

namespace {

std::vector<char> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open " + path.string());
  auto size = in.tellg();
  in.seekg(0);
  std::vector<char> buf(static_cast<size_t>(size), 0);
  in.read(buf.data(), size);
  if (!in) throw IoError("short read on " + path.string());
  return buf;
}

void write_file(const fs::path& path, const void* data, size_t bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(static_cast<const char*>(data), std::streamsize(bytes));
  if (!out) throw IoError("short write on " + path.string());
}

}  // namespace

int64_t MultiViewDataset::n_classes() const {
  if (!labels) throw ContractError("n_classes(): dataset has no labels");
  int64_t maxl = -1;
  for (int64_t l : *labels) maxl = std::max(maxl, l);
  return maxl + 1;
}

void MultiViewDataset::validate() const {
  if (views.size() != view_dims.size())
    throw ShapeError("dataset: views/view_dims count mismatch");
  for (size_t m = 0; m < views.size(); ++m) {
    if (views[m].rows != n_samples)
      throw ShapeError("dataset: view_" + std::to_string(m + 1) + " has " +
                       std::to_string(views[m].rows) + " rows, expected " +
                       std::to_string(n_samples));
    if (views[m].cols != view_dims[m])
      throw ShapeError("dataset: view_" + std::to_string(m + 1) + " has " +
                       std::to_string(views[m].cols) + " columns, manifest says " +
                       std::to_string(view_dims[m]));
  }
  if (labels) {
    if (int64_t(labels->size()) != n_samples)
      throw ShapeError("dataset: labels length " + std::to_string(labels->size()) +
                       " != n_samples " + std::to_string(n_samples));
    for (int64_t l : *labels)
      if (l < 0) throw ShapeError("dataset: negative label " + std::to_string(l));
  }
}

MultiViewDataset load_dataset(const std::string& dir) {
  fs::path root(dir);
  fs::path manifest_path = root / "manifest.json";
  if (!fs::exists(manifest_path)) throw IoError("missing manifest: " + manifest_path.string());

  json manifest;
  {
    std::ifstream in(manifest_path);
    try {
      in >> manifest;
    } catch (const std::exception& e) {
      throw IoError("malformed manifest " + manifest_path.string() + ": " + e.what());
    }
  }
  for (const char* key : {"n_samples", "view_dims", "has_labels", "dtype"})
    if (!manifest.contains(key))
      throw IoError("manifest missing field '" + std::string(key) + "'");
  if (manifest["dtype"].get<std::string>() != "f32")
    throw IoError("unsupported dtype '" + manifest["dtype"].get<std::string>() +
                  "', expected \"f32\"");

  MultiViewDataset ds;
  ds.n_samples = manifest["n_samples"].get<int64_t>();
  ds.view_dims = manifest["view_dims"].get<std::vector<int64_t>>();
  if (ds.n_samples <= 0) throw IoError("manifest: n_samples must be positive");
  if (ds.view_dims.empty()) throw IoError("manifest: view_dims is empty");

  for (size_t m = 0; m < ds.view_dims.size(); ++m) {
    std::string name = "view_" + std::to_string(m + 1) + ".f32";
    fs::path vp = root / name;
    if (!fs::exists(vp)) throw IoError("missing view file: " + vp.string());
    auto buf = read_file(vp);
    size_t expected = size_t(ds.n_samples) * size_t(ds.view_dims[m]) * sizeof(float);
    if (buf.size() != expected)
      throw ShapeError(name + " holds " + std::to_string(buf.size() / sizeof(float)) +
                       " floats, manifest implies " + std::to_string(expected / sizeof(float)));
    Matrix v(ds.n_samples, ds.view_dims[m]);
    const float* f = reinterpret_cast<const float*>(buf.data());
    for (size_t i = 0; i < v.a.size(); ++i) {
      if (std::isnan(f[i])) throw IoError(name + ": NaN at element " + std::to_string(i));
      v.a[i] = double(f[i]);
    }
    ds.views.push_back(std::move(v));
  }

  if (manifest["has_labels"].get<bool>()) {
    fs::path lp = root / "labels.i64";
    if (!fs::exists(lp)) throw IoError("missing labels file: " + lp.string());
    auto buf = read_file(lp);
    if (buf.size() != size_t(ds.n_samples) * sizeof(int64_t))
      throw ShapeError("labels.i64 holds " + std::to_string(buf.size() / sizeof(int64_t)) +
                       " entries, expected " + std::to_string(ds.n_samples));
    std::vector<int64_t> labels(static_cast<size_t>(ds.n_samples), 0);
    std::memcpy(labels.data(), buf.data(), buf.size());
    ds.labels = std::move(labels);
  }

  ds.validate();
  return ds;
}

void save_dataset(const MultiViewDataset& ds, const std::string& dir) {
  ds.validate();
  fs::path root(dir);
  fs::create_directories(root);

  json manifest;
  manifest["n_samples"] = ds.n_samples;
  manifest["view_dims"] = ds.view_dims;
  manifest["has_labels"] = bool(ds.labels);
  manifest["dtype"] = "f32";
  {
    std::ofstream out(root / "manifest.json");
    if (!out) throw IoError("cannot write manifest in " + dir);
    out << manifest.dump(2) << "\n";
  }

  for (size_t m = 0; m < ds.views.size(); ++m) {
    std::vector<float> f(ds.views[m].a.size());
    for (size_t i = 0; i < f.size(); ++i) f[i] = float(ds.views[m].a[i]);
    write_file(root / ("view_" + std::to_string(m + 1) + ".f32"), f.data(),
               f.size() * sizeof(float));
  }
  if (ds.labels)
    write_file(root / "labels.i64", ds.labels->data(), ds.labels->size() * sizeof(int64_t));
}

MultiViewDataset min_max_normalize(const MultiViewDataset& ds) {
  MultiViewDataset out = ds;
  for (auto& v : out.views) {
    for (int64_t c = 0; c < v.cols; ++c) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -std::numeric_limits<double>::infinity();
      for (int64_t r = 0; r < v.rows; ++r) {
        lo = std::min(lo, v.at(r, c));
        hi = std::max(hi, v.at(r, c));
      }
      double range = hi - lo;
      for (int64_t r = 0; r < v.rows; ++r)
        v.at(r, c) = range > 0 ? (v.at(r, c) - lo) / range : 0.0;
    }
  }
  return out;
}

MultiViewDataset make_synthetic(int64_t n_samples, int64_t n_clusters,
                                const std::vector<int64_t>& view_dims,
                                const std::vector<double>& noise_sigmas, uint64_t seed) {
  if (n_clusters < 2) throw ConfigError("make_synthetic: n_clusters must be >= 2");
  if (n_samples < n_clusters) throw ConfigError("make_synthetic: n_samples < n_clusters");
  if (view_dims.empty()) throw ConfigError("make_synthetic: no views requested");
  for (int64_t d : view_dims)
    if (d < 2) throw ConfigError("make_synthetic: every view dim must be >= 2");
  if (noise_sigmas.size() != view_dims.size())
    throw ConfigError("make_synthetic: one noise sigma per view required");

  Rng rng(seed);
  int64_t m_views = int64_t(view_dims.size());

  // cluster means, scaled so the closest pair within each view is 1 apart
  std::vector<Matrix> means;
  for (int64_t m = 0; m < m_views; ++m) {
    Matrix mu(n_clusters, view_dims[size_t(m)]);
    for (auto& v : mu.a) v = rng.normal();
    double min_d2 = std::numeric_limits<double>::infinity();
    for (int64_t a = 0; a < n_clusters; ++a)
      for (int64_t b = a + 1; b < n_clusters; ++b)
        min_d2 = std::min(min_d2, squared_distance(mu.row(a), mu.row(b), mu.cols));
    double s = 1.0 / std::sqrt(min_d2);
    for (auto& v : mu.a) v *= s;
    means.push_back(std::move(mu));
  }

  MultiViewDataset ds;
  ds.n_samples = n_samples;
  ds.view_dims = view_dims;
  std::vector<int64_t> labels(static_cast<size_t>(n_samples), 0);
  for (int64_t i = 0; i < n_samples; ++i) labels[size_t(i)] = i % n_clusters;

  for (int64_t m = 0; m < m_views; ++m) ds.views.emplace_back(n_samples, view_dims[size_t(m)]);
  for (int64_t i = 0; i < n_samples; ++i) {
    int64_t c = labels[size_t(i)];
    for (int64_t m = 0; m < m_views; ++m) {
      Matrix& v = ds.views[size_t(m)];
      double sigma = noise_sigmas[size_t(m)];
      for (int64_t j = 0; j < v.cols; ++j)
        v.at(i, j) = double(float(means[size_t(m)].at(c, j) + sigma * rng.normal()));
    }
  }
  ds.labels = std::move(labels);
  return ds;
}

BatchPlan plan_batches(int64_t n, int64_t batch_size, uint64_t seed) {
  if (batch_size < 2) throw ConfigError("plan_batches: batch size must be >= 2");
  if (n < 1) throw ConfigError("plan_batches: empty index range");
  BatchPlan plan;
  plan.seed = seed;
  plan.batch_size = batch_size;
  plan.order.resize(size_t(n));
  for (int64_t i = 0; i < n; ++i) plan.order[size_t(i)] = i;
  Rng rng(seed);
  rng.shuffle(plan.order);
  for (int64_t begin = 0; begin < n; begin += batch_size)
    plan.ranges.emplace_back(begin, std::min(begin + batch_size, n));
  return plan;
}

}  // namespace thcrl
