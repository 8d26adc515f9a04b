#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace thcrl {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Operand/array dimension violations. Messages name the offending shapes.
struct ShapeError : Error {
  using Error::Error;
};

// Invalid configuration, rejected before any computation runs.
struct ConfigError : Error {
  using Error::Error;
};

// API contract violations (non-scalar loss, double backward, ...).
struct ContractError : Error {
  using Error::Error;
};

// Dataset / checkpoint I/O failures.
struct IoError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Shapes
// ---------------------------------------------------------------------------

using Shape = std::vector<int64_t>;

inline int64_t numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ']';
  return os.str();
}

// ---------------------------------------------------------------------------
// Deterministic RNG. mt19937_64 seeded through splitmix64, with hand-rolled
// uniform/normal draws so every stream is reproducible bit-for-bit from its
// seed. fork() derives an independent child stream.
// ---------------------------------------------------------------------------

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), eng_(splitmix64(seed)) {}

  uint64_t next_u64() { return eng_(); }

  // Uniform in [0,1).
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller (cached spare).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0,1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Uniform integer in [0,n).
  int64_t uniform_int(int64_t n) { return int64_t(next_u64() % uint64_t(n)); }

  template <typename V>
  void shuffle(std::vector<V>& v) {
    for (int64_t i = int64_t(v.size()) - 1; i > 0; --i)
      std::swap(v[size_t(i)], v[size_t(uniform_int(i + 1))]);
  }

  Rng fork(uint64_t salt) const {
    return Rng(splitmix64(seed_ ^ splitmix64(salt + 0x5851f42d4c957f2dULL)));
  }

  uint64_t seed() const { return seed_; }

 private:
  uint64_t seed_;
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// ---------------------------------------------------------------------------
// Dense row-major double matrix used on module boundaries (dataset views,
// latents handed to the KNN graph, embeddings handed to K-Means).
// ---------------------------------------------------------------------------

struct Matrix {
  int64_t rows = 0, cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(int64_t r, int64_t c) : rows(r), cols(c), a(size_t(r) * size_t(c), 0.0) {}

  double& at(int64_t i, int64_t j) { return a[size_t(i * cols + j)]; }
  double at(int64_t i, int64_t j) const { return a[size_t(i * cols + j)]; }
  double* row(int64_t i) { return a.data() + i * cols; }
  const double* row(int64_t i) const { return a.data() + i * cols; }
};

inline double squared_distance(const double* x, const double* y, int64_t d) {
  double s = 0.0;
  for (int64_t j = 0; j < d; ++j) {
    double t = x[j] - y[j];
    s += t * t;
  }
  return s;
}

}  // namespace thcrl
