#pragma once

#include <string>
#include <vector>

#include "thcrl/cluster.hpp"
#include "thcrl/common.hpp"

namespace thcrl {

// One row per training epoch; metric columns are populated only on epochs
// where evaluation ran, AKCL loss only during fine-tuning.
struct RunLogRow {
  int64_t epoch = 0;
  std::string phase;  // "pretrain" | "finetune"
  double loss_rec = 0.0;
  bool has_akc = false;
  double loss_akc = 0.0;
  double loss_total = 0.0;
  bool has_metrics = false;
  double acc = 0.0, nmi = 0.0, pur = 0.0;
  double wall_ms = 0.0;
};

struct RunLog {
  std::vector<RunLogRow> rows;

  // Header is exactly: epoch,phase,loss_rec,loss_akc,loss_total,acc,nmi,pur,wall_ms
  void write_csv(const std::string& path) const;
};

// Shortest round-trippable decimal form of a double (deterministic).
std::string format_double(double v);

void write_metrics_json(const std::string& path, const MetricReport& report, int64_t k,
                        double inertia, int64_t n_iter);

// Row-major little-endian f32 matrix plus a "<rows> <cols>" sidecar whose
// name swaps the .f32 extension for .shape.
void write_embeddings_f32(const std::string& path, const Matrix& h);
Matrix read_embeddings_f32(const std::string& path);

}  // namespace thcrl
