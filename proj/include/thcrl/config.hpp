#pragma once

#include <string>
#include <vector>

#include "thcrl/cluster.hpp"
#include "thcrl/common.hpp"

namespace thcrl {

enum class DenominatorScope { kBatch, kFull };

// Every training/evaluation knob of the pipeline. Defaults target the
// full-scale operating point; the architecture fields stay configurable for
// desk-scale runs.
struct RunConfig {
  int64_t batch_size = 256;
  int64_t pretrain_epochs = 200;
  int64_t finetune_epochs = 200;
  double tau = 0.5;
  int64_t d_psi = 512;
  int64_t d_phi = 128;
  int64_t depth_u = 4;
  int64_t knn_k = 10;
  double lr = 3e-4;
  double lambda = 1.0;
  double dropout = 0.1;
  int64_t c0 = 32;
  uint64_t seed = 0;
  bool no_dshf = false;   // ablation: plain concatenation instead of DSHF
  bool no_akcl = false;   // ablation: reconstruction-only fine-tuning
  int64_t graph_refresh_epochs = 0;  // 0 = build the KNN graph once
  DenominatorScope denominator_scope = DenominatorScope::kBatch;

  std::vector<int64_t> ae_hidden = {500, 500, 2000};
  int64_t metrics_every = 10;
  bool can_sigmoid = true;   // bounded CAN gate; false = linear gate
  int64_t kmeans_restarts = 10;
  int64_t kmeans_max_iter = 300;
  NmiNorm nmi_norm = NmiNorm::kGeometric;
  std::string precision = "f64";

  void validate() const;
};

RunConfig load_config(const std::string& path);
void save_config(const RunConfig& cfg, const std::string& path);
std::string config_to_json(const RunConfig& cfg);

}  // namespace thcrl
