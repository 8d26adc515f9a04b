#include "thcrl/config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

using nlohmann::json;

namespace thcrl {

void RunConfig::validate() const {
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
  if (pretrain_epochs < 0 || finetune_epochs < 0) throw ConfigError("epoch counts must be >= 0");
  if (tau <= 0.0) throw ConfigError("tau must be > 0, got " + std::to_string(tau));
  if (d_psi < 1 || d_phi < 1 || c0 < 1) throw ConfigError("d_psi, d_phi and c0 must be positive");
  if (depth_u < 1) throw ConfigError("depth_u must be >= 1");
  if (d_psi % (int64_t(1) << depth_u) != 0)
    throw ConfigError("d_psi = " + std::to_string(d_psi) + " must be divisible by 2^U = " +
                      std::to_string(int64_t(1) << depth_u));
  if (knn_k < 1) throw ConfigError("knn_k must be >= 1");
  if (lr <= 0.0) throw ConfigError("lr must be > 0");
  if (lambda < 0.0) throw ConfigError("lambda must be >= 0");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must lie in [0,1)");
  if (graph_refresh_epochs < 0) throw ConfigError("graph_refresh_epochs must be >= 0");
  if (metrics_every < 1) throw ConfigError("metrics_every must be >= 1");
  if (kmeans_restarts < 1 || kmeans_max_iter < 1)
    throw ConfigError("kmeans_restarts and kmeans_max_iter must be >= 1");
  if (precision != "f32" && precision != "f64")
    throw ConfigError("precision must be \"f32\" or \"f64\", got \"" + precision + "\"");
}

namespace {

json to_json(const RunConfig& c) {
  json j;
  j["batch_size"] = c.batch_size;
  j["pretrain_epochs"] = c.pretrain_epochs;
  j["finetune_epochs"] = c.finetune_epochs;
  j["tau"] = c.tau;
  j["d_psi"] = c.d_psi;
  j["d_phi"] = c.d_phi;
  j["depth_u"] = c.depth_u;
  j["knn_k"] = c.knn_k;
  j["lr"] = c.lr;
  j["lambda"] = c.lambda;
  j["dropout"] = c.dropout;
  j["c0"] = c.c0;
  j["seed"] = c.seed;
  j["no_dshf"] = c.no_dshf;
  j["no_akcl"] = c.no_akcl;
  j["graph_refresh_epochs"] = c.graph_refresh_epochs;
  j["denominator_scope"] = c.denominator_scope == DenominatorScope::kBatch ? "batch" : "full";
  j["ae_hidden"] = c.ae_hidden;
  j["metrics_every"] = c.metrics_every;
  j["can_sigmoid"] = c.can_sigmoid;
  j["kmeans_restarts"] = c.kmeans_restarts;
  j["kmeans_max_iter"] = c.kmeans_max_iter;
  j["nmi_norm"] = c.nmi_norm == NmiNorm::kGeometric ? "geometric" : "arithmetic";
  j["precision"] = c.precision;
  return j;
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "batch_size", "pretrain_epochs", "finetune_epochs", "tau", "d_psi", "d_phi",
      "depth_u", "knn_k", "lr", "lambda", "dropout", "c0", "seed", "no_dshf", "no_akcl",
      "graph_refresh_epochs", "denominator_scope", "ae_hidden", "metrics_every",
      "can_sigmoid", "kmeans_restarts", "kmeans_max_iter", "nmi_norm", "precision"};
  return keys;
}

}  // namespace

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw IoError("malformed config " + path + ": " + e.what());
  }
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known_keys().count(it.key()))
      throw ConfigError("unknown config field \"" + it.key() + "\" in " + path);

  RunConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j[key].get<std::decay_t<decltype(field)>>();
  };
  get("batch_size", c.batch_size);
  get("pretrain_epochs", c.pretrain_epochs);
  get("finetune_epochs", c.finetune_epochs);
  get("tau", c.tau);
  get("d_psi", c.d_psi);
  get("d_phi", c.d_phi);
  get("depth_u", c.depth_u);
  get("knn_k", c.knn_k);
  get("lr", c.lr);
  get("lambda", c.lambda);
  get("dropout", c.dropout);
  get("c0", c.c0);
  get("seed", c.seed);
  get("no_dshf", c.no_dshf);
  get("no_akcl", c.no_akcl);
  get("graph_refresh_epochs", c.graph_refresh_epochs);
  get("ae_hidden", c.ae_hidden);
  get("metrics_every", c.metrics_every);
  get("can_sigmoid", c.can_sigmoid);
  get("kmeans_restarts", c.kmeans_restarts);
  get("kmeans_max_iter", c.kmeans_max_iter);
  get("precision", c.precision);
  if (j.contains("denominator_scope")) {
    std::string s = j["denominator_scope"].get<std::string>();
    if (s == "batch")
      c.denominator_scope = DenominatorScope::kBatch;
    else if (s == "full")
      c.denominator_scope = DenominatorScope::kFull;
    else
      throw ConfigError("denominator_scope must be \"batch\" or \"full\"");
  }
  if (j.contains("nmi_norm")) {
    std::string s = j["nmi_norm"].get<std::string>();
    if (s == "geometric")
      c.nmi_norm = NmiNorm::kGeometric;
    else if (s == "arithmetic")
      c.nmi_norm = NmiNorm::kArithmetic;
    else
      throw ConfigError("nmi_norm must be \"geometric\" or \"arithmetic\"");
  }
  c.validate();
  return c;
}

void save_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config file " + path);
  out << to_json(cfg).dump(2) << "\n";
}

std::string config_to_json(const RunConfig& cfg) { return to_json(cfg).dump(2); }

}  // namespace thcrl
