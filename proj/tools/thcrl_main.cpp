// Batch CLI for the multi-view clustering pipeline: synthetic data
// generation, two-phase training, evaluation with metric/embedding export,
// and the lambda/tau grid sweep.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "thcrl/runio.hpp"
#include "thcrl/trainer.hpp"

namespace fs = std::filesystem;
using namespace thcrl;

namespace {

struct Opts {
  std::string data, out, checkpoint, config_path;
  RunConfig cfg;
  std::string denominator_scope = "batch";
  std::string nmi_norm = "geometric";
  bool export_graph = false;

  // gen
  int64_t gen_n = 600;
  int64_t gen_clusters = 3;
  std::vector<int64_t> gen_dims = {3, 3, 3};
  std::vector<double> gen_sigmas = {0.1, 0.1, 0.1};

  // sweep
  std::vector<double> lambda_grid = {1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3};
  std::vector<double> tau_grid = {0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
};

void add_run_config_flags(CLI::App* cmd, Opts& o) {
  cmd->add_option("--config", o.config_path, "JSON config file; explicit flags override it");
  cmd->add_option("--batch-size", o.cfg.batch_size, "mini-batch size b");
  cmd->add_option("--pretrain-epochs", o.cfg.pretrain_epochs, "T_p");
  cmd->add_option("--finetune-epochs", o.cfg.finetune_epochs, "T_f");
  cmd->add_option("--tau", o.cfg.tau, "contrastive temperature");
  cmd->add_option("--lambda", o.cfg.lambda, "loss balance coefficient");
  cmd->add_option("--d-psi", o.cfg.d_psi, "view latent width");
  cmd->add_option("--d-phi", o.cfg.d_phi, "projection head width");
  cmd->add_option("--depth-u", o.cfg.depth_u, "fusion network depth U");
  cmd->add_option("--c0", o.cfg.c0, "fusion base channels");
  cmd->add_option("--knn-k", o.cfg.knn_k, "neighbors per node in the averaged graph");
  cmd->add_option("--lr", o.cfg.lr, "Adam learning rate");
  cmd->add_option("--dropout", o.cfg.dropout, "dropout probability");
  cmd->add_option("--seed", o.cfg.seed, "run seed");
  cmd->add_option("--ae-hidden", o.cfg.ae_hidden, "autoencoder hidden widths")->delimiter(',');
  cmd->add_option("--metrics-every", o.cfg.metrics_every, "evaluate every n finetune epochs");
  cmd->add_option("--graph-refresh", o.cfg.graph_refresh_epochs,
                  "rebuild the graph every R finetune epochs (0 = never)");
  cmd->add_option("--kmeans-restarts", o.cfg.kmeans_restarts, "K-Means restarts");
  cmd->add_flag("--no-dshf", o.cfg.no_dshf, "ablation: concatenate latents instead of fusing");
  cmd->add_flag("--no-akcl", o.cfg.no_akcl, "ablation: reconstruction-only fine-tuning");
  cmd->add_option("--precision", o.cfg.precision, "f32 or f64")
      ->check(CLI::IsMember({"f32", "f64"}));
  cmd->add_option("--denominator-scope", o.denominator_scope,
                  "contrastive denominator over the batch or the full dataset")
      ->check(CLI::IsMember({"batch", "full"}));
  cmd->add_option("--nmi-norm", o.nmi_norm, "NMI normalization variant")
      ->check(CLI::IsMember({"geometric", "arithmetic"}));
}

// Config file first, explicit flags second.
RunConfig resolve_config(CLI::App* cmd, const Opts& o) {
  RunConfig cfg = o.cfg;
  if (!o.config_path.empty()) {
    cfg = load_config(o.config_path);
    auto keep = [&](const char* flag, auto member, auto value) {
      if (cmd->count(flag)) cfg.*member = value;
    };
    keep("--batch-size", &RunConfig::batch_size, o.cfg.batch_size);
    keep("--pretrain-epochs", &RunConfig::pretrain_epochs, o.cfg.pretrain_epochs);
    keep("--finetune-epochs", &RunConfig::finetune_epochs, o.cfg.finetune_epochs);
    keep("--tau", &RunConfig::tau, o.cfg.tau);
    keep("--lambda", &RunConfig::lambda, o.cfg.lambda);
    keep("--d-psi", &RunConfig::d_psi, o.cfg.d_psi);
    keep("--d-phi", &RunConfig::d_phi, o.cfg.d_phi);
    keep("--depth-u", &RunConfig::depth_u, o.cfg.depth_u);
    keep("--c0", &RunConfig::c0, o.cfg.c0);
    keep("--knn-k", &RunConfig::knn_k, o.cfg.knn_k);
    keep("--lr", &RunConfig::lr, o.cfg.lr);
    keep("--dropout", &RunConfig::dropout, o.cfg.dropout);
    keep("--seed", &RunConfig::seed, o.cfg.seed);
    keep("--ae-hidden", &RunConfig::ae_hidden, o.cfg.ae_hidden);
    keep("--metrics-every", &RunConfig::metrics_every, o.cfg.metrics_every);
    keep("--graph-refresh", &RunConfig::graph_refresh_epochs, o.cfg.graph_refresh_epochs);
    keep("--kmeans-restarts", &RunConfig::kmeans_restarts, o.cfg.kmeans_restarts);
    keep("--precision", &RunConfig::precision, o.cfg.precision);
    if (cmd->count("--no-dshf")) cfg.no_dshf = o.cfg.no_dshf;
    if (cmd->count("--no-akcl")) cfg.no_akcl = o.cfg.no_akcl;
  }
  if (o.config_path.empty() || cmd->count("--denominator-scope"))
    cfg.denominator_scope =
        o.denominator_scope == "full" ? DenominatorScope::kFull : DenominatorScope::kBatch;
  if (o.config_path.empty() || cmd->count("--nmi-norm"))
    cfg.nmi_norm = o.nmi_norm == "arithmetic" ? NmiNorm::kArithmetic : NmiNorm::kGeometric;
  cfg.validate();
  return cfg;
}

void write_eval_outputs(const EvalOutput& ev, const std::string& out) {
  write_embeddings_f32(out + "/embeddings.f32", ev.embeddings);
  if (ev.has_metrics) {
    std::printf("acc=%.6f nmi=%.6f pur=%.6f\n", ev.report.acc, ev.report.nmi, ev.report.pur);
    write_metrics_json(out + "/metrics.json", ev.report, ev.k, ev.clusters.inertia,
                       ev.clusters.n_iter);
  } else {
    std::printf("dataset has no labels; metrics skipped, embeddings exported\n");
  }
}

template <typename T>
int run_phases(const Opts& o, RunConfig cfg, bool do_pretrain, bool do_finetune, bool do_eval) {
  auto ds = min_max_normalize(load_dataset(o.data));
  fs::create_directories(o.out);

  std::optional<TrainerT<T>> trainer;
  if (!o.checkpoint.empty())
    trainer.emplace(std::move(ds), cfg, o.checkpoint);
  else
    trainer.emplace(std::move(ds), cfg);

  if (do_pretrain) {
    trainer->pretrain();
    trainer->save(o.out + "/checkpoint_pretrain");
  }
  if (do_finetune) {
    trainer->finetune();
    trainer->save(o.out + "/checkpoint");
    if (!cfg.no_dshf) {
      std::ofstream shapes(o.out + "/dshf_shapes.txt");
      shapes << trainer->model().dshf.shape_trace();
    }
    if (o.export_graph && !cfg.no_akcl) {
      std::ofstream graph(o.out + "/graph.tsv");
      trainer->graph().export_text(graph);
    }
  }
  if (do_pretrain || do_finetune) {
    trainer->log().write_csv(o.out + "/runlog.csv");
    save_config(trainer->config(), o.out + "/config.json");
  }
  if (do_eval) write_eval_outputs(trainer->evaluate(), o.out);
  return 0;
}

template <typename T>
int run_sweep(const Opts& o, RunConfig cfg) {
  auto ds = min_max_normalize(load_dataset(o.data));
  fs::create_directories(o.out);
  auto rows = sweep<T>(ds, cfg, o.lambda_grid, o.tau_grid, &std::cout);
  std::ofstream csv(o.out + "/sweep.csv");
  csv << "lambda,tau,acc,nmi,pur\n";
  for (const auto& r : rows)
    csv << format_double(r.lambda) << ',' << format_double(r.tau) << ','
        << format_double(r.report.acc) << ',' << format_double(r.report.nmi) << ','
        << format_double(r.report.pur) << '\n';
  return 0;
}

int dispatch(const Opts& o, const RunConfig& cfg, bool pre, bool fine, bool eval, bool is_sweep) {
  if (cfg.precision == "f32")
    return is_sweep ? run_sweep<float>(o, cfg) : run_phases<float>(o, cfg, pre, fine, eval);
  return is_sweep ? run_sweep<double>(o, cfg) : run_phases<double>(o, cfg, pre, fine, eval);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"THCRL: trusted hierarchical contrastive multi-view clustering"};
  app.require_subcommand(1);
  Opts o;

  auto* gen = app.add_subcommand("gen", "generate a synthetic multi-view dataset");
  gen->add_option("--out", o.out, "output dataset directory")->required();
  gen->add_option("--n", o.gen_n, "sample count");
  gen->add_option("--clusters", o.gen_clusters, "cluster count");
  gen->add_option("--dims", o.gen_dims, "per-view feature dims")->delimiter(',');
  gen->add_option("--sigmas", o.gen_sigmas, "per-view noise sigmas")->delimiter(',');
  gen->add_option("--seed", o.cfg.seed, "generator seed");

  auto* pretrain = app.add_subcommand("pretrain", "phase 1: reconstruction-only training");
  auto* finetune = app.add_subcommand("finetune", "phase 2: combined objective from a checkpoint");
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint: K-Means + metrics + embeddings");
  auto* run = app.add_subcommand("run", "pretrain, finetune and evaluate in one go");
  auto* sweep_cmd = app.add_subcommand("sweep", "grid sweep over lambda and tau");

  for (auto* cmd : {pretrain, finetune, eval, run, sweep_cmd}) {
    cmd->add_option("--data", o.data, "dataset directory")->required();
    cmd->add_option("--out", o.out, "output directory")->required();
    add_run_config_flags(cmd, o);
  }
  for (auto* cmd : {finetune, eval})
    cmd->add_option("--checkpoint", o.checkpoint, "checkpoint base path (no extension)")
        ->required();
  finetune->add_flag("--export-graph", o.export_graph, "write the averaged KNN graph as graph.tsv");
  sweep_cmd->add_option("--lambda-grid", o.lambda_grid, "lambda grid")->delimiter(',');
  sweep_cmd->add_option("--tau-grid", o.tau_grid, "tau grid")->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      auto ds = make_synthetic(o.gen_n, o.gen_clusters, o.gen_dims, o.gen_sigmas, o.cfg.seed);
      save_dataset(ds, o.out);
      std::printf("wrote %lld samples, %lld views to %s\n", (long long)ds.n_samples,
                  (long long)ds.n_views(), o.out.c_str());
      return 0;
    }
    if (pretrain->parsed())
      return dispatch(o, resolve_config(pretrain, o), true, false, false, false);
    if (finetune->parsed())
      return dispatch(o, resolve_config(finetune, o), false, true, false, false);
    if (eval->parsed()) return dispatch(o, resolve_config(eval, o), false, false, true, false);
    if (run->parsed()) return dispatch(o, resolve_config(run, o), true, true, true, false);
    if (sweep_cmd->parsed())
      return dispatch(o, resolve_config(sweep_cmd, o), false, false, false, true);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
