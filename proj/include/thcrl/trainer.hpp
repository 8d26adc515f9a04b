#pragma once

// Two-phase training orchestration. Pretraining minimizes the reconstruction
// loss alone; fine-tuning builds the averaged KNN graph from the pretrained
// latents and minimizes L_Rec + lambda * L_Akc. Every random stream (init,
// shuffles, dropout, K-Means) is forked deterministically from the run seed.

#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "thcrl/cluster.hpp"
#include "thcrl/config.hpp"
#include "thcrl/dataset.hpp"
#include "thcrl/graph.hpp"
#include "thcrl/model.hpp"
#include "thcrl/runio.hpp"

namespace thcrl {

struct EvalOutput {
  bool has_metrics = false;
  MetricReport report;
  Matrix embeddings;  // N x d_phi
  ClusterResult clusters;
  int64_t k = 0;
};

namespace detail {
inline uint64_t stream_seed(uint64_t seed, uint64_t tag, uint64_t index) {
  return Rng(seed).fork(tag).fork(index).seed();
}
constexpr uint64_t kShufflePretrain = 0xA1;
constexpr uint64_t kShuffleFinetune = 0xA2;
constexpr uint64_t kDropoutPretrain = 0xD1;
constexpr uint64_t kDropoutFinetune = 0xD2;
}  // namespace detail

template <typename T>
class TrainerT {
 public:
  // The dataset is expected to be normalized by the caller (the CLI applies
  // min-max normalization right after loading).
  TrainerT(MultiViewDataset ds, RunConfig cfg) : ds_(std::move(ds)), cfg_(std::move(cfg)) {
    cfg_.validate();
    ds_.validate();
    if (!cfg_.no_akcl && cfg_.knn_k >= ds_.n_samples)
      throw ConfigError("knn_k = " + std::to_string(cfg_.knn_k) + " must be < n_samples = " +
                        std::to_string(ds_.n_samples));
    model_ = ThcrlModelT<T>(cfg_, ds_.view_dims, cfg_.seed);
  }

  // Resume from a checkpoint: arch fields come from the checkpoint meta.
  TrainerT(MultiViewDataset ds, RunConfig cfg, const std::string& checkpoint_base)
      : ds_(std::move(ds)), cfg_(std::move(cfg)) {
    model_ = ThcrlModelT<T>::load(checkpoint_base);
    cfg_.d_psi = model_.d_psi;
    cfg_.d_phi = model_.d_phi;
    cfg_.depth_u = model_.depth_u;
    cfg_.c0 = model_.c0;
    cfg_.ae_hidden = model_.ae_hidden;
    cfg_.dropout = model_.dropout;
    cfg_.can_sigmoid = model_.can_sigmoid;
    cfg_.validate();
    ds_.validate();
    if (int64_t(ds_.view_dims.size()) != model_.n_views() || ds_.view_dims != model_.view_dims)
      throw ConfigError("checkpoint " + checkpoint_base + " was trained on view dims that do not match the dataset");
    if (!cfg_.no_akcl && cfg_.knn_k >= ds_.n_samples)
      throw ConfigError("knn_k must be < n_samples");
  }

  // Phase 1: T_p epochs of reconstruction-only training over the view
  // autoencoders.
  void pretrain() {
    AdamT<T> opt(model_.ae_params(), T(cfg_.lr));
    Rng dropout_rng =
        Rng(detail::stream_seed(cfg_.seed, detail::kDropoutPretrain, 0));
    for (int64_t epoch = 1; epoch <= cfg_.pretrain_epochs; ++epoch) {
      auto t0 = std::chrono::steady_clock::now();
      BatchPlan plan = plan_batches(
          ds_.n_samples, cfg_.batch_size,
          detail::stream_seed(cfg_.seed, detail::kShufflePretrain, uint64_t(epoch)));
      double epoch_rec = 0.0;
      for (size_t bi = 0; bi < plan.n_batches(); ++bi) {
        auto idx = plan.batch(bi);
        auto xs = gather_views(idx);
        opt.zero_grad();
        TapeT<T> tape;
        {
          TapeScopeT<T> scope(tape);
          ForwardCtx ctx{true, &dropout_rng};
          auto loss = reconstruction_loss(model_.aes, xs, ctx);
          double value = double(loss.item());
          if (!std::isfinite(value))
            throw Error("pretrain diverged: non-finite loss at epoch " + std::to_string(epoch) +
                        ", batch " + std::to_string(bi));
          epoch_rec += value;
          tape.backward(loss);
        }
        opt.step();
      }
      RunLogRow row;
      row.epoch = epoch;
      row.phase = "pretrain";
      row.loss_rec = epoch_rec;
      row.loss_total = epoch_rec;
      row.wall_ms = elapsed_ms(t0);
      log_.rows.push_back(std::move(row));
    }
  }

  // Phase 2: build the neighbor graph from the pretrained latents, then T_f
  // epochs of the combined objective.
  void finetune() {
    const bool use_akcl = !cfg_.no_akcl && cfg_.lambda > 0.0;
    if (!cfg_.no_akcl) build_graph();
    AdamT<T> opt(model_.params(), T(cfg_.lr));
    Rng dropout_rng =
        Rng(detail::stream_seed(cfg_.seed, detail::kDropoutFinetune, 0));
    std::vector<int64_t> all(static_cast<size_t>(ds_.n_samples), 0);
    std::iota(all.begin(), all.end(), 0);

    for (int64_t epoch = 1; epoch <= cfg_.finetune_epochs; ++epoch) {
      auto t0 = std::chrono::steady_clock::now();
      if (!cfg_.no_akcl && cfg_.graph_refresh_epochs > 0 && epoch > 1 &&
          (epoch - 1) % cfg_.graph_refresh_epochs == 0)
        build_graph();
      BatchPlan plan = plan_batches(
          ds_.n_samples, cfg_.batch_size,
          detail::stream_seed(cfg_.seed, detail::kShuffleFinetune, uint64_t(epoch)));
      double epoch_rec = 0.0, epoch_akc = 0.0;
      for (size_t bi = 0; bi < plan.n_batches(); ++bi) {
        auto idx = plan.batch(bi);
        opt.zero_grad();
        TapeT<T> tape;
        {
          TapeScopeT<T> scope(tape);
          ForwardCtx ctx{true, &dropout_rng};
          TensorT<T> loss_rec, loss_akc, loss;
          if (use_akcl && cfg_.denominator_scope == DenominatorScope::kFull) {
            auto xs_all = gather_views(all);
            auto zs_all = model_.encode_views(xs_all, ctx);
            std::vector<TensorT<T>> h_views;
            for (size_t m = 0; m < zs_all.size(); ++m)
              h_views.push_back(model_.heads.project_view(m, zs_all[m]));
            std::vector<TensorT<T>> zs_batch, xs_batch = gather_views(idx);
            for (auto& z : zs_all) zs_batch.push_back(take_rows(z, idx));
            loss_rec = decode_loss(zs_batch, xs_batch, ctx);
            auto fused = model_.fuse(zs_batch, !cfg_.no_dshf);
            auto h_hat = model_.heads.project_fused(fused);
            loss_akc = akcl_loss(h_hat, h_views, graph_.dense_rows(idx), idx, cfg_.tau,
                                 &akcl_stats_);
            loss = total_loss(loss_rec, loss_akc, cfg_.lambda);
          } else if (use_akcl) {
            auto xs = gather_views(idx);
            auto zs = model_.encode_views(xs, ctx);
            loss_rec = decode_loss(zs, xs, ctx);
            auto fused = model_.fuse(zs, !cfg_.no_dshf);
            auto h_hat = model_.heads.project_fused(fused);
            std::vector<TensorT<T>> h_views;
            for (size_t m = 0; m < zs.size(); ++m)
              h_views.push_back(model_.heads.project_view(m, zs[m]));
            loss_akc = akcl_loss(h_hat, h_views, graph_.dense_slice(idx), cfg_.tau, &akcl_stats_);
            loss = total_loss(loss_rec, loss_akc, cfg_.lambda);
          } else {
            auto xs = gather_views(idx);
            auto zs = model_.encode_views(xs, ctx);
            loss_rec = decode_loss(zs, xs, ctx);
            loss = loss_rec;
          }
          double value = double(loss.item());
          if (!std::isfinite(value))
            throw Error("finetune diverged: non-finite loss at epoch " + std::to_string(epoch) +
                        ", batch " + std::to_string(bi));
          epoch_rec += double(loss_rec.item());
          if (use_akcl) epoch_akc += double(loss_akc.item());
          tape.backward(loss);
        }
        opt.step();
      }
      RunLogRow row;
      row.epoch = epoch;
      row.phase = "finetune";
      row.loss_rec = epoch_rec;
      row.has_akc = use_akcl;
      row.loss_akc = epoch_akc;
      row.loss_total = epoch_rec + cfg_.lambda * epoch_akc;
      if (ds_.labels && (epoch % cfg_.metrics_every == 0 || epoch == cfg_.finetune_epochs)) {
        EvalOutput ev = evaluate();
        row.has_metrics = ev.has_metrics;
        row.acc = ev.report.acc;
        row.nmi = ev.report.nmi;
        row.pur = ev.report.pur;
      }
      row.wall_ms = elapsed_ms(t0);
      log_.rows.push_back(std::move(row));
    }
  }

  // Full-dataset eval-mode forward, K-Means on the fused projection, metrics
  // when labels exist.
  EvalOutput evaluate() const {
    ForwardCtx ctx{false, nullptr};
    std::vector<int64_t> all(static_cast<size_t>(ds_.n_samples), 0);
    std::iota(all.begin(), all.end(), 0);
    auto xs = gather_views(all);
    auto zs = model_.encode_views(xs, ctx);
    auto fused = model_.fuse(zs, !cfg_.no_dshf);
    auto h_hat = model_.heads.project_fused(fused);

    EvalOutput out;
    out.embeddings = Matrix(h_hat.shape()[0], h_hat.shape()[1]);
    for (size_t i = 0; i < h_hat.value().size(); ++i) out.embeddings.a[i] = double(h_hat.value()[i]);
    if (ds_.labels) {
      out.k = ds_.n_classes();
      out.clusters = kmeans(out.embeddings, out.k, cfg_.seed, cfg_.kmeans_max_iter,
                            cfg_.kmeans_restarts);
      out.report = evaluate_clustering(out.clusters.assignments, *ds_.labels, cfg_.nmi_norm);
      out.has_metrics = true;
    }
    return out;
  }

  void save(const std::string& base) const { model_.save(base); }

  const RunLog& log() const { return log_; }
  RunLog& log() { return log_; }
  ThcrlModelT<T>& model() { return model_; }
  const ThcrlModelT<T>& model() const { return model_; }
  const NeighborGraph& graph() const { return graph_; }
  const AkclStats& akcl_stats() const { return akcl_stats_; }
  const RunConfig& config() const { return cfg_; }
  const MultiViewDataset& dataset() const { return ds_; }

  // Per-view latent matrices in eval mode (graph construction, diagnostics).
  std::vector<Matrix> latents() const {
    ForwardCtx ctx{false, nullptr};
    std::vector<int64_t> all(static_cast<size_t>(ds_.n_samples), 0);
    std::iota(all.begin(), all.end(), 0);
    auto xs = gather_views(all);
    auto zs = model_.encode_views(xs, ctx);
    std::vector<Matrix> out;
    for (auto& z : zs) {
      Matrix m(z.shape()[0], z.shape()[1]);
      for (size_t i = 0; i < z.value().size(); ++i) m.a[i] = double(z.value()[i]);
      out.push_back(std::move(m));
    }
    return out;
  }

 private:
  double elapsed_ms(std::chrono::steady_clock::time_point t0) const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
  }

  std::vector<TensorT<T>> gather_views(const std::vector<int64_t>& idx) const {
    std::vector<TensorT<T>> xs;
    xs.reserve(static_cast<size_t>(ds_.n_views()));
    for (int64_t m = 0; m < ds_.n_views(); ++m) {
      const Matrix& v = ds_.views[size_t(m)];
      TensorT<T> x({int64_t(idx.size()), v.cols});
      for (size_t r = 0; r < idx.size(); ++r)
        for (int64_t c = 0; c < v.cols; ++c)
          x.value()[r * size_t(v.cols) + size_t(c)] = T(v.at(idx[r], c));
      xs.push_back(std::move(x));
    }
    return xs;
  }

  TensorT<T> decode_loss(const std::vector<TensorT<T>>& zs, const std::vector<TensorT<T>>& xs,
                         const ForwardCtx& ctx) const {
    std::vector<TensorT<T>> xhats;
    xhats.reserve(zs.size());
    for (size_t m = 0; m < zs.size(); ++m) xhats.push_back(model_.aes[m].decode(zs[m], ctx));
    return reconstruction_loss_from(xs, xhats);
  }

  void build_graph() {
    auto zs = latents();
    std::vector<std::vector<std::vector<int64_t>>> per_view;
    per_view.reserve(zs.size());
    for (const auto& z : zs) per_view.push_back(knn_adjacency(z, cfg_.knn_k));
    graph_ = average_graph(per_view);
  }

  MultiViewDataset ds_;
  RunConfig cfg_;
  ThcrlModelT<T> model_;
  RunLog log_;
  NeighborGraph graph_;
  AkclStats akcl_stats_;
};

struct SweepRow {
  double lambda = 0.0, tau = 0.0;
  MetricReport report;
};

// One full pretrain+finetune+evaluate run per (lambda, tau) grid point, all
// from the same seed.
template <typename T>
std::vector<SweepRow> sweep(const MultiViewDataset& ds, const RunConfig& base,
                            const std::vector<double>& lambdas, const std::vector<double>& taus,
                            std::ostream* progress = nullptr) {
  if (lambdas.empty() || taus.empty()) throw ConfigError("sweep: grids must be nonempty");
  std::vector<SweepRow> rows;
  for (double lambda : lambdas) {
    for (double tau : taus) {
      RunConfig cfg = base;
      cfg.lambda = lambda;
      cfg.tau = tau;
      TrainerT<T> trainer(ds, cfg);
      trainer.pretrain();
      trainer.finetune();
      EvalOutput ev = trainer.evaluate();
      rows.push_back({lambda, tau, ev.report});
      if (progress)
        (*progress) << "lambda=" << lambda << " tau=" << tau << " acc=" << ev.report.acc
                    << " nmi=" << ev.report.nmi << " pur=" << ev.report.pur << "\n";
    }
  }
  return rows;
}

}  // namespace thcrl
