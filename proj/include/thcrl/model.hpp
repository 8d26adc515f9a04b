#pragma once

#include <string>
#include <vector>

#include "thcrl/akcl.hpp"
#include "thcrl/autoencoder.hpp"
#include "thcrl/checkpoint.hpp"
#include "thcrl/config.hpp"
#include "thcrl/dshf.hpp"

namespace thcrl {

// The full parameter bundle: per-view autoencoders, the fusion network and
// the projection heads. Each component draws from its own forked rng stream,
// so perturbing one view's autoencoder cannot shift another's init.
template <typename T>
struct ThcrlModelT {
  std::vector<int64_t> view_dims;
  int64_t d_psi = 0, d_phi = 0, depth_u = 0, c0 = 0;
  std::vector<int64_t> ae_hidden;
  double dropout = 0.0;
  bool can_sigmoid = true;

  std::vector<ViewAutoencoderT<T>> aes;
  DshfNetworkT<T> dshf;
  ProjectionHeadsT<T> heads;

  ThcrlModelT() = default;

  ThcrlModelT(std::vector<int64_t> view_dims_, int64_t d_psi_, int64_t d_phi_, int64_t depth_u_,
              int64_t c0_, std::vector<int64_t> ae_hidden_, double dropout_, bool can_sigmoid_,
              uint64_t seed)
      : view_dims(std::move(view_dims_)),
        d_psi(d_psi_),
        d_phi(d_phi_),
        depth_u(depth_u_),
        c0(c0_),
        ae_hidden(std::move(ae_hidden_)),
        dropout(dropout_),
        can_sigmoid(can_sigmoid_) {
    Rng root(seed);
    for (size_t m = 0; m < view_dims.size(); ++m) {
      Rng stream = root.fork(uint64_t(m));
      aes.emplace_back(int64_t(m), view_dims[m], ae_hidden, d_psi, dropout, stream);
    }
    Rng dshf_stream = root.fork(1000);
    dshf = DshfNetworkT<T>(int64_t(view_dims.size()), d_psi, depth_u, c0, can_sigmoid,
                           dshf_stream);
    Rng head_stream = root.fork(2000);
    heads = ProjectionHeadsT<T>(int64_t(view_dims.size()), d_psi, d_phi, head_stream);
  }

  ThcrlModelT(const RunConfig& cfg, const std::vector<int64_t>& dims, uint64_t seed)
      : ThcrlModelT(dims, cfg.d_psi, cfg.d_phi, cfg.depth_u, cfg.c0, cfg.ae_hidden, cfg.dropout,
                    cfg.can_sigmoid, seed) {}

  int64_t n_views() const { return int64_t(aes.size()); }

  std::vector<TensorT<T>> encode_views(const std::vector<TensorT<T>>& xs,
                                       const ForwardCtx& ctx) const {
    if (int64_t(xs.size()) != n_views())
      throw ContractError("encode_views: expected " + std::to_string(n_views()) + " views");
    std::vector<TensorT<T>> zs;
    zs.reserve(xs.size());
    for (size_t m = 0; m < xs.size(); ++m) zs.push_back(aes[m].encode(xs[m], ctx));
    return zs;
  }

  TensorT<T> fuse(const std::vector<TensorT<T>>& z_views, bool use_dshf) const {
    return use_dshf ? dshf.forward(z_views) : concat_fallback(z_views);
  }

  NamedParams<T> named_params() const {
    NamedParams<T> out;
    for (size_t m = 0; m < aes.size(); ++m) aes[m].collect("ae" + std::to_string(m), out);
    dshf.collect("dshf", out);
    heads.collect("heads", out);
    return out;
  }

  std::vector<TensorT<T>> params() const {
    std::vector<TensorT<T>> out;
    for (auto& [name, t] : named_params()) out.push_back(t);
    return out;
  }

  std::vector<TensorT<T>> ae_params() const {
    NamedParams<T> named;
    for (size_t m = 0; m < aes.size(); ++m) aes[m].collect("ae" + std::to_string(m), named);
    std::vector<TensorT<T>> out;
    for (auto& [name, t] : named) out.push_back(t);
    return out;
  }

  nlohmann::json meta() const {
    nlohmann::json j;
    j["view_dims"] = view_dims;
    j["d_psi"] = d_psi;
    j["d_phi"] = d_phi;
    j["depth_u"] = depth_u;
    j["c0"] = c0;
    j["ae_hidden"] = ae_hidden;
    j["dropout"] = dropout;
    j["can_sigmoid"] = can_sigmoid;
    return j;
  }

  void save(const std::string& base) const { save_checkpoint(base, named_params(), meta()); }

  static ThcrlModelT load(const std::string& base) {
    nlohmann::json meta = read_checkpoint_index(base)["meta"];
    ThcrlModelT model(meta["view_dims"].get<std::vector<int64_t>>(),
                      meta["d_psi"].get<int64_t>(), meta["d_phi"].get<int64_t>(),
                      meta["depth_u"].get<int64_t>(), meta["c0"].get<int64_t>(),
                      meta["ae_hidden"].get<std::vector<int64_t>>(), meta["dropout"].get<double>(),
                      meta["can_sigmoid"].get<bool>(), /*seed=*/0);
    load_checkpoint(base, model.named_params());
    return model;
  }
};

}  // namespace thcrl
