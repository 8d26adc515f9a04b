#pragma once

// Deep symmetric hierarchical fusion: the M view latents are treated as M
// channels of a length-d_psi signal and pushed through a 1-D UNet built from
// residual convolution blocks with channel attention, plus a learnable
// per-view weighting at the input. Channel/length plan per encoder stage u:
//   C_u = 2^u * C0,          L_u = d_psi / 2^u
// and per decoder step u:
//   C'_u = 2^(U-u) * C0,     L'_u = d_psi / 2^(U-u),
//   concat input C''_u = 2^(U-u) C0 + 2^(U-u+1) C0.

#include <sstream>
#include <string>
#include <vector>

#include "thcrl/nn.hpp"

namespace thcrl {

// Channel attention: gate = mlp(channel mean over length), applied back onto
// the input channels. Gate hidden width is C/reduction floored at 4; the
// final sigmoid keeps gates in (0,1) (switchable to a linear gate).
template <typename T>
struct CanT {
  LinearT<T> fc1;
  LinearT<T> fc2;
  bool sigmoid_gate = true;

  CanT() = default;
  CanT(int64_t channels, bool sigmoid_gate_, Rng& rng, int64_t reduction = 4,
       int64_t min_hidden = 4)
      : sigmoid_gate(sigmoid_gate_) {
    int64_t hidden = std::max(channels / reduction, min_hidden);
    fc1 = LinearT<T>(channels, hidden, rng);
    fc2 = LinearT<T>(hidden, channels, rng);
  }

  int64_t channels() const { return fc1.in_dim(); }

  TensorT<T> forward(const TensorT<T>& q) const {
    if (q.rank() != 3 || q.shape()[1] != channels())
      throw ShapeError("channel_attention: expected [B," + std::to_string(channels()) +
                       ",L], got " + shape_str(q.shape()));
    auto pooled = mean_axis(q, 2);  // [B,C]
    auto gate = fc2.forward(relu(fc1.forward(pooled)));
    if (sigmoid_gate) gate = sigmoid(gate);
    return scale_channels(q, gate);
  }

  void collect(const std::string& prefix, NamedParams<T>& out) const {
    fc1.collect(prefix + ".fc1", out);
    fc2.collect(prefix + ".fc2", out);
  }
};

// Residual convolutional block: CAN(conv(conv(o))) + 1x1-conv shortcut.
// Length is preserved (k=3 pad=1 on the main path, k=1 on the shortcut).
template <typename T>
struct RcBlockT {
  Conv1dT<T> conv_a;    // C_in -> C_out, k3 p1
  Conv1dT<T> conv_b;    // C_out -> C_out, k3 p1
  Conv1dT<T> shortcut;  // C_in -> C_out, k1
  CanT<T> can;          // over C_out

  RcBlockT() = default;
  RcBlockT(int64_t c_in, int64_t c_out, bool can_sigmoid, Rng& rng) {
    conv_a = Conv1dT<T>(c_in, c_out, 3, 1, 1, rng);
    conv_b = Conv1dT<T>(c_out, c_out, 3, 1, 1, rng);
    shortcut = Conv1dT<T>(c_in, c_out, 1, 1, 0, rng);
    can = CanT<T>(c_out, can_sigmoid, rng);
  }

  TensorT<T> forward(const TensorT<T>& o) const {
    return add(can.forward(conv_b.forward(conv_a.forward(o))), shortcut.forward(o));
  }

  void collect(const std::string& prefix, NamedParams<T>& out) const {
    conv_a.collect(prefix + ".conv_a", out);
    conv_b.collect(prefix + ".conv_b", out);
    shortcut.collect(prefix + ".shortcut", out);
    can.collect(prefix + ".can", out);
  }
};

struct DshfStageShape {
  std::string name;
  int64_t channels = 0;
  int64_t length = 0;
};

template <typename T>
struct DshfNetworkT {
  int64_t m_views = 0;
  int64_t d_psi = 0;
  int64_t depth = 0;  // U
  int64_t c0 = 0;

  TensorT<T> view_weights;                   // w^a, length M, init ones
  Conv1dT<T> initial_proj;                   // M -> C0, k1
  std::vector<RcBlockT<T>> encoder_blocks;   // u: C_u -> C_{u+1}
  RcBlockT<T> bottleneck;                    // C_U -> C_U
  std::vector<ConvTr1dT<T>> up_convs;        // u: C'_u -> C'_{u+1}, k2 s2
  std::vector<RcBlockT<T>> decoder_blocks;   // u: C''_{u+1} -> C'_{u+1}
  Conv1dT<T> final_proj;                     // C0 -> M, k1

  std::vector<DshfStageShape> plan;  // static per-sample stage shapes

  DshfNetworkT() = default;

  DshfNetworkT(int64_t m_views_, int64_t d_psi_, int64_t depth_, int64_t c0_, bool can_sigmoid,
               Rng& rng)
      : m_views(m_views_), d_psi(d_psi_), depth(depth_), c0(c0_) {
    if (m_views < 1) throw ConfigError("dshf: need at least one view");
    if (depth < 1) throw ConfigError("dshf: depth U must be >= 1");
    if (d_psi % (int64_t(1) << depth) != 0)
      throw ConfigError("dshf: d_psi = " + std::to_string(d_psi) +
                        " must be divisible by 2^U = " + std::to_string(int64_t(1) << depth));

    view_weights = TensorT<T>::full({m_views}, T(1), true);
    initial_proj = Conv1dT<T>(m_views, c0, 1, 1, 0, rng);
    for (int64_t u = 0; u < depth; ++u)
      encoder_blocks.emplace_back(channels_enc(u), channels_enc(u + 1), can_sigmoid, rng);
    bottleneck = RcBlockT<T>(channels_enc(depth), channels_enc(depth), can_sigmoid, rng);
    for (int64_t u = 0; u < depth; ++u)
      up_convs.emplace_back(channels_dec(u), channels_dec(u + 1), 2, 2, rng);
    for (int64_t u = 0; u < depth; ++u)
      decoder_blocks.emplace_back(channels_dec(u + 1) + channels_enc(depth - u),
                                  channels_dec(u + 1), can_sigmoid, rng);
    final_proj = Conv1dT<T>(c0, m_views, 1, 1, 0, rng);
    build_plan();
  }

  int64_t channels_enc(int64_t u) const { return (int64_t(1) << u) * c0; }         // C_u
  int64_t channels_dec(int64_t u) const { return (int64_t(1) << (depth - u)) * c0; }  // C'_u
  int64_t length_enc(int64_t u) const { return d_psi >> u; }                       // L_u
  int64_t length_dec(int64_t u) const { return d_psi >> (depth - u); }             // L'_u

  struct ForwardOpts {
    int64_t zero_skip = -1;  // diagnostic: zero out skip p^(zero_skip), 1-based
    std::vector<DshfStageShape>* trace = nullptr;  // actual per-stage shapes (C,L)
  };

  // z_views: M tensors [b, d_psi]  ->  fused [b, M*d_psi]
  TensorT<T> forward(const std::vector<TensorT<T>>& z_views,
                     const ForwardOpts* opts = nullptr) const {
    if (int64_t(z_views.size()) != m_views)
      throw ShapeError("dshf_forward: expected " + std::to_string(m_views) + " views, got " +
                       std::to_string(z_views.size()));
    for (const auto& z : z_views)
      if (z.rank() != 2 || z.shape()[1] != d_psi || z.shape()[0] != z_views[0].shape()[0])
        throw ShapeError("dshf_forward: every view must be [b," + std::to_string(d_psi) +
                         "], got " + shape_str(z.shape()));
    auto trace_push = [&](const char* name, const TensorT<T>& t) {
      if (opts && opts->trace) opts->trace->push_back({name, t.shape()[1], t.shape()[2]});
    };

    auto stacked = stack_rows(z_views);  // [b, M, d_psi]
    trace_push("stack", stacked);
    auto attended = scale_channels_vec(stacked, view_weights);
    trace_push("view_attention", attended);
    auto z0 = initial_proj.forward(attended);  // [b, C0, d_psi]
    trace_push("initial_proj", z0);

    std::vector<TensorT<T>> skips;  // p^(1) ... p^(U)
    auto z = z0;
    for (int64_t u = 0; u < depth; ++u) {
      auto p = encoder_blocks[size_t(u)].forward(z);
      trace_push(("enc" + std::to_string(u) + ".rcblock").c_str(), p);
      if (opts && opts->zero_skip == u + 1) p = scale(p, T(0));
      skips.push_back(p);
      z = maxpool1d(p, 2);
      trace_push(("enc" + std::to_string(u) + ".pool").c_str(), z);
    }

    auto t = bottleneck.forward(z);  // z^(b), [b, C_U, L_U]
    trace_push("bottleneck", t);

    for (int64_t u = 0; u < depth; ++u) {
      auto e = up_convs[size_t(u)].forward(t);
      trace_push(("dec" + std::to_string(u) + ".upconv").c_str(), e);
      auto xi = concat<T>({e, skips[size_t(depth - u - 1)]}, 1);  // cat(e^(u+1), p^(U-u))
      trace_push(("dec" + std::to_string(u) + ".concat").c_str(), xi);
      t = decoder_blocks[size_t(u)].forward(xi);
      trace_push(("dec" + std::to_string(u) + ".rcblock").c_str(), t);
    }

    auto zhat = final_proj.forward(add(z0, t));  // [b, M, d_psi]
    trace_push("final_proj", zhat);
    return reshape(zhat, {zhat.shape()[0], m_views * d_psi});
  }

  // Text dump of the static per-sample shape plan, one "name: CxL" per line.
  std::string shape_trace() const {
    std::ostringstream os;
    for (const auto& s : plan) os << s.name << ": " << s.channels << "x" << s.length << "\n";
    return os.str();
  }

  void collect(const std::string& prefix, NamedParams<T>& out) const {
    out.emplace_back(prefix + ".view_weights", view_weights);
    initial_proj.collect(prefix + ".initial_proj", out);
    for (size_t u = 0; u < encoder_blocks.size(); ++u)
      encoder_blocks[u].collect(prefix + ".enc" + std::to_string(u), out);
    bottleneck.collect(prefix + ".bottleneck", out);
    for (size_t u = 0; u < up_convs.size(); ++u)
      up_convs[u].collect(prefix + ".up" + std::to_string(u), out);
    for (size_t u = 0; u < decoder_blocks.size(); ++u)
      decoder_blocks[u].collect(prefix + ".dec" + std::to_string(u), out);
    final_proj.collect(prefix + ".final_proj", out);
  }

 private:
  void build_plan() {
    plan.clear();
    plan.push_back({"stack", m_views, d_psi});
    plan.push_back({"view_attention", m_views, d_psi});
    plan.push_back({"initial_proj", c0, d_psi});
    for (int64_t u = 0; u < depth; ++u) {
      plan.push_back({"enc" + std::to_string(u) + ".rcblock", channels_enc(u + 1), length_enc(u)});
      plan.push_back({"enc" + std::to_string(u) + ".pool", channels_enc(u + 1), length_enc(u + 1)});
    }
    plan.push_back({"bottleneck", channels_enc(depth), length_enc(depth)});
    for (int64_t u = 0; u < depth; ++u) {
      plan.push_back(
          {"dec" + std::to_string(u) + ".upconv", channels_dec(u + 1), length_dec(u + 1)});
      plan.push_back({"dec" + std::to_string(u) + ".concat",
                      channels_dec(u + 1) + channels_enc(depth - u), length_dec(u + 1)});
      plan.push_back(
          {"dec" + std::to_string(u) + ".rcblock", channels_dec(u + 1), length_dec(u + 1)});
    }
    plan.push_back({"final_proj", m_views, d_psi});
  }
};

// "w/o DSHF" ablation path: plain concatenation of the view latents.
template <typename T>
TensorT<T> concat_fallback(const std::vector<TensorT<T>>& z_views) {
  if (z_views.empty()) throw ContractError("concat_fallback: no views");
  for (const auto& z : z_views)
    if (z.rank() != 2 || z.shape()[1] != z_views[0].shape()[1])
      throw ShapeError("concat_fallback: views must share [b,d], got " + shape_str(z.shape()));
  return concat(z_views, 1);
}

}  // namespace thcrl
