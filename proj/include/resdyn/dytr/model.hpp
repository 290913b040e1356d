// Copyright 2026 The resdyn Authors
// SPDX-License-Identifier: Apache-2.0

// Residual networks built from the autodiff kernels. All tensors carry a leading batch
// dimension B; the unbatched shapes of the math are the B = 1 case.
//
//   dytr:      F_enc([s_i, u_i]) + P_s -> encoder x D -> E_f
//              Q = W_q [s_hat_{t+1}, c] + P_q -> cross-attention decoder x D over E_f -> W_o
//   mlp:       F_enc([s_i, u_i, s_hat_{t+1}, c]) -> flatten T*C -> MLP fuse -> MLP head
//   mlp-trans: F_enc([s_i, u_i, s_hat_{t+1}, c]) + P_s -> encoder x D -> mean over T -> linear head

#pragma once

#include <string>
#include <vector>

#include "resdyn/autodiff/ops.hpp"
#include "resdyn/dytr/config.hpp"
#include "resdyn/dytr/params.hpp"

namespace resdyn {

/// Normalized network inputs for B windows.
template <class T>
struct DynamicsBatch {
  std::size_t batch = 0;
  std::size_t seq = 0;
  std::size_t step_dim = kStepDim;
  std::vector<T> steps;   // [B, T, step_dim]
  std::vector<T> next;    // [B, 3]   s_hat_{t+1}
  std::vector<T> config;  // [B, 1]   c

  void check(const DyTRConfig& cfg) const {
    if (seq != cfg.seq_len || step_dim != cfg.step_input_dim() || steps.size() != batch * seq * step_dim ||
        next.size() != batch * kStateDim || config.size() != batch * kConfigDim) {
      throw ad::ShapeError("batch does not match model config (T=" + std::to_string(cfg.seq_len) +
                           ", step_dim=" + std::to_string(cfg.step_input_dim()) + ")");
    }
  }
};

namespace detail {

template <class T>
void add_linear(ModelParams<T>& p, const std::string& name, std::size_t in, std::size_t out, Rng& rng) {
  xavier_uniform(p.add(name + ".w", {in, out}), rng);
  p.add(name + ".b", {out});
}

template <class T>
void add_norm(ModelParams<T>& p, const std::string& name, std::size_t d) {
  p.add(name + ".g", {d}, T(1));
  p.add(name + ".b", {d});
}

template <class T>
void add_block(ModelParams<T>& p, const std::string& name, const DyTRConfig& cfg, Rng& rng) {
  const std::size_t c = cfg.feature_dim;
  for (const char* proj : {".q", ".k", ".v", ".o"}) add_linear(p, name + ".attn" + proj, c, c, rng);
  add_norm(p, name + ".ln1", c);
  add_linear(p, name + ".ff0", c, cfg.ffn(), rng);
  add_linear(p, name + ".ff1", cfg.ffn(), c, rng);
  add_norm(p, name + ".ln2", c);
}

template <class T>
ad::Var<T> lin(const BoundParams<T>& P, const std::string& name, ad::Var<T> x) {
  return ad::linear(x, P(name + ".w"), P(name + ".b"));
}

template <class T>
ad::Var<T> activate(ad::Var<T> x, Activation a) {
  return a == Activation::Relu ? ad::relu(x) : ad::gelu(x);
}

template <class T>
ad::Var<T> norm(const BoundParams<T>& P, const std::string& name, ad::Var<T> x) {
  return ad::layer_norm(x, P(name + ".g"), P(name + ".b"));
}

}  // namespace detail

/// Seeded initialization: Xavier-uniform matrices, zero biases, unit norm gains,
/// U(-0.1, 0.1) positional embeddings.
template <class T>
ModelParams<T> init_params(const DyTRConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng = Rng::derived(seed, 0x5eed);
  ModelParams<T> p;
  const std::size_t c = cfg.feature_dim;
  detail::add_linear(p, "enc.0", cfg.step_input_dim(), c, rng);
  detail::add_linear(p, "enc.1", c, c, rng);
  switch (cfg.kind) {
    case ModelKind::DyTR:
      uniform_fill(p.add("pos_s", {cfg.seq_len, c}), rng, 0.1);
      for (std::size_t l = 0; l < cfg.depth; ++l) detail::add_block(p, "encoder." + std::to_string(l), cfg, rng);
      detail::add_linear(p, "query", kQueryInputDim, c, rng);
      uniform_fill(p.add("pos_q", {1, c}), rng, 0.1);
      for (std::size_t l = 0; l < cfg.depth; ++l) detail::add_block(p, "decoder." + std::to_string(l), cfg, rng);
      detail::add_linear(p, "head", c, kStateDim, rng);
      break;
    case ModelKind::Mlp:
      detail::add_linear(p, "fuse.0", cfg.seq_len * c, c, rng);
      detail::add_linear(p, "fuse.1", c, c, rng);
      detail::add_linear(p, "head.0", c, c, rng);
      detail::add_linear(p, "head.1", c, kStateDim, rng);
      break;
    case ModelKind::MlpTrans:
      uniform_fill(p.add("pos_s", {cfg.seq_len, c}), rng, 0.1);
      for (std::size_t l = 0; l < cfg.depth; ++l) detail::add_block(p, "encoder." + std::to_string(l), cfg, rng);
      detail::add_linear(p, "head", c, kStateDim, rng);
      break;
  }
  return p;
}

/// softmax(q k^T / sqrt(d_h)) v with learned projections; `kv` supplies keys and values.
template <class T>
ad::Var<T> multi_head_attention(const BoundParams<T>& P, const std::string& name, ad::Var<T> q, ad::Var<T> kv,
                                std::size_t heads) {
  auto qp = detail::lin(P, name + ".q", q);
  auto kp = detail::lin(P, name + ".k", kv);
  auto vp = detail::lin(P, name + ".v", kv);
  return detail::lin(P, name + ".o", ad::attention(qp, kp, vp, heads));
}

template <class T>
ad::Var<T> feed_forward(const BoundParams<T>& P, const std::string& name, ad::Var<T> x, const DyTRConfig& cfg) {
  return detail::lin(P, name + ".ff1", detail::activate(detail::lin(P, name + ".ff0", x), cfg.activation));
}

/// Post-norm encoder layer: self-attention, add, norm, FFN, add, norm.
template <class T>
ad::Var<T> encoder_layer(const BoundParams<T>& P, const std::string& name, ad::Var<T> x, const DyTRConfig& cfg) {
  x = detail::norm(P, name + ".ln1", ad::add(x, multi_head_attention(P, name + ".attn", x, x, cfg.num_heads)));
  return detail::norm(P, name + ".ln2", ad::add(x, feed_forward(P, name, x, cfg)));
}

/// Decoder layer for a single query token: cross-attention to `memory`, add, norm, FFN, add, norm.
/// Self-attention over one token is the identity up to its projections and is left out.
template <class T>
ad::Var<T> decoder_layer(const BoundParams<T>& P, const std::string& name, ad::Var<T> q, ad::Var<T> memory,
                         const DyTRConfig& cfg) {
  q = detail::norm(P, name + ".ln1", ad::add(q, multi_head_attention(P, name + ".attn", q, memory, cfg.num_heads)));
  return detail::norm(P, name + ".ln2", ad::add(q, feed_forward(P, name, q, cfg)));
}

/// steps [B, T, in] -> E_s [B, T, C]; the same two-layer MLP at every step.
template <class T>
ad::Var<T> encode_features(const BoundParams<T>& P, ad::Var<T> steps, const DyTRConfig& cfg) {
  return detail::lin(P, "enc.1", detail::activate(detail::lin(P, "enc.0", steps), cfg.activation));
}

/// E_s [B, T, C] -> E_f [B, T, C]: add P_s, then D encoder layers.
template <class T>
ad::Var<T> temporal_fuse(const BoundParams<T>& P, ad::Var<T> e, const DyTRConfig& cfg) {
  e = ad::add_broadcast(e, P("pos_s"));
  for (std::size_t l = 0; l < cfg.depth; ++l) e = encoder_layer(P, "encoder." + std::to_string(l), e, cfg);
  return e;
}

/// next [B, 3], c [B, 1] -> Q [B, 1, C]. Query modes zero the removed inputs.
template <class T>
ad::Var<T> make_query(const BoundParams<T>& P, ad::Var<T> next, ad::Var<T> c, const DyTRConfig& cfg) {
  ad::Var<T> x = ad::concat<T>({next, c}, 1);
  if (cfg.query_mode != QueryMode::Full) {
    const T keep_s = cfg.query_mode == QueryMode::C ? T(1) : T(0);
    const T keep_c = cfg.query_mode == QueryMode::B ? T(1) : T(0);
    x = ad::mul_broadcast(x, P.tape().constant({kQueryInputDim}, {keep_s, keep_s, keep_s, keep_c}));
  }
  const std::size_t batch = x.shape()[0];
  return ad::reshape(detail::lin(P, "query", x), {batch, 1, cfg.feature_dim});
}

/// Q [B, 1, C], E_f [B, T, C] -> Q' [B, 1, C]. P_q is added once, before the first layer.
template <class T>
ad::Var<T> decode_residual(const BoundParams<T>& P, ad::Var<T> q, ad::Var<T> e_f, const DyTRConfig& cfg) {
  q = ad::add_broadcast(q, P("pos_q"));
  for (std::size_t l = 0; l < cfg.depth; ++l) q = decoder_layer(P, "decoder." + std::to_string(l), q, e_f, cfg);
  return q;
}

/// Q' [B, 1, C] -> normalized residual [B, 3].
template <class T>
ad::Var<T> project_residual(const BoundParams<T>& P, ad::Var<T> q) {
  const std::size_t batch = q.shape()[0];
  return detail::lin(P, "head", ad::reshape(q, {batch, q.size() / batch}));
}

template <class T>
ad::Var<T> dytr_forward(const BoundParams<T>& P, ad::Var<T> steps, ad::Var<T> next, ad::Var<T> c,
                        const DyTRConfig& cfg) {
  auto e_f = temporal_fuse(P, encode_features(P, steps, cfg), cfg);
  return project_residual(P, decode_residual(P, make_query(P, next, c, cfg), e_f, cfg));
}

template <class T>
ad::Var<T> baseline_mlp_forward(const BoundParams<T>& P, ad::Var<T> steps, const DyTRConfig& cfg) {
  const std::size_t batch = steps.shape()[0];
  auto e = ad::reshape(encode_features(P, steps, cfg), {batch, cfg.seq_len * cfg.feature_dim});
  auto f = detail::lin(P, "fuse.1", detail::activate(detail::lin(P, "fuse.0", e), cfg.activation));
  return detail::lin(P, "head.1", detail::activate(detail::lin(P, "head.0", f), cfg.activation));
}

template <class T>
ad::Var<T> baseline_mlp_trans_forward(const BoundParams<T>& P, ad::Var<T> steps, const DyTRConfig& cfg) {
  auto e_f = temporal_fuse(P, encode_features(P, steps, cfg), cfg);
  return detail::lin(P, "head", ad::mean(e_f, 1));
}

/// Normalized residual prediction [B, 3] for any model kind.
template <class T>
ad::Var<T> forward(const BoundParams<T>& P, const DynamicsBatch<T>& b, const DyTRConfig& cfg) {
  b.check(cfg);
  ad::Tape<T>& tape = P.tape();
  auto steps = tape.constant({b.batch, b.seq, b.step_dim}, b.steps);
  switch (cfg.kind) {
    case ModelKind::DyTR:
      return dytr_forward(P, steps, tape.constant({b.batch, kStateDim}, b.next),
                          tape.constant({b.batch, kConfigDim}, b.config), cfg);
    case ModelKind::Mlp:
      return baseline_mlp_forward(P, steps, cfg);
    case ModelKind::MlpTrans:
      return baseline_mlp_trans_forward(P, steps, cfg);
  }
  throw std::logic_error("unreachable model kind");
}

}  // namespace resdyn
