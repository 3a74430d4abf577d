// Copyright 2026 The Relnet Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Language-binding object graph reasoning. Batched layouts:
//   objects   [B, N, d]   fused visual objects v_i
//   words     [B, S, d]   contextual word vectors w_s
//   q, memory [B, d]
//   controls  [B, K, d]   one control vector per attention head

#ifndef RELNET_LOGNET_H_
#define RELNET_LOGNET_H_

#include <cstddef>
#include <string>
#include <vector>

#include "relnet/nn.h"

namespace relnet {

struct LognetConfig {
  std::size_t d = 32;
  std::size_t steps = 6;       // reasoning steps T
  std::size_t heads = 2;       // control heads K
  std::size_t gcn_layers = 4;  // H
  std::size_t rank = 0;        // r; 0 selects ceil(d / 8)
  std::size_t appearance_dim = 32;
  std::size_t box_dim = 7;
};

// Per-step weights. Public so tests can pin them to hand values.
struct LogStepParams {
  Linear augment;      // W^v_t on [v; m * v]
  Linear query;        // q_t = W^q_t q + b
  Linear query_mix;    // [q_t; sum_k gamma_k c_{t-1,k}] -> d
  std::size_t gamma_logits = 0;
  Linear head_scores;  // row k is W^alpha_{t,k}
  Linear node_desc;    // W^{v~}_t, d -> r
  Linear modulate;     // W^{v^}_t on [V; m * V]
  Linear bind_object, bind_word, bind_score;
  Linear node_score;   // W^delta_t
  Linear memory;       // W^m_t on [m; x~]
};

struct GcnLayer {
  Linear w1, w2;
};

struct ControllerResult {
  Tensor controls;  // [B, K, d]
  Tensor alpha;     // [B, K, S]
  Tensor gamma;     // [K]
};

struct Graph {
  Tensor node_desc;  // V~ [B, r, N]
  Tensor adjacency;  // [B, N, N]
};

struct Binding {
  Tensor x;     // [B, N, 2d]
  Tensor beta;  // [B, N, S]
  Tensor gate;  // z [B, S]
};

struct ReadoutUpdate {
  Tensor pooled;  // x~ [B, 2d]
  Tensor memory;  // [B, d]
  Tensor delta;   // [B, N]
};

struct LogTrace {
  std::vector<Tensor> alpha, beta, delta, adjacency, memory;
};

struct LognetOutput {
  Tensor y;          // W[m_T; q] + b, [B, d]
  Tensor memory;     // m_T
  Tensor visual;     // mean over steps of delta, [B, N]
  Tensor linguistic; // mean over steps and heads of alpha, [B, S]
  LogTrace trace;
};

class LogUnit {
 public:
  LogUnit() = default;
  LogUnit(ParamStore& store, const std::string& name, const LognetConfig& cfg,
          Rng& rng);

  // v_i = W^a [a_i; p_i] + b. appearance [B, N, d'], boxes [B, N, 7].
  Tensor fuse(Context& ctx, const Tensor& appearance, const Tensor& boxes) const;

  Tensor augment_nodes(Context& ctx, std::size_t step, const Tensor& v,
                       const Tensor& memory) const;
  ControllerResult controller_step(Context& ctx, std::size_t step,
                                   const Tensor& words, const Tensor& q,
                                   const Tensor& prev_controls) const;
  Graph build_adjacency(Context& ctx, std::size_t step, const Tensor& v_raw,
                        const Tensor& controls) const;
  Binding language_binding(Context& ctx, std::size_t step, const Tensor& v_t,
                           const Tensor& v_raw, const Tensor& words,
                           const Tensor& memory) const;
  // Throws NumericDomainError naming the layer when values stop being finite.
  Tensor refine_gcn(Context& ctx, const Tensor& x, const Tensor& adjacency) const;
  ReadoutUpdate readout_update(Context& ctx, std::size_t step,
                               const Tensor& refined, const Tensor& memory) const;

  // Initial control for every head: q_1 repeated.
  Tensor initial_controls(Context& ctx, const Tensor& q) const;
  Tensor initial_memory(Context& ctx, std::size_t batch) const;

  LognetOutput operator()(Context& ctx, const Tensor& v, const Tensor& words,
                          const Tensor& q) const;

  const LognetConfig& config() const { return cfg_; }
  std::size_t rank() const { return rank_; }
  LogStepParams& step_params(std::size_t step) { return steps_.at(step); }
  std::vector<GcnLayer>& gcn() { return gcn_; }
  const Linear& gate_hidden() const { return z0_; }
  const Linear& gate_out() const { return z1_; }

 private:
  LognetConfig cfg_;
  std::size_t rank_ = 1;
  Linear fuse_;
  std::size_t m0_ = 0;
  Linear z0_, z1_;
  std::vector<LogStepParams> steps_;
  std::vector<GcnLayer> gcn_;
  Linear output_;
};

}  // namespace relnet

#endif  // RELNET_LOGNET_H_
