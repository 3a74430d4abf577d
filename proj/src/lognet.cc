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

#include "relnet/lognet.h"

#include <cmath>
#include <stdexcept>
#include <string>

#include "relnet/ops.h"

namespace relnet {

namespace {

void expect_shape(const Tensor& t, const Shape& want, const char* what) {
  if (t.shape() != want) {
    throw ShapeError(std::string("lognet: ") + what + " has shape " +
                     shape_string(t.shape()) + ", expected " +
                     shape_string(want));
  }
}

void check_words(const Tensor& words, std::size_t batch, std::size_t d) {
  if (words.rank() != 3 || words.dim(0) != batch || words.dim(2) != d) {
    throw ShapeError("lognet: words must be [B, S, d], got " +
                     shape_string(words.shape()));
  }
  if (words.dim(1) == 0) throw ShapeError("lognet: question has no words");
}

}  // namespace

LogUnit::LogUnit(ParamStore& store, const std::string& name,
                 const LognetConfig& cfg, Rng& rng)
    : cfg_(cfg) {
  const std::size_t d = cfg.d;
  if (d == 0 || cfg.steps == 0 || cfg.heads == 0 || cfg.appearance_dim == 0) {
    throw std::invalid_argument("lognet: d, steps, heads and appearance_dim "
                                "must be positive");
  }
  rank_ = cfg.rank == 0 ? (d + 7) / 8 : cfg.rank;
  fuse_ = Linear(store, name + ".fuse", cfg.appearance_dim + cfg.box_dim, d, rng);
  m0_ = store.add_uniform(name + ".m0", {d}, d, rng);
  z0_ = Linear(store, name + ".gate0", d, d, rng);
  z1_ = Linear(store, name + ".gate1", d, 1, rng);
  for (std::size_t t = 0; t < cfg.steps; ++t) {
    const std::string p = name + ".step" + std::to_string(t);
    LogStepParams s;
    s.augment = Linear(store, p + ".augment", 2 * d, d, rng);
    s.query = Linear(store, p + ".query", d, d, rng);
    s.query_mix = Linear(store, p + ".query_mix", 2 * d, d, rng);
    s.gamma_logits = store.add(p + ".gamma", Tensor::zeros({cfg.heads}));
    s.head_scores = Linear(store, p + ".heads", d, cfg.heads, rng);
    s.node_desc = Linear(store, p + ".node_desc", d, rank_, rng);
    s.modulate = Linear(store, p + ".modulate", 2 * d, d, rng);
    s.bind_object = Linear(store, p + ".bind_object", d, d, rng, false);
    s.bind_word = Linear(store, p + ".bind_word", d, d, rng, false);
    s.bind_score = Linear(store, p + ".bind_score", d, 1, rng);
    s.node_score = Linear(store, p + ".node_score", 2 * d, 1, rng);
    s.memory = Linear(store, p + ".memory", 3 * d, d, rng);
    steps_.push_back(std::move(s));
  }
  for (std::size_t h = 0; h < cfg.gcn_layers; ++h) {
    const std::string p = name + ".gcn" + std::to_string(h);
    gcn_.push_back({Linear(store, p + ".w1", 2 * d, d, rng),
                    Linear(store, p + ".w2", d, 2 * d, rng, false)});
  }
  output_ = Linear(store, name + ".output", 2 * d, d, rng);
}

Tensor LogUnit::fuse(Context& ctx, const Tensor& appearance,
                     const Tensor& boxes) const {
  if (appearance.rank() != 3 || appearance.dim(2) != cfg_.appearance_dim) {
    throw ShapeError("lognet: appearance must be [B, N, " +
                     std::to_string(cfg_.appearance_dim) + "], got " +
                     shape_string(appearance.shape()));
  }
  expect_shape(boxes, {appearance.dim(0), appearance.dim(1), cfg_.box_dim},
               "boxes");
  return fuse_(ctx, concat_lastdim({appearance, boxes}));
}

Tensor LogUnit::augment_nodes(Context& ctx, std::size_t step, const Tensor& v,
                              const Tensor& memory) const {
  const Tensor mv = mul(v, expand(memory, 1, v.dim(1)));
  return steps_.at(step).augment(ctx, concat_lastdim({v, mv}));
}

ControllerResult LogUnit::controller_step(Context& ctx, std::size_t step,
                                          const Tensor& words, const Tensor& q,
                                          const Tensor& prev_controls) const {
  const LogStepParams& s = steps_.at(step);
  const std::size_t batch = q.dim(0), d = cfg_.d, k = cfg_.heads;
  expect_shape(prev_controls, {batch, k, d}, "previous controls");
  check_words(words, batch, d);
  const std::size_t len = words.dim(1);
  Tensor gamma = softmax_lastdim(ctx.param(s.gamma_logits));
  Tensor mixed = reshape(matmul(transpose(prev_controls), reshape(gamma, {k, 1})),
                         {batch, d});
  Tensor qt = s.query(ctx, q);
  Tensor qp = s.query_mix(ctx, concat_lastdim({qt, mixed}));
  Tensor scores = s.head_scores(ctx, mul(words, expand(qp, 1, len)));
  Tensor alpha = softmax_lastdim(transpose(scores));
  return {bmatmul(alpha, words), alpha, gamma};
}

Graph LogUnit::build_adjacency(Context& ctx, std::size_t step,
                               const Tensor& v_raw,
                               const Tensor& controls) const {
  const std::size_t n = v_raw.dim(1);
  Tensor c = expand(sum_axis(controls, 1), 1, n);
  Tensor desc = softmax_lastdim(
      transpose(steps_.at(step).node_desc(ctx, mul(v_raw, c))));
  return {desc, bmatmul(transpose(desc), desc)};
}

Binding LogUnit::language_binding(Context& ctx, std::size_t step,
                                  const Tensor& v_t, const Tensor& v_raw,
                                  const Tensor& words,
                                  const Tensor& memory) const {
  const LogStepParams& s = steps_.at(step);
  const std::size_t batch = v_raw.dim(0), n = v_raw.dim(1);
  check_words(words, batch, cfg_.d);
  const std::size_t len = words.dim(1);
  Tensor mv = mul(v_raw, expand(memory, 1, n));
  Tensor vhat = s.modulate(ctx, concat_lastdim({v_raw, mv}));
  Tensor gate = reshape(sigmoid(z1_(ctx, z0_(ctx, words))), {batch, len});
  Tensor pair = add(expand(s.bind_object(ctx, vhat), 2, len),
                    expand(s.bind_word(ctx, words), 1, n));
  Tensor scores = reshape(s.bind_score(ctx, tanh(pair)), {batch, n, len});
  Tensor beta = mul(softmax_lastdim(scores), expand(gate, 1, n));
  Tensor bound = bmatmul(beta, words);
  return {concat_lastdim({v_t, bound}), beta, gate};
}

Tensor LogUnit::refine_gcn(Context& ctx, const Tensor& x,
                           const Tensor& adjacency) const {
  Tensor r = x;
  for (std::size_t h = 0; h < gcn_.size(); ++h) {
    try {
      Tensor msg = elu(gcn_[h].w1(ctx, bmatmul(adjacency, r)));
      r = elu(add(r, gcn_[h].w2(ctx, msg)));
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (!std::isfinite(r[i])) throw NumericDomainError("non-finite value");
      }
    } catch (const NumericDomainError& e) {
      throw NumericDomainError("lognet: graph refinement layer " +
                               std::to_string(h + 1) + ": " + e.what());
    }
  }
  return r;
}

ReadoutUpdate LogUnit::readout_update(Context& ctx, std::size_t step,
                                      const Tensor& refined,
                                      const Tensor& memory) const {
  const LogStepParams& s = steps_.at(step);
  const std::size_t batch = refined.dim(0), n = refined.dim(1);
  Tensor delta =
      softmax_lastdim(reshape(s.node_score(ctx, refined), {batch, n}));
  Tensor pooled = reshape(bmatmul(reshape(delta, {batch, 1, n}), refined),
                          {batch, 2 * cfg_.d});
  Tensor next = s.memory(ctx, concat_lastdim({memory, pooled}));
  return {pooled, next, delta};
}

Tensor LogUnit::initial_controls(Context& ctx, const Tensor& q) const {
  return expand(steps_.front().query(ctx, q), 1, cfg_.heads);
}

Tensor LogUnit::initial_memory(Context& ctx, std::size_t batch) const {
  return expand(ctx.param(m0_), 0, batch);
}

LognetOutput LogUnit::operator()(Context& ctx, const Tensor& v,
                                 const Tensor& words, const Tensor& q) const {
  const std::size_t d = cfg_.d;
  if (v.rank() != 3 || v.dim(2) != d || v.dim(1) == 0) {
    throw ShapeError("lognet: objects must be [B, N, " + std::to_string(d) +
                     "], got " + shape_string(v.shape()));
  }
  const std::size_t batch = v.dim(0);
  expect_shape(q, {batch, d}, "question");
  Tensor memory = initial_memory(ctx, batch);
  Tensor controls = initial_controls(ctx, q);
  LognetOutput out;
  for (std::size_t t = 0; t < cfg_.steps; ++t) {
    ControllerResult ctrl = controller_step(ctx, t, words, q, controls);
    Tensor vt = augment_nodes(ctx, t, v, memory);
    Graph graph = build_adjacency(ctx, t, v, ctrl.controls);
    Binding bind = language_binding(ctx, t, vt, v, words, memory);
    Tensor refined = refine_gcn(ctx, bind.x, graph.adjacency);
    ReadoutUpdate ru = readout_update(ctx, t, refined, memory);
    memory = ru.memory;
    controls = ctrl.controls;
    out.trace.alpha.push_back(ctrl.alpha);
    out.trace.beta.push_back(bind.beta);
    out.trace.delta.push_back(ru.delta);
    out.trace.adjacency.push_back(graph.adjacency);
    out.trace.memory.push_back(memory);
  }
  out.memory = memory;
  out.y = output_(ctx, concat_lastdim({memory, q}));
  out.visual = mean_axis(stack(out.trace.delta), 0);
  out.linguistic = mean_axis(mean_axis(stack(out.trace.alpha), 0), 1);
  return out;
}

}  // namespace relnet
