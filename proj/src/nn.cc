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

#include "relnet/nn.h"

#include <cmath>

#include "relnet/ops.h"

namespace relnet {

std::size_t ParamStore::add(const std::string& name, Tensor value,
                            bool trainable) {
  if (find(name)) throw std::invalid_argument("duplicate parameter " + name);
  if (value.empty()) throw ShapeError("parameter " + name + " is empty");
  names_.push_back(name);
  values_.push_back(value.detach());
  trainable_.push_back(trainable);
  return values_.size() - 1;
}

std::size_t ParamStore::add_uniform(const std::string& name, const Shape& shape,
                                    std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<double> data(num_elements(shape));
  for (auto& v : data) v = rng.uniform(-bound, bound);
  return add(name, Tensor(shape, std::move(data)));
}

void ParamStore::set(std::size_t id, Tensor value) {
  if (value.shape() != values_.at(id).shape()) {
    throw ShapeError("parameter " + names_[id] + " has shape " +
                     shape_string(values_[id].shape()) + ", got " +
                     shape_string(value.shape()));
  }
  values_[id] = value.detach();
}

std::optional<std::size_t> ParamStore::find(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t ParamStore::num_scalars() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

Context::Context(ParamStore& store, Tape* tape, Rng& rng, bool training)
    : store_(&store), tape_(tape), rng_(&rng), training_(training),
      watched_(store.size()) {}

Tensor Context::param(std::size_t id) {
  if (!tape_ || !store_->trainable(id)) return store_->value(id);
  if (id >= watched_.size()) watched_.resize(store_->size());
  if (watched_[id].empty()) watched_[id] = tape_->watch(store_->value(id));
  return watched_[id];
}

std::vector<Tensor> Context::param_grads(const Gradients& grads) const {
  std::vector<Tensor> out;
  out.reserve(store_->size());
  for (std::size_t i = 0; i < store_->size(); ++i) {
    if (i < watched_.size() && !watched_[i].empty()) {
      out.push_back(grads.of(watched_[i]));
    } else {
      out.push_back(Tensor::zeros(store_->value(i).shape()));
    }
  }
  return out;
}

Linear::Linear(ParamStore& store, const std::string& name, std::size_t in,
               std::size_t out, Rng& rng, bool bias)
    : in_(in), out_(out) {
  w_ = store.add_uniform(name + ".w", {in, out}, in, rng);
  if (bias) b_ = store.add_uniform(name + ".b", {out}, in, rng);
}

Tensor Linear::operator()(Context& ctx, const Tensor& x) const {
  Tensor y = matmul(x, ctx.param(w_));
  return b_ ? add(y, ctx.param(*b_)) : y;
}

Lstm::Lstm(ParamStore& store, const std::string& name, std::size_t in,
           std::size_t hidden, Rng& rng)
    : in_(in), hidden_(hidden),
      gates_(store, name + ".gates", in + hidden, 4 * hidden, rng) {}

LstmOutput Lstm::operator()(Context& ctx, const Tensor& x, bool reverse) const {
  if (x.rank() != 3 || x.dim(2) != in_) {
    throw ShapeError("lstm expects [B, L, " + std::to_string(in_) + "], got " +
                     shape_string(x.shape()));
  }
  const std::size_t batch = x.dim(0), len = x.dim(1), hs = hidden_;
  Tensor flat = reshape(x, {batch * len, in_});
  Tensor h = Tensor::zeros({batch, hs});
  Tensor c = Tensor::zeros({batch, hs});
  std::vector<Tensor> states(len);
  for (std::size_t step = 0; step < len; ++step) {
    const std::size_t pos = reverse ? len - 1 - step : step;
    std::vector<std::size_t> rows(batch);
    for (std::size_t b = 0; b < batch; ++b) rows[b] = b * len + pos;
    Tensor xt = gather_rows(flat, rows);
    Tensor z = gates_(ctx, concat_lastdim({xt, h}));
    Tensor i = sigmoid(slice_lastdim(z, 0, hs));
    Tensor f = sigmoid(slice_lastdim(z, hs, hs));
    Tensor g = tanh(slice_lastdim(z, 2 * hs, hs));
    Tensor o = sigmoid(slice_lastdim(z, 3 * hs, hs));
    c = add(mul(f, c), mul(i, g));
    h = mul(o, tanh(c));
    states[pos] = h;
  }
  return {reshape(concat_lastdim(states), {batch, len, hs}), h};
}

BiLstm::BiLstm(ParamStore& store, const std::string& name, std::size_t in,
               std::size_t hidden, Rng& rng) {
  if (hidden % 2 != 0 || hidden == 0) {
    throw std::invalid_argument("bilstm width must be even, got " +
                                std::to_string(hidden));
  }
  fwd_ = Lstm(store, name + ".fwd", in, hidden / 2, rng);
  bwd_ = Lstm(store, name + ".bwd", in, hidden / 2, rng);
}

BiLstmOutput BiLstm::operator()(Context& ctx, const Tensor& x) const {
  LstmOutput f = fwd_(ctx, x, false);
  LstmOutput b = bwd_(ctx, x, true);
  return {concat_lastdim({f.states, b.states}), f.last, b.last};
}

BatchNorm::BatchNorm(ParamStore& store, const std::string& name,
                     std::size_t features, double momentum, double eps)
    : features_(features), momentum_(momentum), eps_(eps) {
  gamma_ = store.add(name + ".gamma", Tensor::full({features}, 1.0));
  beta_ = store.add(name + ".beta", Tensor::zeros({features}));
  mean_ = store.add(name + ".running_mean", Tensor::zeros({features}), false);
  var_ = store.add(name + ".running_var", Tensor::full({features}, 1.0), false);
}

Tensor BatchNorm::operator()(Context& ctx, const Tensor& x) const {
  if (x.rank() != 2 || x.dim(1) != features_) {
    throw ShapeError("batch norm expects [B, " + std::to_string(features_) +
                     "], got " + shape_string(x.shape()));
  }
  Tensor normalized;
  if (ctx.training()) {
    Tensor mean = mean_axis(x, 0);
    Tensor centered = sub(x, mean);
    Tensor var = mean_axis(mul(centered, centered), 0);
    normalized = mul(centered, pow_scalar(add_scalar(var, eps_), -0.5));
    std::vector<double> rm(features_), rv(features_);
    const auto& old_m = ctx.store().value(mean_);
    const auto& old_v = ctx.store().value(var_);
    for (std::size_t i = 0; i < features_; ++i) {
      rm[i] = (1.0 - momentum_) * old_m[i] + momentum_ * mean[i];
      rv[i] = (1.0 - momentum_) * old_v[i] + momentum_ * var[i];
    }
    ctx.store().set(mean_, Tensor({features_}, std::move(rm)));
    ctx.store().set(var_, Tensor({features_}, std::move(rv)));
  } else {
    const Tensor& rm = ctx.store().value(mean_);
    const Tensor& rv = ctx.store().value(var_);
    normalized = mul(sub(x, rm), pow_scalar(add_scalar(rv, eps_), -0.5));
  }
  return add(mul(normalized, ctx.param(gamma_)), ctx.param(beta_));
}

Embedding::Embedding(ParamStore& store, const std::string& name,
                     std::size_t vocab, std::size_t dim, Rng& rng) {
  std::vector<double> data(vocab * dim);
  for (auto& v : data) v = rng.normal();
  table_ = store.add(name + ".table", Tensor({vocab, dim}, std::move(data)));
}

Tensor Embedding::operator()(Context& ctx,
                             const std::vector<std::size_t>& ids) const {
  return gather_rows(ctx.param(table_), ids);
}

Tensor cross_entropy(const Tensor& logits,
                     const std::vector<std::size_t>& labels) {
  if (logits.rank() != 2 || logits.dim(0) != labels.size()) {
    throw ShapeError("cross_entropy: logits " + shape_string(logits.shape()) +
                     " do not match " + std::to_string(labels.size()) +
                     " labels");
  }
  const std::size_t classes = logits.dim(1);
  std::vector<double> onehot(logits.size(), 0.0);
  for (std::size_t b = 0; b < labels.size(); ++b) {
    if (labels[b] >= classes) {
      throw std::out_of_range("cross_entropy: label out of range");
    }
    onehot[b * classes + labels[b]] = 1.0;
  }
  Tensor picked = mul(log_softmax_lastdim(logits),
                      Tensor(logits.shape(), std::move(onehot)));
  return scale(sum_all(picked), -1.0 / static_cast<double>(labels.size()));
}

}  // namespace relnet
