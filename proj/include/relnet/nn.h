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

// Parameter storage, the per-forward evaluation context and the small
// layers shared by all models.

#ifndef RELNET_NN_H_
#define RELNET_NN_H_

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "relnet/rng.h"
#include "relnet/tensor.h"

namespace relnet {

// Named tensors in registration order. Non-trainable entries hold running
// statistics and are checkpointed but never optimized.
class ParamStore {
 public:
  std::size_t add(const std::string& name, Tensor value, bool trainable = true);
  // Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  std::size_t add_uniform(const std::string& name, const Shape& shape,
                          std::size_t fan_in, Rng& rng);

  std::size_t size() const { return values_.size(); }
  const std::string& name(std::size_t id) const { return names_.at(id); }
  const Tensor& value(std::size_t id) const { return values_.at(id); }
  bool trainable(std::size_t id) const { return trainable_.at(id); }
  // Replaces a value; the shape must not change.
  void set(std::size_t id, Tensor value);
  std::optional<std::size_t> find(const std::string& name) const;
  std::size_t num_scalars() const;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
  std::vector<bool> trainable_;
};

// Everything one forward pass needs: parameters, an optional tape, the
// run's generator and the train/eval switch.
class Context {
 public:
  Context(ParamStore& store, Tape* tape, Rng& rng, bool training);

  // Parameter value; watched on the tape on first use.
  Tensor param(std::size_t id);

  ParamStore& store() { return *store_; }
  Tape* tape() const { return tape_; }
  Rng& rng() { return *rng_; }
  bool training() const { return training_; }

  // One gradient per store entry (zeros for unused or frozen entries).
  std::vector<Tensor> param_grads(const Gradients& grads) const;

 private:
  ParamStore* store_;
  Tape* tape_;
  Rng* rng_;
  bool training_;
  std::vector<Tensor> watched_;
};

class Linear {
 public:
  Linear() = default;
  Linear(ParamStore& store, const std::string& name, std::size_t in,
         std::size_t out, Rng& rng, bool bias = true);

  Tensor operator()(Context& ctx, const Tensor& x) const;

  std::size_t in() const { return in_; }
  std::size_t out() const { return out_; }
  std::size_t weight_id() const { return w_; }
  std::optional<std::size_t> bias_id() const { return b_; }

 private:
  std::size_t in_ = 0, out_ = 0, w_ = 0;
  std::optional<std::size_t> b_;
};

struct LstmOutput {
  Tensor states;  // [B, L, H]
  Tensor last;    // [B, H], state after the final processed step
};

// Single-layer LSTM with gate order (input, forget, candidate, output).
class Lstm {
 public:
  Lstm() = default;
  Lstm(ParamStore& store, const std::string& name, std::size_t in,
       std::size_t hidden, Rng& rng);

  // x: [B, L, in]. With `reverse` the sequence is consumed back to front
  // and states are reported in original positions.
  LstmOutput operator()(Context& ctx, const Tensor& x,
                        bool reverse = false) const;

  std::size_t hidden() const { return hidden_; }

 private:
  std::size_t in_ = 0, hidden_ = 0;
  Linear gates_;
};

struct BiLstmOutput {
  Tensor states;         // [B, L, H], forward and backward halves joined
  Tensor last_forward;   // [B, H/2]
  Tensor last_backward;  // [B, H/2], backward state at position 0
};

class BiLstm {
 public:
  BiLstm() = default;
  // `hidden` is the joined width and must be even.
  BiLstm(ParamStore& store, const std::string& name, std::size_t in,
         std::size_t hidden, Rng& rng);

  BiLstmOutput operator()(Context& ctx, const Tensor& x) const;

 private:
  Lstm fwd_, bwd_;
};

// Normalizes [B, F] rows with batch statistics while training and running
// statistics otherwise.
class BatchNorm {
 public:
  BatchNorm() = default;
  BatchNorm(ParamStore& store, const std::string& name, std::size_t features,
            double momentum = 0.1, double eps = 1e-5);

  Tensor operator()(Context& ctx, const Tensor& x) const;

 private:
  std::size_t features_ = 0;
  std::size_t gamma_ = 0, beta_ = 0, mean_ = 0, var_ = 0;
  double momentum_ = 0.1, eps_ = 1e-5;
};

class Embedding {
 public:
  Embedding() = default;
  Embedding(ParamStore& store, const std::string& name, std::size_t vocab,
            std::size_t dim, Rng& rng);

  // ids -> [ids.size(), dim].
  Tensor operator()(Context& ctx, const std::vector<std::size_t>& ids) const;

 private:
  std::size_t table_ = 0;
};

// Mean negative log-likelihood of integer labels under logits [B, C].
Tensor cross_entropy(const Tensor& logits, const std::vector<std::size_t>& labels);

}  // namespace relnet

#endif  // RELNET_NN_H_
