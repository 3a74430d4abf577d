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

// End-to-end task models over synthetic datasets.

#ifndef RELNET_MODELS_H_
#define RELNET_MODELS_H_

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "relnet/crn.h"
#include "relnet/decoders.h"
#include "relnet/hcrn.h"
#include "relnet/lognet.h"
#include "relnet/nn.h"
#include "relnet/synthgen.h"

namespace relnet {

struct ModelConfig {
  std::string type = "hcrn";  // hcrn | lognet
  std::size_t d = 32;
  AnswerKind answer = AnswerKind::kOpenEnded;
  // hcrn
  std::vector<std::size_t> grouping;
  bool use_motion = true;
  CrnConfig crn;
  // lognet
  std::size_t steps = 6, heads = 2, gcn_layers = 4, rank = 0;
};

struct QuestionEncoding {
  Tensor words;  // [B, S, d]
  Tensor q;      // [B, d]
};

// Token embedding followed by a biLSTM; q joins the backward state at the
// first token with the forward state at the last.
class QuestionEncoder {
 public:
  QuestionEncoder() = default;
  QuestionEncoder(ParamStore& store, const std::string& name, std::size_t vocab,
                  std::size_t d, Rng& rng);

  // All questions of a batch must have the same length.
  QuestionEncoding operator()(Context& ctx,
                              const std::vector<std::vector<std::size_t>>& tokens) const;

 private:
  std::size_t d_ = 0;
  Embedding embed_;
  BiLstm lstm_;
};

struct ForwardResult {
  Tensor loss;  // task loss (cross-entropy, MSE or hinge)
  std::vector<std::size_t> predictions;
  Tensor raw;         // count regression output [B]
  Tensor visual;      // attention over objects [B, N], scene models only
  Tensor linguistic;  // attention over words [B, S], scene models only
};

class Model {
 public:
  virtual ~Model() = default;
  virtual ForwardResult forward(Context& ctx, const Dataset& data,
                                const std::vector<const Sample*>& batch) const = 0;
};

// Builds the model named by cfg.type for the shape of `data`.
std::unique_ptr<Model> build_model(const ModelConfig& cfg, const Dataset& data,
                                   ParamStore& store, Rng& rng);

}  // namespace relnet

#endif  // RELNET_MODELS_H_
