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

// Answer heads: open-ended classification, multi-choice ranking and count
// regression.

#ifndef RELNET_DECODERS_H_
#define RELNET_DECODERS_H_

#include <cstddef>
#include <string>
#include <vector>

#include "relnet/nn.h"

namespace relnet {

enum class AnswerKind { kOpenEnded, kMultiChoice, kCount };

std::string answer_kind_name(AnswerKind kind);
AnswerKind parse_answer_kind(const std::string& name);

struct AnswerSpace {
  AnswerKind kind = AnswerKind::kOpenEnded;
  std::vector<std::size_t> labels;

  // Integer labels 0..10.
  static AnswerSpace count();
  static AnswerSpace open_ended(std::size_t size);
};

inline constexpr int kMaxCount = 10;

// y = ELU(W^o [features; W^q q + b] + b), y' = ELU(W^y y + b).
class DecoderTrunk {
 public:
  DecoderTrunk() = default;
  DecoderTrunk(ParamStore& store, const std::string& name,
               std::size_t feature_dim, std::size_t d, Rng& rng);

  // features [B, F], q [B, d] -> [B, d].
  Tensor operator()(Context& ctx, const Tensor& features, const Tensor& q) const;

 private:
  std::size_t feature_dim_ = 0, d_ = 0;
  Linear wq_, wo_, wy_;
};

class OpenEndedDecoder {
 public:
  OpenEndedDecoder() = default;
  // Throws std::invalid_argument for fewer than two answers.
  OpenEndedDecoder(ParamStore& store, const std::string& name,
                   std::size_t feature_dim, std::size_t d,
                   std::size_t answers, Rng& rng);

  Tensor logits(Context& ctx, const Tensor& features, const Tensor& q) const;
  std::size_t answers() const { return answers_; }

 private:
  std::size_t answers_ = 0;
  DecoderTrunk trunk_;
  Linear classify_;
};

class CountDecoder {
 public:
  CountDecoder() = default;
  CountDecoder(ParamStore& store, const std::string& name,
               std::size_t feature_dim, std::size_t d, Rng& rng);

  // Real-valued regression output [B].
  Tensor raw(Context& ctx, const Tensor& features, const Tensor& q) const;

 private:
  DecoderTrunk trunk_;
  Linear regress_;
};

// Linear score of each choice. features [B, A, F] -> [B, A].
class MultiChoiceScorer {
 public:
  MultiChoiceScorer() = default;
  MultiChoiceScorer(ParamStore& store, const std::string& name,
                    std::size_t feature_dim, Rng& rng);

  Tensor operator()(Context& ctx, const Tensor& features) const;

 private:
  Linear score_;
};

// Row-wise softmax of logits [B, C].
Tensor answer_probabilities(const Tensor& logits);
// Mean negative log-likelihood.
Tensor open_ended_loss(const Tensor& logits, const std::vector<std::size_t>& labels);
// Index of the largest entry per row; ties go to the lowest index.
std::vector<std::size_t> argmax_rows(const Tensor& scores);

// Round half away from zero, then clamp to [0, kMaxCount].
int round_count(double raw);
std::vector<int> count_predictions(const Tensor& raw);
// Mean squared error on the unrounded output.
Tensor count_loss(const Tensor& raw, const std::vector<double>& targets);

// Sum over (correct, incorrect) pairs of max(0, 1 + s_n - s_p), averaged
// over the batch. `correct[b][a]` marks correct choices; each row needs at
// least one.
Tensor hinge_loss(const Tensor& scores,
                  const std::vector<std::vector<bool>>& correct);
// One correct choice per row.
Tensor hinge_loss(const Tensor& scores, const std::vector<std::size_t>& answer);

}  // namespace relnet

#endif  // RELNET_DECODERS_H_
