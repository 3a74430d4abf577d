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

#include "relnet/decoders.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "relnet/ops.h"

namespace relnet {

std::string answer_kind_name(AnswerKind kind) {
  switch (kind) {
    case AnswerKind::kOpenEnded: return "open_ended";
    case AnswerKind::kMultiChoice: return "multi_choice";
    case AnswerKind::kCount: return "count";
  }
  return "?";
}

AnswerKind parse_answer_kind(const std::string& name) {
  if (name == "open_ended") return AnswerKind::kOpenEnded;
  if (name == "multi_choice") return AnswerKind::kMultiChoice;
  if (name == "count") return AnswerKind::kCount;
  throw std::invalid_argument("unknown answer kind '" + name + "'");
}

AnswerSpace AnswerSpace::count() {
  AnswerSpace s;
  s.kind = AnswerKind::kCount;
  for (int i = 0; i <= kMaxCount; ++i) s.labels.push_back(i);
  return s;
}

AnswerSpace AnswerSpace::open_ended(std::size_t size) {
  AnswerSpace s;
  for (std::size_t i = 0; i < size; ++i) s.labels.push_back(i);
  return s;
}

DecoderTrunk::DecoderTrunk(ParamStore& store, const std::string& name,
                           std::size_t feature_dim, std::size_t d, Rng& rng)
    : feature_dim_(feature_dim),
      d_(d),
      wq_(store, name + ".wq", d, d, rng),
      wo_(store, name + ".wo", feature_dim + d, d, rng),
      wy_(store, name + ".wy", d, d, rng) {}

Tensor DecoderTrunk::operator()(Context& ctx, const Tensor& features,
                                const Tensor& q) const {
  if (features.rank() != 2 || features.dim(1) != feature_dim_ ||
      q.shape() != Shape{features.dim(0), d_}) {
    throw ShapeError("decoder: features " + shape_string(features.shape()) +
                     " / question " + shape_string(q.shape()) +
                     " do not match widths " + std::to_string(feature_dim_) +
                     " / " + std::to_string(d_));
  }
  Tensor y = elu(wo_(ctx, concat_lastdim({features, wq_(ctx, q)})));
  return elu(wy_(ctx, y));
}

OpenEndedDecoder::OpenEndedDecoder(ParamStore& store, const std::string& name,
                                   std::size_t feature_dim, std::size_t d,
                                   std::size_t answers, Rng& rng)
    : answers_(answers) {
  if (answers < 2) {
    throw std::invalid_argument("open-ended decoder needs at least 2 answers");
  }
  trunk_ = DecoderTrunk(store, name, feature_dim, d, rng);
  classify_ = Linear(store, name + ".classify", d, answers, rng);
}

Tensor OpenEndedDecoder::logits(Context& ctx, const Tensor& features,
                                const Tensor& q) const {
  return classify_(ctx, trunk_(ctx, features, q));
}

CountDecoder::CountDecoder(ParamStore& store, const std::string& name,
                           std::size_t feature_dim, std::size_t d, Rng& rng)
    : trunk_(store, name, feature_dim, d, rng),
      regress_(store, name + ".regress", d, 1, rng) {}

Tensor CountDecoder::raw(Context& ctx, const Tensor& features,
                         const Tensor& q) const {
  return reshape(regress_(ctx, trunk_(ctx, features, q)), {features.dim(0)});
}

MultiChoiceScorer::MultiChoiceScorer(ParamStore& store, const std::string& name,
                                     std::size_t feature_dim, Rng& rng)
    : score_(store, name + ".score", feature_dim, 1, rng) {}

Tensor MultiChoiceScorer::operator()(Context& ctx, const Tensor& features) const {
  if (features.rank() != 3 || features.dim(1) < 2) {
    throw ShapeError("multi-choice scorer expects [B, A >= 2, F], got " +
                     shape_string(features.shape()));
  }
  return reshape(score_(ctx, features), {features.dim(0), features.dim(1)});
}

Tensor answer_probabilities(const Tensor& logits) {
  if (logits.rank() != 2 || logits.dim(1) < 2) {
    throw std::invalid_argument("answer space needs at least 2 entries");
  }
  return softmax_lastdim(logits);
}

Tensor open_ended_loss(const Tensor& logits,
                       const std::vector<std::size_t>& labels) {
  return cross_entropy(logits, labels);
}

std::vector<std::size_t> argmax_rows(const Tensor& scores) {
  if (scores.rank() != 2 || scores.dim(1) == 0) {
    throw ShapeError("argmax_rows expects [B, C], got " +
                     shape_string(scores.shape()));
  }
  const std::size_t cols = scores.dim(1);
  std::vector<std::size_t> out;
  for (std::size_t b = 0; b < scores.dim(0); ++b) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < cols; ++c) {
      if (scores[b * cols + c] > scores[b * cols + best]) best = c;
    }
    out.push_back(best);
  }
  return out;
}

int round_count(double raw) {
  const double r = std::round(raw);  // halves go away from zero
  return static_cast<int>(std::clamp(r, 0.0, static_cast<double>(kMaxCount)));
}

std::vector<int> count_predictions(const Tensor& raw) {
  std::vector<int> out;
  for (double v : raw.data()) out.push_back(round_count(v));
  return out;
}

Tensor count_loss(const Tensor& raw, const std::vector<double>& targets) {
  if (raw.rank() != 1 || raw.dim(0) != targets.size()) {
    throw ShapeError("count_loss: output " + shape_string(raw.shape()) +
                     " does not match " + std::to_string(targets.size()) +
                     " targets");
  }
  Tensor diff = sub(raw, Tensor({targets.size()}, targets));
  return mean_all(mul(diff, diff));
}

Tensor hinge_loss(const Tensor& scores,
                  const std::vector<std::vector<bool>>& correct) {
  if (scores.rank() != 2 || scores.dim(0) != correct.size()) {
    throw ShapeError("hinge_loss: scores " + shape_string(scores.shape()) +
                     " do not match the answer marks");
  }
  const std::size_t batch = scores.dim(0), choices = scores.dim(1);
  std::vector<std::size_t> pos, neg;
  for (std::size_t b = 0; b < batch; ++b) {
    if (correct[b].size() != choices) {
      throw ShapeError("hinge_loss: answer marks for row " + std::to_string(b) +
                       " have the wrong length");
    }
    if (std::find(correct[b].begin(), correct[b].end(), true) ==
        correct[b].end()) {
      throw std::invalid_argument("hinge_loss: row " + std::to_string(b) +
                                  " has no correct choice");
    }
    for (std::size_t p = 0; p < choices; ++p) {
      if (!correct[b][p]) continue;
      for (std::size_t n = 0; n < choices; ++n) {
        if (correct[b][n]) continue;
        pos.push_back(b * choices + p);
        neg.push_back(b * choices + n);
      }
    }
  }
  if (pos.empty()) return scale(sum_all(scores), 0.0);
  Tensor flat = reshape(scores, {batch * choices});
  Tensor margin = add_scalar(sub(gather_rows(flat, neg), gather_rows(flat, pos)), 1.0);
  return scale(sum_all(relu(margin)), 1.0 / static_cast<double>(batch));
}

Tensor hinge_loss(const Tensor& scores, const std::vector<std::size_t>& answer) {
  if (scores.rank() != 2) {
    throw ShapeError("hinge_loss expects [B, A] scores");
  }
  std::vector<std::vector<bool>> marks(answer.size(),
                                       std::vector<bool>(scores.dim(1), false));
  for (std::size_t b = 0; b < answer.size(); ++b) {
    if (answer[b] >= scores.dim(1)) {
      throw std::invalid_argument("hinge_loss: row " + std::to_string(b) +
                                  " has no correct choice");
    }
    marks[b][answer[b]] = true;
  }
  return hinge_loss(scores, marks);
}

}  // namespace relnet
