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

#include "relnet/models.h"

#include <stdexcept>

#include "relnet/ops.h"

namespace relnet {

namespace {

std::vector<std::vector<std::size_t>> batch_tokens(
    const std::vector<const Sample*>& batch) {
  std::vector<std::vector<std::size_t>> out;
  for (const Sample* s : batch) out.push_back(s->tokens);
  return out;
}

// Classification or regression on top of a pooled [B, d] representation.
class AnswerHead {
 public:
  AnswerHead() = default;
  AnswerHead(ParamStore& store, const std::string& name, AnswerKind kind,
             std::size_t d, std::size_t labels, Rng& rng)
      : kind_(kind) {
    if (kind == AnswerKind::kCount) {
      count_ = CountDecoder(store, name, d, d, rng);
    } else if (kind == AnswerKind::kOpenEnded) {
      open_ = OpenEndedDecoder(store, name, d, d, labels, rng);
    } else {
      throw std::invalid_argument(
          "multi-choice answers need per-choice features; synthetic tasks are "
          "open-ended or count");
    }
  }

  void apply(Context& ctx, const Tensor& features, const Tensor& q,
             const std::vector<const Sample*>& batch, ForwardResult& out) const {
    if (kind_ == AnswerKind::kCount) {
      out.raw = count_.raw(ctx, features, q);
      std::vector<double> targets;
      for (const Sample* s : batch) targets.push_back(static_cast<double>(s->label));
      out.loss = count_loss(out.raw, targets);
      for (int c : count_predictions(out.raw)) out.predictions.push_back(c);
    } else {
      Tensor logits = open_.logits(ctx, features, q);
      std::vector<std::size_t> labels;
      for (const Sample* s : batch) labels.push_back(s->label);
      out.loss = open_ended_loss(logits, labels);
      out.predictions = argmax_rows(logits);
    }
  }

 private:
  AnswerKind kind_ = AnswerKind::kOpenEnded;
  CountDecoder count_;
  OpenEndedDecoder open_;
};

class HcrnVideoModel : public Model {
 public:
  HcrnVideoModel(const ModelConfig& cfg, const Dataset& data, ParamStore& store,
                 Rng& rng)
      : use_motion_(cfg.use_motion) {
    if (is_scene_task(data.kind)) {
      throw std::invalid_argument("hcrn model expects a sequence task, got " +
                                  task_kind_name(data.kind));
    }
    frame_proj_ = Linear(store, "hcrn.frame_proj", data.feature_dim, cfg.d, rng);
    if (use_motion_) {
      motion_proj_ = Linear(store, "hcrn.motion_proj", data.feature_dim, cfg.d, rng);
    }
    question_ = QuestionEncoder(store, "hcrn.question", data.vocabulary.size(), cfg.d, rng);
    HcrnConfig hc;
    hc.clips = data.clips;
    hc.frames = data.frames;
    hc.d = cfg.d;
    hc.grouping = cfg.grouping;
    hc.use_motion = cfg.use_motion;
    hc.crn = cfg.crn;
    hc.crn.d = cfg.d;
    stream_ = VisualStream(store, "hcrn.stream", hc, rng);
    readout_ = Readout(store, "hcrn.readout", cfg.d, rng);
    head_ = AnswerHead(store, "hcrn.answer", cfg.answer, cfg.d, data.num_labels, rng);
  }

  ForwardResult forward(Context& ctx, const Dataset& data,
                        const std::vector<const Sample*>& batch) const override {
    Tensor frames = frame_features(data, batch);
    Tensor proj = frame_proj_(ctx, frames);
    Tensor motion = use_motion_ ? motion_proj_(ctx, clip_motion(frames)) : Tensor();
    QuestionEncoding enc = question_(ctx, batch_tokens(batch));
    Tensor out = stream_(ctx, proj, motion, enc.q);
    const std::size_t B = batch.size();
    Tensor slots = reshape(out, {B, out.dim(1) * out.dim(2), out.dim(3)});
    Tensor pooled = readout_(ctx, slots, enc.q).output;
    ForwardResult r;
    head_.apply(ctx, pooled, enc.q, batch, r);
    return r;
  }

 private:
  bool use_motion_;
  Linear frame_proj_, motion_proj_;
  QuestionEncoder question_;
  VisualStream stream_;
  Readout readout_;
  AnswerHead head_;
};

class LognetSceneModel : public Model {
 public:
  LognetSceneModel(const ModelConfig& cfg, const Dataset& data, ParamStore& store,
                   Rng& rng) {
    if (!is_scene_task(data.kind)) {
      throw std::invalid_argument("lognet model expects a scene task, got " +
                                  task_kind_name(data.kind));
    }
    if (cfg.answer != AnswerKind::kOpenEnded) {
      throw std::invalid_argument("lognet model answers open-ended questions");
    }
    question_ = QuestionEncoder(store, "log.question", data.vocabulary.size(), cfg.d, rng);
    LognetConfig lc;
    lc.d = cfg.d;
    lc.steps = cfg.steps;
    lc.heads = cfg.heads;
    lc.gcn_layers = cfg.gcn_layers;
    lc.rank = cfg.rank;
    lc.appearance_dim = data.feature_dim;
    unit_ = LogUnit(store, "log.unit", lc, rng);
    hidden_ = Linear(store, "log.head.hidden", cfg.d, cfg.d, rng);
    norm_ = BatchNorm(store, "log.head.norm", cfg.d);
    classify_ = Linear(store, "log.head.classify", cfg.d, data.num_labels, rng);
  }

  ForwardResult forward(Context& ctx, const Dataset& data,
                        const std::vector<const Sample*>& batch) const override {
    QuestionEncoding enc = question_(ctx, batch_tokens(batch));
    Tensor v = unit_.fuse(ctx, object_appearance(data, batch), object_boxes(batch));
    LognetOutput out = unit_(ctx, v, enc.words, enc.q);
    Tensor logits = classify_(ctx, elu(norm_(ctx, hidden_(ctx, out.y))));
    std::vector<std::size_t> labels;
    for (const Sample* s : batch) labels.push_back(s->label);
    ForwardResult r;
    r.loss = open_ended_loss(logits, labels);
    r.predictions = argmax_rows(logits);
    r.visual = out.visual;
    r.linguistic = out.linguistic;
    return r;
  }

 private:
  QuestionEncoder question_;
  LogUnit unit_;
  Linear hidden_, classify_;
  BatchNorm norm_;
};

}  // namespace

QuestionEncoder::QuestionEncoder(ParamStore& store, const std::string& name,
                                 std::size_t vocab, std::size_t d, Rng& rng)
    : d_(d),
      embed_(store, name + ".embed", vocab, d, rng),
      lstm_(store, name + ".lstm", d, d, rng) {}

QuestionEncoding QuestionEncoder::operator()(
    Context& ctx, const std::vector<std::vector<std::size_t>>& tokens) const {
  if (tokens.empty() || tokens.front().empty()) {
    throw ShapeError("question encoder: empty batch or question");
  }
  const std::size_t B = tokens.size(), S = tokens.front().size();
  std::vector<std::size_t> flat;
  for (const auto& t : tokens) {
    if (t.size() != S) {
      throw ShapeError("question encoder: questions in a batch differ in length");
    }
    flat.insert(flat.end(), t.begin(), t.end());
  }
  Tensor x = reshape(embed_(ctx, flat), {B, S, d_});
  BiLstmOutput h = lstm_(ctx, x);
  return {h.states, concat_lastdim({h.last_backward, h.last_forward})};
}

std::unique_ptr<Model> build_model(const ModelConfig& cfg, const Dataset& data,
                                   ParamStore& store, Rng& rng) {
  if (cfg.type == "hcrn") return std::make_unique<HcrnVideoModel>(cfg, data, store, rng);
  if (cfg.type == "lognet") return std::make_unique<LognetSceneModel>(cfg, data, store, rng);
  throw std::invalid_argument("unknown model type '" + cfg.type + "'");
}

}  // namespace relnet
