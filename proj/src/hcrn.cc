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

#include "relnet/hcrn.h"

#include <stdexcept>

#include "relnet/ops.h"

namespace relnet {
namespace {

// [B, d] -> [B * groups, d], each row repeated `groups` times.
Tensor repeat_rows(const Tensor& v, std::size_t groups) {
  if (groups == 1) return v;
  return reshape(expand(v, 1, groups), {v.dim(0) * groups, v.dim(1)});
}

}  // namespace

ClipTemporalAttention::ClipTemporalAttention(ParamStore& store,
                                             const std::string& name,
                                             std::size_t d, Rng& rng)
    : d_(d),
      wq_(store, name + ".wq", d, d, rng),
      wv_(store, name + ".wv", d, d, rng),
      w_(store, name + ".score", d, 1, rng) {}

AttentionResult ClipTemporalAttention::operator()(Context& ctx,
                                                  const Tensor& frames,
                                                  const Tensor& q) const {
  if (frames.rank() != 4 || frames.dim(3) != d_) {
    throw ShapeError("clip attention expects frames [B, T, P, " +
                     std::to_string(d_) + "], got " +
                     shape_string(frames.shape()));
  }
  const std::size_t batch = frames.dim(0), len = frames.dim(1),
                    cells = frames.dim(2);
  if (q.shape() != Shape{batch, d_}) {
    throw ShapeError("clip attention: question " + shape_string(q.shape()) +
                     " does not match batch/hidden size");
  }
  Tensor pooled = mean_axis(frames, 2);
  Tensor gate = expand(wq_(ctx, q), 1, len);
  Tensor scores = reshape(w_(ctx, mul(gate, wv_(ctx, pooled))), {batch, len});
  Tensor weights = softmax_lastdim(scores);
  Tensor out = bmatmul(reshape(weights, {batch, 1, len}),
                       reshape(frames, {batch, len, cells * d_}));
  return {reshape(out, {batch, cells, d_}), weights};
}

VisualStream::VisualStream(ParamStore& store, const std::string& name,
                           const HcrnConfig& cfg, Rng& rng)
    : cfg_(cfg) {
  const std::size_t N = cfg.clips;
  if (cfg.d == 0 || cfg.frames == 0) {
    throw std::invalid_argument("visual stream: d and frames must be positive");
  }
  if (N < 3) {
    throw ShapeError("visual stream: need at least 3 clips, got " +
                     std::to_string(N));
  }
  std::size_t top_arrays = N;
  bool three = !cfg.grouping.empty();
  if (three) {
    if (cfg.grouping.size() != 2 || cfg.grouping[0] * cfg.grouping[1] != N ||
        cfg.grouping[0] == 0) {
      throw std::invalid_argument(
          "visual stream: grouping must be (N1, N2) with N1 * N2 = " +
          std::to_string(N));
    }
    top_arrays = cfg.grouping[0];
  }
  CrnConfig motion_cfg = cfg.crn;
  motion_cfg.d = cfg.d;
  motion_cfg.conditioning = Conditioning::kAdditive;
  CrnConfig question_cfg = motion_cfg;
  question_cfg.conditioning = Conditioning::kMultiplicative;

  struct Plan {
    std::string name;
    std::size_t groups, n;
    bool motion_lstm;
  };
  std::vector<Plan> plans = {{"clip", N, cfg.frames, false}};
  if (three) {
    plans.push_back({"subvideo", cfg.grouping[0], cfg.grouping[1], true});
  }
  plans.push_back({"video", 1, top_arrays, true});

  std::size_t rows = 1;
  for (const auto& plan : plans) {
    Level level;
    level.name = plan.name;
    level.groups = plan.groups;
    if (!chain_.empty()) chain_ += " | ";
    chain_ += plan.name + ": " + std::to_string(plan.n);
    if (plan.name == "subvideo" && plan.n == 1) {
      level.pass_through = true;
      levels_.push_back(std::move(level));
      continue;
    }
    const std::string prefix = name + "." + plan.name;
    if (plan.motion_lstm && cfg.use_motion) {
      level.has_motion_lstm = true;
      level.motion_lstm = Lstm(store, prefix + ".motion_lstm", cfg.d, cfg.d, rng);
    }
    std::size_t n = plan.n;
    std::vector<std::pair<std::string, const CrnConfig*>> stages;
    if (cfg.use_motion) stages.push_back({"motion", &motion_cfg});
    stages.push_back({"question", &question_cfg});
    for (const auto& [source, ucfg] : stages) {
      if (n < 2) {
        throw ShapeError("visual stream: " + plan.name + "-level " + source +
                         " unit would receive " + std::to_string(n) +
                         " object(s); shape chain " + chain_);
      }
      CrnUnit unit(store, prefix + "." + source, *ucfg, n, rng);
      UnitInfo info{unit.name(), plan.name, source, ucfg->conditioning,
                    plan.groups, n, unit.output_count(), rows};
      n = unit.output_count();
      chain_ += " -> " + std::to_string(n);
      info_.push_back(info);
      level.units.push_back(std::move(unit));
    }
    // The level's outputs are stacked into one object per array.
    if (plan.name != "video") rows *= n;
    out_shape_ = {n, rows, cfg.d};
    levels_.push_back(std::move(level));
  }
}

Tensor VisualStream::run_level(Context& ctx, const Level& level,
                               const Tensor& x, const Tensor& motion,
                               const Tensor& q) const {
  Tensor cur = x;
  Tensor qg = repeat_rows(q, level.groups);
  for (const auto& unit : level.units) {
    const bool is_motion =
        unit.config().conditioning == Conditioning::kAdditive;
    cur = unit(ctx, cur, is_motion ? motion : qg);
  }
  return cur;
}

Tensor VisualStream::operator()(Context& ctx, const Tensor& frames,
                                const Tensor& motion, const Tensor& q) const {
  const std::size_t N = cfg_.clips, T = cfg_.frames, d = cfg_.d;
  if (frames.rank() != 4 || frames.dim(1) != N || frames.dim(2) != T ||
      frames.dim(3) != d) {
    throw ShapeError("visual stream expects frames [B, " + std::to_string(N) +
                     ", " + std::to_string(T) + ", " + std::to_string(d) +
                     "], got " + shape_string(frames.shape()));
  }
  const std::size_t batch = frames.dim(0);
  if (q.shape() != Shape{batch, d}) {
    throw ShapeError("visual stream: question shape " + shape_string(q.shape()));
  }
  if (cfg_.use_motion && motion.shape() != Shape{batch, N, d}) {
    throw ShapeError("visual stream: motion shape " +
                     shape_string(motion.shape()) + ", expected " +
                     shape_string({batch, N, d}));
  }

  // Clip level: one array of T single-row objects per clip.
  Tensor clip_motion = cfg_.use_motion ? reshape(motion, {batch * N, d}) : Tensor();
  Tensor out = run_level(ctx, levels_[0], reshape(frames, {batch * N, T, 1, d}),
                         clip_motion, q);
  std::size_t rows = out.dim(1) * out.dim(2);
  Tensor objects = reshape(out, {batch, N, rows, d});
  Tensor level_motion = cfg_.use_motion ? motion : Tensor();  // [B, arrays, d]

  for (std::size_t li = 1; li < levels_.size(); ++li) {
    const Level& level = levels_[li];
    if (level.pass_through) continue;
    const std::size_t groups = level.groups;
    const std::size_t per = objects.dim(1) / groups;
    Tensor lm;
    if (level.has_motion_lstm) {
      lm = level.motion_lstm(ctx, reshape(level_motion, {batch * groups, per, d})).last;
    }
    Tensor res = run_level(ctx, level, reshape(objects, {batch * groups, per, rows, d}),
                           lm, q);
    if (level.name == "video") return res;
    rows = res.dim(1) * res.dim(2);
    objects = reshape(res, {batch, groups, rows, d});
    if (cfg_.use_motion) level_motion = reshape(lm, {batch, groups, d});
  }
  return objects;
}

CrnCost VisualStream::predicted_cost() const {
  CrnCost total;
  std::size_t i = 0;
  for (const auto& level : levels_) {
    for (const auto& unit : level.units) {
      const UnitInfo& info = info_[i++];
      CrnCost c = cost_estimate(cfg_.crn.t, unit.k_max(), info.rows, cfg_.d);
      total.g += info.arrays * c.g;
      total.h += info.arrays * c.h;
    }
  }
  return total;
}

Readout::Readout(ParamStore& store, const std::string& name, std::size_t d,
                 Rng& rng, bool with_answer)
    : d_(d), with_answer_(with_answer) {
  wo_ = Linear(store, name + ".wo", d, d, rng, false);
  wq_ = Linear(store, name + ".wq", d, d, rng, false);
  if (with_answer) wa_ = Linear(store, name + ".wa", d, d, rng, false);
  wi_ = Linear(store, name + ".wi", (with_answer ? 3 : 2) * d, d, rng);
  wlogit_ = Linear(store, name + ".logit", d, 1, rng);
}

AttentionResult Readout::operator()(Context& ctx, const Tensor& o,
                                    const Tensor& q, const Tensor& a) const {
  if (o.rank() != 3 || o.dim(2) != d_) {
    throw ShapeError("readout expects [B, H', " + std::to_string(d_) +
                     "], got " + shape_string(o.shape()));
  }
  const std::size_t batch = o.dim(0), slots = o.dim(1);
  Tensor po = wo_(ctx, o);
  std::vector<Tensor> parts = {po, mul(po, expand(wq_(ctx, q), 1, slots))};
  if (with_answer_) {
    if (a.empty()) throw std::invalid_argument("readout: answer vector required");
    parts.push_back(mul(po, expand(wa_(ctx, a), 1, slots)));
  }
  Tensor hidden = elu(wi_(ctx, concat_lastdim(parts)));
  Tensor weights = softmax_lastdim(reshape(wlogit_(ctx, hidden), {batch, slots}));
  Tensor pooled = bmatmul(reshape(weights, {batch, 1, slots}), o);
  return {reshape(pooled, {batch, d_}), weights};
}

Preselect::Preselect(ParamStore& store, const std::string& name, std::size_t d,
                     Rng& rng)
    : d_(d), w_(store, name, 2 * d, d, rng) {}

Tensor Preselect::operator()(Context& ctx, const Tensor& obj,
                             const Tensor& q) const {
  if (obj.rank() != 3 || obj.dim(2) != d_ || q.shape() != Shape{obj.dim(0), d_}) {
    throw ShapeError("preselect: object " + shape_string(obj.shape()) +
                     " and question " + shape_string(q.shape()) +
                     " disagree on batch or hidden size");
  }
  return w_(ctx, concat_lastdim({obj, mul(obj, expand(q, 1, obj.dim(1)))}));
}

Tensor segment_passage(const Tensor& passage, std::size_t segments) {
  if (passage.rank() != 3 || segments == 0) {
    throw ShapeError("segment_passage expects [B, S, d]");
  }
  const std::size_t batch = passage.dim(0), len = passage.dim(1),
                    d = passage.dim(2);
  std::size_t window = 2 * len / (segments + 1);
  window -= window % 2;
  if (window < 2) {
    throw ShapeError("segment_passage: passage of " + std::to_string(len) +
                     " tokens is too short for " + std::to_string(segments) +
                     " segments");
  }
  const std::size_t stride = window / 2;
  std::vector<std::size_t> idx;
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t m = 0; m < segments; ++m) {
      for (std::size_t j = 0; j < window; ++j) {
        idx.push_back(b * len + m * stride + j);
      }
    }
  }
  return reshape(gather_rows(reshape(passage, {batch * len, d}), idx),
                 {batch, segments, window, d});
}

TextualStream::TextualStream(ParamStore& store, const std::string& name,
                             std::size_t segments, const CrnConfig& crn,
                             Rng& rng)
    : m_(segments), d_(crn.d) {
  if (segments < 3) {
    throw ShapeError("textual stream: need at least 3 segments, got " +
                     std::to_string(segments));
  }
  segment_sel_ = Preselect(store, name + ".segment_select", d_, rng);
  passage_sel_ = Preselect(store, name + ".passage_select", d_, rng);
  crn_ = CrnUnit(store, name + ".crn", crn, segments, rng);
}

Tensor TextualStream::operator()(Context& ctx, const Tensor& segments,
                                 const Tensor& passage, const Tensor& q) const {
  if (segments.rank() != 4 || segments.dim(1) != m_ || segments.dim(3) != d_) {
    throw ShapeError("textual stream expects segments [B, " +
                     std::to_string(m_) + ", T, " + std::to_string(d_) +
                     "], got " + shape_string(segments.shape()));
  }
  const std::size_t batch = segments.dim(0), len = segments.dim(2);
  Tensor sel = segment_sel_(ctx, reshape(segments, {batch, m_ * len, d_}), q);
  Tensor cond = max_axis(passage_sel_(ctx, passage, q), 1);
  Tensor rel = crn_(ctx, reshape(sel, {batch, m_, len, d_}), cond);
  return max_axis(reshape(rel, {batch, rel.dim(1) * rel.dim(2), d_}), 1);
}

}  // namespace relnet
