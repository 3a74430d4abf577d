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

// Hierarchical CRN streams. Tensors are batched over B independent videos:
//   frames  [B, N, T, d]   N clips of T projected frame features
//   motion  [B, N, d]      clip-level motion features
//   q       [B, d]         question vector
// Every level runs its CRN units over all arrays of the level at once.

#ifndef RELNET_HCRN_H_
#define RELNET_HCRN_H_

#include <cstddef>
#include <string>
#include <vector>

#include "relnet/crn.h"
#include "relnet/nn.h"

namespace relnet {

struct AttentionResult {
  Tensor output;   // pooled features
  Tensor weights;  // [B, items], rows sum to 1
};

// Question-conditioned temporal attention over the frames of a clip.
// frames: [B, T, P, d] with P spatial cells (P = 1 for pooled vectors).
// Scores use the spatial mean of each frame; the output is [B, P, d].
class ClipTemporalAttention {
 public:
  ClipTemporalAttention() = default;
  ClipTemporalAttention(ParamStore& store, const std::string& name,
                        std::size_t d, Rng& rng);

  AttentionResult operator()(Context& ctx, const Tensor& frames,
                             const Tensor& q) const;

  const Linear& query_proj() const { return wq_; }
  const Linear& frame_proj() const { return wv_; }
  const Linear& score() const { return w_; }

 private:
  std::size_t d_ = 0;
  Linear wq_, wv_, w_;
};

struct HcrnConfig {
  std::size_t clips = 8;    // N
  std::size_t frames = 16;  // T
  std::size_t d = 32;
  // Empty for the 2-level stream; {N1, N2} with N1 * N2 = N for 3 levels.
  std::vector<std::size_t> grouping;
  bool use_motion = true;
  // Sampling settings shared by every unit; the conditioning variant is
  // fixed by the stream wiring.
  CrnConfig crn;
};

// One CRN unit as placed in a stream.
struct UnitInfo {
  std::string name;
  std::string level;           // clip, subvideo, video
  std::string conditioned_on;  // motion, question
  Conditioning conditioning;
  std::size_t arrays;          // parallel arrays per video
  std::size_t n_in, n_out;     // array length before/after
  std::size_t rows;            // K of each object
};

class VisualStream {
 public:
  VisualStream() = default;
  // Throws ShapeError naming the full shape chain when a unit would
  // receive fewer than two objects.
  VisualStream(ParamStore& store, const std::string& name,
               const HcrnConfig& cfg, Rng& rng);

  // Returns the final object array [B, n_out, K, d].
  Tensor operator()(Context& ctx, const Tensor& frames, const Tensor& motion,
                    const Tensor& q) const;

  const std::vector<UnitInfo>& units() const { return info_; }
  // Predicted shape of the final array for one video: {n_out, K, d}.
  Shape output_shape() const { return out_shape_; }
  std::string shape_chain() const { return chain_; }
  std::size_t levels() const { return cfg_.grouping.empty() ? 2 : 3; }
  // Sum over units of arrays * cost_estimate(t, k_max, K, d).
  CrnCost predicted_cost() const;

 private:
  struct Level {
    std::string name;
    std::size_t groups = 1;  // arrays per video at this level
    bool pass_through = false;
    std::vector<CrnUnit> units;  // motion unit (optional) then question unit
    bool has_motion_lstm = false;
    Lstm motion_lstm;
  };

  Tensor run_level(Context& ctx, const Level& level, const Tensor& x,
                   const Tensor& motion, const Tensor& q) const;

  HcrnConfig cfg_;
  std::vector<Level> levels_;
  std::vector<UnitInfo> info_;
  Shape out_shape_;
  std::string chain_;
};

// Question-driven weighted average of readout slots.
// o: [B, H', d] -> output [B, d], weights [B, H'].
class Readout {
 public:
  Readout() = default;
  Readout(ParamStore& store, const std::string& name, std::size_t d, Rng& rng,
          bool with_answer = false);

  AttentionResult operator()(Context& ctx, const Tensor& o, const Tensor& q,
                             const Tensor& a = Tensor()) const;

 private:
  std::size_t d_ = 0;
  bool with_answer_ = false;
  Linear wo_, wq_, wa_, wi_, wlogit_;
};

// W[obj; obj * q] + b. obj: [B, R, d], q: [B, d].
class Preselect {
 public:
  Preselect() = default;
  Preselect(ParamStore& store, const std::string& name, std::size_t d, Rng& rng);

  Tensor operator()(Context& ctx, const Tensor& obj, const Tensor& q) const;
  const Linear& projection() const { return w_; }

 private:
  std::size_t d_ = 0;
  Linear w_;
};

// Half-overlapping windows of a passage [B, S, d] -> [B, M, T, d], with the
// longest even T such that the M windows fit.
Tensor segment_passage(const Tensor& passage, std::size_t segments);

// Segments [B, M, T, d] and passage [B, S, d]; returns [B, d].
class TextualStream {
 public:
  TextualStream() = default;
  TextualStream(ParamStore& store, const std::string& name,
                std::size_t segments, const CrnConfig& crn, Rng& rng);

  Tensor operator()(Context& ctx, const Tensor& segments,
                    const Tensor& passage, const Tensor& q) const;

 private:
  std::size_t m_ = 0, d_ = 0;
  Preselect segment_sel_, passage_sel_;
  CrnUnit crn_;
};

}  // namespace relnet

#endif  // RELNET_HCRN_H_
