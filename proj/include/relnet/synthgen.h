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

// Synthetic QA tasks with labels computed by construction.
//
// Sequence tasks render each frame as the feature vector of one symbol.
// Scene tasks place objects with a shape, a color and a box; the
// appearance of an object is shape_feature + color_feature.

#ifndef RELNET_SYNTHGEN_H_
#define RELNET_SYNTHGEN_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "relnet/gap.h"
#include "relnet/tensor.h"

namespace relnet {

enum class TaskKind { kCountSymbol, kTransitionOrder, kAttributeQuery, kRelationQuery };

std::string task_kind_name(TaskKind kind);
TaskKind parse_task_kind(const std::string& name);
bool is_scene_task(TaskKind kind);

struct SequenceSpec {
  TaskKind kind = TaskKind::kCountSymbol;
  std::size_t clips = 4;
  std::size_t frames = 6;  // per clip
  std::size_t symbols = 8;
  std::size_t feature_dim = 32;
  std::size_t samples = 1000;
  std::uint64_t seed = 0;
};

struct SceneSpec {
  TaskKind kind = TaskKind::kRelationQuery;
  std::size_t objects = 6;
  std::size_t shapes = 8;
  std::size_t colors = 8;
  std::size_t feature_dim = 32;
  std::size_t samples = 1000;
  std::uint64_t seed = 0;
};

// Box layout: x1, y1, x2, y2, width, height, width * height.
using Box = std::array<double, 7>;

struct SceneObject {
  std::size_t shape = 0, color = 0;
  Box box{};
};

struct Sample {
  std::uint64_t id = 0;
  std::vector<std::size_t> tokens;
  std::size_t label = 0;
  std::vector<std::size_t> frames;   // sequence tasks: symbol of each frame
  std::vector<SceneObject> objects;  // scene tasks
  std::size_t target = 0;            // scene tasks: answer-relevant object
};

struct Dataset {
  TaskKind kind = TaskKind::kCountSymbol;
  std::uint64_t seed = 0;
  std::size_t clips = 0, frames = 0;    // sequence tasks
  std::size_t shapes = 0, colors = 0;   // scene tasks
  std::size_t feature_dim = 0;
  std::size_t num_labels = 0;
  std::vector<std::string> vocabulary;  // question tokens
  // Sequence tasks: one row per symbol. Scene tasks: shapes, then colors.
  std::vector<std::vector<double>> features;
  std::vector<Sample> samples;
};

// Throws std::invalid_argument for infeasible settings (for example fewer
// than 10 frames for count_symbol, or fewer than 2 symbols).
Dataset generate_sequence_task(const SequenceSpec& spec);
Dataset generate_scene_task(const SceneSpec& spec);

// Label from the sample content by the task rule.
std::size_t recompute_label(const Dataset& data, const Sample& sample);
// Index of the nearest object strictly left of `reference` by box center,
// or -1 when there is none.
int nearest_left_of(const std::vector<SceneObject>& objects, std::size_t reference);

// Batched model inputs.
Tensor frame_features(const Dataset& data, const std::vector<const Sample*>& batch);   // [B, N, T, d]
Tensor clip_motion(const Tensor& frames);                                             // [B, N, d]
Tensor object_appearance(const Dataset& data, const std::vector<const Sample*>& batch);  // [B, N, d]
Tensor object_boxes(const std::vector<const Sample*>& batch);                         // [B, N, 7]

std::string to_jsonl(const Dataset& data);
Dataset from_jsonl(const std::string& text);
void write_dataset(const Dataset& data, const std::string& path);
Dataset read_dataset(const std::string& path);

struct Split {
  std::vector<std::size_t> train, validation;  // indices into samples
};
// Deterministic split by sample id: ids whose hash falls below the fraction
// go to validation.
Split split_by_id(const Dataset& data, double validation_fraction);

struct GroundingFixture {
  std::uint64_t id = 0;
  ParseTree tree;
  std::vector<std::vector<double>> word_scores;    // one list per RE
  std::vector<std::vector<double>> region_scores;  // one list per RE
  PooledPrior word_prior, region_prior;
};

// Template trees and oracle priors for the scene tasks.
std::vector<GroundingFixture> grounding_fixtures(const Dataset& data);
std::string fixtures_to_jsonl(const std::vector<GroundingFixture>& fixtures);
std::vector<GroundingFixture> fixtures_from_jsonl(const std::string& text);

}  // namespace relnet

#endif  // RELNET_SYNTHGEN_H_
