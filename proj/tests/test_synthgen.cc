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

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "relnet/synthgen.h"

using namespace relnet;

namespace {

std::vector<std::size_t> label_counts(const Dataset& d) {
  std::vector<std::size_t> counts(d.num_labels, 0);
  for (const Sample& s : d.samples) ++counts.at(s.label);
  return counts;
}

void check_balance(const Dataset& d) {
  const double uniform = 1.0 / static_cast<double>(d.num_labels);
  for (std::size_t c : label_counts(d)) {
    const double freq = static_cast<double>(c) / d.samples.size();
    CHECK(std::abs(freq - uniform) <= 0.05 * uniform);
  }
}

// Nearest symbol to each frame feature, by squared distance.
std::vector<std::size_t> decode_frames(const Dataset& d, const Sample& s) {
  std::vector<const Sample*> one = {&s};
  Tensor f = frame_features(d, one);
  const std::size_t dim = d.feature_dim;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < s.frames.size(); ++i) {
    std::size_t best = 0;
    double best_dist = 1e300;
    for (std::size_t k = 0; k < d.features.size(); ++k) {
      double dist = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        const double diff = f[i * dim + j] - d.features[k][j];
        dist += diff * diff;
      }
      if (dist < best_dist) {
        best_dist = dist;
        best = k;
      }
    }
    out.push_back(best);
  }
  return out;
}

}  // namespace

TEST_CASE("count_symbol labels are balanced and recomputable") {
  SequenceSpec spec;
  spec.samples = 10000;
  spec.seed = 3;
  Dataset d = generate_sequence_task(spec);
  CHECK(d.num_labels == 11);
  check_balance(d);
  for (const Sample& s : d.samples) {
    REQUIRE(recompute_label(d, s) == s.label);
  }
  for (std::size_t i = 0; i < 200; ++i) {
    const Sample& s = d.samples[i];
    std::vector<std::size_t> frames = decode_frames(d, s);
    CHECK(frames == s.frames);
    const std::size_t target = s.tokens[2] - 2;
    CHECK(static_cast<std::size_t>(std::count(frames.begin(), frames.end(), target)) ==
          s.label);
  }
}

TEST_CASE("zero occurrences give label zero") {
  SequenceSpec spec;
  spec.samples = 200;
  Dataset d = generate_sequence_task(spec);
  bool seen = false;
  for (const Sample& s : d.samples) {
    if (s.label != 0) continue;
    seen = true;
    CHECK(std::count(s.frames.begin(), s.frames.end(), s.tokens[2] - 2) == 0);
  }
  CHECK(seen);
}

TEST_CASE("infeasible sequence settings are rejected") {
  SequenceSpec spec;
  spec.clips = 3;
  spec.frames = 3;
  CHECK_THROWS_AS(generate_sequence_task(spec), std::invalid_argument);
  spec.clips = 4;
  spec.symbols = 1;
  CHECK_THROWS_AS(generate_sequence_task(spec), std::invalid_argument);
  spec.kind = TaskKind::kTransitionOrder;
  spec.symbols = 2;
  CHECK_THROWS_AS(generate_sequence_task(spec), std::invalid_argument);
}

TEST_CASE("transition_order labels follow event order") {
  SequenceSpec spec;
  spec.kind = TaskKind::kTransitionOrder;
  spec.samples = 10000;
  spec.seed = 5;
  Dataset d = generate_sequence_task(spec);
  check_balance(d);
  std::size_t after = 0;
  for (const Sample& s : d.samples) {
    REQUIRE(recompute_label(d, s) == s.label);
    const std::size_t a = s.tokens[1] - 4, b = s.tokens[4] - 4;
    CHECK(std::count(s.frames.begin(), s.frames.end(), a) == 1);
    CHECK(std::count(s.frames.begin(), s.frames.end(), b) == 1);
    after += s.tokens[3] == 3;
  }
  CHECK(after > 4500);
  CHECK(after < 5500);
}

TEST_CASE("same seed gives identical bytes") {
  SequenceSpec spec;
  spec.samples = 300;
  spec.seed = 9;
  CHECK(to_jsonl(generate_sequence_task(spec)) == to_jsonl(generate_sequence_task(spec)));
  SceneSpec scene;
  scene.samples = 300;
  scene.seed = 9;
  const std::string a = to_jsonl(generate_scene_task(scene));
  CHECK(a == to_jsonl(generate_scene_task(scene)));
  scene.seed = 10;
  CHECK(a != to_jsonl(generate_scene_task(scene)));
}

TEST_CASE("JSON lines round trip") {
  SceneSpec scene;
  scene.samples = 50;
  Dataset d = generate_scene_task(scene);
  const std::string text = to_jsonl(d);
  CHECK(to_jsonl(from_jsonl(text)) == text);
  SequenceSpec spec;
  spec.samples = 50;
  const std::string seq = to_jsonl(generate_sequence_task(spec));
  CHECK(to_jsonl(from_jsonl(seq)) == seq);
  CHECK_THROWS_AS(from_jsonl("{\"id\": 1}\n"), std::invalid_argument);
}

TEST_CASE("relation_query scenes") {
  SceneSpec spec;
  spec.samples = 10000;
  spec.seed = 1;
  Dataset d = generate_scene_task(spec);
  check_balance(d);
  for (const Sample& s : d.samples) {
    REQUIRE(s.objects.size() == 6);
    std::set<std::size_t> shapes;
    for (const SceneObject& o : s.objects) {
      shapes.insert(o.shape);
      for (int k = 0; k < 4; ++k) CHECK((o.box[k] >= 0.0 && o.box[k] <= 1.0));
      CHECK(o.box[6] == o.box[4] * o.box[5]);
    }
    CHECK(shapes.size() == 6);
    REQUIRE(recompute_label(d, s) == s.label);
    CHECK(s.objects[s.target].color == s.label);
  }
}

TEST_CASE("left-of picks the nearest object on the left") {
  std::vector<SceneObject> objs(3);
  auto at = [](double cx) { return Box{cx - 0.05, 0.4, cx + 0.05, 0.5, 0.1, 0.1, 0.01}; };
  objs[0].box = at(0.1);
  objs[1].box = at(0.9);
  objs[2].box = at(0.5);
  CHECK(nearest_left_of(objs, 1) == 2);
  CHECK(nearest_left_of(objs, 2) == 0);
  CHECK(nearest_left_of(objs, 0) == -1);
  objs.pop_back();
  CHECK(nearest_left_of(objs, 1) == 0);
}

TEST_CASE("relabeling object order leaves labels unchanged") {
  SceneSpec spec;
  spec.samples = 500;
  Dataset d = generate_scene_task(spec);
  std::vector<std::size_t> perm = {5, 2, 0, 4, 1, 3};
  for (const Sample& s : d.samples) {
    Sample p = s;
    for (std::size_t i = 0; i < perm.size(); ++i) p.objects[i] = s.objects[perm[i]];
    CHECK(recompute_label(d, p) == s.label);
  }
}

TEST_CASE("attribute query over one object") {
  SceneSpec spec;
  spec.kind = TaskKind::kAttributeQuery;
  spec.objects = 1;
  spec.samples = 40;
  Dataset d = generate_scene_task(spec);
  for (const Sample& s : d.samples) {
    CHECK(s.label == s.objects[0].color);
    CHECK(recompute_label(d, s) == s.label);
  }
  spec.kind = TaskKind::kRelationQuery;
  CHECK_THROWS_AS(generate_scene_task(spec), std::invalid_argument);
}

TEST_CASE("splits are disjoint by sample id") {
  SequenceSpec spec;
  spec.samples = 2000;
  Dataset d = generate_sequence_task(spec);
  Split split = split_by_id(d, 0.2);
  std::set<std::uint64_t> train, val;
  for (std::size_t i : split.train) train.insert(d.samples[i].id);
  for (std::size_t i : split.validation) val.insert(d.samples[i].id);
  CHECK(train.size() + val.size() == 2000);
  for (std::uint64_t id : val) CHECK(train.count(id) == 0);
  CHECK(val.size() > 300);
  CHECK(val.size() < 500);
}

TEST_CASE("grounding fixtures") {
  for (TaskKind kind : {TaskKind::kRelationQuery, TaskKind::kAttributeQuery}) {
    SceneSpec spec;
    spec.kind = kind;
    spec.samples = 100;
    Dataset d = generate_scene_task(spec);
    auto fixtures = grounding_fixtures(d);
    REQUIRE(fixtures.size() == d.samples.size());
    for (std::size_t i = 0; i < fixtures.size(); ++i) {
      const GroundingFixture& fx = fixtures[i];
      CHECK_NOTHROW(fx.tree.validate());
      CHECK(fx.tree.num_words() == d.samples[i].tokens.size());
      CHECK(fx.region_prior.normalized[d.samples[i].target] > 0.9);
      double sw = 0.0, sr = 0.0;
      for (double v : fx.word_prior.normalized) sw += v;
      for (double v : fx.region_prior.normalized) sr += v;
      CHECK(sw == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(sr == doctest::Approx(1.0).epsilon(1e-12));
    }
    auto back = fixtures_from_jsonl(fixtures_to_jsonl(fixtures));
    CHECK(fixtures_to_jsonl(back) == fixtures_to_jsonl(fixtures));
  }
  SequenceSpec seq;
  seq.samples = 10;
  CHECK_THROWS_AS(grounding_fixtures(generate_sequence_task(seq)), std::invalid_argument);
}
