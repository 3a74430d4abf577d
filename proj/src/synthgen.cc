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

#include "relnet/synthgen.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "relnet/ops.h"
#include "relnet/rng.h"

namespace relnet {

namespace {

using nlohmann::json;

constexpr std::size_t kMaxCountLabel = 10;

// Fixed vocabulary prefixes; symbol / shape tokens follow.
const std::vector<std::string> kCountWords = {"how", "many"};
const std::vector<std::string> kOrderWords = {"does", "happen", "before", "after"};
const std::vector<std::string> kSceneWords = {"what", "color", "is", "the",
                                              "object", "left", "of"};

std::vector<std::vector<double>> random_features(std::size_t count,
                                                 std::size_t dim, Rng& rng) {
  std::vector<std::vector<double>> out(count, std::vector<double>(dim));
  const double s = 1.0 / std::sqrt(static_cast<double>(dim));
  for (auto& row : out) {
    for (auto& v : row) v = rng.normal() * s;
  }
  return out;
}

// Labels visiting every class once per shuffled block.
std::vector<std::size_t> balanced_labels(std::size_t n, std::size_t classes,
                                         Rng& rng) {
  std::vector<std::size_t> out;
  std::vector<std::size_t> block(classes);
  while (out.size() < n) {
    std::iota(block.begin(), block.end(), 0);
    rng.shuffle(block);
    for (std::size_t c : block) {
      if (out.size() < n) out.push_back(c);
    }
  }
  return out;
}

std::size_t draw_excluding(Rng& rng, std::size_t n,
                           const std::vector<std::size_t>& excluded) {
  for (;;) {
    std::size_t s = rng.below(n);
    if (std::find(excluded.begin(), excluded.end(), s) == excluded.end()) return s;
  }
}

double center_x(const SceneObject& o) { return 0.5 * (o.box[0] + o.box[2]); }

std::size_t object_with_shape(const Sample& s, std::size_t shape) {
  for (std::size_t i = 0; i < s.objects.size(); ++i) {
    if (s.objects[i].shape == shape) return i;
  }
  throw std::invalid_argument("sample " + std::to_string(s.id) +
                              ": no object has the queried shape");
}

void place_objects(std::vector<SceneObject>& objects, Rng& rng) {
  for (;;) {
    for (auto& o : objects) {
      const double w = rng.uniform(0.05, 0.15), h = rng.uniform(0.05, 0.15);
      const double cx = rng.uniform(w / 2, 1.0 - w / 2);
      const double cy = rng.uniform(h / 2, 1.0 - h / 2);
      o.box = {cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2, w, h, w * h};
    }
    bool separated = true;
    for (std::size_t i = 0; i < objects.size(); ++i) {
      for (std::size_t j = i + 1; j < objects.size(); ++j) {
        if (std::abs(center_x(objects[i]) - center_x(objects[j])) < 0.02) {
          separated = false;
        }
      }
    }
    if (separated) return;
  }
}

ParseTree make_tree(std::vector<int> parent, std::size_t words,
                    std::vector<std::string> tags, std::vector<bool> referring) {
  ParseTree t;
  t.parent = std::move(parent);
  t.word.assign(t.parent.size(), -1);
  for (std::size_t i = 0; i < words; ++i) t.word[i] = static_cast<int>(i);
  t.tag = std::move(tags);
  t.referring = std::move(referring);
  return t;
}

}  // namespace

std::string task_kind_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::kCountSymbol: return "count_symbol";
    case TaskKind::kTransitionOrder: return "transition_order";
    case TaskKind::kAttributeQuery: return "attribute_query";
    case TaskKind::kRelationQuery: return "relation_query";
  }
  return "?";
}

TaskKind parse_task_kind(const std::string& name) {
  for (TaskKind k : {TaskKind::kCountSymbol, TaskKind::kTransitionOrder,
                     TaskKind::kAttributeQuery, TaskKind::kRelationQuery}) {
    if (task_kind_name(k) == name) return k;
  }
  throw std::invalid_argument("unknown task kind '" + name + "'");
}

bool is_scene_task(TaskKind kind) {
  return kind == TaskKind::kAttributeQuery || kind == TaskKind::kRelationQuery;
}

Dataset generate_sequence_task(const SequenceSpec& spec) {
  if (is_scene_task(spec.kind)) {
    throw std::invalid_argument(task_kind_name(spec.kind) + " is a scene task");
  }
  const std::size_t len = spec.clips * spec.frames;
  if (spec.feature_dim == 0 || len == 0) {
    throw std::invalid_argument("sequence task: clips, frames and feature_dim "
                                "must be positive");
  }
  Rng rng(spec.seed);
  Dataset data;
  data.kind = spec.kind;
  data.seed = spec.seed;
  data.clips = spec.clips;
  data.frames = spec.frames;
  data.feature_dim = spec.feature_dim;
  std::vector<std::string> words;
  if (spec.kind == TaskKind::kCountSymbol) {
    if (spec.symbols < 2) {
      throw std::invalid_argument("count_symbol needs at least 2 symbols");
    }
    if (len < kMaxCountLabel) {
      throw std::invalid_argument(
          "count_symbol: " + std::to_string(len) +
          " frames cannot hold counts up to " + std::to_string(kMaxCountLabel));
    }
    data.num_labels = kMaxCountLabel + 1;
    words = kCountWords;
  } else {
    if (spec.symbols < 3 || len < 2) {
      throw std::invalid_argument(
          "transition_order needs at least 3 symbols and 2 frames");
    }
    data.num_labels = 2;
    words = kOrderWords;
  }
  const std::size_t offset = words.size();
  for (std::size_t s = 0; s < spec.symbols; ++s) words.push_back("sym" + std::to_string(s));
  data.vocabulary = words;
  data.features = random_features(spec.symbols, spec.feature_dim, rng);

  const auto labels = balanced_labels(spec.samples, data.num_labels, rng);
  for (std::size_t i = 0; i < spec.samples; ++i) {
    Sample s;
    s.id = i;
    s.label = labels[i];
    s.frames.resize(len);
    std::vector<std::size_t> pos(len);
    std::iota(pos.begin(), pos.end(), 0);
    rng.shuffle(pos);
    if (spec.kind == TaskKind::kCountSymbol) {
      const std::size_t target = rng.below(spec.symbols);
      for (auto& f : s.frames) f = draw_excluding(rng, spec.symbols, {target});
      for (std::size_t c = 0; c < s.label; ++c) s.frames[pos[c]] = target;
      s.tokens = {0, 1, offset + target};
    } else {
      const std::size_t a = rng.below(spec.symbols);
      const std::size_t b = draw_excluding(rng, spec.symbols, {a});
      const bool after = rng.below(2) == 1;
      for (auto& f : s.frames) f = draw_excluding(rng, spec.symbols, {a, b});
      std::size_t pa = pos[0], pb = pos[1];
      const bool truth = after ? pa > pb : pa < pb;
      if (truth != (s.label == 1)) std::swap(pa, pb);
      s.frames[pa] = a;
      s.frames[pb] = b;
      s.tokens = {0, offset + a, 1, after ? 3u : 2u, offset + b};
    }
    data.samples.push_back(std::move(s));
  }
  return data;
}

Dataset generate_scene_task(const SceneSpec& spec) {
  if (!is_scene_task(spec.kind)) {
    throw std::invalid_argument(task_kind_name(spec.kind) + " is not a scene task");
  }
  const bool relation = spec.kind == TaskKind::kRelationQuery;
  if (spec.objects < (relation ? 2u : 1u)) {
    throw std::invalid_argument("scene task: too few objects for " +
                                task_kind_name(spec.kind));
  }
  if (spec.shapes < spec.objects || spec.colors < 2 || spec.feature_dim == 0) {
    throw std::invalid_argument("scene task: need at least as many shapes as "
                                "objects and at least 2 colors");
  }
  Rng rng(spec.seed);
  Dataset data;
  data.kind = spec.kind;
  data.seed = spec.seed;
  data.shapes = spec.shapes;
  data.colors = spec.colors;
  data.feature_dim = spec.feature_dim;
  data.num_labels = spec.colors;
  data.vocabulary = kSceneWords;
  const std::size_t offset = kSceneWords.size();
  for (std::size_t s = 0; s < spec.shapes; ++s) {
    data.vocabulary.push_back("shape" + std::to_string(s));
  }
  data.features = random_features(spec.shapes + spec.colors, spec.feature_dim, rng);

  const auto labels = balanced_labels(spec.samples, spec.colors, rng);
  for (std::size_t i = 0; i < spec.samples; ++i) {
    Sample s;
    s.id = i;
    s.label = labels[i];
    std::vector<std::size_t> shapes(spec.shapes);
    std::iota(shapes.begin(), shapes.end(), 0);
    rng.shuffle(shapes);
    s.objects.resize(spec.objects);
    for (std::size_t o = 0; o < spec.objects; ++o) {
      s.objects[o].shape = shapes[o];
      s.objects[o].color = rng.below(spec.colors);
    }
    place_objects(s.objects, rng);
    std::size_t reference = rng.below(spec.objects);
    if (relation) {
      // The leftmost object has nothing to its left; draw again.
      while (nearest_left_of(s.objects, reference) < 0) {
        reference = rng.below(spec.objects);
      }
      s.target = static_cast<std::size_t>(nearest_left_of(s.objects, reference));
      s.tokens = {0, 1, 2, 3, 4, 5, 6, 3, offset + s.objects[reference].shape};
    } else {
      s.target = reference;
      s.tokens = {0, 1, 2, 3, offset + s.objects[reference].shape};
    }
    s.objects[s.target].color = s.label;
    data.samples.push_back(std::move(s));
  }
  return data;
}

int nearest_left_of(const std::vector<SceneObject>& objects, std::size_t reference) {
  const double x = center_x(objects.at(reference));
  int best = -1;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const double xi = center_x(objects[i]);
    if (i == reference || xi >= x) continue;
    if (best < 0 || xi > center_x(objects[best])) best = static_cast<int>(i);
  }
  return best;
}

std::size_t recompute_label(const Dataset& data, const Sample& s) {
  switch (data.kind) {
    case TaskKind::kCountSymbol: {
      const std::size_t target = s.tokens.at(2) - kCountWords.size();
      return static_cast<std::size_t>(
          std::count(s.frames.begin(), s.frames.end(), target));
    }
    case TaskKind::kTransitionOrder: {
      const std::size_t a = s.tokens.at(1) - kOrderWords.size();
      const std::size_t b = s.tokens.at(4) - kOrderWords.size();
      const auto pa = std::find(s.frames.begin(), s.frames.end(), a);
      const auto pb = std::find(s.frames.begin(), s.frames.end(), b);
      const bool after = s.tokens.at(3) == 3;
      return (after ? pa > pb : pa < pb) ? 1 : 0;
    }
    case TaskKind::kAttributeQuery:
      return s.objects[object_with_shape(s, s.tokens.back() - kSceneWords.size())]
          .color;
    case TaskKind::kRelationQuery: {
      const std::size_t ref = object_with_shape(s, s.tokens.back() - kSceneWords.size());
      const int t = nearest_left_of(s.objects, ref);
      if (t < 0) {
        throw std::invalid_argument("sample " + std::to_string(s.id) +
                                    ": nothing lies left of the reference");
      }
      return s.objects[t].color;
    }
  }
  return 0;
}

Tensor frame_features(const Dataset& data, const std::vector<const Sample*>& batch) {
  const std::size_t d = data.feature_dim, len = data.clips * data.frames;
  std::vector<double> out;
  out.reserve(batch.size() * len * d);
  for (const Sample* s : batch) {
    if (s->frames.size() != len) {
      throw ShapeError("frame_features: sample " + std::to_string(s->id) +
                       " has the wrong number of frames");
    }
    for (std::size_t f : s->frames) {
      out.insert(out.end(), data.features.at(f).begin(), data.features.at(f).end());
    }
  }
  return Tensor({batch.size(), data.clips, data.frames, d}, std::move(out));
}

Tensor clip_motion(const Tensor& frames) { return mean_axis(frames, 2); }

Tensor object_appearance(const Dataset& data, const std::vector<const Sample*>& batch) {
  const std::size_t d = data.feature_dim;
  const std::size_t n = batch.empty() ? 0 : batch.front()->objects.size();
  std::vector<double> out;
  for (const Sample* s : batch) {
    if (s->objects.size() != n) {
      throw ShapeError("object_appearance: samples differ in object count");
    }
    for (const SceneObject& o : s->objects) {
      const auto& a = data.features.at(o.shape);
      const auto& c = data.features.at(data.shapes + o.color);
      for (std::size_t f = 0; f < d; ++f) out.push_back(a[f] + c[f]);
    }
  }
  return Tensor({batch.size(), n, d}, std::move(out));
}

Tensor object_boxes(const std::vector<const Sample*>& batch) {
  const std::size_t n = batch.empty() ? 0 : batch.front()->objects.size();
  std::vector<double> out;
  for (const Sample* s : batch) {
    if (s->objects.size() != n) {
      throw ShapeError("object_boxes: samples differ in object count");
    }
    for (const SceneObject& o : s->objects) out.insert(out.end(), o.box.begin(), o.box.end());
  }
  return Tensor({batch.size(), n, 7}, std::move(out));
}

std::string to_jsonl(const Dataset& data) {
  std::ostringstream os;
  json header = {{"record", "header"},
                 {"kind", task_kind_name(data.kind)},
                 {"seed", data.seed},
                 {"clips", data.clips},
                 {"frames", data.frames},
                 {"shapes", data.shapes},
                 {"colors", data.colors},
                 {"feature_dim", data.feature_dim},
                 {"num_labels", data.num_labels},
                 {"vocabulary", data.vocabulary},
                 {"features", data.features}};
  os << header.dump() << '\n';
  for (const Sample& s : data.samples) {
    json j = {{"id", s.id}, {"tokens", s.tokens}, {"label", s.label}};
    if (is_scene_task(data.kind)) {
      json objs = json::array();
      for (const SceneObject& o : s.objects) {
        objs.push_back({{"shape", o.shape}, {"color", o.color}, {"box", o.box}});
      }
      j["objects"] = objs;
      j["target"] = s.target;
    } else {
      j["frames"] = s.frames;
    }
    os << j.dump() << '\n';
  }
  return os.str();
}

Dataset from_jsonl(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  Dataset data;
  bool have_header = false;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw std::invalid_argument("dataset line " + std::to_string(lineno) +
                                  ": " + e.what());
    }
    if (!have_header) {
      if (j.value("record", "") != "header") {
        throw std::invalid_argument("dataset: first line must be the header");
      }
      data.kind = parse_task_kind(j.at("kind").get<std::string>());
      data.seed = j.at("seed").get<std::uint64_t>();
      data.clips = j.at("clips").get<std::size_t>();
      data.frames = j.at("frames").get<std::size_t>();
      data.shapes = j.at("shapes").get<std::size_t>();
      data.colors = j.at("colors").get<std::size_t>();
      data.feature_dim = j.at("feature_dim").get<std::size_t>();
      data.num_labels = j.at("num_labels").get<std::size_t>();
      data.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
      data.features = j.at("features").get<std::vector<std::vector<double>>>();
      have_header = true;
      continue;
    }
    Sample s;
    s.id = j.at("id").get<std::uint64_t>();
    s.tokens = j.at("tokens").get<std::vector<std::size_t>>();
    s.label = j.at("label").get<std::size_t>();
    if (is_scene_task(data.kind)) {
      for (const json& o : j.at("objects")) {
        s.objects.push_back({o.at("shape").get<std::size_t>(),
                             o.at("color").get<std::size_t>(),
                             o.at("box").get<Box>()});
      }
      s.target = j.at("target").get<std::size_t>();
    } else {
      s.frames = j.at("frames").get<std::vector<std::size_t>>();
    }
    data.samples.push_back(std::move(s));
  }
  if (!have_header) throw std::invalid_argument("dataset: missing header");
  return data;
}

void write_dataset(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << to_jsonl(data);
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_jsonl(ss.str());
}

Split split_by_id(const Dataset& data, double validation_fraction) {
  if (!(validation_fraction >= 0.0 && validation_fraction <= 1.0)) {
    throw std::invalid_argument("validation fraction must lie in [0, 1]");
  }
  Split split;
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    // splitmix64 finalizer of the id.
    std::uint64_t z = data.samples[i].id + 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    const double u = static_cast<double>(z >> 11) * 0x1.0p-53;
    (u < validation_fraction ? split.validation : split.train).push_back(i);
  }
  return split;
}

std::vector<GroundingFixture> grounding_fixtures(const Dataset& data) {
  if (!is_scene_task(data.kind)) {
    throw std::invalid_argument("grounding fixtures exist for scene tasks only");
  }
  const bool relation = data.kind == TaskKind::kRelationQuery;
  std::vector<GroundingFixture> out;
  for (const Sample& s : data.samples) {
    GroundingFixture fx;
    fx.id = s.id;
    std::vector<std::size_t> re_nodes;
    if (relation) {
      // what color is the object left of the <shape>
      fx.tree = make_tree(
          {9, 9, 15, 10, 10, 13, 12, 11, 11, 16, 14, 12, 13, 14, 15, 16, -1}, 9,
          {"WP", "NN", "VBZ", "DT", "NN", "JJ", "IN", "DT", "NN", "WHNP", "NP",
           "NP", "PP", "ADJP", "NP", "SQ", "SBARQ"},
          {false, false, false, false, false, false, false, false, false, true,
           false, false, false, false, true, false, false});
    } else {
      // what color is the <shape>
      fx.tree = make_tree({5, 5, 7, 6, 6, 8, 7, 8, -1}, 5,
                          {"WP", "NN", "VBZ", "DT", "NN", "WHNP", "NP", "SQ", "SBARQ"},
                          {false, false, false, false, false, true, true, false, false});
    }
    const std::size_t words = s.tokens.size();
    for (std::size_t node : fx.tree.referring_nodes()) {
      std::vector<double> w(words, 0.0);
      for (std::size_t i : fx.tree.span(node)) {
        // Head nouns carry the association; function words a little.
        w[i] = fx.tree.tag[i] == "NN" ? 1.0 : 0.2;
      }
      fx.word_scores.push_back(w);
      std::vector<double> r(s.objects.size(), 0.01);
      r[s.target] = 1.0;
      fx.region_scores.push_back(r);
    }
    fx.word_prior = pool_priors(fx.word_scores);
    fx.region_prior = pool_priors(fx.region_scores);
    out.push_back(std::move(fx));
  }
  return out;
}

std::string fixtures_to_jsonl(const std::vector<GroundingFixture>& fixtures) {
  std::ostringstream os;
  for (const GroundingFixture& fx : fixtures) {
    std::vector<int> referring(fx.tree.referring.begin(), fx.tree.referring.end());
    json j = {{"id", fx.id},
              {"tree",
               {{"parent", fx.tree.parent},
                {"word", fx.tree.word},
                {"tag", fx.tree.tag},
                {"referring", referring}}},
              {"word_scores", fx.word_scores},
              {"region_scores", fx.region_scores},
              {"word_prior", fx.word_prior.normalized},
              {"region_prior", fx.region_prior.normalized}};
    os << j.dump() << '\n';
  }
  return os.str();
}

std::vector<GroundingFixture> fixtures_from_jsonl(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::vector<GroundingFixture> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    GroundingFixture fx;
    fx.id = j.at("id").get<std::uint64_t>();
    const json& t = j.at("tree");
    fx.tree.parent = t.at("parent").get<std::vector<int>>();
    fx.tree.word = t.at("word").get<std::vector<int>>();
    fx.tree.tag = t.at("tag").get<std::vector<std::string>>();
    for (int r : t.at("referring").get<std::vector<int>>()) fx.tree.referring.push_back(r != 0);
    fx.tree.validate();
    fx.word_scores = j.at("word_scores").get<std::vector<std::vector<double>>>();
    fx.region_scores = j.at("region_scores").get<std::vector<std::vector<double>>>();
    fx.word_prior = pool_priors(fx.word_scores);
    fx.region_prior = pool_priors(fx.region_scores);
    out.push_back(std::move(fx));
  }
  return out;
}

}  // namespace relnet
