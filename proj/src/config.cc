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

#include "relnet/config.h"

#include <fstream>
#include <set>
#include <sstream>

namespace relnet {

namespace {

using nlohmann::json;

// Walks one JSON object, checking that every key present is known.
class Section {
 public:
  Section(const json& j, std::string path, std::set<std::string> keys)
      : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where("") + ": expected an object");
    for (const auto& [key, value] : j_.items()) {
      if (!keys.count(key)) throw ConfigError("unknown config key '" + where(key) + "'");
    }
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  const json& at(const std::string& key) const { return j_.at(key); }
  std::string where(const std::string& key) const {
    if (path_.empty()) return key;
    return key.empty() ? path_ : path_ + "." + key;
  }

  void get(const std::string& key, std::size_t& out) const {
    if (!has(key)) return;
    const json& v = at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw ConfigError(where(key) + ": expected a non-negative integer");
    }
    out = v.get<std::size_t>();
  }
  void get(const std::string& key, double& out) const {
    if (!has(key)) return;
    if (!at(key).is_number()) throw ConfigError(where(key) + ": expected a number");
    out = at(key).get<double>();
  }
  void get(const std::string& key, bool& out) const {
    if (!has(key)) return;
    if (!at(key).is_boolean()) throw ConfigError(where(key) + ": expected true or false");
    out = at(key).get<bool>();
  }
  void get(const std::string& key, std::string& out) const {
    if (!has(key)) return;
    if (!at(key).is_string()) throw ConfigError(where(key) + ": expected a string");
    out = at(key).get<std::string>();
  }
  template <typename T, typename Parse>
  void get_enum(const std::string& key, T& out, Parse parse) const {
    std::string name;
    if (!has(key)) return;
    get(key, name);
    try {
      out = parse(name);
    } catch (const std::exception& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

 private:
  const json& j_;
  std::string path_;
};

void parse_task(const Section& s, TaskConfig& t) {
  s.get_enum("kind", t.kind, parse_task_kind);
  s.get("clips", t.clips);
  s.get("frames", t.frames);
  s.get("symbols", t.symbols);
  s.get("objects", t.objects);
  s.get("shapes", t.shapes);
  s.get("colors", t.colors);
  s.get("feature_dim", t.feature_dim);
  s.get("train_samples", t.train_samples);
  s.get("val_samples", t.val_samples);
  s.get("seed", t.seed);
}

void parse_model(const Section& s, ModelConfig& m) {
  s.get("type", m.type);
  if (m.type != "hcrn" && m.type != "lognet") {
    throw ConfigError(s.where("type") + ": expected \"hcrn\" or \"lognet\"");
  }
  s.get("d", m.d);
  s.get_enum("answer", m.answer, parse_answer_kind);
  if (s.has("hcrn")) {
    Section h(s.at("hcrn"), s.where("hcrn"),
              {"grouping", "use_motion", "k_max", "t", "g_mode", "sampling"});
    if (h.has("grouping")) {
      const json& g = h.at("grouping");
      if (!g.is_array()) throw ConfigError(h.where("grouping") + ": expected an array");
      m.grouping.clear();
      for (const json& v : g) {
        if (!v.is_number_integer() || v.get<long long>() < 0) {
          throw ConfigError(h.where("grouping") + ": expected non-negative integers");
        }
        m.grouping.push_back(v.get<std::size_t>());
      }
    }
    h.get("use_motion", m.use_motion);
    h.get("k_max", m.crn.k_max);
    h.get("t", m.crn.t);
    h.get_enum("g_mode", m.crn.g_mode, parse_g_mode);
    h.get_enum("sampling", m.crn.sampling, parse_sampling);
  }
  if (s.has("lognet")) {
    Section l(s.at("lognet"), s.where("lognet"), {"steps", "heads", "gcn_layers", "rank"});
    l.get("steps", m.steps);
    l.get("heads", m.heads);
    l.get("gcn_layers", m.gcn_layers);
    l.get("rank", m.rank);
  }
}

void parse_train(const Section& s, TrainConfig& t) {
  s.get("epochs", t.epochs);
  s.get("batch_size", t.batch_size);
  s.get("lr", t.lr);
  s.get("halve_every", t.halve_every);
  s.get("clip_norm", t.clip_norm);
  s.get("lambda_ling", t.lambda_ling);
  s.get("lambda_vis", t.lambda_vis);
  if (t.batch_size == 0) throw ConfigError(s.where("batch_size") + ": must be positive");
  if (!(t.lr > 0.0)) throw ConfigError(s.where("lr") + ": must be positive");
  if (t.lambda_ling < 0.0 || t.lambda_vis < 0.0) {
    throw ConfigError(s.where("lambda_*") + ": must be non-negative");
  }
}

}  // namespace

RunConfig parse_run_config(const json& j) {
  RunConfig cfg;
  Section root(j, "", {"seed", "task", "model", "train"});
  root.get("seed", cfg.seed);
  if (root.has("task")) {
    parse_task(Section(j.at("task"), "task",
                       {"kind", "clips", "frames", "symbols", "objects", "shapes", "colors",
                        "feature_dim", "train_samples", "val_samples", "seed"}),
               cfg.task);
  }
  if (root.has("model")) {
    parse_model(Section(j.at("model"), "model", {"type", "d", "answer", "hcrn", "lognet"}),
                cfg.model);
  }
  if (root.has("train")) {
    parse_train(Section(j.at("train"), "train",
                        {"epochs", "batch_size", "lr", "halve_every", "clip_norm",
                         "lambda_ling", "lambda_vis"}),
                cfg.train);
  }
  if (cfg.task.train_samples == 0) throw ConfigError("task.train_samples: must be positive");
  return cfg;
}

json to_json(const RunConfig& cfg) {
  const TaskConfig& t = cfg.task;
  const ModelConfig& m = cfg.model;
  const TrainConfig& r = cfg.train;
  return json{
      {"seed", cfg.seed},
      {"task",
       {{"kind", task_kind_name(t.kind)},
        {"clips", t.clips},
        {"frames", t.frames},
        {"symbols", t.symbols},
        {"objects", t.objects},
        {"shapes", t.shapes},
        {"colors", t.colors},
        {"feature_dim", t.feature_dim},
        {"train_samples", t.train_samples},
        {"val_samples", t.val_samples},
        {"seed", t.seed}}},
      {"model",
       {{"type", m.type},
        {"d", m.d},
        {"answer", answer_kind_name(m.answer)},
        {"hcrn",
         {{"grouping", m.grouping},
          {"use_motion", m.use_motion},
          {"k_max", m.crn.k_max},
          {"t", m.crn.t},
          {"g_mode", g_mode_name(m.crn.g_mode)},
          {"sampling", sampling_name(m.crn.sampling)}}},
        {"lognet",
         {{"steps", m.steps},
          {"heads", m.heads},
          {"gcn_layers", m.gcn_layers},
          {"rank", m.rank}}}}},
      {"train",
       {{"epochs", r.epochs},
        {"batch_size", r.batch_size},
        {"lr", r.lr},
        {"halve_every", r.halve_every},
        {"clip_norm", r.clip_norm},
        {"lambda_ling", r.lambda_ling},
        {"lambda_vis", r.lambda_vis}}}};
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &j;
  std::stringstream parts(key);
  std::string part, walked;
  std::vector<std::string> path;
  while (std::getline(parts, part, '.')) path.push_back(part);
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (path[i].empty()) throw ConfigError("override key '" + key + "' has an empty part");
    if (!node->is_object()) {
      if (!node->is_null()) throw ConfigError("override path '" + walked + "' is not an object");
      *node = json::object();
    }
    walked += (walked.empty() ? "" : ".") + path[i];
    node = &(*node)[path[i]];
  }
  *node = std::move(value);
}

RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides) {
  json j = json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError(path + ": " + e.what());
    }
  }
  for (const std::string& o : overrides) apply_override(j, o);
  return parse_run_config(j);
}

}  // namespace relnet
