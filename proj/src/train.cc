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

#include "relnet/train.h"

#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "relnet/ops.h"

namespace relnet {

namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint files are written in host byte order");

constexpr std::uint64_t kEvalStream = 0x6576616c;  // forward rng during evaluation

std::vector<const Sample*> gather(const Dataset& data, const std::vector<std::size_t>& idx,
                                  std::size_t begin, std::size_t end) {
  std::vector<const Sample*> out;
  for (std::size_t i = begin; i < end; ++i) out.push_back(&data.samples[idx[i]]);
  return out;
}

// [begin, end) ranges of consecutive batches; a trailing single sample is
// folded into the previous batch so batch statistics stay defined.
std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, std::size_t size) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t b = 0; b < n; b += size) out.push_back({b, std::min(n, b + size)});
  if (out.size() > 1 && out.back().second - out.back().first == 1) {
    out.pop_back();
    out.back().second = n;
  }
  return out;
}

}  // namespace

Dataset make_dataset(const TaskConfig& t) {
  const std::size_t total = t.train_samples + t.val_samples;
  if (is_scene_task(t.kind)) {
    SceneSpec s;
    s.kind = t.kind;
    s.objects = t.objects;
    s.shapes = t.shapes;
    s.colors = t.colors;
    s.feature_dim = t.feature_dim;
    s.samples = total;
    s.seed = t.seed;
    return generate_scene_task(s);
  }
  SequenceSpec s;
  s.kind = t.kind;
  s.clips = t.clips;
  s.frames = t.frames;
  s.symbols = t.symbols;
  s.feature_dim = t.feature_dim;
  s.samples = total;
  s.seed = t.seed;
  return generate_sequence_task(s);
}

json to_json(const Metrics& m) {
  json j{{"count", m.count}, {"loss", m.loss}, {"accuracy", m.accuracy}, {"mse", m.mse}};
  if (m.kl_visual) j["kl_visual"] = *m.kl_visual;
  if (m.kl_linguistic) j["kl_linguistic"] = *m.kl_linguistic;
  return j;
}

json to_json(const EpochRecord& r) {
  return json{{"epoch", r.epoch},
              {"lr", r.lr},
              {"train_loss", r.train_loss},
              {"validation", to_json(r.validation)}};
}

Trainer::Trainer(RunConfig cfg, const Dataset& data)
    : cfg_(std::move(cfg)),
      data_(&data),
      order_rng_(cfg_.seed * 3 + 1),
      forward_rng_(cfg_.seed * 3 + 2) {
  Rng init(cfg_.seed);
  model_ = build_model(cfg_.model, data, store_, init);
  AdamOptions opts;
  opts.lr = cfg_.train.lr;
  opts.clip_norm = cfg_.train.clip_norm;
  adam_ = std::make_unique<Adam>(store_, opts);
  if (is_scene_task(data.kind)) fixtures_ = grounding_fixtures(data);
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    (data.samples[i].id < cfg_.task.train_samples ? train_ : val_).push_back(i);
  }
}

double Trainer::lr_for_epoch(std::size_t epoch) const {
  const std::size_t every = cfg_.train.halve_every;
  if (every == 0 || epoch == 0) return cfg_.train.lr;
  return cfg_.train.lr * std::ldexp(1.0, -static_cast<int>((epoch - 1) / every));
}

void Trainer::batch_priors(const std::vector<const Sample*>& batch,
                           std::vector<std::vector<double>>& region,
                           std::vector<std::vector<double>>& word) const {
  for (const Sample* s : batch) {
    const GroundingFixture& fx = fixtures_.at(static_cast<std::size_t>(s - data_->samples.data()));
    region.push_back(fx.region_prior.normalized);
    word.push_back(fx.word_prior.normalized);
  }
}

EpochRecord Trainer::run_epoch() {
  ++epoch_;
  EpochRecord rec;
  rec.epoch = epoch_;
  rec.lr = lr_for_epoch(epoch_);
  adam_->set_lr(rec.lr);

  std::vector<std::size_t> order = train_;
  order_rng_.shuffle(order);
  const double ll = cfg_.train.lambda_ling, lv = cfg_.train.lambda_vis;
  double total = 0.0;
  std::size_t seen = 0;
  for (auto [b, e] : batch_ranges(order.size(), cfg_.train.batch_size)) {
    std::vector<const Sample*> batch = gather(*data_, order, b, e);
    Tape tape;
    Context ctx(store_, &tape, forward_rng_, true);
    ForwardResult r = model_->forward(ctx, *data_, batch);
    Tensor ling, vis;
    if (!r.visual.empty() && !fixtures_.empty() && (ll > 0.0 || lv > 0.0)) {
      std::vector<std::vector<double>> region, word;
      batch_priors(batch, region, word);
      if (ll > 0.0) ling = kl_attention_loss(r.linguistic, word);
      if (lv > 0.0) vis = kl_attention_loss(r.visual, region);
    }
    Tensor loss = combined_loss(r.loss, ling, vis, ll, lv);
    adam_->step(ctx.param_grads(tape.backward(loss)));
    total += loss[0] * static_cast<double>(batch.size());
    seen += batch.size();
  }
  rec.train_loss = seen ? total / static_cast<double>(seen) : 0.0;
  rec.validation = evaluate(true);
  return rec;
}

Metrics Trainer::evaluate(bool validation) const {
  const std::vector<std::size_t>& idx = validation ? val_ : train_;
  Metrics m;
  if (idx.empty()) return m;
  Rng rng(cfg_.seed ^ kEvalStream);
  ParamStore& store = const_cast<ParamStore&>(store_);
  double loss = 0.0, correct = 0.0, sq = 0.0, kv = 0.0, kl = 0.0;
  bool has_attention = false;
  for (auto [b, e] : batch_ranges(idx.size(), cfg_.train.batch_size)) {
    std::vector<const Sample*> batch = gather(*data_, idx, b, e);
    Context ctx(store, nullptr, rng, false);
    ForwardResult r = model_->forward(ctx, *data_, batch);
    const double n = static_cast<double>(batch.size());
    loss += r.loss[0] * n;
    if (!r.visual.empty() && !fixtures_.empty()) {
      std::vector<std::vector<double>> region, word;
      batch_priors(batch, region, word);
      has_attention = true;
      kv += kl_attention_loss(r.visual, region)[0] * n;
      kl += kl_attention_loss(r.linguistic, word)[0] * n;
    }
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const double label = static_cast<double>(batch[i]->label);
      correct += r.predictions[i] == batch[i]->label;
      const double guess = r.raw.empty() ? static_cast<double>(r.predictions[i]) : r.raw[i];
      sq += (guess - label) * (guess - label);
    }
  }
  const double n = static_cast<double>(idx.size());
  m.count = idx.size();
  m.loss = loss / n;
  m.accuracy = correct / n;
  m.mse = sq / n;
  if (has_attention) {
    m.kl_visual = kv / n;
    m.kl_linguistic = kl / n;
  }
  return m;
}

std::string shape_signature(const ParamStore& store) {
  std::string out;
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (i) out += ";";
    out += store.name(i) + ":" + shape_string(store.value(i).shape());
  }
  return out;
}

void save_checkpoint(const std::string& dir, const ParamStore& store, const RunConfig& cfg,
                     std::size_t epoch, const json& extra) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  json entries = json::array();
  std::ofstream bin(fs::path(dir) / "params.bin", std::ios::binary);
  if (!bin) throw CheckpointError("cannot write " + (fs::path(dir) / "params.bin").string());
  std::size_t offset = 0;
  for (std::size_t i = 0; i < store.size(); ++i) {
    const Tensor& v = store.value(i);
    entries.push_back({{"name", store.name(i)},
                       {"shape", v.shape()},
                       {"trainable", store.trainable(i)},
                       {"offset", offset}});
    bin.write(reinterpret_cast<const char*>(v.data().data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
    offset += v.size() * sizeof(double);
  }
  if (!bin) throw CheckpointError("failed writing parameter values to " + dir);
  json manifest{{"format", "relnet-checkpoint-1"},
                {"dtype", "f64"},
                {"byte_order", "little"},
                {"seed", cfg.seed},
                {"epoch", epoch},
                {"bytes", offset},
                {"config", to_json(cfg)},
                {"entries", entries},
                {"extra", extra}};
  std::ofstream out(fs::path(dir) / "manifest.json");
  out << manifest.dump(2) << "\n";
  if (!out) throw CheckpointError("failed writing manifest to " + dir);
}

json read_manifest(const std::string& dir) {
  const auto path = std::filesystem::path(dir) / "manifest.json";
  std::ifstream in(path);
  if (!in) throw CheckpointError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

void load_checkpoint(const std::string& dir, ParamStore& store) {
  const json manifest = read_manifest(dir);
  if (manifest.value("dtype", "") != "f64") {
    throw CheckpointError("unsupported checkpoint dtype in " + dir);
  }
  std::string saved;
  const json& entries = manifest.at("entries");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i) saved += ";";
    saved += entries[i].at("name").get<std::string>() + ":" +
             shape_string(entries[i].at("shape").get<Shape>());
  }
  const std::string expected = shape_signature(store);
  if (saved != expected) {
    throw CheckpointError("checkpoint does not match the model\n  checkpoint: " + saved +
                          "\n  model:      " + expected);
  }
  const auto path = std::filesystem::path(dir) / "params.bin";
  std::ifstream bin(path, std::ios::binary);
  if (!bin) throw CheckpointError("cannot open " + path.string());
  for (std::size_t i = 0; i < store.size(); ++i) {
    std::vector<double> values(store.value(i).size());
    bin.read(reinterpret_cast<char*>(values.data()),
             static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!bin) throw CheckpointError(path.string() + " is shorter than its manifest");
    store.set(i, Tensor(store.value(i).shape(), std::move(values)));
  }
  if (bin.peek() != std::char_traits<char>::eof()) {
    throw CheckpointError(path.string() + " is longer than its manifest");
  }
}

}  // namespace relnet
