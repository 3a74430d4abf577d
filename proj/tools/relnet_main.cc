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

// relnet: train, eval, bench, gradcheck and gen-data entry points.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "relnet/bench.h"
#include "relnet/config.h"
#include "relnet/gradsuite.h"
#include "relnet/train.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace relnet;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON run config");
  cmd->add_option("--seed", f.seed, "Run and data seed (overrides the config)");
  cmd->add_option("--out-dir", f.out_dir, "Output directory (default: $RELNET_OUT/<name>)");
  cmd->add_option("--set", f.overrides, "Config override key=value, repeatable");
}

std::string output_root() {
  const char* env = std::getenv("RELNET_OUT");
  return env && *env ? env : "runs";
}

RunConfig resolve(const CommonFlags& f, json base = json::object()) {
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw ConfigError("cannot open config file " + f.config);
    try {
      base = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError(f.config + ": " + e.what());
    }
  }
  for (const std::string& o : f.overrides) apply_override(base, o);
  RunConfig cfg = parse_run_config(base);
  if (f.seed) {
    cfg.seed = *f.seed;
    cfg.task.seed = *f.seed;
  }
  return cfg;
}

std::string out_dir_for(const CommonFlags& f, const std::string& name) {
  std::string dir = f.out_dir.empty() ? (fs::path(output_root()) / name).string() : f.out_dir;
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string run_name(const RunConfig& cfg) {
  return cfg.model.type + "-" + task_kind_name(cfg.task.kind) + "-seed" + std::to_string(cfg.seed);
}

void print_epoch(const EpochRecord& r) {
  std::printf("epoch %zu lr %.3g train_loss %.6f val_loss %.6f val_acc %.4f", r.epoch, r.lr,
              r.train_loss, r.validation.loss, r.validation.accuracy);
  if (r.validation.kl_visual) std::printf(" kl_vis %.4f", *r.validation.kl_visual);
  std::printf("\n");
  std::fflush(stdout);
}

int cmd_train(const CommonFlags& f, const std::string& resume) {
  json base = json::object();
  json manifest;
  if (!resume.empty()) {
    manifest = read_manifest(resume);
    if (f.config.empty()) base = manifest.at("config");
  }
  const RunConfig cfg = resolve(f, base);
  const std::string dir = out_dir_for(f, run_name(cfg));
  const Dataset data = make_dataset(cfg.task);
  Trainer trainer(cfg, data);
  if (!resume.empty()) {
    load_checkpoint(resume, trainer.store());
    trainer.set_epochs_done(manifest.at("epoch").get<std::size_t>());
  }
  write_text(fs::path(dir) / "config.json", to_json(cfg).dump(2) + "\n");

  std::ofstream log(fs::path(dir) / "metrics.jsonl", std::ios::app);
  log << json{{"type", "header"}, {"seed", cfg.seed}, {"config", to_json(cfg)},
              {"resumed_from", resume}}.dump()
      << "\n";
  EpochRecord rec;
  rec.epoch = trainer.epochs_done();
  rec.lr = trainer.lr_for_epoch(rec.epoch);
  rec.validation = trainer.evaluate(true);
  rec.train_loss = trainer.evaluate(false).loss;
  auto emit = [&](const EpochRecord& r) {
    json j = to_json(r);
    j["type"] = "epoch";
    j["seed"] = cfg.seed;
    log << j.dump() << "\n";
    log.flush();
    print_epoch(r);
  };
  emit(rec);
  const fs::path ckpt = fs::path(dir) / "checkpoint";
  auto save = [&] {
    save_checkpoint(ckpt.string(), trainer.store(), cfg, rec.epoch,
                    {{"validation", to_json(rec.validation)}});
  };
  bool trained = false;
  while (trainer.epochs_done() < cfg.train.epochs) {
    rec = trainer.run_epoch();
    emit(rec);
    save();
    trained = true;
  }
  if (!trained) save();
  std::printf("final val_acc %.4f checkpoint %s\n", rec.validation.accuracy, ckpt.c_str());
  return 0;
}

int cmd_eval(const CommonFlags& f, const std::string& checkpoint, const std::string& split) {
  if (split != "val" && split != "train") throw ConfigError("--split must be val or train");
  json manifest;
  json base = json::object();
  if (!checkpoint.empty()) {
    manifest = read_manifest(checkpoint);
    if (f.config.empty()) base = manifest.at("config");
  }
  const RunConfig cfg = resolve(f, base);
  const Dataset data = make_dataset(cfg.task);
  Trainer trainer(cfg, data);
  if (!checkpoint.empty()) load_checkpoint(checkpoint, trainer.store());
  Metrics m = trainer.evaluate(split == "val");
  json report{{"seed", cfg.seed},
              {"config", to_json(cfg)},
              {"checkpoint", checkpoint},
              {"epoch", checkpoint.empty() ? json(0) : manifest.at("epoch")},
              {"split", split},
              {"metrics", to_json(m)}};
  std::cout << report.dump(2) << "\n";
  if (!f.out_dir.empty()) {
    fs::create_directories(f.out_dir);
    write_text(fs::path(f.out_dir) / "eval.json", report.dump(2) + "\n");
  }
  return 0;
}

struct BenchFlags {
  std::size_t clips = 24, frames = 8, d = 32, groups = 4, batch = 1, reps = 5;
};

int cmd_bench(const CommonFlags& f, const BenchFlags& b) {
  const RunConfig cfg = resolve(f);
  const std::uint64_t seed = cfg.seed;
  HcrnConfig two;
  two.clips = b.clips;
  two.frames = b.frames;
  two.d = b.d;
  two.crn = cfg.model.crn;
  two.crn.d = b.d;
  HcrnConfig three = two;
  if (b.groups == 0 || b.clips % b.groups != 0) {
    throw ConfigError("--groups must divide --clips");
  }
  three.grouping = {b.groups, b.clips / b.groups};
  const CostComparison costs = compare_costs(b.clips, b.frames, b.groups, b.d);
  ScalingOptions opt;
  opt.repetitions = b.reps;
  opt.seed = seed;
  auto rows = measure_scaling({{"2-level", two, b.batch}, {"3-level", three, b.batch}}, opt);

  const json settings{{"clips", b.clips}, {"frames", b.frames}, {"d", b.d},
                      {"groups", b.groups}, {"batch", b.batch}, {"repetitions", b.reps}};
  json report{
      {"seed", seed},
      {"config", to_json(cfg)},
      {"bench", settings},
      {"printed_cost",
       {{"two_level", {{"g", costs.two_level.g}, {"h", costs.two_level.h}}},
        {"three_level", {{"g", costs.three_level.g}, {"h", costs.three_level.h}}},
        {"g_gap", costs.g_gap},
        {"h_gap", costs.h_gap},
        {"total_gap", costs.total_gap}}},
      {"timings", json::array()}};
  for (const TimingRow& r : rows) {
    report["timings"].push_back({{"config", r.label},
                                 {"forward_s", r.forward},
                                 {"forward_backward_s", r.forward_backward},
                                 {"train_step_s", r.train_step},
                                 {"exact_g", r.exact.g},
                                 {"exact_h", r.exact.h}});
  }
  const std::string dir = out_dir_for(f, "bench-seed" + std::to_string(seed));
  const std::string csv = "# seed " + std::to_string(seed) + " bench " + settings.dump() +
                          " config " + to_json(cfg).dump() + "\n" + timing_csv(rows);
  write_text(fs::path(dir) / "bench.csv", csv);
  write_text(fs::path(dir) / "bench.json", report.dump(2) + "\n");
  std::cout << timing_csv(rows);
  std::printf("forward+backward speedup 3-level vs 2-level: %.2fx\n",
              rows[0].forward_backward / rows[1].forward_backward);
  return 0;
}

int cmd_gradcheck(const CommonFlags& f, std::size_t instances, const std::string& block) {
  const RunConfig cfg = resolve(f);
  std::vector<BlockCheck> checks;
  if (block.empty()) {
    checks = run_gradcheck_suite(instances, cfg.seed);
  } else {
    checks.push_back(check_block(block, instances, cfg.seed));
  }
  constexpr double kTolerance = 1e-4;
  bool ok = true;
  json report{{"seed", cfg.seed}, {"config", to_json(cfg)}, {"tolerance", kTolerance},
              {"blocks", json::array()}};
  for (const BlockCheck& c : checks) {
    const bool pass = c.max_error < kTolerance;
    ok = ok && pass;
    json j = to_json(c);
    j["pass"] = pass;
    report["blocks"].push_back(j);
    std::printf("%-32s %3zu instances  max rel error %.3e  %s\n", c.block.c_str(), c.instances,
                c.max_error, pass ? "PASS" : "FAIL");
  }
  if (!f.out_dir.empty()) {
    fs::create_directories(f.out_dir);
    write_text(fs::path(f.out_dir) / "gradcheck.json", report.dump(2) + "\n");
  }
  return ok ? 0 : 1;
}

int cmd_gen_data(const CommonFlags& f) {
  const RunConfig cfg = resolve(f);
  const std::string dir =
      out_dir_for(f, "data-" + task_kind_name(cfg.task.kind) + "-seed" + std::to_string(cfg.task.seed));
  const Dataset data = make_dataset(cfg.task);
  write_text(fs::path(dir) / "config.json", to_json(cfg).dump(2) + "\n");
  write_dataset(data, (fs::path(dir) / "dataset.jsonl").string());
  if (is_scene_task(data.kind)) {
    write_text(fs::path(dir) / "fixtures.jsonl", fixtures_to_jsonl(grounding_fixtures(data)));
  }
  std::printf("wrote %zu samples to %s\n", data.samples.size(), dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"relnet: relational reasoning networks on synthetic tasks"};
  app.require_subcommand(1);

  CommonFlags train_flags, eval_flags, bench_flags, grad_flags, gen_flags;
  std::string resume, checkpoint, split = "val", block;
  std::size_t instances = 20;
  BenchFlags bench;

  CLI::App* train = app.add_subcommand("train", "Train a model and write checkpoints");
  add_common(train, train_flags);
  train->add_option("--resume", resume, "Checkpoint directory to continue from");

  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a split");
  add_common(eval, eval_flags);
  eval->add_option("--checkpoint", checkpoint, "Checkpoint directory (omit for untrained)");
  eval->add_option("--split", split, "val or train");

  CLI::App* bm = app.add_subcommand("bench", "Cost model and 2- vs 3-level timings");
  add_common(bm, bench_flags);
  bm->add_option("--clips", bench.clips);
  bm->add_option("--frames", bench.frames);
  bm->add_option("--d", bench.d);
  bm->add_option("--groups", bench.groups, "Sub-videos for the 3-level stream");
  bm->add_option("--batch", bench.batch);
  bm->add_option("--reps", bench.reps, "Timed repetitions (at least 5)");

  CLI::App* grad = app.add_subcommand("gradcheck", "Finite-difference checks of every block");
  add_common(grad, grad_flags);
  grad->add_option("--instances", instances, "Random instances per block");
  grad->add_option("--block", block, "Run one block only");

  CLI::App* gen = app.add_subcommand("gen-data", "Write a synthetic dataset as JSON lines");
  add_common(gen, gen_flags);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*train) return cmd_train(train_flags, resume);
    if (*eval) return cmd_eval(eval_flags, checkpoint, split);
    if (*bm) return cmd_bench(bench_flags, bench);
    if (*grad) return cmd_gradcheck(grad_flags, instances, block);
    if (*gen) return cmd_gen_data(gen_flags);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "relnet: %s\n", e.what());
    return 2;
  }
  return 0;
}
