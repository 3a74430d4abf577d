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

// Training loop, evaluation and checkpoints.

#ifndef RELNET_TRAIN_H_
#define RELNET_TRAIN_H_

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "relnet/config.h"
#include "relnet/gap.h"
#include "relnet/models.h"
#include "relnet/optim.h"
#include "relnet/synthgen.h"

namespace relnet {

// train_samples + val_samples samples; the first train_samples ids train.
Dataset make_dataset(const TaskConfig& task);

struct Metrics {
  std::size_t count = 0;
  double loss = 0.0;      // mean task loss
  double accuracy = 0.0;  // exact match
  double mse = 0.0;       // count regression only
  // Scene models only: mean KL(prior || attention).
  std::optional<double> kl_visual, kl_linguistic;
};
nlohmann::json to_json(const Metrics& m);

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;  // mean total loss over the epoch's batches
  Metrics validation;
};
nlohmann::json to_json(const EpochRecord& r);

class Trainer {
 public:
  Trainer(RunConfig cfg, const Dataset& data);

  // Learning rate used for 1-based `epoch`.
  double lr_for_epoch(std::size_t epoch) const;
  // One pass over the training split in a seed-determined order.
  EpochRecord run_epoch();
  // Evaluates the validation split, or the training split when
  // `validation` is false. Deterministic for fixed parameters.
  Metrics evaluate(bool validation = true) const;

  std::size_t epochs_done() const { return epoch_; }
  const RunConfig& config() const { return cfg_; }
  const Dataset& data() const { return *data_; }
  ParamStore& store() { return store_; }
  const ParamStore& store() const { return store_; }
  const std::vector<std::size_t>& train_indices() const { return train_; }
  const std::vector<std::size_t>& val_indices() const { return val_; }

  void set_epochs_done(std::size_t epoch) { epoch_ = epoch; }

 private:
  void batch_priors(const std::vector<const Sample*>& batch,
                    std::vector<std::vector<double>>& region,
                    std::vector<std::vector<double>>& word) const;

  RunConfig cfg_;
  const Dataset* data_;
  ParamStore store_;
  std::unique_ptr<Model> model_;
  std::unique_ptr<Adam> adam_;
  std::vector<GroundingFixture> fixtures_;  // scene tasks, one per sample
  std::vector<std::size_t> train_, val_;
  Rng order_rng_, forward_rng_;
  std::size_t epoch_ = 0;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Writes <dir>/manifest.json and <dir>/params.bin. The manifest lists each
// entry's name, shape, trainable flag, byte offset and dtype ("f64"),
// plus the resolved config, seed, epoch and `extra`.
void save_checkpoint(const std::string& dir, const ParamStore& store,
                     const RunConfig& cfg, std::size_t epoch,
                     const nlohmann::json& extra = nlohmann::json::object());
// Reads the manifest only.
nlohmann::json read_manifest(const std::string& dir);
// Loads values into `store`. Throws CheckpointError with both shape
// signatures when the entries differ in names or shapes.
void load_checkpoint(const std::string& dir, ParamStore& store);
// "name:[d0,d1];..." in store order.
std::string shape_signature(const ParamStore& store);

}  // namespace relnet

#endif  // RELNET_TRAIN_H_
