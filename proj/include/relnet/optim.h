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

#ifndef RELNET_OPTIM_H_
#define RELNET_OPTIM_H_

#include <vector>

#include "relnet/nn.h"

namespace relnet {

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Rescales the joint gradient to this L2 norm when exceeded; 0 disables.
  double clip_norm = 0.0;
};

class Adam {
 public:
  Adam(ParamStore& store, AdamOptions options);

  // grads[i] pairs with store entry i; frozen entries are skipped.
  void step(const std::vector<Tensor>& grads);

  double lr() const { return options_.lr; }
  void set_lr(double lr) { options_.lr = lr; }
  long steps() const { return t_; }

 private:
  ParamStore* store_;
  AdamOptions options_;
  std::vector<std::vector<double>> m_, v_;
  long t_ = 0;
};

}  // namespace relnet

#endif  // RELNET_OPTIM_H_
