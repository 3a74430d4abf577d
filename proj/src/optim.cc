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

#include "relnet/optim.h"

#include <cmath>

namespace relnet {

Adam::Adam(ParamStore& store, AdamOptions options)
    : store_(&store), options_(options) {
  for (std::size_t i = 0; i < store.size(); ++i) {
    m_.emplace_back(store.value(i).size(), 0.0);
    v_.emplace_back(store.value(i).size(), 0.0);
  }
}

void Adam::step(const std::vector<Tensor>& grads) {
  if (grads.size() != store_->size()) {
    throw std::invalid_argument("adam: gradient count does not match store");
  }
  double scale = 1.0;
  if (options_.clip_norm > 0.0) {
    double sq = 0.0;
    for (std::size_t i = 0; i < grads.size(); ++i) {
      if (!store_->trainable(i)) continue;
      for (double g : grads[i].data()) sq += g * g;
    }
    const double norm = std::sqrt(sq);
    if (norm > options_.clip_norm) scale = options_.clip_norm / norm;
  }
  ++t_;
  const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!store_->trainable(i)) continue;
    const auto g = grads[i].data();
    const auto p = store_->value(i).data();
    auto& m = m_[i];
    auto& v = v_[i];
    std::vector<double> next(p.begin(), p.end());
    for (std::size_t j = 0; j < next.size(); ++j) {
      const double gj = g[j] * scale;
      m[j] = options_.beta1 * m[j] + (1.0 - options_.beta1) * gj;
      v[j] = options_.beta2 * v[j] + (1.0 - options_.beta2) * gj * gj;
      next[j] -= options_.lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + options_.eps);
    }
    store_->set(i, Tensor(store_->value(i).shape(), std::move(next)));
  }
}

}  // namespace relnet
