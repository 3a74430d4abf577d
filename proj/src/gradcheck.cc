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

#include "relnet/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace relnet {
namespace {

void check_epsilon(double epsilon) {
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("grad_check: epsilon must be positive");
  }
}

double scalar_of(const Tensor& t) {
  if (t.size() != 1) {
    throw ShapeError("grad_check: function must return a scalar, got " +
                     shape_string(t.shape()));
  }
  return t.item();
}

double rel_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric));
}

}  // namespace

double grad_check(const std::function<Tensor(const Tensor&)>& f,
                  const Tensor& point, double epsilon) {
  check_epsilon(epsilon);
  Tape tape;
  Tensor x = tape.watch(point);
  Tensor y = f(x);
  scalar_of(y);
  Tensor analytic = Tensor::zeros(point.shape());
  if (y.tracked()) analytic = tape.backward(y).of(x);

  std::vector<double> probe(point.data().begin(), point.data().end());
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + epsilon;
    const double up = scalar_of(f(Tensor(point.shape(), probe)));
    probe[i] = orig - epsilon;
    const double down = scalar_of(f(Tensor(point.shape(), probe)));
    probe[i] = orig;
    worst = std::max(worst, rel_error(analytic[i], (up - down) / (2 * epsilon)));
  }
  return worst;
}

double grad_check_params(ParamStore& store,
                         const std::function<Tensor(Context&)>& loss_fn,
                         std::uint64_t seed, double epsilon,
                         std::size_t max_coords) {
  check_epsilon(epsilon);
  auto evaluate = [&]() {
    Rng rng(seed);
    Context ctx(store, nullptr, rng, true);
    return scalar_of(loss_fn(ctx));
  };

  // Running statistics must not drift between probes.
  std::vector<std::pair<std::size_t, Tensor>> frozen;
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (!store.trainable(i)) frozen.emplace_back(i, store.value(i));
  }
  auto restore_frozen = [&] {
    for (auto& [id, value] : frozen) store.set(id, value);
  };

  std::vector<Tensor> analytic;
  {
    Tape tape;
    Rng rng(seed);
    Context ctx(store, &tape, rng, true);
    Tensor loss = loss_fn(ctx);
    scalar_of(loss);
    if (loss.tracked()) {
      analytic = ctx.param_grads(tape.backward(loss));
    } else {
      for (std::size_t i = 0; i < store.size(); ++i) {
        analytic.push_back(Tensor::zeros(store.value(i).shape()));
      }
    }
  }
  restore_frozen();

  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (!store.trainable(i)) continue;
    for (std::size_t j = 0; j < store.value(i).size(); ++j) {
      coords.emplace_back(i, j);
    }
  }
  if (max_coords > 0 && coords.size() > max_coords) {
    Rng pick(seed ^ 0x5bd1e995ULL);
    pick.shuffle(coords);
    coords.resize(max_coords);
  }

  double worst = 0.0;
  for (auto [id, j] : coords) {
    const Tensor orig = store.value(id);
    std::vector<double> probe(orig.data().begin(), orig.data().end());
    probe[j] = orig[j] + epsilon;
    store.set(id, Tensor(orig.shape(), probe));
    const double up = evaluate();
    restore_frozen();
    probe[j] = orig[j] - epsilon;
    store.set(id, Tensor(orig.shape(), probe));
    const double down = evaluate();
    restore_frozen();
    store.set(id, orig);
    worst = std::max(worst, rel_error(analytic[id][j], (up - down) / (2 * epsilon)));
  }
  return worst;
}

}  // namespace relnet
