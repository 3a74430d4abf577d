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

#ifndef RELNET_GRADCHECK_H_
#define RELNET_GRADCHECK_H_

#include <cstddef>
#include <cstdint>
#include <functional>

#include "relnet/nn.h"
#include "relnet/tensor.h"

namespace relnet {

// Max over coordinates of |analytic - central| / max(1, |central|) for a
// scalar-valued f. f is called once with a tracked point and 2 * size more
// times with perturbed untracked points.
double grad_check(const std::function<Tensor(const Tensor&)>& f,
                  const Tensor& point, double epsilon = 1e-5);

// Same measure over the trainable parameters of a store. loss_fn is
// evaluated in training mode with a generator reseeded to `seed` on every
// call, so sampling decisions are identical across perturbations. When
// max_coords > 0 only that many randomly chosen coordinates are probed.
double grad_check_params(ParamStore& store,
                         const std::function<Tensor(Context&)>& loss_fn,
                         std::uint64_t seed, double epsilon = 1e-5,
                         std::size_t max_coords = 0);

}  // namespace relnet

#endif  // RELNET_GRADCHECK_H_
