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

// Differentiable primitives. Every function records a tape node when any
// operand is tracked, rejects NaN/Inf operands with NumericDomainError and
// rejects non-conforming shapes with ShapeError.
//
// Binary elementwise operations accept either equal shapes or a right-hand
// operand whose shape is a trailing suffix of the left-hand shape; the
// right operand is then repeated over the leading axes.

#ifndef RELNET_OPS_H_
#define RELNET_OPS_H_

#include <cstddef>
#include <vector>

#include "relnet/tensor.h"

namespace relnet {

// a: [..., m, k], b: [k, n] -> [..., m, n].
Tensor matmul(const Tensor& a, const Tensor& b);
// a: [B, m, k], b: [B, k, n] -> [B, m, n].
Tensor bmatmul(const Tensor& a, const Tensor& b);
// Swaps the last two axes.
Tensor transpose(const Tensor& a);
// x W + b with x: [..., in], W: [in, out], b: [out] (may be empty).
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);

// ELU with alpha = 1.
Tensor elu(const Tensor& a);
// Gradient 0 at x = 0.
Tensor relu(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
// Requires strictly positive input.
Tensor log(const Tensor& a);
// Requires positive input unless p is a non-negative integer.
Tensor pow_scalar(const Tensor& a, double p);

Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);
// Reductions drop `axis`.
Tensor sum_axis(const Tensor& a, std::size_t axis);
Tensor mean_axis(const Tensor& a, std::size_t axis);
// Gradient routes to the first maximal entry.
Tensor max_axis(const Tensor& a, std::size_t axis);

Tensor softmax_lastdim(const Tensor& a);
Tensor log_softmax_lastdim(const Tensor& a);

Tensor reshape(const Tensor& a, Shape shape);
Tensor concat_lastdim(const std::vector<Tensor>& parts);
Tensor slice_lastdim(const Tensor& a, std::size_t start, std::size_t length);
// Stacks equally shaped tensors along a new leading axis.
Tensor stack(const std::vector<Tensor>& parts);
// Selects entries of the leading axis: [M, ...] -> [indices.size(), ...].
Tensor gather_rows(const Tensor& a, std::vector<std::size_t> indices);
// Sums entries of the leading axis into buckets: [M, ...] -> [buckets, ...].
Tensor segment_sum(const Tensor& a, std::vector<std::size_t> segment_ids,
                   std::size_t buckets);
// Inserts a new axis of length `count` at `axis`, repeating the values.
Tensor expand(const Tensor& a, std::size_t axis, std::size_t count);

}  // namespace relnet

#endif  // RELNET_OPS_H_
