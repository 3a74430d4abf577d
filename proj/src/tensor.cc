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

#include "relnet/tensor.h"

#include <sstream>

namespace relnet {

std::size_t num_elements(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ", ";
    out << shape[i];
  }
  out << "]";
  return out.str();
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)) {
  for (auto d : shape_) {
    if (d == 0) throw ShapeError("zero-sized dimension in " + shape_string(shape_));
  }
  if (num_elements(shape_) != data.size()) {
    throw ShapeError("shape " + shape_string(shape_) + " needs " +
                     std::to_string(num_elements(shape_)) + " values, got " +
                     std::to_string(data.size()));
  }
  data_ = std::make_shared<const std::vector<double>>(std::move(data));
}

Tensor Tensor::zeros(const Shape& shape) {
  return Tensor(shape, std::vector<double>(num_elements(shape), 0.0));
}

Tensor Tensor::full(const Shape& shape, double value) {
  return Tensor(shape, std::vector<double>(num_elements(shape), value));
}

Tensor Tensor::scalar(double value) { return Tensor({}, {value}); }

Tensor Tensor::vector(std::vector<double> values) {
  Shape s{values.size()};
  return Tensor(std::move(s), std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " +
                     shape_string(shape_));
  }
  return shape_[axis];
}

std::span<const double> Tensor::data() const {
  if (!data_) return {};
  return {data_->data(), data_->size()};
}

double Tensor::item() const {
  if (size() != 1) {
    throw ShapeError("item() on tensor of shape " + shape_string(shape_));
  }
  return (*data_)[0];
}

Tensor Tensor::detach() const {
  Tensor t;
  t.shape_ = shape_;
  t.data_ = data_;
  return t;
}

Tensor Tape::watch(const Tensor& value) {
  if (value.empty()) throw ShapeError("cannot watch an empty tensor");
  Tensor t = value.detach();
  t.tape_ = this;
  t.grad_id_ = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{value.shape(), {}, nullptr});
  return t;
}

Tensor Tape::record(Shape shape, std::vector<double> data,
                    std::span<const Tensor> inputs, BackwardFn backward) {
  Tensor t(std::move(shape), std::move(data));
  Node node;
  node.shape = t.shape();
  node.parents.reserve(inputs.size());
  for (const auto& in : inputs) {
    if (in.tracked() && in.tape() != this) {
      throw std::logic_error("operands recorded on different tapes");
    }
    node.parents.push_back(in.tracked() ? in.grad_id() : -1);
  }
  node.backward = std::move(backward);
  t.tape_ = this;
  t.grad_id_ = static_cast<int>(nodes_.size());
  nodes_.push_back(std::move(node));
  return t;
}

Gradients Tape::backward(const Tensor& loss) const {
  if (loss.size() != 1) {
    throw ShapeError("backward needs a scalar loss, got shape " +
                     shape_string(loss.shape()));
  }
  if (loss.tape() != this) {
    throw std::logic_error("loss is not recorded on this tape");
  }
  std::vector<std::vector<double>> grads(nodes_.size());
  grads[loss.grad_id()].assign(1, 1.0);
  ParentGrads parent_grads;
  for (int id = loss.grad_id(); id >= 0; --id) {
    const Node& node = nodes_[id];
    if (grads[id].empty() || !node.backward) continue;
    parent_grads.assign(node.parents.size(), nullptr);
    bool any = false;
    for (std::size_t p = 0; p < node.parents.size(); ++p) {
      int pid = node.parents[p];
      if (pid < 0) continue;
      auto& g = grads[pid];
      if (g.empty()) g.assign(num_elements(nodes_[pid].shape), 0.0);
      parent_grads[p] = &g;
      any = true;
    }
    if (any) node.backward(grads[id], parent_grads);
  }
  return Gradients(this, std::move(grads));
}

Gradients::Gradients(const Tape* tape, std::vector<std::vector<double>> grads)
    : tape_(tape), grads_(std::move(grads)) {}

bool Gradients::reached(const Tensor& t) const {
  return t.tracked() && t.tape() == tape_ &&
         static_cast<std::size_t>(t.grad_id()) < grads_.size() &&
         !grads_[t.grad_id()].empty();
}

Tensor Gradients::of(const Tensor& t) const {
  if (!reached(t)) return Tensor::zeros(t.shape());
  return Tensor(t.shape(), grads_[t.grad_id()]);
}

}  // namespace relnet
