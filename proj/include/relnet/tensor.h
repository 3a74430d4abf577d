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

#ifndef RELNET_TENSOR_H_
#define RELNET_TENSOR_H_

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace relnet {

using Shape = std::vector<std::size_t>;

// Raised when operand shapes do not conform to an operation.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a NaN or Inf reaches an operation.
class NumericDomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

std::size_t num_elements(const Shape& shape);
std::string shape_string(const Shape& shape);

class Tape;

// Dense row-major array of doubles. Values are immutable once constructed;
// a tensor may additionally carry a handle onto a Tape, in which case
// operations on it are recorded for reverse-mode differentiation.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(const Shape& shape);
  static Tensor full(const Shape& shape, double value);
  static Tensor scalar(double value);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const { return data_ ? data_->size() : 0; }
  bool empty() const { return !data_; }

  std::span<const double> data() const;
  const std::shared_ptr<const std::vector<double>>& storage() const {
    return data_;
  }
  double operator[](std::size_t flat) const { return (*data_)[flat]; }
  double item() const;

  // Tape bookkeeping. An untracked tensor behaves as a constant.
  bool tracked() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  int grad_id() const { return grad_id_; }

  // Same values, no tape handle.
  Tensor detach() const;

 private:
  friend class Tape;

  Shape shape_;
  std::shared_ptr<const std::vector<double>> data_;
  Tape* tape_ = nullptr;
  int grad_id_ = -1;
};

// Gradient buffers handed to a node's backward rule; entry i is null when
// parent i is not tracked.
using ParentGrads = std::vector<std::vector<double>*>;
using BackwardFn =
    std::function<void(const std::vector<double>& grad_out, ParentGrads&)>;

class Gradients;

// Records primitive operations in creation order, which is a valid
// topological order because a node can only reference earlier nodes.
// Single writer: a tape must stay confined to one thread.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Registers a leaf so that gradients flow into it.
  Tensor watch(const Tensor& value);

  // Appends a node whose parents are the tracked members of `inputs`.
  Tensor record(Shape shape, std::vector<double> data,
                std::span<const Tensor> inputs, BackwardFn backward);

  // Reverse sweep from a scalar loss.
  Gradients backward(const Tensor& loss) const;

  std::size_t size() const { return nodes_.size(); }

  struct Node {
    Shape shape;
    std::vector<int> parents;  // -1 marks an untracked input slot
    BackwardFn backward;
  };
  const Node& node(int id) const { return nodes_.at(id); }

 private:
  std::vector<Node> nodes_;
};

// Result of Tape::backward, keyed by grad_id.
class Gradients {
 public:
  Gradients() = default;
  Gradients(const Tape* tape, std::vector<std::vector<double>> grads);

  // Gradient with the shape of `t`; zeros when `t` did not influence the
  // loss or is not on this tape.
  Tensor of(const Tensor& t) const;
  bool reached(const Tensor& t) const;

 private:
  const Tape* tape_ = nullptr;
  std::vector<std::vector<double>> grads_;
};

}  // namespace relnet

#endif  // RELNET_TENSOR_H_
