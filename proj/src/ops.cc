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

#include "relnet/ops.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>

namespace relnet {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;
using Storage = std::shared_ptr<const std::vector<double>>;

void check_finite(const Tensor& t, const char* op) {
  if (t.empty()) throw ShapeError(std::string(op) + ": empty operand");
  for (double v : t.data()) {
    if (!std::isfinite(v)) {
      throw NumericDomainError(std::string(op) + ": non-finite operand value");
    }
  }
}

Tape* tape_of(std::initializer_list<const Tensor*> inputs) {
  Tape* tape = nullptr;
  for (const Tensor* t : inputs) {
    if (!t->tracked()) continue;
    if (tape && tape != t->tape()) {
      throw std::logic_error("operands recorded on different tapes");
    }
    tape = t->tape();
  }
  return tape;
}

Tape* tape_of(const std::vector<Tensor>& inputs) {
  Tape* tape = nullptr;
  for (const Tensor& t : inputs) {
    if (!t.tracked()) continue;
    if (tape && tape != t.tape()) {
      throw std::logic_error("operands recorded on different tapes");
    }
    tape = t.tape();
  }
  return tape;
}

// Finishes an op: returns a constant tensor, or records a node.
Tensor emit(Tape* tape, Shape shape, std::vector<double> data,
            std::vector<Tensor> inputs, BackwardFn backward) {
  if (!tape) return Tensor(std::move(shape), std::move(data));
  return tape->record(std::move(shape), std::move(data), inputs,
                      std::move(backward));
}

std::string dims_msg(const char* op, const Shape& a, const Shape& b) {
  return std::string(op) + ": incompatible shapes " + shape_string(a) +
         " and " + shape_string(b);
}

// Right operand must equal the left shape or be a trailing suffix of it.
std::size_t broadcast_period(const char* op, const Shape& a, const Shape& b) {
  if (b.size() > a.size()) throw ShapeError(dims_msg(op, a, b));
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (a[a.size() - b.size() + i] != b[i]) {
      throw ShapeError(dims_msg(op, a, b));
    }
  }
  return num_elements(b);
}

struct AxisSplit {
  std::size_t outer, len, inner;
};

AxisSplit split_axis(const Shape& s, std::size_t axis, const char* op) {
  if (axis >= s.size()) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) +
                     " out of range for " + shape_string(s));
  }
  AxisSplit r{1, s[axis], 1};
  for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

Shape drop_axis(const Shape& s, std::size_t axis) {
  Shape out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i != axis) out.push_back(s[i]);
  }
  return out;
}

template <typename Fwd, typename Deriv>
Tensor unary(const Tensor& a, const char* op, Fwd fwd, Deriv deriv) {
  check_finite(a, op);
  const auto& x = *a.storage();
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = fwd(x[i]);
  Tape* tape = tape_of({&a});
  if (!tape) return Tensor(a.shape(), std::move(y));
  Storage xs = a.storage();
  auto ys = std::make_shared<std::vector<double>>(y);
  return emit(tape, a.shape(), std::move(y), {a},
              [xs, ys, deriv](const std::vector<double>& g, ParentGrads& pg) {
                auto& ga = *pg[0];
                for (std::size_t i = 0; i < g.size(); ++i) {
                  ga[i] += g[i] * deriv((*xs)[i], (*ys)[i]);
                }
              });
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_finite(a, "matmul");
  check_finite(b, "matmul");
  if (a.rank() < 2 || b.rank() != 2 ||
      a.shape().back() != b.shape().front()) {
    throw ShapeError(dims_msg("matmul", a.shape(), b.shape()));
  }
  const std::size_t k = b.dim(0), n = b.dim(1);
  const std::size_t m = a.size() / k;
  Shape out_shape = a.shape();
  out_shape.back() = n;
  std::vector<double> out(m * n);
  MutMap(out.data(), m, n).noalias() =
      ConstMap(a.storage()->data(), m, k) * ConstMap(b.storage()->data(), k, n);
  Tape* tape = tape_of({&a, &b});
  if (!tape) return Tensor(std::move(out_shape), std::move(out));
  Storage as = a.storage(), bs = b.storage();
  return emit(tape, std::move(out_shape), std::move(out), {a, b},
              [as, bs, m, k, n](const std::vector<double>& g, ParentGrads& pg) {
                ConstMap gm(g.data(), m, n);
                if (pg[0]) {
                  MutMap(pg[0]->data(), m, k).noalias() +=
                      gm * ConstMap(bs->data(), k, n).transpose();
                }
                if (pg[1]) {
                  MutMap(pg[1]->data(), k, n).noalias() +=
                      ConstMap(as->data(), m, k).transpose() * gm;
                }
              });
}

Tensor bmatmul(const Tensor& a, const Tensor& b) {
  check_finite(a, "bmatmul");
  check_finite(b, "bmatmul");
  if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0) ||
      a.dim(2) != b.dim(1)) {
    throw ShapeError(dims_msg("bmatmul", a.shape(), b.shape()));
  }
  const std::size_t batch = a.dim(0), m = a.dim(1), k = a.dim(2), n = b.dim(2);
  std::vector<double> out(batch * m * n);
  for (std::size_t i = 0; i < batch; ++i) {
    MutMap(out.data() + i * m * n, m, n).noalias() =
        ConstMap(a.storage()->data() + i * m * k, m, k) *
        ConstMap(b.storage()->data() + i * k * n, k, n);
  }
  Tape* tape = tape_of({&a, &b});
  if (!tape) return Tensor({batch, m, n}, std::move(out));
  Storage as = a.storage(), bs = b.storage();
  return emit(
      tape, {batch, m, n}, std::move(out), {a, b},
      [as, bs, batch, m, k, n](const std::vector<double>& g, ParentGrads& pg) {
        for (std::size_t i = 0; i < batch; ++i) {
          ConstMap gm(g.data() + i * m * n, m, n);
          if (pg[0]) {
            MutMap(pg[0]->data() + i * m * k, m, k).noalias() +=
                gm * ConstMap(bs->data() + i * k * n, k, n).transpose();
          }
          if (pg[1]) {
            MutMap(pg[1]->data() + i * k * n, k, n).noalias() +=
                ConstMap(as->data() + i * m * k, m, k).transpose() * gm;
          }
        }
      });
}

Tensor transpose(const Tensor& a) {
  check_finite(a, "transpose");
  if (a.rank() < 2) {
    throw ShapeError("transpose: needs rank >= 2, got " +
                     shape_string(a.shape()));
  }
  const std::size_t m = a.shape()[a.rank() - 2], n = a.shape().back();
  const std::size_t batch = a.size() / (m * n);
  Shape out_shape = a.shape();
  std::swap(out_shape[a.rank() - 2], out_shape[a.rank() - 1]);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < batch; ++i) {
    MutMap(out.data() + i * m * n, n, m) =
        ConstMap(a.storage()->data() + i * m * n, m, n).transpose();
  }
  Tape* tape = tape_of({&a});
  if (!tape) return Tensor(std::move(out_shape), std::move(out));
  return emit(tape, std::move(out_shape), std::move(out), {a},
              [batch, m, n](const std::vector<double>& g, ParentGrads& pg) {
                for (std::size_t i = 0; i < batch; ++i) {
                  MutMap(pg[0]->data() + i * m * n, m, n) +=
                      ConstMap(g.data() + i * m * n, n, m).transpose();
                }
              });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  Tensor y = matmul(x, w);
  if (b.empty()) return y;
  return add(y, b);
}

namespace {

enum class BinOp { kAdd, kSub, kMul, kDiv };

Tensor binary(const Tensor& a, const Tensor& b, BinOp op, const char* name) {
  check_finite(a, name);
  check_finite(b, name);
  const std::size_t period = broadcast_period(name, a.shape(), b.shape());
  const auto& x = *a.storage();
  const auto& y = *b.storage();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double u = x[i], v = y[i % period];
    switch (op) {
      case BinOp::kAdd: out[i] = u + v; break;
      case BinOp::kSub: out[i] = u - v; break;
      case BinOp::kMul: out[i] = u * v; break;
      case BinOp::kDiv:
        if (v == 0.0) throw NumericDomainError(std::string(name) + ": division by zero");
        out[i] = u / v;
        break;
    }
  }
  Tape* tape = tape_of({&a, &b});
  if (!tape) return Tensor(a.shape(), std::move(out));
  Storage as = a.storage(), bs = b.storage();
  return emit(tape, a.shape(), std::move(out), {a, b},
              [as, bs, period, op](const std::vector<double>& g,
                                   ParentGrads& pg) {
                const auto& x = *as;
                const auto& y = *bs;
                for (std::size_t i = 0; i < g.size(); ++i) {
                  const std::size_t j = i % period;
                  switch (op) {
                    case BinOp::kAdd:
                      if (pg[0]) (*pg[0])[i] += g[i];
                      if (pg[1]) (*pg[1])[j] += g[i];
                      break;
                    case BinOp::kSub:
                      if (pg[0]) (*pg[0])[i] += g[i];
                      if (pg[1]) (*pg[1])[j] -= g[i];
                      break;
                    case BinOp::kMul:
                      if (pg[0]) (*pg[0])[i] += g[i] * y[j];
                      if (pg[1]) (*pg[1])[j] += g[i] * x[i];
                      break;
                    case BinOp::kDiv:
                      if (pg[0]) (*pg[0])[i] += g[i] / y[j];
                      if (pg[1]) (*pg[1])[j] -= g[i] * x[i] / (y[j] * y[j]);
                      break;
                  }
                }
              });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(a, b, BinOp::kAdd, "add");
}
Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(a, b, BinOp::kSub, "sub");
}
Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(a, b, BinOp::kMul, "mul_elementwise");
}
Tensor div(const Tensor& a, const Tensor& b) {
  return binary(a, b, BinOp::kDiv, "div");
}

Tensor scale(const Tensor& a, double s) {
  return unary(
      a, "scale", [s](double x) { return s * x; },
      [s](double, double) { return s; });
}

Tensor add_scalar(const Tensor& a, double s) {
  return unary(
      a, "add_scalar", [s](double x) { return x + s; },
      [](double, double) { return 1.0; });
}

Tensor elu(const Tensor& a) {
  return unary(
      a, "elu", [](double x) { return x > 0.0 ? x : std::expm1(x); },
      [](double x, double y) { return x > 0.0 ? 1.0 : y + 1.0; });
}

Tensor relu(const Tensor& a) {
  return unary(
      a, "relu", [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor tanh(const Tensor& a) {
  return unary(
      a, "tanh", [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a, "sigmoid",
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor exp(const Tensor& a) {
  return unary(
      a, "exp", [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  for (double v : a.data()) {
    if (!(v > 0.0)) throw NumericDomainError("log: non-positive operand");
  }
  return unary(
      a, "log", [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Tensor pow_scalar(const Tensor& a, double p) {
  const bool integral = p >= 0.0 && std::floor(p) == p;
  if (!integral) {
    for (double v : a.data()) {
      if (!(v > 0.0)) {
        throw NumericDomainError("pow_scalar: non-positive base");
      }
    }
  }
  return unary(
      a, "pow_scalar", [p](double x) { return std::pow(x, p); },
      [p](double x, double) { return p == 0.0 ? 0.0 : p * std::pow(x, p - 1.0); });
}

Tensor sum_all(const Tensor& a) {
  check_finite(a, "sum_all");
  double s = 0.0;
  for (double v : a.data()) s += v;
  Tape* tape = tape_of({&a});
  return emit(tape, {}, {s}, {a},
              [](const std::vector<double>& g, ParentGrads& pg) {
                for (auto& v : *pg[0]) v += g[0];
              });
}

Tensor mean_all(const Tensor& a) {
  return scale(sum_all(a), 1.0 / static_cast<double>(a.size()));
}

Tensor sum_axis(const Tensor& a, std::size_t axis) {
  check_finite(a, "sum_axis");
  const AxisSplit s = split_axis(a.shape(), axis, "sum_axis");
  std::vector<double> out(s.outer * s.inner, 0.0);
  const auto& x = *a.storage();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t l = 0; l < s.len; ++l) {
      const double* src = x.data() + (o * s.len + l) * s.inner;
      double* dst = out.data() + o * s.inner;
      for (std::size_t i = 0; i < s.inner; ++i) dst[i] += src[i];
    }
  }
  Tape* tape = tape_of({&a});
  return emit(tape, drop_axis(a.shape(), axis), std::move(out), {a},
              [s](const std::vector<double>& g, ParentGrads& pg) {
                auto& ga = *pg[0];
                for (std::size_t o = 0; o < s.outer; ++o) {
                  for (std::size_t l = 0; l < s.len; ++l) {
                    double* dst = ga.data() + (o * s.len + l) * s.inner;
                    const double* src = g.data() + o * s.inner;
                    for (std::size_t i = 0; i < s.inner; ++i) dst[i] += src[i];
                  }
                }
              });
}

Tensor mean_axis(const Tensor& a, std::size_t axis) {
  const std::size_t len = split_axis(a.shape(), axis, "mean_axis").len;
  return scale(sum_axis(a, axis), 1.0 / static_cast<double>(len));
}

Tensor max_axis(const Tensor& a, std::size_t axis) {
  check_finite(a, "max_axis");
  const AxisSplit s = split_axis(a.shape(), axis, "max_axis");
  std::vector<double> out(s.outer * s.inner);
  auto arg = std::make_shared<std::vector<std::size_t>>(s.outer * s.inner);
  const auto& x = *a.storage();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      std::size_t best = o * s.len * s.inner + i;
      for (std::size_t l = 1; l < s.len; ++l) {
        const std::size_t idx = (o * s.len + l) * s.inner + i;
        if (x[idx] > x[best]) best = idx;
      }
      out[o * s.inner + i] = x[best];
      (*arg)[o * s.inner + i] = best;
    }
  }
  Tape* tape = tape_of({&a});
  return emit(tape, drop_axis(a.shape(), axis), std::move(out), {a},
              [arg](const std::vector<double>& g, ParentGrads& pg) {
                for (std::size_t i = 0; i < g.size(); ++i) {
                  (*pg[0])[(*arg)[i]] += g[i];
                }
              });
}

Tensor softmax_lastdim(const Tensor& a) {
  check_finite(a, "softmax_lastdim");
  if (a.rank() == 0) throw ShapeError("softmax_lastdim: scalar operand");
  const std::size_t n = a.shape().back();
  const std::size_t rows = a.size() / n;
  const auto& x = *a.storage();
  std::vector<double> y(x.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* src = x.data() + r * n;
    double* dst = y.data() + r * n;
    const double mx = *std::max_element(src, src + n);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      dst[i] = std::exp(src[i] - mx);
      z += dst[i];
    }
    for (std::size_t i = 0; i < n; ++i) dst[i] /= z;
  }
  Tape* tape = tape_of({&a});
  if (!tape) return Tensor(a.shape(), std::move(y));
  auto ys = std::make_shared<std::vector<double>>(y);
  return emit(tape, a.shape(), std::move(y), {a},
              [ys, rows, n](const std::vector<double>& g, ParentGrads& pg) {
                for (std::size_t r = 0; r < rows; ++r) {
                  const double* yr = ys->data() + r * n;
                  const double* gr = g.data() + r * n;
                  double dot = 0.0;
                  for (std::size_t i = 0; i < n; ++i) dot += gr[i] * yr[i];
                  double* dst = pg[0]->data() + r * n;
                  for (std::size_t i = 0; i < n; ++i) {
                    dst[i] += yr[i] * (gr[i] - dot);
                  }
                }
              });
}

Tensor log_softmax_lastdim(const Tensor& a) {
  check_finite(a, "log_softmax_lastdim");
  if (a.rank() == 0) throw ShapeError("log_softmax_lastdim: scalar operand");
  const std::size_t n = a.shape().back();
  const std::size_t rows = a.size() / n;
  const auto& x = *a.storage();
  std::vector<double> y(x.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* src = x.data() + r * n;
    double* dst = y.data() + r * n;
    const double mx = *std::max_element(src, src + n);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) z += std::exp(src[i] - mx);
    const double lz = mx + std::log(z);
    for (std::size_t i = 0; i < n; ++i) dst[i] = src[i] - lz;
  }
  Tape* tape = tape_of({&a});
  if (!tape) return Tensor(a.shape(), std::move(y));
  auto ys = std::make_shared<std::vector<double>>(y);
  return emit(tape, a.shape(), std::move(y), {a},
              [ys, rows, n](const std::vector<double>& g, ParentGrads& pg) {
                for (std::size_t r = 0; r < rows; ++r) {
                  const double* yr = ys->data() + r * n;
                  const double* gr = g.data() + r * n;
                  double total = 0.0;
                  for (std::size_t i = 0; i < n; ++i) total += gr[i];
                  double* dst = pg[0]->data() + r * n;
                  for (std::size_t i = 0; i < n; ++i) {
                    dst[i] += gr[i] - std::exp(yr[i]) * total;
                  }
                }
              });
}

Tensor reshape(const Tensor& a, Shape shape) {
  check_finite(a, "reshape");
  if (num_elements(shape) != a.size()) {
    throw ShapeError("reshape: cannot view " + shape_string(a.shape()) +
                     " as " + shape_string(shape));
  }
  Tape* tape = tape_of({&a});
  std::vector<double> data(a.data().begin(), a.data().end());
  return emit(tape, std::move(shape), std::move(data), {a},
              [](const std::vector<double>& g, ParentGrads& pg) {
                auto& ga = *pg[0];
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
              });
}

Tensor concat_lastdim(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_lastdim: no operands");
  const Shape& ref = parts.front().shape();
  if (ref.empty()) throw ShapeError("concat_lastdim: scalar operand");
  const std::size_t rows = parts.front().size() / ref.back();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    check_finite(p, "concat_lastdim");
    Shape lead(p.shape().begin(), p.shape().end() - 1);
    Shape ref_lead(ref.begin(), ref.end() - 1);
    if (p.rank() != ref.size() || lead != ref_lead) {
      throw ShapeError(dims_msg("concat_lastdim", ref, p.shape()));
    }
    widths.push_back(p.shape().back());
    total += p.shape().back();
  }
  std::vector<double> out(rows * total);
  std::size_t offset = 0;
  for (std::size_t j = 0; j < parts.size(); ++j) {
    const auto& x = *parts[j].storage();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(x.data() + r * widths[j], widths[j],
                  out.data() + r * total + offset);
    }
    offset += widths[j];
  }
  Shape out_shape = ref;
  out_shape.back() = total;
  Tape* tape = tape_of(parts);
  return emit(tape, std::move(out_shape), std::move(out), parts,
              [widths, rows, total](const std::vector<double>& g,
                                    ParentGrads& pg) {
                std::size_t offset = 0;
                for (std::size_t j = 0; j < widths.size(); ++j) {
                  if (pg[j]) {
                    for (std::size_t r = 0; r < rows; ++r) {
                      const double* src = g.data() + r * total + offset;
                      double* dst = pg[j]->data() + r * widths[j];
                      for (std::size_t i = 0; i < widths[j]; ++i) {
                        dst[i] += src[i];
                      }
                    }
                  }
                  offset += widths[j];
                }
              });
}

Tensor slice_lastdim(const Tensor& a, std::size_t start, std::size_t length) {
  check_finite(a, "slice_lastdim");
  if (a.rank() == 0 || length == 0 || start + length > a.shape().back()) {
    throw ShapeError("slice_lastdim: range [" + std::to_string(start) + ", " +
                     std::to_string(start + length) + ") out of bounds for " +
                     shape_string(a.shape()));
  }
  const std::size_t width = a.shape().back();
  const std::size_t rows = a.size() / width;
  std::vector<double> out(rows * length);
  const auto& x = *a.storage();
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(x.data() + r * width + start, length, out.data() + r * length);
  }
  Shape out_shape = a.shape();
  out_shape.back() = length;
  Tape* tape = tape_of({&a});
  return emit(tape, std::move(out_shape), std::move(out), {a},
              [rows, width, start, length](const std::vector<double>& g,
                                           ParentGrads& pg) {
                for (std::size_t r = 0; r < rows; ++r) {
                  double* dst = pg[0]->data() + r * width + start;
                  const double* src = g.data() + r * length;
                  for (std::size_t i = 0; i < length; ++i) dst[i] += src[i];
                }
              });
}

Tensor stack(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("stack: no operands");
  const Shape& ref = parts.front().shape();
  const std::size_t n = parts.front().size();
  std::vector<double> out;
  out.reserve(n * parts.size());
  for (const auto& p : parts) {
    check_finite(p, "stack");
    if (p.shape() != ref) throw ShapeError(dims_msg("stack", ref, p.shape()));
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  Shape out_shape{parts.size()};
  out_shape.insert(out_shape.end(), ref.begin(), ref.end());
  Tape* tape = tape_of(parts);
  return emit(tape, std::move(out_shape), std::move(out), parts,
              [n](const std::vector<double>& g, ParentGrads& pg) {
                for (std::size_t j = 0; j < pg.size(); ++j) {
                  if (!pg[j]) continue;
                  for (std::size_t i = 0; i < n; ++i) {
                    (*pg[j])[i] += g[j * n + i];
                  }
                }
              });
}

Tensor gather_rows(const Tensor& a, std::vector<std::size_t> indices) {
  check_finite(a, "gather_rows");
  if (a.rank() == 0 || indices.empty()) {
    throw ShapeError("gather_rows: needs a non-scalar operand and indices");
  }
  const std::size_t rows = a.dim(0);
  const std::size_t width = a.size() / rows;
  std::vector<double> out(indices.size() * width);
  const auto& x = *a.storage();
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= rows) {
      throw ShapeError("gather_rows: index " + std::to_string(indices[r]) +
                       " out of range for " + shape_string(a.shape()));
    }
    std::copy_n(x.data() + indices[r] * width, width, out.data() + r * width);
  }
  Shape out_shape = a.shape();
  out_shape[0] = indices.size();
  Tape* tape = tape_of({&a});
  if (!tape) return Tensor(std::move(out_shape), std::move(out));
  auto idx = std::make_shared<std::vector<std::size_t>>(std::move(indices));
  return emit(tape, std::move(out_shape), std::move(out), {a},
              [idx, width](const std::vector<double>& g, ParentGrads& pg) {
                for (std::size_t r = 0; r < idx->size(); ++r) {
                  double* dst = pg[0]->data() + (*idx)[r] * width;
                  const double* src = g.data() + r * width;
                  for (std::size_t i = 0; i < width; ++i) dst[i] += src[i];
                }
              });
}

Tensor segment_sum(const Tensor& a, std::vector<std::size_t> segment_ids,
                   std::size_t buckets) {
  check_finite(a, "segment_sum");
  if (a.rank() == 0 || segment_ids.size() != a.dim(0) || buckets == 0) {
    throw ShapeError("segment_sum: need one segment id per leading entry of " +
                     shape_string(a.shape()));
  }
  const std::size_t width = a.size() / a.dim(0);
  std::vector<double> out(buckets * width, 0.0);
  const auto& x = *a.storage();
  for (std::size_t r = 0; r < segment_ids.size(); ++r) {
    if (segment_ids[r] >= buckets) {
      throw ShapeError("segment_sum: segment id out of range");
    }
    double* dst = out.data() + segment_ids[r] * width;
    const double* src = x.data() + r * width;
    for (std::size_t i = 0; i < width; ++i) dst[i] += src[i];
  }
  Shape out_shape = a.shape();
  out_shape[0] = buckets;
  Tape* tape = tape_of({&a});
  if (!tape) return Tensor(std::move(out_shape), std::move(out));
  auto ids = std::make_shared<std::vector<std::size_t>>(std::move(segment_ids));
  return emit(tape, std::move(out_shape), std::move(out), {a},
              [ids, width](const std::vector<double>& g, ParentGrads& pg) {
                for (std::size_t r = 0; r < ids->size(); ++r) {
                  double* dst = pg[0]->data() + r * width;
                  const double* src = g.data() + (*ids)[r] * width;
                  for (std::size_t i = 0; i < width; ++i) dst[i] += src[i];
                }
              });
}

Tensor expand(const Tensor& a, std::size_t axis, std::size_t count) {
  check_finite(a, "expand");
  if (axis > a.rank() || count == 0) {
    throw ShapeError("expand: bad axis/count for " + shape_string(a.shape()));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= a.shape()[i];
  for (std::size_t i = axis; i < a.rank(); ++i) inner *= a.shape()[i];
  std::vector<double> out(outer * count * inner);
  const auto& x = *a.storage();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t c = 0; c < count; ++c) {
      std::copy_n(x.data() + o * inner, inner,
                  out.data() + (o * count + c) * inner);
    }
  }
  Shape out_shape = a.shape();
  out_shape.insert(out_shape.begin() + static_cast<std::ptrdiff_t>(axis), count);
  Tape* tape = tape_of({&a});
  return emit(tape, std::move(out_shape), std::move(out), {a},
              [outer, count, inner](const std::vector<double>& g,
                                    ParentGrads& pg) {
                for (std::size_t o = 0; o < outer; ++o) {
                  for (std::size_t c = 0; c < count; ++c) {
                    const double* src = g.data() + (o * count + c) * inner;
                    double* dst = pg[0]->data() + o * inner;
                    for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
                  }
                }
              });
}

}  // namespace relnet
