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

#include "relnet/gap.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "relnet/ops.h"

namespace relnet {

void ParseTree::validate() const {
  const std::size_t m = parent.size();
  if (m == 0) throw std::invalid_argument("parse tree: no nodes");
  if (word.size() != m || tag.size() != m || referring.size() != m) {
    throw std::invalid_argument("parse tree: parent, word, tag and referring "
                                "arrays differ in length");
  }
  std::size_t roots = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (parent[i] == -1) {
      ++roots;
    } else if (parent[i] < 0 || static_cast<std::size_t>(parent[i]) >= m) {
      throw std::invalid_argument("parse tree: node " + std::to_string(i) +
                                  " has an out-of-range parent");
    }
  }
  if (roots != 1) {
    throw std::invalid_argument("parse tree: expected a single root, found " +
                                std::to_string(roots));
  }
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t steps = 0;
    for (int p = static_cast<int>(i); p != -1; p = parent[p]) {
      if (++steps > m) {
        throw std::invalid_argument("parse tree: cycle through node " +
                                    std::to_string(i));
      }
    }
  }
  std::vector<bool> has_child(m, false);
  for (std::size_t i = 0; i < m; ++i) {
    if (parent[i] >= 0) has_child[parent[i]] = true;
  }
  std::vector<int> seen;
  for (std::size_t i = 0; i < m; ++i) {
    if (has_child[i] && word[i] != -1) {
      throw std::invalid_argument("parse tree: internal node " +
                                  std::to_string(i) + " carries a word");
    }
    if (!has_child[i]) {
      if (word[i] < 0) {
        throw std::invalid_argument("parse tree: leaf " + std::to_string(i) +
                                    " has no word");
      }
      seen.push_back(word[i]);
    }
  }
  std::sort(seen.begin(), seen.end());
  for (std::size_t s = 0; s < seen.size(); ++s) {
    if (seen[s] != static_cast<int>(s)) {
      throw std::invalid_argument(
          "parse tree: leaves must cover words 0..S-1 exactly once");
    }
  }
}

std::size_t ParseTree::num_words() const {
  std::size_t n = 0;
  for (int w : word) n += w >= 0;
  return n;
}

std::size_t ParseTree::root() const {
  for (std::size_t i = 0; i < parent.size(); ++i) {
    if (parent[i] == -1) return i;
  }
  throw std::invalid_argument("parse tree: no root");
}

std::vector<std::vector<std::size_t>> ParseTree::children() const {
  std::vector<std::vector<std::size_t>> out(parent.size());
  for (std::size_t i = 0; i < parent.size(); ++i) {
    if (parent[i] >= 0) out[parent[i]].push_back(i);
  }
  return out;
}

std::vector<std::size_t> ParseTree::span(std::size_t node) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < parent.size(); ++i) {
    if (word[i] < 0) continue;
    for (int p = static_cast<int>(i); p != -1; p = parent[p]) {
      if (static_cast<std::size_t>(p) == node) {
        out.push_back(word[i]);
        break;
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> ParseTree::referring_nodes() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < referring.size(); ++i) {
    if (referring[i]) out.push_back(i);
  }
  return out;
}

TreeLstm::TreeLstm(ParamStore& store, const std::string& name, std::size_t in,
                   std::size_t hidden, Rng& rng)
    : in_(in),
      hidden_(hidden),
      wx_(store, name + ".wx", in, 4 * hidden, rng),
      uiou_(store, name + ".uiou", hidden, 3 * hidden, rng, false),
      uf_(store, name + ".uf", hidden, hidden, rng, false) {}

TreeEncoding TreeLstm::operator()(Context& ctx, const ParseTree& tree,
                                  const Tensor& leaf_inputs) const {
  tree.validate();
  const std::size_t m = tree.size(), H = hidden_;
  if (leaf_inputs.shape() != Shape{tree.num_words(), in_}) {
    throw ShapeError("tree lstm: leaf inputs " +
                     shape_string(leaf_inputs.shape()) + " do not match " +
                     std::to_string(tree.num_words()) + " words of width " +
                     std::to_string(in_));
  }
  const auto kids = tree.children();
  // Height: leaves 0, parents one above their tallest child.
  std::vector<std::size_t> height(m, 0);
  std::size_t levels = 1;
  for (std::size_t i = 0; i < m; ++i) {
    if (tree.word[i] < 0) continue;
    std::size_t h = 0;
    for (int p = tree.parent[i]; p != -1; p = tree.parent[p]) {
      height[p] = std::max(height[p], ++h);
      levels = std::max(levels, height[p] + 1);
      h = height[p];
    }
  }
  Tensor all_h = Tensor::zeros({m, H}), all_c = Tensor::zeros({m, H});
  for (std::size_t level = 0; level < levels; ++level) {
    std::vector<std::size_t> nodes, child, seg, words;
    for (std::size_t i = 0; i < m; ++i) {
      if (height[i] != level) continue;
      for (std::size_t c : kids[i]) {
        child.push_back(c);
        seg.push_back(nodes.size());
      }
      if (level == 0) words.push_back(tree.word[i]);
      nodes.push_back(i);
    }
    const std::size_t n = nodes.size();
    Tensor x = level == 0 ? gather_rows(leaf_inputs, words)
                          : Tensor::zeros({n, in_});
    Tensor pre = wx_(ctx, x);
    Tensor iou = slice_lastdim(pre, 0, 3 * H);
    Tensor carry;
    if (!child.empty()) {
      Tensor hk = gather_rows(all_h, child), ck = gather_rows(all_c, child);
      iou = add(iou, uiou_(ctx, segment_sum(hk, seg, n)));
      Tensor f = sigmoid(add(gather_rows(slice_lastdim(pre, 3 * H, H), seg),
                             uf_(ctx, hk)));
      carry = segment_sum(mul(f, ck), seg, n);
    }
    Tensor c = mul(sigmoid(slice_lastdim(iou, 0, H)),
                   tanh(slice_lastdim(iou, 2 * H, H)));
    if (!carry.empty()) c = add(c, carry);
    Tensor h = mul(sigmoid(slice_lastdim(iou, H, H)), tanh(c));
    all_h = add(all_h, segment_sum(h, nodes, m));
    all_c = add(all_c, segment_sum(c, nodes, m));
  }
  Tensor root = reshape(gather_rows(all_h, {tree.root()}), {H});
  return {all_h, all_c, root};
}

PooledPrior pool_priors(const std::vector<std::vector<double>>& scores) {
  if (scores.empty()) {
    throw std::invalid_argument("pool_priors: need at least one referring "
                                "expression");
  }
  const std::size_t n = scores.front().size();
  PooledPrior out;
  out.mean.assign(n, 0.0);
  for (const auto& row : scores) {
    if (row.size() != n) {
      throw std::invalid_argument("pool_priors: score lists differ in length");
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!(row[i] >= 0.0 && row[i] <= 1.0)) {
        throw std::invalid_argument("pool_priors: scores must lie in [0, 1]");
      }
      out.mean[i] += row[i] / static_cast<double>(scores.size());
    }
  }
  double total = 0.0;
  for (double v : out.mean) total += v;
  if (total <= 0.0) {
    throw std::invalid_argument("pool_priors: pooled scores are all zero");
  }
  for (double v : out.mean) out.normalized.push_back(v / total);
  return out;
}

EntityToWord::EntityToWord(ParamStore& store, const std::string& name,
                           std::size_t d, Rng& rng)
    : d_(d),
      ww_(store, name + ".ww", d, d, rng, false),
      wl_(store, name + ".wl", d, d, rng, false),
      wv_(store, name + ".wv", d, d, rng),
      a_(store, name + ".a", d, 1, rng, false) {}

Tensor EntityToWord::operator()(
    Context& ctx, const Tensor& alpha, const Tensor& entities,
    const Tensor& words, const Tensor& visual,
    const std::vector<std::vector<std::size_t>>& spans) const {
  if (entities.rank() != 2 || entities.dim(1) != d_ || words.rank() != 2 ||
      words.dim(1) != d_ || visual.shape() != Shape{d_}) {
    throw ShapeError("entity-to-word: expected entities [T, d], words [S, d] "
                     "and visual [d]");
  }
  const std::size_t T = entities.dim(0), S = words.dim(0);
  if (alpha.shape() != Shape{T} || spans.size() != T) {
    throw ShapeError("entity-to-word: need one attention weight and one span "
                     "per entity");
  }
  std::vector<double> mask(T * S, -1e30);
  for (std::size_t e = 0; e < T; ++e) {
    if (spans[e].empty()) {
      throw std::invalid_argument("entity-to-word: entity " +
                                  std::to_string(e) + " has an empty span");
    }
    for (std::size_t s : spans[e]) {
      if (s >= S) throw std::out_of_range("entity-to-word: span out of range");
      mask[e * S + s] = 0.0;
    }
  }
  Tensor ent = add(wl_(ctx, entities), reshape(wv_(ctx, reshape(visual, {1, d_})), {d_}));
  Tensor pair = tanh(add(expand(ww_(ctx, words), 0, T), expand(ent, 1, S)));
  Tensor scores = add(reshape(a_(ctx, pair), {T, S}), Tensor({T, S}, mask));
  Tensor dist = softmax_lastdim(scores);
  return reshape(matmul(reshape(alpha, {1, T}), dist), {S});
}

Tensor kl_attention_loss(const Tensor& pred, const std::vector<double>& prior) {
  if (pred.rank() < 1 || pred.rank() > 2) {
    throw ShapeError("kl_attention_loss: prediction must be [n] or [B, n], got " +
                     shape_string(pred.shape()));
  }
  const std::size_t rows = pred.rank() == 2 ? pred.dim(0) : 1;
  Tensor flat = reshape(pred, {rows, pred.dim(pred.rank() - 1)});
  return kl_attention_loss(flat, std::vector<std::vector<double>>(rows, prior));
}

Tensor kl_attention_loss(const Tensor& pred,
                         const std::vector<std::vector<double>>& priors) {
  if (pred.rank() != 2 || pred.dim(0) != priors.size()) {
    throw ShapeError("kl_attention_loss: prediction " +
                     shape_string(pred.shape()) + " does not match " +
                     std::to_string(priors.size()) + " priors");
  }
  const std::size_t rows = pred.dim(0), n = pred.dim(1);
  for (double v : pred.data()) {
    if (v < 0.0) throw std::invalid_argument("kl_attention_loss: negative attention");
  }
  std::vector<double> p;
  p.reserve(rows * n);
  double entropy_term = 0.0;
  for (const auto& prior : priors) {
    if (prior.size() != n) {
      throw ShapeError("kl_attention_loss: prior of " + std::to_string(prior.size()) +
                       " entries for rows of " + std::to_string(n));
    }
    double total = 0.0;
    for (double v : prior) {
      if (v < 0.0) throw std::invalid_argument("kl_attention_loss: negative prior");
      total += v + kKlSmoothing;
    }
    for (double v : prior) {
      p.push_back((v + kKlSmoothing) / total);
      entropy_term += p.back() * std::log(p.back());
    }
  }
  Tensor q = add_scalar(pred, kKlSmoothing);
  Tensor qn = div(q, expand(sum_axis(q, 1), 1, n));
  Tensor cross = sum_all(mul(log(qn), Tensor({rows, n}, std::move(p))));
  const double inv = 1.0 / static_cast<double>(rows);
  return add_scalar(scale(cross, -inv), entropy_term * inv);
}

Tensor combined_loss(const Tensor& vqa, const Tensor& ling, const Tensor& vis,
                     double lambda_l, double lambda_v) {
  if (lambda_l < 0.0 || lambda_v < 0.0) {
    throw std::invalid_argument("combined_loss: weights must be non-negative");
  }
  Tensor total = vqa;
  if (!ling.empty() && lambda_l > 0.0) total = add(total, scale(ling, lambda_l));
  if (!vis.empty() && lambda_v > 0.0) total = add(total, scale(vis, lambda_v));
  return total;
}

}  // namespace relnet
