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

// Grounding-based attention priors: tree encoding of the query, pooling of
// supplied grounding scores and the KL regularizers.

#ifndef RELNET_GAP_H_
#define RELNET_GAP_H_

#include <cstddef>
#include <string>
#include <vector>

#include "relnet/nn.h"

namespace relnet {

// Constituency tree given as a parent array. Leaves carry the index of the
// word they cover; internal nodes carry -1.
struct ParseTree {
  std::vector<int> parent;  // -1 marks the root
  std::vector<int> word;
  std::vector<std::string> tag;
  std::vector<bool> referring;  // noun / wh-noun phrase nodes

  std::size_t size() const { return parent.size(); }
  // Throws std::invalid_argument unless the tree has one root, no cycles and
  // leaves covering words 0..S-1 exactly once each.
  void validate() const;
  std::size_t num_words() const;
  std::size_t root() const;
  std::vector<std::vector<std::size_t>> children() const;
  // Sorted word indices under `node`.
  std::vector<std::size_t> span(std::size_t node) const;
  std::vector<std::size_t> referring_nodes() const;
};

struct TreeEncoding {
  Tensor hidden;  // [M, H], one row per node
  Tensor cell;    // [M, H]
  Tensor root;    // [H]
};

// Child-sum TreeLSTM. Leaves read their word vector, internal nodes a zero
// input. Nodes are evaluated level by level, all nodes of a level at once.
class TreeLstm {
 public:
  TreeLstm() = default;
  TreeLstm(ParamStore& store, const std::string& name, std::size_t in,
           std::size_t hidden, Rng& rng);

  // leaf_inputs: [S, in] in word order.
  TreeEncoding operator()(Context& ctx, const ParseTree& tree,
                          const Tensor& leaf_inputs) const;

  std::size_t hidden() const { return hidden_; }
  // x -> (i, o, u, f) pre-activations with bias.
  const Linear& input_proj() const { return wx_; }
  // sum of children h -> (i, o, u), no bias.
  const Linear& iou_proj() const { return uiou_; }
  // child h -> f, no bias.
  const Linear& forget_proj() const { return uf_; }

 private:
  std::size_t in_ = 0, hidden_ = 0;
  Linear wx_, uiou_, uf_;
};

struct PooledPrior {
  std::vector<double> mean;        // per-entry mean over REs
  std::vector<double> normalized;  // mean rescaled to sum to 1
};

// Simple-voting pool of per-RE scores (R lists of equal length, entries in
// [0, 1]).
PooledPrior pool_priors(const std::vector<std::vector<double>>& scores);

// Distributes entity attention alpha [T] over the words of each entity's
// span: gamma_s = sum_e alpha_e softmax_{s in span(e)}(a^T tanh(W_w w_s +
// W_l l_e + W_v v)).
class EntityToWord {
 public:
  EntityToWord() = default;
  EntityToWord(ParamStore& store, const std::string& name, std::size_t d,
               Rng& rng);

  // entities [T, d], words [S, d], visual summary [d] -> gamma [S].
  Tensor operator()(Context& ctx, const Tensor& alpha, const Tensor& entities,
                    const Tensor& words, const Tensor& visual,
                    const std::vector<std::vector<std::size_t>>& spans) const;

  const Linear& score() const { return a_; }

 private:
  std::size_t d_ = 0;
  Linear ww_, wl_, wv_, a_;
};

inline constexpr double kKlSmoothing = 1e-8;

// KL(prior || pred) per row, with both sides smoothed by kKlSmoothing and
// renormalized; mean over rows. pred: [n] or [B, n]; prior has the same
// number of entries. Negative entries are rejected.
Tensor kl_attention_loss(const Tensor& pred, const std::vector<double>& prior);
// One prior per row of pred [B, n].
Tensor kl_attention_loss(const Tensor& pred,
                         const std::vector<std::vector<double>>& priors);

// l_vqa + lambda_l * l_ling + lambda_v * l_vis. Empty terms are skipped.
Tensor combined_loss(const Tensor& vqa, const Tensor& ling, const Tensor& vis,
                     double lambda_l, double lambda_v);

}  // namespace relnet

#endif  // RELNET_GAP_H_
