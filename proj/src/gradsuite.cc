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

#include "relnet/gradsuite.h"

#include <algorithm>
#include <functional>
#include <stdexcept>

#include "relnet/crn.h"
#include "relnet/decoders.h"
#include "relnet/gap.h"
#include "relnet/gradcheck.h"
#include "relnet/hcrn.h"
#include "relnet/lognet.h"
#include "relnet/ops.h"

namespace relnet {

namespace {

Tensor random_tensor(const Shape& shape, Rng& rng, double scale = 1.0) {
  std::size_t n = 1;
  for (std::size_t s : shape) n *= s;
  std::vector<double> v(n);
  for (double& x : v) x = scale * rng.normal();
  return Tensor(shape, std::move(v));
}

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
}

// Leaves 0..words-1 grouped bottom-up into runs of one to three children.
ParseTree random_tree(std::size_t words, Rng& rng) {
  ParseTree t;
  t.parent.assign(words, -1);
  t.word.clear();
  for (std::size_t i = 0; i < words; ++i) t.word.push_back(static_cast<int>(i));
  std::vector<std::size_t> frontier(words);
  for (std::size_t i = 0; i < words; ++i) frontier[i] = i;
  while (frontier.size() > 1 || t.parent.size() == words) {
    std::vector<std::size_t> next;
    for (std::size_t i = 0; i < frontier.size();) {
      std::size_t run = 1 + rng.below(std::min<std::size_t>(3, frontier.size() - i));
      const int node = static_cast<int>(t.parent.size());
      t.parent.push_back(-1);
      t.word.push_back(-1);
      for (std::size_t j = 0; j < run; ++j) t.parent[frontier[i + j]] = node;
      next.push_back(node);
      i += run;
    }
    frontier = next;
  }
  t.tag.assign(t.parent.size(), "X");
  t.referring.assign(t.parent.size(), false);
  return t;
}

double check_crn(Conditioning kind, Rng& rng, std::uint64_t seed) {
  ParamStore store;
  // Even widths: the sequential variants run a biLSTM over d.
  const std::size_t n = pick(rng, 3, 5), K = pick(rng, 1, 2), d = 2 * pick(rng, 1, 2), B = 2;
  CrnConfig cfg;
  cfg.d = d;
  cfg.t = 2;
  cfg.k_max = pick(rng, 2, n - 1);
  cfg.conditioning = kind;
  cfg.g_mode = rng.below(2) ? GMode::kConcat : GMode::kAverage;
  CrnUnit unit(store, "crn", cfg, n, rng);
  Linear readout(store, "readout", d, 3, rng);
  Tensor x = random_tensor({B, n, K, d}, rng), c = random_tensor({B, d}, rng);
  Tensor c2 = kind == Conditioning::kDual ? random_tensor({B, d}, rng) : Tensor();
  auto loss = [&](Context& ctx) {
    Tensor r = unit(ctx, x, c, c2);
    Tensor pooled = mean_axis(reshape(r, {B, r.size() / (B * d), d}), 1);
    return cross_entropy(readout(ctx, pooled), {0, 2});
  };
  return grad_check_params(store, loss, seed);
}

double check_hcrn(Rng& rng, std::uint64_t seed) {
  ParamStore store;
  HcrnConfig cfg;
  cfg.clips = pick(rng, 4, 5);
  cfg.frames = pick(rng, 5, 6);
  cfg.d = 2 * pick(rng, 1, 2);
  cfg.crn.t = 2;
  const std::size_t B = 2, d = cfg.d;
  VisualStream vs(store, "vs", cfg, rng);
  Readout ro(store, "ro", d, rng);
  Linear head(store, "head", d, 3, rng);
  Tensor f = random_tensor({B, cfg.clips, cfg.frames, d}, rng);
  Tensor m = random_tensor({B, cfg.clips, d}, rng), q = random_tensor({B, d}, rng);
  auto loss = [&](Context& ctx) {
    Tensor o = vs(ctx, f, m, q);
    Tensor flat = reshape(o, {B, o.dim(1) * o.dim(2), d});
    return cross_entropy(head(ctx, ro(ctx, flat, q).output), {1, 2});
  };
  return grad_check_params(store, loss, seed, 1e-5, 300);
}

double check_log_unit(Rng& rng, std::uint64_t seed) {
  ParamStore store;
  LognetConfig cfg;
  cfg.d = pick(rng, 2, 5);
  cfg.steps = pick(rng, 1, 2);
  cfg.heads = pick(rng, 1, 2);
  cfg.gcn_layers = pick(rng, 1, 2);
  cfg.appearance_dim = pick(rng, 2, 4);
  const std::size_t B = 2, N = pick(rng, 2, 4), S = pick(rng, 2, 4), d = cfg.d;
  LogUnit unit(store, "log", cfg, rng);
  Tensor app = random_tensor({B, N, cfg.appearance_dim}, rng), box = random_tensor({B, N, 7}, rng);
  Tensor words = random_tensor({B, S, d}, rng), q = random_tensor({B, d}, rng);
  Tensor target = random_tensor({B, d}, rng);
  auto loss = [&](Context& ctx) {
    LognetOutput o = unit(ctx, unit.fuse(ctx, app, box), words, q);
    return sum_all(mul(tanh(o.y), target));
  };
  return grad_check_params(store, loss, seed, 1e-5, 300);
}

double check_tree(Rng& rng, std::uint64_t seed) {
  ParamStore store;
  const std::size_t in = pick(rng, 2, 4), hidden = pick(rng, 2, 4);
  TreeLstm cell(store, "tree", in, hidden, rng);
  ParseTree tree = random_tree(pick(rng, 2, 6), rng);
  Tensor leaves = random_tensor({tree.num_words(), in}, rng);
  Tensor probe = random_tensor({tree.size(), hidden}, rng);
  auto loss = [&](Context& ctx) { return sum_all(mul(cell(ctx, tree, leaves).hidden, probe)); };
  const double params = grad_check_params(store, loss, seed);
  const double inputs = grad_check(
      [&](const Tensor& x) {
        Rng r(0);
        Context ctx(store, nullptr, r, false);
        return sum_all(mul(cell(ctx, tree, x).hidden, probe));
      },
      leaves);
  return std::max(params, inputs);
}

double check_decoder(AnswerKind kind, Rng& rng, std::uint64_t seed) {
  ParamStore store;
  const std::size_t B = 3, F = pick(rng, 2, 5), d = pick(rng, 2, 4);
  Tensor feats = random_tensor({B, F}, rng), q = random_tensor({B, d}, rng);
  if (kind == AnswerKind::kOpenEnded) {
    const std::size_t answers = pick(rng, 2, 6);
    OpenEndedDecoder open(store, "open", F, d, answers, rng);
    std::vector<std::size_t> labels;
    for (std::size_t b = 0; b < B; ++b) labels.push_back(rng.below(answers));
    return grad_check_params(
        store, [&](Context& ctx) { return open_ended_loss(open.logits(ctx, feats, q), labels); },
        seed);
  }
  if (kind == AnswerKind::kCount) {
    CountDecoder count(store, "count", F, d, rng);
    std::vector<double> targets;
    for (std::size_t b = 0; b < B; ++b) targets.push_back(static_cast<double>(rng.below(11)));
    return grad_check_params(
        store, [&](Context& ctx) { return count_loss(count.raw(ctx, feats, q), targets); },
        seed);
  }
  const std::size_t A = pick(rng, 2, 5);
  MultiChoiceScorer choice(store, "choice", F, rng);
  // Spread scores so no margin sits on the hinge.
  Tensor choices = random_tensor({B, A, F}, rng, 3.0);
  std::vector<std::size_t> answer;
  for (std::size_t b = 0; b < B; ++b) answer.push_back(rng.below(A));
  return grad_check_params(
      store, [&](Context& ctx) { return hinge_loss(choice(ctx, choices), answer); }, seed);
}

std::vector<double> random_prior(std::size_t n, Rng& rng) {
  std::vector<double> p(n);
  for (double& v : p) v = rng.uniform();
  p[rng.below(n)] = 0.0;
  double s = 0.0;
  for (double v : p) s += v;
  for (double& v : p) v /= s;
  return p;
}

double check_kl(bool linguistic, Rng& rng, std::uint64_t seed) {
  ParamStore store;
  const std::size_t d = pick(rng, 2, 4);
  if (linguistic) {
    EntityToWord map(store, "e2w", d, rng);
    ParseTree tree = random_tree(pick(rng, 3, 6), rng);
    const std::size_t S = tree.num_words();
    std::vector<std::vector<std::size_t>> spans = {tree.span(tree.root()), tree.span(0),
                                                   tree.span(S - 1)};
    Tensor words = random_tensor({S, d}, rng), ents = random_tensor({3, d}, rng);
    Tensor vis = random_tensor({d}, rng), alpha_logits = random_tensor({3}, rng);
    std::vector<double> prior = random_prior(S, rng);
    return grad_check_params(
        store,
        [&](Context& ctx) {
          Tensor alpha = softmax_lastdim(alpha_logits);
          return kl_attention_loss(map(ctx, alpha, ents, words, vis, spans), prior);
        },
        seed);
  }
  const std::size_t B = 2, N = pick(rng, 2, 6);
  Linear region(store, "region", d, 1, rng);
  Tensor regions = random_tensor({B, N, d}, rng);
  std::vector<std::vector<double>> priors = {random_prior(N, rng), random_prior(N, rng)};
  return grad_check_params(
      store,
      [&](Context& ctx) {
        return kl_attention_loss(softmax_lastdim(reshape(region(ctx, regions), {B, N})), priors);
      },
      seed);
}

using Runner = std::function<double(Rng&, std::uint64_t)>;

const std::vector<std::pair<std::string, Runner>>& runners() {
  static const std::vector<std::pair<std::string, Runner>> table = {
      {"crn_additive", [](Rng& r, std::uint64_t s) { return check_crn(Conditioning::kAdditive, r, s); }},
      {"crn_multiplicative",
       [](Rng& r, std::uint64_t s) { return check_crn(Conditioning::kMultiplicative, r, s); }},
      {"crn_sequential_additive",
       [](Rng& r, std::uint64_t s) { return check_crn(Conditioning::kSequentialAdditive, r, s); }},
      {"crn_sequential_multiplicative",
       [](Rng& r, std::uint64_t s) {
         return check_crn(Conditioning::kSequentialMultiplicative, r, s);
       }},
      {"crn_dual", [](Rng& r, std::uint64_t s) { return check_crn(Conditioning::kDual, r, s); }},
      {"hcrn_2level", check_hcrn},
      {"log_unit", check_log_unit},
      {"tree_lstm", check_tree},
      {"decoder_open_ended",
       [](Rng& r, std::uint64_t s) { return check_decoder(AnswerKind::kOpenEnded, r, s); }},
      {"decoder_count", [](Rng& r, std::uint64_t s) { return check_decoder(AnswerKind::kCount, r, s); }},
      {"decoder_multi_choice",
       [](Rng& r, std::uint64_t s) { return check_decoder(AnswerKind::kMultiChoice, r, s); }},
      {"kl_linguistic", [](Rng& r, std::uint64_t s) { return check_kl(true, r, s); }},
      {"kl_visual", [](Rng& r, std::uint64_t s) { return check_kl(false, r, s); }},
  };
  return table;
}

}  // namespace

std::vector<std::string> gradcheck_blocks() {
  std::vector<std::string> out;
  for (const auto& [name, run] : runners()) out.push_back(name);
  return out;
}

BlockCheck check_block(const std::string& block, std::size_t instances, std::uint64_t seed) {
  for (const auto& [name, run] : runners()) {
    if (name != block) continue;
    BlockCheck out{block, instances, 0.0};
    for (std::size_t i = 0; i < instances; ++i) {
      Rng rng(seed + i);
      out.max_error = std::max(out.max_error, run(rng, seed + i));
    }
    return out;
  }
  throw std::invalid_argument("unknown gradient-check block '" + block + "'");
}

std::vector<BlockCheck> run_gradcheck_suite(std::size_t instances, std::uint64_t seed) {
  std::vector<BlockCheck> out;
  for (const std::string& block : gradcheck_blocks()) {
    out.push_back(check_block(block, instances, seed));
  }
  return out;
}

nlohmann::json to_json(const BlockCheck& c) {
  return {{"block", c.block}, {"instances", c.instances}, {"max_rel_error", c.max_error}};
}

}  // namespace relnet
