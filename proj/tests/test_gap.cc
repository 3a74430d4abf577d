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

#include <cmath>
#include <vector>

#include "doctest.h"
#include "relnet/gap.h"
#include "relnet/gradcheck.h"
#include "relnet/ops.h"
#include "relnet/optim.h"

using namespace relnet;

namespace {

Tensor random_tensor(const Shape& shape, Rng& rng, double scale = 1.0) {
  std::vector<double> data(num_elements(shape));
  for (auto& v : data) v = rng.uniform(-scale, scale);
  return Tensor(shape, std::move(data));
}

ParseTree make_tree(std::vector<int> parent, std::vector<int> word) {
  ParseTree t;
  t.parent = std::move(parent);
  t.word = std::move(word);
  t.tag.assign(t.parent.size(), "X");
  t.referring.assign(t.parent.size(), false);
  return t;
}

// Groups runs of the current frontier under fresh parents until one root
// remains. Leaves are nodes 0..S-1.
ParseTree random_tree(std::size_t words, Rng& rng) {
  std::vector<int> parent(words, -1), word;
  for (std::size_t i = 0; i < words; ++i) word.push_back(static_cast<int>(i));
  std::vector<std::size_t> frontier;
  for (std::size_t i = 0; i < words; ++i) frontier.push_back(i);
  while (frontier.size() > 1 || parent.size() == words) {
    std::vector<std::size_t> next;
    for (std::size_t i = 0; i < frontier.size();) {
      std::size_t run = 1 + rng.below(std::min<std::size_t>(3, frontier.size() - i));
      if (frontier.size() == 1) run = 1;
      const int node = static_cast<int>(parent.size());
      parent.push_back(-1);
      word.push_back(-1);
      for (std::size_t j = 0; j < run; ++j) parent[frontier[i + j]] = node;
      next.push_back(node);
      i += run;
    }
    frontier = next;
  }
  return make_tree(parent, word);
}

using Vec = std::vector<double>;

Vec apply(const ParamStore& store, const Linear& l, const Vec& x) {
  const Tensor& w = store.value(l.weight_id());
  Vec y(l.out(), 0.0);
  for (std::size_t o = 0; o < l.out(); ++o) {
    for (std::size_t i = 0; i < l.in(); ++i) y[o] += x[i] * w[i * l.out() + o];
    if (l.bias_id()) y[o] += store.value(*l.bias_id())[o];
  }
  return y;
}

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct State {
  Vec h, c;
};

// Direct recursive child-sum evaluation.
State recursive_eval(const ParamStore& store, const TreeLstm& cell,
                     const ParseTree& tree, const Tensor& leaves,
                     std::size_t node) {
  const std::size_t H = cell.hidden(), in = cell.input_proj().in();
  Vec x(in, 0.0);
  if (tree.word[node] >= 0) {
    for (std::size_t f = 0; f < in; ++f) x[f] = leaves[tree.word[node] * in + f];
  }
  Vec pre = apply(store, cell.input_proj(), x);
  std::vector<State> kids;
  Vec hsum(H, 0.0);
  const auto kids_of = tree.children();
  for (std::size_t c : kids_of[node]) {
    kids.push_back(recursive_eval(store, cell, tree, leaves, c));
    for (std::size_t f = 0; f < H; ++f) hsum[f] += kids.back().h[f];
  }
  Vec u = apply(store, cell.iou_proj(), hsum);
  State s{Vec(H), Vec(H)};
  for (std::size_t f = 0; f < H; ++f) {
    s.c[f] = sig(pre[f] + u[f]) * std::tanh(pre[2 * H + f] + u[2 * H + f]);
  }
  for (const State& k : kids) {
    Vec uf = apply(store, cell.forget_proj(), k.h);
    for (std::size_t f = 0; f < H; ++f) {
      s.c[f] += sig(pre[3 * H + f] + uf[f]) * k.c[f];
    }
  }
  for (std::size_t f = 0; f < H; ++f) {
    s.h[f] = sig(pre[H + f] + u[H + f]) * std::tanh(s.c[f]);
  }
  return s;
}

}  // namespace

TEST_CASE("malformed trees are rejected") {
  CHECK_THROWS_AS(make_tree({-1, -1}, {0, 1}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(make_tree({1, 2, 1, -1}, {0, -1, -1, -1}).validate(),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_tree({2, 2, -1}, {0, 0, -1}).validate(),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_tree({2, 2, -1}, {0, 1, 0}).validate(),
                  std::invalid_argument);
  CHECK_NOTHROW(make_tree({2, 2, -1}, {1, 0, -1}).validate());
}

TEST_CASE("single zero leaf with zero biases stays at zero") {
  Rng rng(1);
  ParamStore store;
  TreeLstm cell(store, "tree", 3, 4, rng);
  store.set(*cell.input_proj().bias_id(), Tensor::zeros({16}));
  Rng run(0);
  Context ctx(store, nullptr, run, false);
  TreeEncoding enc = cell(ctx, make_tree({-1}, {0}), Tensor::zeros({1, 3}));
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(enc.hidden[i] == 0.0);
    CHECK(enc.cell[i] == 0.0);
  }
}

TEST_CASE("tree encoder matches a recursive evaluator") {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    ParamStore store;
    TreeLstm cell(store, "tree", 3, 4, rng);
    // Five nodes: root 4 over (3, 2); 3 over leaves 0 and 1.
    ParseTree tree = trial == 0 ? make_tree({3, 3, 4, 4, -1}, {0, 1, 2, -1, -1})
                                : random_tree(2 + trial, rng);
    Tensor leaves = random_tensor({tree.num_words(), 3}, rng);
    Rng run(0);
    Context ctx(store, nullptr, run, false);
    TreeEncoding enc = cell(ctx, tree, leaves);
    for (std::size_t node = 0; node < tree.size(); ++node) {
      State want = recursive_eval(store, cell, tree, leaves, node);
      for (std::size_t f = 0; f < 4; ++f) {
        CHECK(enc.hidden[node * 4 + f] == doctest::Approx(want.h[f]).epsilon(1e-12));
        CHECK(enc.cell[node * 4 + f] == doctest::Approx(want.c[f]).epsilon(1e-12));
      }
    }
    State root = recursive_eval(store, cell, tree, leaves, tree.root());
    CHECK(enc.root[0] == doctest::Approx(root.h[0]).epsilon(1e-12));
  }
}

TEST_CASE("child order does not change the parent") {
  Rng rng(3);
  ParamStore store;
  TreeLstm cell(store, "tree", 3, 4, rng);
  Tensor leaves = random_tensor({3, 3}, rng);
  // Same constituents, children listed in opposite node order.
  ParseTree a = make_tree({3, 3, 4, 4, -1}, {0, 1, 2, -1, -1});
  ParseTree b = make_tree({4, 0, 0, 4, -1}, {-1, 1, 0, 2, -1});
  Rng run(0);
  Context ctx(store, nullptr, run, false);
  Tensor ra = cell(ctx, a, leaves).root, rb = cell(ctx, b, leaves).root;
  for (std::size_t f = 0; f < 4; ++f) {
    CHECK(ra[f] == doctest::Approx(rb[f]).epsilon(1e-14));
  }
}

TEST_CASE("a path tree reduces to a chain recurrence") {
  Rng rng(4);
  ParamStore store;
  TreeLstm cell(store, "tree", 2, 3, rng);
  // Leaf 0 under 1 under 2 under 3 (root).
  ParseTree tree = make_tree({1, 2, 3, -1}, {0, -1, -1, -1});
  Tensor leaf = random_tensor({1, 2}, rng);
  Rng run(0);
  Context ctx(store, nullptr, run, false);
  TreeEncoding enc = cell(ctx, tree, leaf);

  const Vec bias(store.value(*cell.input_proj().bias_id()).data().begin(),
                 store.value(*cell.input_proj().bias_id()).data().end());
  Vec pre = apply(store, cell.input_proj(), {leaf[0], leaf[1]});
  Vec h(3), c(3);
  for (std::size_t f = 0; f < 3; ++f) {
    c[f] = sig(pre[f]) * std::tanh(pre[6 + f]);
    h[f] = sig(pre[3 + f]) * std::tanh(c[f]);
  }
  for (int step = 0; step < 3; ++step) {
    Vec u = apply(store, cell.iou_proj(), h), uf = apply(store, cell.forget_proj(), h);
    Vec nc(3), nh(3);
    for (std::size_t f = 0; f < 3; ++f) {
      nc[f] = sig(bias[f] + u[f]) * std::tanh(bias[6 + f] + u[6 + f]) +
              sig(bias[9 + f] + uf[f]) * c[f];
      nh[f] = sig(bias[3 + f] + u[3 + f]) * std::tanh(nc[f]);
    }
    h = nh;
    c = nc;
  }
  for (std::size_t f = 0; f < 3; ++f) {
    CHECK(enc.root[f] == doctest::Approx(h[f]).epsilon(1e-12));
  }
}

TEST_CASE("tree encoder passes the gradient check on random trees") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    ParamStore store;
    TreeLstm cell(store, "tree", 3, 3, rng);
    ParseTree tree = random_tree(2 + seed % 4, rng);
    Tensor leaves = random_tensor({tree.num_words(), 3}, rng);
    Tensor probe = random_tensor({tree.size(), 3}, rng);
    auto loss = [&](Context& ctx) {
      return sum_all(mul(cell(ctx, tree, leaves).hidden, probe));
    };
    CHECK(grad_check_params(store, loss, seed) < 1e-4);
    CHECK(grad_check(
              [&](const Tensor& x) {
                Rng r(0);
                Context ctx(store, nullptr, r, false);
                return sum_all(mul(cell(ctx, tree, x).hidden, probe));
              },
              leaves) < 1e-4);
  }
}

TEST_CASE("prior pooling") {
  PooledPrior two = pool_priors({{0.4, 0.0}, {0.6, 0.2}});
  CHECK(two.mean[0] == doctest::Approx(0.5));
  CHECK(two.normalized[0] == doctest::Approx(0.5 / 0.6));
  PooledPrior one = pool_priors({{0.2, 0.3, 0.5}});
  CHECK(one.mean == Vec{0.2, 0.3, 0.5});
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Vec> scores(1 + rng.below(4), Vec(6));
    for (auto& row : scores) {
      for (auto& v : row) v = rng.uniform();
    }
    double s = 0.0;
    for (double v : pool_priors(scores).normalized) s += v;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(pool_priors({}), std::invalid_argument);
  CHECK_THROWS_AS(pool_priors({{1.5}}), std::invalid_argument);
}

TEST_CASE("entity-to-word mapping") {
  Rng rng(6);
  ParamStore store;
  EntityToWord map(store, "e2w", 4, rng);
  Rng run(0);
  Context ctx(store, nullptr, run, false);
  Tensor words = random_tensor({5, 4}, rng), ents = random_tensor({2, 4}, rng);
  Tensor vis = random_tensor({4}, rng);
  Tensor alpha = Tensor::vector({0.3, 0.7});

  Tensor single = map(ctx, alpha, ents, words, vis, {{1}, {3}});
  CHECK(single[1] == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(single[3] == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(single[0] == 0.0);

  store.set(map.score().weight_id(), Tensor::zeros({4, 1}));
  Tensor split = map(ctx, alpha, ents, words, vis, {{0, 1}, {2, 3, 4}});
  CHECK(split[0] == doctest::Approx(0.15));
  CHECK(split[4] == doctest::Approx(0.7 / 3.0));

  CHECK_THROWS_AS(map(ctx, alpha, ents, words, vis, {{0}, {}}), std::invalid_argument);
}

TEST_CASE("entity-to-word conserves mass on random trees") {
  Rng rng(7);
  ParamStore store;
  EntityToWord map(store, "e2w", 3, rng);
  Rng run(0);
  Context ctx(store, nullptr, run, false);
  for (int trial = 0; trial < 50; ++trial) {
    ParseTree tree = random_tree(3 + rng.below(6), rng);
    std::vector<std::vector<std::size_t>> spans;
    for (std::size_t n = 0; n < tree.size(); ++n) {
      if (rng.below(2) == 0 || n + 1 == tree.size()) spans.push_back(tree.span(n));
    }
    const std::size_t T = spans.size(), S = tree.num_words();
    Tensor alpha = softmax_lastdim(random_tensor({T}, rng, 3.0));
    Tensor gamma = map(ctx, alpha, random_tensor({T, 3}, rng),
                       random_tensor({S, 3}, rng), random_tensor({3}, rng), spans);
    double s = 0.0;
    for (std::size_t i = 0; i < S; ++i) {
      CHECK(gamma[i] >= 0.0);
      s += gamma[i];
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("KL attention loss examples") {
  Tensor p = Tensor::vector({0.2, 0.5, 0.3});
  CHECK(std::abs(kl_attention_loss(p, {0.2, 0.5, 0.3}).item()) < 1e-12);
  CHECK(kl_attention_loss(Tensor::vector({0.5, 0.5}), {1.0, 0.0}).item() ==
        doctest::Approx(std::log(2.0)).epsilon(1e-6));
  CHECK_THROWS_AS(kl_attention_loss(Tensor::vector({-0.1, 1.1}), {0.5, 0.5}),
                  std::invalid_argument);
  CHECK_THROWS_AS(kl_attention_loss(p, {0.5, 0.5, -0.1}), std::invalid_argument);
  Rng rng(8);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.below(7);
    Tensor q = softmax_lastdim(random_tensor({n}, rng, 4.0));
    Vec prior(n);
    double s = 0.0;
    for (auto& v : prior) s += v = rng.below(3) == 0 ? 0.0 : rng.uniform();
    if (s == 0.0) prior[0] = s = 1.0;
    for (auto& v : prior) v /= s;
    CHECK(kl_attention_loss(q, prior).item() >= -1e-12);
  }
}

TEST_CASE("batched KL averages the rows") {
  Tensor q = Tensor::matrix(2, 2, {0.5, 0.5, 0.25, 0.75});
  Vec prior = {0.25, 0.75};
  double a = kl_attention_loss(Tensor::vector({0.5, 0.5}), prior).item();
  double b = kl_attention_loss(Tensor::vector({0.25, 0.75}), prior).item();
  CHECK(kl_attention_loss(q, prior).item() == doctest::Approx((a + b) / 2));
}

TEST_CASE("both KL losses pass the gradient check") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    ParamStore store;
    EntityToWord map(store, "e2w", 3, rng);
    Linear region(store, "region", 3, 1, rng);
    ParseTree tree = random_tree(4, rng);
    std::vector<std::vector<std::size_t>> spans = {tree.span(tree.root()),
                                                   tree.span(0), tree.span(2)};
    Tensor words = random_tensor({4, 3}, rng), ents = random_tensor({3, 3}, rng);
    Tensor vis = random_tensor({3}, rng), regions = random_tensor({2, 5, 3}, rng);
    Tensor alpha_logits = random_tensor({3}, rng);
    Vec word_prior = {0.1, 0.4, 0.0, 0.5}, region_prior = {0.9, 0.05, 0.05, 0.0, 0.0};
    auto ling = [&](Context& ctx) {
      Tensor alpha = softmax_lastdim(mul(alpha_logits, alpha_logits));
      return kl_attention_loss(map(ctx, alpha, ents, words, vis, spans), word_prior);
    };
    auto visual = [&](Context& ctx) {
      Tensor beta = softmax_lastdim(reshape(region(ctx, regions), {2, 5}));
      return kl_attention_loss(beta, region_prior);
    };
    CHECK(grad_check_params(store, ling, seed) < 1e-4);
    CHECK(grad_check_params(store, visual, seed) < 1e-4);
  }
}

TEST_CASE("combined loss") {
  Tensor vqa = Tensor::scalar(1.25), l = Tensor::scalar(0.5), v = Tensor::scalar(2.0);
  CHECK(combined_loss(vqa, l, v, 0.0, 0.0).item() == 1.25);
  CHECK(combined_loss(vqa, l, v, 1.0, 1.0).item() == doctest::Approx(3.75));
  CHECK(combined_loss(vqa, Tensor(), Tensor(), 1.0, 1.0).item() == 1.25);
  CHECK_THROWS_AS(combined_loss(vqa, l, v, -1.0, 0.0), std::invalid_argument);
}

TEST_CASE("combined gradient is the weighted sum of component gradients") {
  Rng rng(9);
  Tensor point = random_tensor({5}, rng);
  const Vec prior = {0.1, 0.2, 0.3, 0.4, 0.0};
  auto parts = [&](const Tensor& x) {
    Tensor vqa = sum_all(mul(x, x));
    Tensor ling = kl_attention_loss(softmax_lastdim(x), prior);
    Tensor vis = kl_attention_loss(softmax_lastdim(scale(x, 2.0)), prior);
    return std::vector<Tensor>{vqa, ling, vis};
  };
  auto grad = [&](int which) {
    Tape tape;
    Tensor x = tape.watch(point);
    auto p = parts(x);
    Tensor loss = which == 3 ? combined_loss(p[0], p[1], p[2], 0.5, 2.0) : p[which];
    return tape.backward(loss).of(x);
  };
  Tensor g = grad(3), g0 = grad(0), g1 = grad(1), g2 = grad(2);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(g[i] == doctest::Approx(g0[i] + 0.5 * g1[i] + 2.0 * g2[i]).epsilon(1e-12));
  }
}

TEST_CASE("a larger visual weight pulls attention toward the prior") {
  // Toy attention model: beta = softmax over regions of a linear score,
  // answer read from the attended feature.
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    double kl_at[2];
    for (int use = 0; use < 2; ++use) {
      Rng rng(seed);
      ParamStore store;
      Linear score(store, "score", 4, 1, rng), classify(store, "cls", 4, 3, rng);
      Rng data(seed + 100);
      Tensor regions = random_tensor({16, 5, 4}, data);
      std::vector<std::size_t> labels;
      for (int b = 0; b < 16; ++b) labels.push_back(data.below(3));
      const Vec prior = {0.05, 0.05, 0.8, 0.05, 0.05};
      Adam opt(store, {.lr = 1e-2});
      auto forward = [&](Context& ctx) {
        Tensor beta = softmax_lastdim(reshape(score(ctx, regions), {16, 5}));
        Tensor pooled = reshape(bmatmul(reshape(beta, {16, 1, 5}), regions), {16, 4});
        return std::pair{beta, cross_entropy(classify(ctx, pooled), labels)};
      };
      for (int step = 0; step < 200; ++step) {
        Tape tape;
        Rng r(0);
        Context ctx(store, &tape, r, true);
        auto [beta, vqa] = forward(ctx);
        Tensor loss = combined_loss(vqa, Tensor(), kl_attention_loss(beta, prior),
                                    0.0, use ? 1.0 : 0.0);
        opt.step(ctx.param_grads(tape.backward(loss)));
        for (std::size_t i = 0; i < beta.size(); ++i) REQUIRE(beta[i] >= 0.0);
      }
      Rng r(0);
      Context ctx(store, nullptr, r, false);
      kl_at[use] = kl_attention_loss(forward(ctx).first, prior).item();
    }
    CHECK(kl_at[1] < kl_at[0]);
  }
}
