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

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "relnet/gradcheck.h"
#include "relnet/lognet.h"
#include "relnet/ops.h"

using namespace relnet;

namespace {

Tensor random_tensor(const Shape& shape, Rng& rng, double scale = 1.0) {
  std::vector<double> data(num_elements(shape));
  for (auto& v : data) v = rng.uniform(-scale, scale);
  return Tensor(shape, std::move(data));
}

void zero_linear(ParamStore& store, const Linear& l) {
  store.set(l.weight_id(), Tensor::zeros(store.value(l.weight_id()).shape()));
  if (l.bias_id()) {
    store.set(*l.bias_id(), Tensor::zeros(store.value(*l.bias_id()).shape()));
  }
}

double at(const Tensor& t, std::initializer_list<std::size_t> idx) {
  std::size_t flat = 0, k = 0;
  for (std::size_t i : idx) flat = flat * t.dim(k++) + i;
  return t[flat];
}

// y = x W + b on plain vectors, with the weights read from the store.
std::vector<double> apply(const ParamStore& store, const Linear& l,
                          const std::vector<double>& x) {
  const Tensor& w = store.value(l.weight_id());
  std::vector<double> y(l.out(), 0.0);
  for (std::size_t o = 0; o < l.out(); ++o) {
    for (std::size_t i = 0; i < l.in(); ++i) y[o] += x[i] * w[i * l.out() + o];
    if (l.bias_id()) y[o] += store.value(*l.bias_id())[o];
  }
  return y;
}

std::vector<double> softmax(const std::vector<double>& x) {
  double m = x[0];
  for (double v : x) m = std::max(m, v);
  std::vector<double> e(x.size());
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += e[i] = std::exp(x[i] - m);
  for (auto& v : e) v /= s;
  return e;
}

LognetConfig small_config(std::size_t d = 8, std::size_t steps = 2) {
  LognetConfig cfg;
  cfg.d = d;
  cfg.steps = steps;
  cfg.heads = 2;
  cfg.gcn_layers = 2;
  cfg.appearance_dim = 5;
  return cfg;
}

}  // namespace

TEST_CASE("adjacency is symmetric, PSD and of rank at most r") {
  Rng rng(11);
  for (std::size_t trial = 0; trial < 20; ++trial) {
    ParamStore store;
    LognetConfig cfg = small_config(8 + trial % 3 * 8);
    const std::size_t n = 3 + trial % 6, b = 2, d = cfg.d;
    LogUnit unit(store, "log", cfg, rng);
    Rng run(trial);
    Context ctx(store, nullptr, run, false);
    Graph g = unit.build_adjacency(ctx, 0, random_tensor({b, n, d}, rng, 2.0),
                                   random_tensor({b, 2, d}, rng));
    REQUIRE(g.node_desc.shape() == Shape{b, unit.rank(), n});
    REQUIRE(g.adjacency.shape() == Shape{b, n, n});
    for (std::size_t e = 0; e < b; ++e) {
      for (std::size_t r = 0; r < unit.rank(); ++r) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += at(g.node_desc, {e, r, i});
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
      }
      Eigen::MatrixXd a(n, n);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) a(i, j) = at(g.adjacency, {e, i, j});
      }
      CHECK((a - a.transpose()).cwiseAbs().maxCoeff() < 1e-12);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
      CHECK(eig.eigenvalues().minCoeff() > -1e-10);
      std::size_t positive = 0;
      for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
        if (eig.eigenvalues()(i) > 1e-10) ++positive;
      }
      CHECK(positive <= unit.rank());
    }
  }
}

TEST_CASE("controller matches a plain-loop evaluation") {
  Rng rng(5);
  ParamStore store;
  LognetConfig cfg = small_config(6);
  LogUnit unit(store, "log", cfg, rng);
  store.set(unit.step_params(1).gamma_logits, Tensor::vector({0.3, -0.4}));
  const std::size_t S = 4, d = cfg.d, K = cfg.heads;
  Tensor words = random_tensor({1, S, d}, rng);
  Tensor q = random_tensor({1, d}, rng);
  Tensor prev = random_tensor({1, K, d}, rng);
  Rng run(0);
  Context ctx(store, nullptr, run, false);
  ControllerResult res = unit.controller_step(ctx, 1, words, q, prev);

  const LogStepParams& s = unit.step_params(1);
  std::vector<double> gamma = softmax({0.3, -0.4});
  std::vector<double> qv(q.data().begin(), q.data().begin() + d);
  std::vector<double> mix(d, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t f = 0; f < d; ++f) mix[f] += gamma[k] * at(prev, {0, k, f});
  }
  std::vector<double> in = apply(store, s.query, qv);
  in.insert(in.end(), mix.begin(), mix.end());
  std::vector<double> qp = apply(store, s.query_mix, in);
  std::vector<std::vector<double>> logits(K, std::vector<double>(S));
  for (std::size_t w = 0; w < S; ++w) {
    std::vector<double> x(d);
    for (std::size_t f = 0; f < d; ++f) x[f] = at(words, {0, w, f}) * qp[f];
    std::vector<double> sc = apply(store, s.head_scores, x);
    for (std::size_t k = 0; k < K; ++k) logits[k][w] = sc[k];
  }
  for (std::size_t k = 0; k < K; ++k) {
    CHECK(res.gamma[k] == doctest::Approx(gamma[k]).epsilon(1e-12));
    std::vector<double> alpha = softmax(logits[k]);
    for (std::size_t w = 0; w < S; ++w) {
      CHECK(at(res.alpha, {0, k, w}) == doctest::Approx(alpha[w]).epsilon(1e-10));
    }
    for (std::size_t f = 0; f < d; ++f) {
      double c = 0.0;
      for (std::size_t w = 0; w < S; ++w) c += alpha[w] * at(words, {0, w, f});
      CHECK(at(res.controls, {0, k, f}) == doctest::Approx(c).epsilon(1e-10));
    }
  }
}

TEST_CASE("binding with a closed gate attaches no words") {
  Rng rng(8);
  ParamStore store;
  LognetConfig cfg = small_config();
  LogUnit unit(store, "log", cfg, rng);
  zero_linear(store, unit.gate_out());
  store.set(*unit.gate_out().bias_id(), Tensor::vector({-1000.0}));
  const std::size_t n = 4, S = 3, d = cfg.d;
  Rng run(0);
  Context ctx(store, nullptr, run, false);
  Tensor v = random_tensor({2, n, d}, rng);
  Tensor vt = random_tensor({2, n, d}, rng);
  Binding b = unit.language_binding(ctx, 0, vt, v, random_tensor({2, S, d}, rng),
                                    random_tensor({2, d}, rng));
  for (std::size_t i = 0; i < b.beta.size(); ++i) CHECK(b.beta[i] == 0.0);
  for (std::size_t e = 0; e < 2; ++e) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t f = 0; f < d; ++f) {
        CHECK(at(b.x, {e, i, f}) == at(vt, {e, i, f}));
        CHECK(at(b.x, {e, i, d + f}) == 0.0);
      }
    }
  }
}

TEST_CASE("binding to a single word returns its gate") {
  Rng rng(9);
  ParamStore store;
  LogUnit unit(store, "log", small_config(), rng);
  const std::size_t d = 8;
  Rng run(0);
  Context ctx(store, nullptr, run, false);
  Tensor words = random_tensor({1, 1, d}, rng);
  Binding b = unit.language_binding(ctx, 0, random_tensor({1, 3, d}, rng),
                                    random_tensor({1, 3, d}, rng), words,
                                    random_tensor({1, d}, rng));
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(at(b.beta, {0, i, 0}) == doctest::Approx(b.gate[0]).epsilon(1e-14));
    for (std::size_t f = 0; f < d; ++f) {
      CHECK(at(b.x, {0, i, d + f}) ==
            doctest::Approx(b.gate[0] * words[f]).epsilon(1e-12));
    }
  }
}

TEST_CASE("permuting words permutes binding weights") {
  Rng rng(10);
  ParamStore store;
  LogUnit unit(store, "log", small_config(), rng);
  const std::size_t n = 3, S = 4, d = 8;
  const std::vector<std::size_t> perm = {2, 0, 3, 1};
  Tensor words = random_tensor({1, S, d}, rng);
  std::vector<double> permuted(S * d);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t f = 0; f < d; ++f) permuted[s * d + f] = words[perm[s] * d + f];
  }
  Tensor pw({1, S, d}, permuted);
  Tensor v = random_tensor({1, n, d}, rng), m = random_tensor({1, d}, rng);
  Rng run(0);
  Context ctx(store, nullptr, run, false);
  Binding a = unit.language_binding(ctx, 0, v, v, words, m);
  Binding b = unit.language_binding(ctx, 0, v, v, pw, m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t s = 0; s < S; ++s) {
      CHECK(at(b.beta, {0, i, s}) ==
            doctest::Approx(at(a.beta, {0, i, perm[s]})).epsilon(1e-12));
    }
    for (std::size_t f = 0; f < 2 * d; ++f) {
      CHECK(at(b.x, {0, i, f}) == doctest::Approx(at(a.x, {0, i, f})).epsilon(1e-12));
    }
  }
}

TEST_CASE("refinement with zero weights applies ELU per layer") {
  Rng rng(12);
  ParamStore store;
  LognetConfig cfg = small_config();
  cfg.gcn_layers = 3;
  LogUnit unit(store, "log", cfg, rng);
  for (GcnLayer& l : unit.gcn()) {
    zero_linear(store, l.w1);
    zero_linear(store, l.w2);
  }
  Tensor x = random_tensor({2, 4, 16}, rng, 3.0);
  Rng run(0);
  Context ctx(store, nullptr, run, false);
  Tensor r = unit.refine_gcn(ctx, x, random_tensor({2, 4, 4}, rng));
  for (std::size_t i = 0; i < x.size(); ++i) {
    double want = x[i];
    for (int h = 0; h < 3; ++h) want = want > 0 ? want : std::expm1(want);
    CHECK(r[i] == doctest::Approx(want).epsilon(1e-14));
  }
}

TEST_CASE("refinement with an empty graph follows the bias path") {
  Rng rng(13);
  ParamStore store;
  LognetConfig cfg = small_config(4);
  cfg.gcn_layers = 1;
  LogUnit unit(store, "log", cfg, rng);
  const GcnLayer& l = unit.gcn()[0];
  Tensor x = random_tensor({1, 3, 8}, rng);
  Rng run(0);
  Context ctx(store, nullptr, run, false);
  Tensor r = unit.refine_gcn(ctx, x, Tensor::zeros({1, 3, 3}));
  std::vector<double> hidden = apply(store, l.w1, std::vector<double>(8, 0.0));
  for (auto& h : hidden) h = h > 0 ? h : std::expm1(h);
  std::vector<double> push = apply(store, l.w2, hidden);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t f = 0; f < 8; ++f) {
      double s = x[i * 8 + f] + push[f];
      double want = s > 0 ? s : std::expm1(s);
      CHECK(r[i * 8 + f] == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("sixteen refinement layers stay finite") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    ParamStore store;
    LognetConfig cfg = small_config(8);
    cfg.gcn_layers = 16;
    LogUnit unit(store, "log", cfg, rng);
    Rng run(seed);
    Context ctx(store, nullptr, run, false);
    Graph g = unit.build_adjacency(ctx, 0, random_tensor({2, 6, 8}, rng),
                                   random_tensor({2, 2, 8}, rng));
    Tensor r = unit.refine_gcn(ctx, random_tensor({2, 6, 16}, rng), g.adjacency);
    for (std::size_t i = 0; i < r.size(); ++i) REQUIRE(std::abs(r[i]) < 1e6);
  }
}

TEST_CASE("diverging refinement names the failing layer") {
  Rng rng(14);
  ParamStore store;
  LognetConfig cfg = small_config(4);
  cfg.gcn_layers = 3;
  LogUnit unit(store, "log", cfg, rng);
  for (GcnLayer& l : unit.gcn()) {
    store.set(l.w1.weight_id(), Tensor::full({8, 4}, 1e200));
    store.set(l.w2.weight_id(), Tensor::full({4, 8}, 1e200));
  }
  Rng run(0);
  Context ctx(store, nullptr, run, false);
  Tensor x = Tensor::full({1, 2, 8}, 1.0);
  Tensor a = Tensor::full({1, 2, 2}, 0.5);
  std::string message;
  try {
    unit.refine_gcn(ctx, x, a);
  } catch (const NumericDomainError& e) {
    message = e.what();
  }
  CHECK(message.find("layer 1") != std::string::npos);
}

TEST_CASE("readout attention is a distribution and updates memory") {
  Rng rng(15);
  ParamStore store;
  LognetConfig cfg = small_config(4);
  LogUnit unit(store, "log", cfg, rng);
  const LogStepParams& s = unit.step_params(0);
  Tensor refined = random_tensor({1, 5, 8}, rng);
  Tensor memory = random_tensor({1, 4}, rng);
  Rng run(0);
  Context ctx(store, nullptr, run, false);
  ReadoutUpdate ru = unit.readout_update(ctx, 0, refined, memory);
  std::vector<double> scores;
  for (std::size_t i = 0; i < 5; ++i) {
    std::vector<double> r(refined.data().begin() + i * 8, refined.data().begin() + i * 8 + 8);
    scores.push_back(apply(store, s.node_score, r)[0]);
  }
  std::vector<double> delta = softmax(scores);
  std::vector<double> pooled(8, 0.0);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(ru.delta[i] == doctest::Approx(delta[i]).epsilon(1e-12));
    for (std::size_t f = 0; f < 8; ++f) pooled[f] += delta[i] * refined[i * 8 + f];
  }
  std::vector<double> in(memory.data().begin(), memory.data().begin() + 4);
  in.insert(in.end(), pooled.begin(), pooled.end());
  std::vector<double> next = apply(store, s.memory, in);
  for (std::size_t f = 0; f < 4; ++f) {
    CHECK(ru.memory[f] == doctest::Approx(next[f]).epsilon(1e-12));
  }
}

TEST_CASE("one step equals the composition of its parts") {
  Rng rng(16);
  ParamStore store;
  LognetConfig cfg = small_config(8, 1);
  LogUnit unit(store, "log", cfg, rng);
  Tensor v = random_tensor({2, 4, 8}, rng), words = random_tensor({2, 5, 8}, rng),
         q = random_tensor({2, 8}, rng);
  Rng run(0);
  Context ctx(store, nullptr, run, false);
  LognetOutput out = unit(ctx, v, words, q);
  Tensor m = unit.initial_memory(ctx, 2);
  ControllerResult c =
      unit.controller_step(ctx, 0, words, q, unit.initial_controls(ctx, q));
  Graph g = unit.build_adjacency(ctx, 0, v, c.controls);
  Binding b = unit.language_binding(ctx, 0, unit.augment_nodes(ctx, 0, v, m), v,
                                    words, m);
  ReadoutUpdate ru =
      unit.readout_update(ctx, 0, unit.refine_gcn(ctx, b.x, g.adjacency), m);
  for (std::size_t i = 0; i < ru.memory.size(); ++i) {
    CHECK(out.memory[i] == ru.memory[i]);
  }
  for (std::size_t i = 0; i < ru.delta.size(); ++i) {
    CHECK(out.visual[i] == ru.delta[i]);
  }
}

TEST_CASE("object order does not change the answer") {
  Rng rng(17);
  ParamStore store;
  LognetConfig cfg = small_config(8, 3);
  LogUnit unit(store, "log", cfg, rng);
  const std::size_t n = 5;
  const std::vector<std::size_t> perm = {3, 1, 4, 0, 2};
  Tensor app = random_tensor({1, n, 5}, rng), box = random_tensor({1, n, 7}, rng);
  std::vector<double> pa(app.size()), pb(box.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < 5; ++f) pa[i * 5 + f] = app[perm[i] * 5 + f];
    for (std::size_t f = 0; f < 7; ++f) pb[i * 7 + f] = box[perm[i] * 7 + f];
  }
  Tensor words = random_tensor({1, 4, 8}, rng), q = random_tensor({1, 8}, rng);
  Rng run(0);
  Context ctx(store, nullptr, run, false);
  LognetOutput a = unit(ctx, unit.fuse(ctx, app, box), words, q);
  LognetOutput b =
      unit(ctx, unit.fuse(ctx, Tensor({1, n, 5}, pa), Tensor({1, n, 7}, pb)),
           words, q);
  for (std::size_t i = 0; i < a.y.size(); ++i) {
    CHECK(b.y[i] == doctest::Approx(a.y[i]).epsilon(1e-9));
  }
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(b.visual[i] == doctest::Approx(a.visual[perm[i]]).epsilon(1e-9));
  }
}

TEST_CASE("step graphs differ and attention traces are distributions") {
  Rng rng(18);
  ParamStore store;
  LognetConfig cfg = small_config(8, 3);
  LogUnit unit(store, "log", cfg, rng);
  Rng run(0);
  Context ctx(store, nullptr, run, false);
  LognetOutput out = unit(ctx, random_tensor({1, 4, 8}, rng),
                          random_tensor({1, 6, 8}, rng), random_tensor({1, 8}, rng));
  REQUIRE(out.trace.adjacency.size() == 3);
  double diff = 0.0;
  for (std::size_t i = 0; i < 16; ++i) {
    diff = std::max(diff, std::abs(out.trace.adjacency[0][i] -
                                   out.trace.adjacency[1][i]));
  }
  CHECK(diff > 1e-6);
  double sv = 0.0, sl = 0.0;
  for (std::size_t i = 0; i < 4; ++i) sv += out.visual[i];
  for (std::size_t i = 0; i < 6; ++i) sl += out.linguistic[i];
  CHECK(sv == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sl == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("full unit passes the gradient check") {
  Rng rng(19);
  ParamStore store;
  LognetConfig cfg = small_config(6, 2);
  cfg.appearance_dim = 3;
  LogUnit unit(store, "log", cfg, rng);
  Tensor app = random_tensor({2, 4, 3}, rng), box = random_tensor({2, 4, 7}, rng);
  Tensor words = random_tensor({2, 3, 6}, rng), q = random_tensor({2, 6}, rng);
  Tensor target = random_tensor({2, 6}, rng);
  auto loss = [&](Context& ctx) {
    LognetOutput o = unit(ctx, unit.fuse(ctx, app, box), words, q);
    return sum_all(mul(tanh(o.y), target));
  };
  CHECK(grad_check_params(store, loss, 1) < 1e-4);
}

TEST_CASE("augmenting with d = 1 hand weights") {
  Rng rng(20);
  ParamStore store;
  LognetConfig cfg = small_config(1, 1);
  LogUnit unit(store, "log", cfg, rng);
  const Linear& a = unit.step_params(0).augment;
  store.set(a.weight_id(), Tensor::matrix(2, 1, {2.0, -3.0}));
  store.set(*a.bias_id(), Tensor::vector({0.5}));
  Rng run(0);
  Context ctx(store, nullptr, run, false);
  // 2 * 1.5 - 3 * (1.5 * 4) + 0.5
  Tensor out = unit.augment_nodes(ctx, 0, Tensor({1, 1, 1}, {1.5}),
                                  Tensor({1, 1}, {4.0}));
  CHECK(out.item() == doctest::Approx(-14.5));
  Tensor zero = unit.augment_nodes(ctx, 0, Tensor({1, 1, 1}, {0.0}),
                                   Tensor({1, 1}, {4.0}));
  CHECK(zero.item() == doctest::Approx(0.5));
}

TEST_CASE("controller over one word or identical words returns that word") {
  Rng rng(21);
  ParamStore store;
  LogUnit unit(store, "log", small_config(4), rng);
  Rng run(0);
  Context ctx(store, nullptr, run, false);
  Tensor q = random_tensor({1, 4}, rng), prev = random_tensor({1, 2, 4}, rng);
  Tensor one = random_tensor({1, 1, 4}, rng);
  ControllerResult r1 = unit.controller_step(ctx, 0, one, q, prev);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(at(r1.alpha, {0, k, 0}) == 1.0);
    for (std::size_t f = 0; f < 4; ++f) {
      CHECK(at(r1.controls, {0, k, f}) == doctest::Approx(one[f]).epsilon(1e-14));
    }
  }
  std::vector<double> same;
  for (int s = 0; s < 3; ++s) same.insert(same.end(), one.data().begin(), one.data().end());
  ControllerResult r3 = unit.controller_step(ctx, 0, Tensor({1, 3, 4}, same), q, prev);
  for (std::size_t k = 0; k < 2; ++k) {
    for (std::size_t f = 0; f < 4; ++f) {
      CHECK(at(r3.controls, {0, k, f}) == doctest::Approx(one[f]).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(unit.controller_step(ctx, 0, Tensor::zeros({1, 0, 4}), q, prev),
                  ShapeError);
}

TEST_CASE("two heads with handcrafted projections attend to different words") {
  Rng rng(22);
  ParamStore store;
  LogUnit unit(store, "log", small_config(2, 1), rng);
  LogStepParams& s = unit.step_params(0);
  // q' = [1, 1]; head 0 scores the first coordinate, head 1 the second.
  zero_linear(store, s.query);
  zero_linear(store, s.query_mix);
  store.set(*s.query_mix.bias_id(), Tensor::vector({1.0, 1.0}));
  zero_linear(store, s.head_scores);
  store.set(s.head_scores.weight_id(), Tensor::matrix(2, 2, {4.0, 0.0, 0.0, 4.0}));
  Rng run(0);
  Context ctx(store, nullptr, run, false);
  Tensor words({1, 2, 2}, {1.0, 0.0, 0.0, 1.0});
  ControllerResult r = unit.controller_step(ctx, 0, words, Tensor::zeros({1, 2}),
                                            Tensor::zeros({1, 2, 2}));
  const double hi = std::exp(4.0) / (std::exp(4.0) + 1.0);
  CHECK(at(r.alpha, {0, 0, 0}) == doctest::Approx(hi).epsilon(1e-12));
  CHECK(at(r.alpha, {0, 1, 1}) == doctest::Approx(hi).epsilon(1e-12));
  CHECK(r.gamma[0] == doctest::Approx(0.5));
}

TEST_CASE("identical node descriptions give a constant adjacency") {
  Rng rng(23);
  ParamStore store;
  LogUnit unit(store, "log", small_config(8), rng);
  std::vector<double> row(8);
  for (auto& v : row) v = rng.uniform(-1.0, 1.0);
  std::vector<double> data;
  for (int i = 0; i < 4; ++i) data.insert(data.end(), row.begin(), row.end());
  Rng run(0);
  Context ctx(store, nullptr, run, false);
  Graph g = unit.build_adjacency(ctx, 0, Tensor({1, 4, 8}, data),
                                 random_tensor({1, 2, 8}, rng));
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(g.adjacency[i] == doctest::Approx(g.adjacency[0]).epsilon(1e-14));
  }
}

TEST_CASE("readout over one node returns it") {
  Rng rng(24);
  ParamStore store;
  LogUnit unit(store, "log", small_config(4), rng);
  Rng run(0);
  Context ctx(store, nullptr, run, false);
  Tensor r = random_tensor({1, 1, 8}, rng);
  ReadoutUpdate ru = unit.readout_update(ctx, 0, r, random_tensor({1, 4}, rng));
  CHECK(ru.delta[0] == 1.0);
  for (std::size_t f = 0; f < 8; ++f) CHECK(ru.pooled[f] == r[f]);
}
