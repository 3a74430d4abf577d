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
#include "relnet/decoders.h"
#include "relnet/gradcheck.h"
#include "relnet/ops.h"

using namespace relnet;

namespace {

Tensor random_tensor(const Shape& shape, Rng& rng, double scale = 1.0) {
  std::vector<double> data(num_elements(shape));
  for (auto& v : data) v = rng.uniform(-scale, scale);
  return Tensor(shape, std::move(data));
}

}  // namespace

TEST_CASE("zero logits give the uniform answer distribution") {
  for (std::size_t a : {2u, 3u, 11u, 40u}) {
    Tensor p = answer_probabilities(Tensor::zeros({2, a}));
    double sum = 0.0;
    for (std::size_t i = 0; i < a; ++i) {
      CHECK(p[i] == doctest::Approx(1.0 / a).epsilon(1e-15));
      sum += p[i];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(open_ended_loss(Tensor::zeros({2, a}), {0, a - 1}).item() ==
          doctest::Approx(std::log(static_cast<double>(a))).epsilon(1e-12));
  }
  CHECK_THROWS_AS(answer_probabilities(Tensor::zeros({1, 1})), std::invalid_argument);
}

TEST_CASE("open-ended decoder needs two answers") {
  Rng rng(1);
  ParamStore store;
  CHECK_THROWS_AS(OpenEndedDecoder(store, "dec", 4, 4, 1, rng), std::invalid_argument);
}

TEST_CASE("probabilities sum to one and argmax ignores logit shifts") {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor logits = random_tensor({3, 7}, rng, 5.0);
    Tensor p = answer_probabilities(logits);
    for (std::size_t b = 0; b < 3; ++b) {
      double s = 0.0;
      for (std::size_t c = 0; c < 7; ++c) s += p[b * 7 + c];
      CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(argmax_rows(logits) == argmax_rows(add_scalar(logits, 123.25)));
  }
}

TEST_CASE("argmax ties go to the lowest index") {
  CHECK(argmax_rows(Tensor::matrix(2, 3, {1, 2, 2, 0, 0, 0})) ==
        std::vector<std::size_t>{1, 0});
}

TEST_CASE("hinge loss examples") {
  CHECK(hinge_loss(Tensor::matrix(1, 2, {2.0, 0.0}), std::vector<std::size_t>{0})
            .item() == 0.0);
  CHECK(hinge_loss(Tensor::matrix(1, 2, {0.3, 0.3}), std::vector<std::size_t>{0})
            .item() == doctest::Approx(1.0));
  CHECK(hinge_loss(Tensor::matrix(1, 2, {0.5, 1.0}), std::vector<std::size_t>{0})
            .item() == doctest::Approx(1.5));
  // Pairs (0,1) and (0,2): 1 + 0 - 1 = 0 and 1 + 2 - 1 = 2.
  CHECK(hinge_loss(Tensor::matrix(1, 3, {1.0, 0.0, 2.0}), std::vector<std::size_t>{0})
            .item() == doctest::Approx(2.0));
  CHECK_THROWS_AS(hinge_loss(Tensor::matrix(1, 2, {0.0, 0.0}),
                             std::vector<std::vector<bool>>{{false, false}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(hinge_loss(Tensor::matrix(1, 2, {0.0, 0.0}),
                             std::vector<std::size_t>{2}),
                  std::invalid_argument);
}

TEST_CASE("hinge loss is zero exactly when every margin holds") {
  Rng rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    Tensor s = random_tensor({1, 4}, rng, 2.0);
    std::vector<bool> marks(4);
    bool any = false;
    for (std::size_t a = 0; a < 4; ++a) any |= (marks[a] = rng.below(2) == 1);
    if (!any) marks[rng.below(4)] = true;
    bool holds = true;
    for (std::size_t p = 0; p < 4; ++p) {
      for (std::size_t n = 0; n < 4; ++n) {
        if (marks[p] && !marks[n] && s[p] < s[n] + 1.0) holds = false;
      }
    }
    CHECK((hinge_loss(s, std::vector<std::vector<bool>>{marks}).item() == 0.0) == holds);
  }
}

TEST_CASE("count rounding and clamping") {
  CHECK(round_count(3.4) == 3);
  CHECK(round_count(3.5) == 4);
  CHECK(round_count(2.5) == 3);
  CHECK(round_count(-0.7) == 0);
  CHECK(round_count(-0.4) == 0);
  CHECK(round_count(10.49) == 10);
  CHECK(round_count(12.0) == 10);
  CHECK(AnswerSpace::count().labels.size() == 11);
}

TEST_CASE("count loss is MSE on the unrounded output") {
  Tensor raw = Tensor::vector({3.4, -0.7});
  CHECK(count_loss(raw, {3.0, 1.0}).item() ==
        doctest::Approx((0.16 + 2.89) / 2.0).epsilon(1e-12));
  CHECK(count_predictions(raw) == std::vector<int>{3, 0});
}

TEST_CASE("all three decoders pass the gradient check") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    ParamStore store;
    const std::size_t B = 3, F = 5, d = 4;
    OpenEndedDecoder open(store, "open", F, d, 6, rng);
    CountDecoder count(store, "count", F, d, rng);
    MultiChoiceScorer choice(store, "choice", F, rng);
    Tensor feats = random_tensor({B, F}, rng), q = random_tensor({B, d}, rng);
    Tensor choices = random_tensor({B, 4, F}, rng, 3.0);
    auto open_loss = [&](Context& ctx) {
      return open_ended_loss(open.logits(ctx, feats, q), {1, 5, 0});
    };
    auto count_l = [&](Context& ctx) {
      return count_loss(count.raw(ctx, feats, q), {2.0, 0.0, 7.0});
    };
    auto choice_loss = [&](Context& ctx) {
      return hinge_loss(choice(ctx, choices), std::vector<std::size_t>{0, 3, 1});
    };
    CHECK(grad_check_params(store, open_loss, seed) < 1e-4);
    CHECK(grad_check_params(store, count_l, seed) < 1e-4);
    CHECK(grad_check_params(store, choice_loss, seed) < 1e-4);
  }
}
