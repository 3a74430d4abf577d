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

#include "relnet/bench.h"

#include <algorithm>
#include <chrono>
#include <sstream>

#include "relnet/ops.h"
#include "relnet/optim.h"

namespace relnet {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Tensor random_tensor(const Shape& shape, Rng& rng) {
  std::size_t n = 1;
  for (std::size_t s : shape) n *= s;
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return Tensor(shape, std::move(v));
}

}  // namespace

CostPrediction predict_costs(const StreamShape& s, std::uint64_t F) {
  if (s.frames == 0 || s.clips == 0 || s.frames_per_clip == 0 || F == 0) {
    throw std::invalid_argument("cost model: sizes must be positive");
  }
  if (s.frames != s.clips * s.frames_per_clip) {
    throw std::invalid_argument("cost model: L = " + std::to_string(s.frames) + " is not N * T = " +
                                std::to_string(s.clips) + " * " +
                                std::to_string(s.frames_per_clip));
  }
  const std::uint64_t LF = s.frames * F;
  if (!s.three_level()) return {2 * (s.frames_per_clip + s.clips) * LF, 20 * LF * F};
  if (s.group_size == 0 || s.groups * s.group_size != s.clips) {
    throw std::invalid_argument("cost model: N = " + std::to_string(s.clips) +
                                " is not N1 * N2 = " + std::to_string(s.groups) + " * " +
                                std::to_string(s.group_size));
  }
  return {2 * (s.frames_per_clip + s.group_size + s.groups) * LF, 30 * LF * F};
}

CostComparison compare_costs(std::uint64_t clips, std::uint64_t frames_per_clip,
                             std::uint64_t groups, std::uint64_t F) {
  if (groups == 0 || clips % groups != 0) {
    throw std::invalid_argument("cost model: " + std::to_string(groups) +
                                " groups do not divide " + std::to_string(clips) + " clips");
  }
  const std::uint64_t L = clips * frames_per_clip;
  CostComparison c;
  c.two_level = predict_costs({L, clips, frames_per_clip, 0, 0}, F);
  c.three_level = predict_costs({L, clips, frames_per_clip, groups, clips / groups}, F);
  auto diff = [](std::uint64_t a, std::uint64_t b) {
    return static_cast<std::int64_t>(a) - static_cast<std::int64_t>(b);
  };
  c.g_gap = diff(c.two_level.g, c.three_level.g);
  c.h_gap = diff(c.two_level.h, c.three_level.h);
  c.total_gap = diff(c.two_level.total(), c.three_level.total());
  return c;
}

CrnCost exact_stream_cost(const HcrnConfig& cfg) {
  ParamStore store;
  Rng rng(0);
  return VisualStream(store, "cost", cfg, rng).predicted_cost();
}

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of no values");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::vector<TimingRow> measure_scaling(const std::vector<ScalingCase>& cases,
                                       const ScalingOptions& opt) {
  if (opt.repetitions < 5) {
    throw std::invalid_argument("measure_scaling needs at least 5 repetitions, got " +
                                std::to_string(opt.repetitions));
  }
  const double tick = std::chrono::duration<double>(Clock::duration(1)).count();
  std::vector<TimingRow> rows;
  for (const ScalingCase& c : cases) {
    ParamStore store;
    Rng rng(opt.seed);
    VisualStream stream(store, c.label, c.stream, rng);
    const HcrnConfig& h = c.stream;
    Tensor frames = random_tensor({c.batch, h.clips, h.frames, h.d}, rng);
    Tensor motion = h.use_motion ? random_tensor({c.batch, h.clips, h.d}, rng) : Tensor();
    Tensor q = random_tensor({c.batch, h.d}, rng);
    Adam adam(store, AdamOptions{});

    auto forward = [&] {
      Context ctx(store, nullptr, rng, true);
      return stream(ctx, frames, motion, q);
    };
    auto backward = [&](bool step) {
      Tape tape;
      Context ctx(store, &tape, rng, true);
      Tensor loss = mean_all(stream(ctx, frames, motion, q));
      auto grads = ctx.param_grads(tape.backward(loss));
      if (step) adam.step(grads);
    };

    for (std::size_t i = 0; i < opt.warmup; ++i) backward(false);
    std::vector<double> fwd, fb, ts;
    for (std::size_t i = 0; i < opt.repetitions; ++i) {
      auto t0 = Clock::now();
      forward();
      fwd.push_back(seconds_since(t0));
      t0 = Clock::now();
      backward(false);
      fb.push_back(seconds_since(t0));
      t0 = Clock::now();
      backward(true);
      ts.push_back(seconds_since(t0));
    }
    TimingRow row;
    row.label = c.label;
    row.levels = stream.levels();
    row.forward = median(fwd);
    row.forward_backward = median(fb);
    row.train_step = median(ts);
    row.exact = stream.predicted_cost();
    if (tick > 0.01 * row.forward) {
      throw BenchError("clock resolution " + std::to_string(tick) + " s exceeds 1% of the " +
                       c.label + " forward time; enlarge the batch or the stream");
    }
    rows.push_back(row);
  }
  return rows;
}

std::string timing_csv(const std::vector<TimingRow>& rows) {
  std::ostringstream out;
  out.precision(9);
  out << "config,levels,forward_median_s,forward_backward_median_s,train_step_median_s,"
         "exact_g,exact_h\n";
  for (const TimingRow& r : rows) {
    out << r.label << "," << r.levels << "," << r.forward << "," << r.forward_backward << ","
        << r.train_step << "," << r.exact.g << "," << r.exact.h << "\n";
  }
  return out.str();
}

}  // namespace relnet
