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

// Analytic cost model and wall-clock scaling of 2-level vs 3-level streams.

#ifndef RELNET_BENCH_H_
#define RELNET_BENCH_H_

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "relnet/hcrn.h"

namespace relnet {

// L frames split into N clips of T frames; 3-level shapes add N = N1 * N2
// (N1 sub-videos of N2 clips each).
struct StreamShape {
  std::uint64_t frames = 0;  // L
  std::uint64_t clips = 0;   // N
  std::uint64_t frames_per_clip = 0;  // T
  std::uint64_t groups = 0;  // N1, 0 for 2-level
  std::uint64_t group_size = 0;  // N2
  bool three_level() const { return groups != 0; }
};

struct CostPrediction {
  // Printed leading-constant expressions:
  //   2-level  g = 2(T + N) L F,        h = 20 L F^2
  //   3-level  g = 2(T + N2 + N1) L F,  h = 30 L F^2
  std::uint64_t g = 0, h = 0;
  std::uint64_t total() const { return g + h; }
};

// Throws std::invalid_argument unless L = N T (and N = N1 N2), all positive.
CostPrediction predict_costs(const StreamShape& shape, std::uint64_t F);

struct CostComparison {
  CostPrediction two_level, three_level;
  // two_level - three_level, signed.
  std::int64_t g_gap = 0, h_gap = 0, total_gap = 0;
};
CostComparison compare_costs(std::uint64_t clips, std::uint64_t frames_per_clip,
                             std::uint64_t groups, std::uint64_t F);

// Sum over the units of a concrete stream of the per-unit estimate, with
// k_max, K and array counts as actually wired.
CrnCost exact_stream_cost(const HcrnConfig& cfg);

class BenchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ScalingCase {
  std::string label;
  HcrnConfig stream;
  std::size_t batch = 1;
};

struct TimingRow {
  std::string label;
  std::size_t levels = 2;
  double forward = 0.0;           // median seconds
  double forward_backward = 0.0;  // median seconds
  double train_step = 0.0;        // forward + backward + Adam, median seconds
  CrnCost exact;
};

struct ScalingOptions {
  std::size_t repetitions = 5;  // at least 5
  std::size_t warmup = 1;
  std::uint64_t seed = 1;
};

// Times each case on one thread. Throws std::invalid_argument for fewer
// than 5 repetitions and BenchError when the clock resolution exceeds 1% of
// a measured median.
std::vector<TimingRow> measure_scaling(const std::vector<ScalingCase>& cases,
                                       const ScalingOptions& options);

double median(std::vector<double> values);

// One header line plus one row per case.
std::string timing_csv(const std::vector<TimingRow>& rows);

}  // namespace relnet

#endif  // RELNET_BENCH_H_
