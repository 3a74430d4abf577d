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

// Conditional relation network unit.
//
// An object array is stored as one tensor of shape [B, n, K, F]: B
// independent arrays, n objects each, every object a K x F matrix (K = 1
// for vector objects). For each subset size k = 2..k_max the unit samples
// subsets of the n objects, joins each subset with g^k, conditions the
// result on a context vector with h^k and averages over subsets (p^k).
// The unit returns the stacked results as [B, k_max - 1, K', F], where
// K' = K except for the sequential conditioning variants, whose temporal
// max-pool leaves K' = 1.

#ifndef RELNET_CRN_H_
#define RELNET_CRN_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "relnet/nn.h"
#include "relnet/rng.h"
#include "relnet/tensor.h"

namespace relnet {

enum class Conditioning {
  kAdditive,
  kMultiplicative,
  kSequentialAdditive,
  kSequentialMultiplicative,
  kDual,
  // h(x, c) = x. Used to isolate g and p in tests and ablations.
  kIdentity,
};

enum class GMode { kAverage, kConcat };
enum class Sampling { kRandom, kExhaustive };

std::string conditioning_name(Conditioning c);
Conditioning parse_conditioning(const std::string& name);
std::string g_mode_name(GMode g);
GMode parse_g_mode(const std::string& name);
std::string sampling_name(Sampling s);
Sampling parse_sampling(const std::string& name);

struct CrnConfig {
  std::size_t k_max = 0;  // 0 selects n - 1
  std::size_t t = 2;
  Conditioning conditioning = Conditioning::kAdditive;
  GMode g_mode = GMode::kAverage;
  Sampling sampling = Sampling::kRandom;
  std::size_t d = 0;
};

using Subset = std::vector<std::size_t>;

std::uint64_t binomial(std::uint64_t n, std::uint64_t k);

// All size-k subsets of {0..n-1} in lexicographic order.
std::vector<Subset> enumerate_subsets(std::size_t n, std::size_t k);

// t ascending index subsets of size k; distinct when t <= C(n, k).
std::vector<Subset> sample_subsets(std::size_t n, std::size_t k,
                                   std::size_t t, Rng& rng);

// g^k in average mode: members are equally shaped batches [M, K, F].
Tensor relation_g_average(const std::vector<Tensor>& members);

// h^k for one subset size. g: [M, K, F]; c, c2: [M, F].
class Conditioner {
 public:
  Conditioner() = default;
  Conditioner(ParamStore& store, const std::string& name, Conditioning kind,
              std::size_t d, Rng& rng);

  Tensor operator()(Context& ctx, const Tensor& g, const Tensor& c,
                    const Tensor& c2 = Tensor()) const;

  Conditioning kind() const { return kind_; }
  const Linear& projection() const { return proj_; }

 private:
  Conditioning kind_ = Conditioning::kIdentity;
  std::size_t d_ = 0;
  Linear proj_;
  BiLstm seq_;
};

// g^k in concat mode: [x_1; ...; x_k] W + b, mapped back to width F.
class ConcatG {
 public:
  ConcatG() = default;
  ConcatG(ParamStore& store, const std::string& name, std::size_t k,
          std::size_t d, Rng& rng);

  Tensor operator()(Context& ctx, const std::vector<Tensor>& members) const;
  const Linear& projection() const { return proj_; }

 private:
  std::size_t k_ = 0;
  Linear proj_;
};

struct CrnCost {
  std::uint64_t g = 0;
  std::uint64_t h = 0;
};

// Leading-constant evaluation of the unit's time cost:
// g: (t/2) k_max (k_max - 1) K F, h: (4t + 2)(k_max - 1) K F^2.
CrnCost cost_estimate(std::uint64_t t, std::uint64_t k_max, std::uint64_t K,
                      std::uint64_t F);

class CrnUnit {
 public:
  CrnUnit() = default;
  // n is the length of the input arrays this unit will see.
  CrnUnit(ParamStore& store, const std::string& name, const CrnConfig& cfg,
          std::size_t n, Rng& rng);

  // x: [B, n, K, F]; c: [B, F] (ignored by kIdentity); c2 only for kDual.
  Tensor operator()(Context& ctx, const Tensor& x, const Tensor& c,
                    const Tensor& c2 = Tensor()) const;

  std::size_t n() const { return n_; }
  std::size_t k_max() const { return k_max_; }
  std::size_t output_count() const { return n_ == 2 ? 1 : k_max_ - 1; }
  // Object row count after this unit for inputs with K rows.
  std::size_t output_rows(std::size_t K) const;
  const CrnConfig& config() const { return cfg_; }
  const std::string& name() const { return name_; }
  const Conditioner& conditioner(std::size_t k) const { return h_.at(k - 2); }
  const ConcatG& concat_g(std::size_t k) const { return g_.at(k - 2); }

  // Subsets used for size k: enumerated or sampled.
  std::vector<Subset> subsets_for(std::size_t k, Rng& rng) const;

 private:
  std::string name_;
  CrnConfig cfg_;
  std::size_t n_ = 0, k_max_ = 0;
  std::vector<ConcatG> g_;
  std::vector<Conditioner> h_;
};

}  // namespace relnet

#endif  // RELNET_CRN_H_
