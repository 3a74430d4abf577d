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

#include "relnet/crn.h"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "relnet/ops.h"

namespace relnet {
namespace {

// Above this many candidates, random subsets are drawn by rejection instead
// of from an explicit enumeration.
constexpr std::uint64_t kEnumerateLimit = 50000;

Subset random_subset(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(pool[i], pool[i + rng.below(n - i)]);
  }
  Subset s(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(s.begin(), s.end());
  return s;
}

std::size_t width_factor(Conditioning kind) {
  switch (kind) {
    case Conditioning::kAdditive:
    case Conditioning::kSequentialAdditive:
      return 2;
    case Conditioning::kMultiplicative:
    case Conditioning::kSequentialMultiplicative:
      return 3;
    case Conditioning::kDual:
      return 5;
    case Conditioning::kIdentity:
      return 0;
  }
  return 0;
}

}  // namespace

std::string conditioning_name(Conditioning c) {
  switch (c) {
    case Conditioning::kAdditive: return "additive";
    case Conditioning::kMultiplicative: return "multiplicative";
    case Conditioning::kSequentialAdditive: return "sequential_additive";
    case Conditioning::kSequentialMultiplicative: return "sequential_multiplicative";
    case Conditioning::kDual: return "dual";
    case Conditioning::kIdentity: return "identity";
  }
  return "?";
}

Conditioning parse_conditioning(const std::string& name) {
  for (auto c : {Conditioning::kAdditive, Conditioning::kMultiplicative,
                 Conditioning::kSequentialAdditive,
                 Conditioning::kSequentialMultiplicative, Conditioning::kDual,
                 Conditioning::kIdentity}) {
    if (conditioning_name(c) == name) return c;
  }
  throw std::invalid_argument("unknown conditioning variant: " + name);
}

std::string g_mode_name(GMode g) {
  return g == GMode::kAverage ? "average" : "concat";
}

GMode parse_g_mode(const std::string& name) {
  if (name == "average") return GMode::kAverage;
  if (name == "concat") return GMode::kConcat;
  throw std::invalid_argument("unknown g mode: " + name);
}

std::string sampling_name(Sampling s) {
  return s == Sampling::kRandom ? "random" : "exhaustive";
}

Sampling parse_sampling(const std::string& name) {
  if (name == "random") return Sampling::kRandom;
  if (name == "exhaustive") return Sampling::kExhaustive;
  throw std::invalid_argument("unknown sampling mode: " + name);
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    // r * (n - k + i) / i stays integral at every step.
    const std::uint64_t num = n - k + i;
    if (r > UINT64_MAX / num) return UINT64_MAX;
    r = r * num / i;
  }
  return r;
}

std::vector<Subset> enumerate_subsets(std::size_t n, std::size_t k) {
  std::vector<Subset> out;
  if (k == 0 || k > n) return out;
  Subset s(k);
  for (std::size_t i = 0; i < k; ++i) s[i] = i;
  while (true) {
    out.push_back(s);
    std::size_t i = k;
    while (i > 0 && s[i - 1] == n - k + (i - 1)) --i;
    if (i == 0) break;
    ++s[i - 1];
    for (std::size_t j = i; j < k; ++j) s[j] = s[j - 1] + 1;
  }
  return out;
}

std::vector<Subset> sample_subsets(std::size_t n, std::size_t k,
                                   std::size_t t, Rng& rng) {
  if (t == 0) throw std::invalid_argument("sample_subsets: t must be positive");
  if (k < 2 || k >= n) {
    throw std::invalid_argument("sample_subsets: need 2 <= k < n, got k=" +
                                std::to_string(k) + " n=" + std::to_string(n));
  }
  const std::uint64_t total = binomial(n, k);
  std::vector<Subset> out;
  out.reserve(t);
  if (t > total) {
    for (std::size_t i = 0; i < t; ++i) out.push_back(random_subset(n, k, rng));
    return out;
  }
  if (total <= kEnumerateLimit) {
    std::vector<Subset> all = enumerate_subsets(n, k);
    for (std::size_t i = 0; i < t; ++i) {
      std::swap(all[i], all[i + rng.below(all.size() - i)]);
      out.push_back(all[i]);
    }
    return out;
  }
  std::set<Subset> seen;
  while (out.size() < t) {
    Subset s = random_subset(n, k, rng);
    if (seen.insert(s).second) out.push_back(std::move(s));
  }
  return out;
}

Tensor relation_g_average(const std::vector<Tensor>& members) {
  if (members.empty()) throw std::invalid_argument("relation_g: empty subset");
  Tensor total = members.front();
  for (std::size_t i = 1; i < members.size(); ++i) {
    total = add(total, members[i]);
  }
  return scale(total, 1.0 / static_cast<double>(members.size()));
}

Conditioner::Conditioner(ParamStore& store, const std::string& name,
                         Conditioning kind, std::size_t d, Rng& rng)
    : kind_(kind), d_(d) {
  const std::size_t width = width_factor(kind) * d;
  switch (kind) {
    case Conditioning::kAdditive:
    case Conditioning::kMultiplicative:
    case Conditioning::kDual:
      proj_ = Linear(store, name, width, d, rng);
      break;
    case Conditioning::kSequentialAdditive:
    case Conditioning::kSequentialMultiplicative:
      seq_ = BiLstm(store, name + ".bilstm", width, d, rng);
      break;
    case Conditioning::kIdentity:
      break;
  }
}

Tensor Conditioner::operator()(Context& ctx, const Tensor& g, const Tensor& c,
                               const Tensor& c2) const {
  if (kind_ == Conditioning::kIdentity) return g;
  if (g.rank() != 3 || g.dim(2) != d_) {
    throw ShapeError("condition_h: relation input " + shape_string(g.shape()) +
                     " does not have hidden size " + std::to_string(d_));
  }
  const std::size_t m = g.dim(0), rows = g.dim(1);
  auto spread = [&](const Tensor& v, const char* what) {
    if (v.empty()) {
      throw std::invalid_argument(std::string("condition_h: missing ") + what +
                                  " for " + conditioning_name(kind_));
    }
    if (v.shape() != Shape{m, d_}) {
      throw ShapeError(std::string("condition_h: ") + what + " has shape " +
                       shape_string(v.shape()) + ", expected " +
                       shape_string({m, d_}));
    }
    return expand(v, 1, rows);
  };
  const Tensor ce = spread(c, "conditioning feature");
  switch (kind_) {
    case Conditioning::kAdditive:
      return elu(proj_(ctx, concat_lastdim({g, ce})));
    case Conditioning::kMultiplicative:
      return elu(proj_(ctx, concat_lastdim({g, mul(g, ce), ce})));
    case Conditioning::kDual: {
      const Tensor ce2 = spread(c2, "second conditioning feature");
      return elu(proj_(ctx, concat_lastdim({g, mul(g, ce), mul(g, ce2), ce, ce2})));
    }
    case Conditioning::kSequentialAdditive:
    case Conditioning::kSequentialMultiplicative: {
      Tensor s = kind_ == Conditioning::kSequentialAdditive
                     ? concat_lastdim({g, ce})
                     : concat_lastdim({g, mul(g, ce), ce});
      Tensor pooled = max_axis(seq_(ctx, s).states, 1);
      return reshape(pooled, {m, 1, d_});
    }
    case Conditioning::kIdentity:
      break;
  }
  return g;
}

ConcatG::ConcatG(ParamStore& store, const std::string& name, std::size_t k,
                 std::size_t d, Rng& rng)
    : k_(k), proj_(store, name, k * d, d, rng) {}

Tensor ConcatG::operator()(Context& ctx,
                           const std::vector<Tensor>& members) const {
  if (members.empty()) throw std::invalid_argument("relation_g: empty subset");
  if (members.size() != k_) {
    throw ShapeError("relation_g: concat projection built for " +
                     std::to_string(k_) + " members, got " +
                     std::to_string(members.size()));
  }
  return proj_(ctx, concat_lastdim(members));
}

CrnCost cost_estimate(std::uint64_t t, std::uint64_t k_max, std::uint64_t K,
                      std::uint64_t F) {
  return {t * k_max * (k_max - 1) / 2 * K * F,
          (4 * t + 2) * (k_max - 1) * K * F * F};
}

CrnUnit::CrnUnit(ParamStore& store, const std::string& name,
                 const CrnConfig& cfg, std::size_t n, Rng& rng)
    : name_(name), cfg_(cfg), n_(n) {
  if (n < 2) {
    throw ShapeError("crn " + name + ": needs at least 2 objects, got " +
                     std::to_string(n));
  }
  if (cfg.t == 0) throw std::invalid_argument("crn " + name + ": t must be positive");
  if (cfg.d == 0) throw std::invalid_argument("crn " + name + ": d must be positive");
  if (n == 2) {
    k_max_ = 2;
  } else {
    k_max_ = cfg.k_max == 0 ? n - 1 : cfg.k_max;
    if (k_max_ < 2 || k_max_ >= n) {
      throw std::invalid_argument("crn " + name + ": k_max=" +
                                  std::to_string(k_max_) +
                                  " must satisfy 2 <= k_max < n=" +
                                  std::to_string(n));
    }
  }
  for (std::size_t k = 2; k <= k_max_; ++k) {
    const std::string prefix = name + ".k" + std::to_string(k);
    if (cfg.g_mode == GMode::kConcat) {
      g_.emplace_back(store, prefix + ".g", k, cfg.d, rng);
    }
    h_.emplace_back(store, prefix + ".h", cfg.conditioning, cfg.d, rng);
  }
}

std::size_t CrnUnit::output_rows(std::size_t K) const {
  return cfg_.conditioning == Conditioning::kSequentialAdditive ||
                 cfg_.conditioning == Conditioning::kSequentialMultiplicative
             ? 1
             : K;
}

std::vector<Subset> CrnUnit::subsets_for(std::size_t k, Rng& rng) const {
  if (n_ == 2) return {Subset{0, 1}};
  if (cfg_.sampling == Sampling::kExhaustive) return enumerate_subsets(n_, k);
  return sample_subsets(n_, k, cfg_.t, rng);
}

Tensor CrnUnit::operator()(Context& ctx, const Tensor& x, const Tensor& c,
                           const Tensor& c2) const {
  if (x.rank() != 4 || x.dim(1) != n_ || x.dim(3) != cfg_.d) {
    throw ShapeError("crn " + name_ + ": expected [B, " + std::to_string(n_) +
                     ", K, " + std::to_string(cfg_.d) + "], got " +
                     shape_string(x.shape()));
  }
  const std::size_t batch = x.dim(0), rows = x.dim(2), F = cfg_.d;
  const std::size_t object = rows * F;
  const Tensor flat = reshape(x, {batch * n_, object});
  std::vector<Tensor> results;
  for (std::size_t k = 2; k <= k_max_; ++k) {
    std::vector<std::vector<Subset>> subsets(batch);
    for (std::size_t b = 0; b < batch; ++b) subsets[b] = subsets_for(k, ctx.rng());
    const std::size_t per = subsets[0].size();
    const std::size_t m = batch * per;

    Tensor g;
    if (cfg_.g_mode == GMode::kAverage) {
      std::vector<std::size_t> idx;
      idx.reserve(m * k);
      for (std::size_t b = 0; b < batch; ++b) {
        for (const auto& s : subsets[b]) {
          for (std::size_t i : s) idx.push_back(b * n_ + i);
        }
      }
      g = reshape(mean_axis(reshape(gather_rows(flat, idx), {m, k, object}), 1),
                  {m, rows, F});
    } else {
      std::vector<Tensor> members;
      for (std::size_t j = 0; j < k; ++j) {
        std::vector<std::size_t> idx;
        idx.reserve(m);
        for (std::size_t b = 0; b < batch; ++b) {
          for (const auto& s : subsets[b]) idx.push_back(b * n_ + s[j]);
        }
        members.push_back(reshape(gather_rows(flat, idx), {m, rows, F}));
      }
      g = g_[k - 2](ctx, members);
    }

    auto per_subset = [&](const Tensor& v) {
      if (v.empty() || cfg_.conditioning == Conditioning::kIdentity) return Tensor();
      if (v.shape() != Shape{batch, F}) {
        throw ShapeError("crn " + name_ + ": conditioning feature " +
                         shape_string(v.shape()) + " does not match [" +
                         std::to_string(batch) + ", " + std::to_string(F) + "]");
      }
      return reshape(expand(v, 1, per), {m, F});
    };
    Tensor h = h_[k - 2](ctx, g, per_subset(c), per_subset(c2));
    const std::size_t out_rows = h.dim(1);
    results.push_back(mean_axis(reshape(h, {batch, per, out_rows * F}), 1));
  }
  const std::size_t out_rows = output_rows(rows);
  return reshape(concat_lastdim(results),
                 {batch, results.size(), out_rows, F});
}

}  // namespace relnet
