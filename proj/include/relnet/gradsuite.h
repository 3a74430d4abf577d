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

// Finite-difference checks of every differentiable block on random small
// instances.

#ifndef RELNET_GRADSUITE_H_
#define RELNET_GRADSUITE_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace relnet {

struct BlockCheck {
  std::string block;
  std::size_t instances = 0;
  double max_error = 0.0;  // max relative error over all instances
};

// Block names: crn_additive, crn_multiplicative, crn_sequential_additive,
// crn_sequential_multiplicative, crn_dual, hcrn_2level, log_unit, tree_lstm,
// decoder_open_ended, decoder_count, decoder_multi_choice, kl_linguistic,
// kl_visual.
std::vector<std::string> gradcheck_blocks();

// Instance i of every block uses sizes and values drawn from seed + i.
BlockCheck check_block(const std::string& block, std::size_t instances, std::uint64_t seed);

std::vector<BlockCheck> run_gradcheck_suite(std::size_t instances, std::uint64_t seed);

nlohmann::json to_json(const BlockCheck& c);

}  // namespace relnet

#endif  // RELNET_GRADSUITE_H_
