// Copyright 2026 The tpcost Authors.
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

#pragma once

#include <string>
#include <vector>

#include "tpcost/ir/ast.hpp"
#include "tpcost/util/rng.hpp"

namespace tpcost::testing {

/// Random loop/leaf tree of at most `max_depth` loop levels.
inline ir::AstNode random_node(Rng& rng, int depth, int max_depth, int& leaf_budget) {
  const bool make_leaf = depth >= max_depth || leaf_budget <= 1 || rng.bernoulli(0.35);
  if (make_leaf) {
    --leaf_budget;
    ir::ComputeStats s;
    s.fma_count = rng.below(8);
    s.add_count = rng.below(4);
    s.mul_count = rng.below(4);
    s.bytes_read = 4 + rng.below(64);
    s.bytes_written = rng.below(16);
    s.buffers_read = 1 + rng.below(3);
    s.buffers_written = rng.below(2);
    return ir::AstNode::make_leaf("c" + std::to_string(rng.below(1000)), s);
  }
  ir::LoopInfo loop{"v" + std::to_string(depth), static_cast<std::int64_t>(1 + rng.below(64)), {}};
  for (auto a : ir::kAllAnnotations) {
    if (rng.bernoulli(0.2)) loop.annotations.insert(a);
  }
  std::vector<ir::AstNode> children;
  const int n_children = 1 + static_cast<int>(rng.below(3));
  for (int i = 0; i < n_children && leaf_budget > 0; ++i) {
    children.push_back(random_node(rng, depth + 1, max_depth, leaf_budget));
  }
  return ir::AstNode::make_loop(std::move(loop), std::move(children));
}

inline ir::ProgramAst random_program(Rng& rng, int max_depth = 8, int max_leaves = 16) {
  int budget = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_leaves)));
  std::vector<ir::AstNode> body;
  const int n_top = 1 + static_cast<int>(rng.below(2));
  for (int i = 0; i < n_top && budget > 0; ++i) body.push_back(random_node(rng, 0, max_depth, budget));
  return ir::make_program("p", std::move(body));
}

}  // namespace tpcost::testing
