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

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "tpcost/error.hpp"
#include "tpcost/ir/ast.hpp"

namespace tpcost::features {

inline constexpr int kNumEntries = 24;

/// Per-leaf feature vector. Layout (log entries are log2(1+x)):
///   0 loop depth             1 log extent product       2 log innermost extent
///   3 log outermost extent   4..6 #vectorize/#unroll/#parallel loops
///   7..9 log extent product of vectorized/unrolled/parallel loops
///   10..14 log fma/add/mul/div/special per iteration    15 log total flops
///   16..17 log bytes read/written per iteration         18..19 log total bytes read/written
///   20..21 buffers read/written                          22 total flops / (total bytes + 1)
///   23 leaf_index / n_leaf
using ComputationVector = std::array<double, kNumEntries>;

namespace entry {
inline constexpr int kLoopDepth = 0;
inline constexpr int kLogExtentProduct = 1;
inline constexpr int kLogInnermost = 2;
inline constexpr int kLogOutermost = 3;
inline constexpr int kNumVectorized = 4;
inline constexpr int kNumUnrolled = 5;
inline constexpr int kNumParallel = 6;
inline constexpr int kLogVectorizedExtent = 7;
inline constexpr int kLogUnrolledExtent = 8;
inline constexpr int kLogParallelExtent = 9;
inline constexpr int kLogFma = 10;
inline constexpr int kLogSpecial = 14;
inline constexpr int kLogTotalFlops = 15;
inline constexpr int kLogBytesRead = 16;
inline constexpr int kLogBytesWritten = 17;
inline constexpr int kLogTotalBytesRead = 18;
inline constexpr int kLogTotalBytesWritten = 19;
inline constexpr int kBuffersRead = 20;
inline constexpr int kBuffersWritten = 21;
inline constexpr int kArithmeticIntensity = 22;
inline constexpr int kLeafFraction = 23;
}  // namespace entry

/// Leaf vectors plus the ordering vector of a marker-serialized pre-order walk.
struct CompactAst {
  std::vector<ComputationVector> leaf_vectors;
  std::vector<int> ordering;
  std::vector<int> serialized;
  int n_leaf = 0;

  bool operator==(const CompactAst&) const = default;
};

inline constexpr int kLeafMarker = -1;

inline double log1p2(double x) { return std::log2(1.0 + x); }

/// Product of loop extents; throws OverflowError past 2^62.
inline std::uint64_t checked_extent_product(std::span<const ir::LoopInfo* const> loops,
                                            ir::Annotation* filter = nullptr) {
  constexpr std::uint64_t kLimit = std::uint64_t{1} << 62;
  std::uint64_t p = 1;
  for (const auto* l : loops) {
    if (filter && !l->annotations.contains(*filter)) continue;
    const auto e = static_cast<std::uint64_t>(l->extent);
    if (e != 0 && p > kLimit / e) throw OverflowError("loop extent product exceeds 2^62");
    p *= e;
  }
  return p;
}

/// Computation vector of one leaf. `enclosing` runs outermost to innermost.
inline ComputationVector compute_vector(const ir::ComputeStats& leaf,
                                        std::span<const ir::LoopInfo* const> enclosing,
                                        int leaf_index, int n_leaf) {
  ComputationVector v{};
  const auto depth = enclosing.size();
  const double iters = static_cast<double>(checked_extent_product(enclosing));
  v[entry::kLoopDepth] = static_cast<double>(depth);
  if (depth > 0) {
    v[entry::kLogExtentProduct] = log1p2(iters);
    v[entry::kLogInnermost] = log1p2(static_cast<double>(enclosing.back()->extent));
    v[entry::kLogOutermost] = log1p2(static_cast<double>(enclosing.front()->extent));
  }
  for (int a = 0; a < 3; ++a) {
    ir::Annotation ann = ir::kAllAnnotations[a];
    int count = 0;
    for (const auto* l : enclosing) count += l->annotations.contains(ann) ? 1 : 0;
    v[entry::kNumVectorized + a] = count;
    if (count > 0) {
      v[entry::kLogVectorizedExtent + a] =
          log1p2(static_cast<double>(checked_extent_product(enclosing, &ann)));
    }
  }
  const std::uint64_t per_iter[] = {leaf.fma_count, leaf.add_count, leaf.mul_count,
                                    leaf.div_count, leaf.special_count};
  for (int i = 0; i < 5; ++i) v[entry::kLogFma + i] = log1p2(static_cast<double>(per_iter[i]));
  const double total_flops = leaf.flops_per_iter() * iters;
  const double total_read = static_cast<double>(leaf.bytes_read) * iters;
  const double total_written = static_cast<double>(leaf.bytes_written) * iters;
  v[entry::kLogTotalFlops] = log1p2(total_flops);
  v[entry::kLogBytesRead] = log1p2(static_cast<double>(leaf.bytes_read));
  v[entry::kLogBytesWritten] = log1p2(static_cast<double>(leaf.bytes_written));
  v[entry::kLogTotalBytesRead] = log1p2(total_read);
  v[entry::kLogTotalBytesWritten] = log1p2(total_written);
  v[entry::kBuffersRead] = static_cast<double>(leaf.buffers_read);
  v[entry::kBuffersWritten] = static_cast<double>(leaf.buffers_written);
  v[entry::kArithmeticIntensity] = total_flops / (total_read + total_written + 1.0);
  v[entry::kLeafFraction] = n_leaf > 0 ? static_cast<double>(leaf_index) / n_leaf : 0.0;
  return v;
}

namespace detail {

struct CompactBuilder {
  int n_leaf;
  CompactAst out;
  std::vector<const ir::LoopInfo*> stack;
  int next_id = 0;

  void visit(const ir::AstNode& node) {
    const int id = next_id++;
    out.serialized.push_back(id);
    if (node.is_leaf()) {
      const int leaf_index = static_cast<int>(out.leaf_vectors.size());
      out.ordering.push_back(static_cast<int>(out.serialized.size()) - 1);
      out.serialized.push_back(kLeafMarker);
      out.leaf_vectors.push_back(compute_vector(node.leaf().stats, stack, leaf_index, n_leaf));
      return;
    }
    stack.push_back(&node.loop());
    for (const auto& c : node.children) visit(c);
    stack.pop_back();
  }
};

}  // namespace detail

/// Serializes the tree in pre-order with a marker after every leaf and
/// records each leaf's position (markers included) as the ordering vector.
inline CompactAst build_compact_ast(const ir::ProgramAst& ast, int max_leaves = ir::kDefaultMaxLeaves) {
  const int n_leaf = ir::count_leaves(ast);
  if (n_leaf > max_leaves) {
    throw LeafCountExceeded("program has " + std::to_string(n_leaf) + " leaves; maximum is " +
                            std::to_string(max_leaves));
  }
  detail::CompactBuilder b{n_leaf, {}, {}, 0};
  for (const auto& s : ast.body) b.visit(s);
  b.out.n_leaf = n_leaf;
  return std::move(b.out);
}

}  // namespace tpcost::features
