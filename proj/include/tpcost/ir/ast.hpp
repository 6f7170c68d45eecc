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

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace tpcost::ir {

/// Aggregate per-iteration statistics of one compute statement.
struct ComputeStats {
  std::uint64_t fma_count = 0;
  std::uint64_t add_count = 0;
  std::uint64_t mul_count = 0;
  std::uint64_t div_count = 0;
  std::uint64_t special_count = 0;
  std::uint64_t bytes_read = 0;
  std::uint64_t bytes_written = 0;
  std::uint64_t buffers_read = 0;
  std::uint64_t buffers_written = 0;

  /// Floating-point operations per iteration; an FMA counts as two.
  double flops_per_iter() const {
    return 2.0 * static_cast<double>(fma_count) + static_cast<double>(add_count) +
           static_cast<double>(mul_count) + static_cast<double>(div_count) +
           static_cast<double>(special_count);
  }

  double bytes_per_iter() const {
    return static_cast<double>(bytes_read) + static_cast<double>(bytes_written);
  }

  bool is_empty() const {
    return fma_count == 0 && add_count == 0 && mul_count == 0 && div_count == 0 &&
           special_count == 0 && bytes_read == 0 && bytes_written == 0;
  }

  bool operator==(const ComputeStats&) const = default;
};

enum class Annotation : std::uint8_t { kVectorize = 1, kUnroll = 2, kParallel = 4 };

/// Set of loop annotations stored as a bitmask.
class AnnotationSet {
 public:
  bool contains(Annotation a) const { return (bits_ & static_cast<std::uint8_t>(a)) != 0; }
  /// Returns false if `a` was already present.
  bool insert(Annotation a) {
    if (contains(a)) return false;
    bits_ |= static_cast<std::uint8_t>(a);
    return true;
  }
  bool empty() const { return bits_ == 0; }
  bool operator==(const AnnotationSet&) const = default;

 private:
  std::uint8_t bits_ = 0;
};

inline const char* annotation_name(Annotation a) {
  switch (a) {
    case Annotation::kVectorize:
      return "vectorize";
    case Annotation::kUnroll:
      return "unroll";
    case Annotation::kParallel:
      return "parallel";
  }
  return "?";
}

inline constexpr Annotation kAllAnnotations[] = {Annotation::kVectorize, Annotation::kUnroll,
                                                 Annotation::kParallel};

struct LoopInfo {
  std::string var_name;
  std::int64_t extent = 1;
  AnnotationSet annotations;

  bool operator==(const LoopInfo&) const = default;
};

struct LeafInfo {
  std::string name;
  ComputeStats stats;

  bool operator==(const LeafInfo&) const = default;
};

/// Loop or compute leaf. Leaves never have children; child order is significant.
struct AstNode {
  std::variant<LoopInfo, LeafInfo> kind;
  std::vector<AstNode> children;

  bool is_leaf() const { return std::holds_alternative<LeafInfo>(kind); }
  const LoopInfo& loop() const { return std::get<LoopInfo>(kind); }
  const LeafInfo& leaf() const { return std::get<LeafInfo>(kind); }

  static AstNode make_loop(LoopInfo info, std::vector<AstNode> children) {
    return AstNode{std::move(info), std::move(children)};
  }
  static AstNode make_leaf(std::string name, ComputeStats stats) {
    return AstNode{LeafInfo{std::move(name), stats}, {}};
  }

  bool operator==(const AstNode&) const = default;
};

inline constexpr int kDefaultMaxLeaves = 16;

/// A parsed tensor program: the ordered top-level statements of the program block.
struct ProgramAst {
  std::string name;
  std::vector<AstNode> body;
  int n_leaf = 0;

  bool operator==(const ProgramAst&) const = default;
};

namespace detail {

inline int count_leaves_in(const AstNode& node) {
  if (node.is_leaf()) return 1;
  int n = 0;
  for (const auto& c : node.children) n += count_leaves_in(c);
  return n;
}

inline int count_nodes_in(const AstNode& node) {
  int n = 1;
  for (const auto& c : node.children) n += count_nodes_in(c);
  return n;
}

}  // namespace detail

inline int count_leaves(const std::vector<AstNode>& body) {
  int n = 0;
  for (const auto& s : body) n += detail::count_leaves_in(s);
  return n;
}

inline int count_leaves(const ProgramAst& ast) { return count_leaves(ast.body); }

inline int count_nodes(const ProgramAst& ast) {
  int n = 0;
  for (const auto& s : ast.body) n += detail::count_nodes_in(s);
  return n;
}

/// Builds a ProgramAst with the leaf count filled in.
inline ProgramAst make_program(std::string name, std::vector<AstNode> body) {
  ProgramAst ast{std::move(name), std::move(body), 0};
  ast.n_leaf = count_leaves(ast.body);
  return ast;
}

}  // namespace tpcost::ir
