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

#include "tpcost/ir/ast.hpp"

namespace tpcost::ir {

namespace detail {

inline void print_node(const AstNode& node, int indent, std::string& out) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  if (node.is_leaf()) {
    const auto& leaf = node.leaf();
    const auto& s = leaf.stats;
    out += pad + "compute " + leaf.name + " {";
    const std::pair<const char*, std::uint64_t> kv[] = {
        {"fma", s.fma_count},         {"add", s.add_count},
        {"mul", s.mul_count},         {"div", s.div_count},
        {"special", s.special_count}, {"bytes_read", s.bytes_read},
        {"bytes_written", s.bytes_written}, {"buffers_read", s.buffers_read},
        {"buffers_written", s.buffers_written}};
    bool any = false;
    for (const auto& [k, v] : kv) {
      if (v == 0) continue;
      out += " " + std::string(k) + "=" + std::to_string(v);
      any = true;
    }
    if (!any) out += " fma=0";
    out += " }\n";
    return;
  }
  const auto& loop = node.loop();
  out += pad + "for " + loop.var_name + " in 0.." + std::to_string(loop.extent);
  for (auto a : kAllAnnotations) {
    if (loop.annotations.contains(a)) out += std::string(" @") + annotation_name(a);
  }
  out += " {\n";
  for (const auto& c : node.children) print_node(c, indent + 1, out);
  out += pad + "}\n";
}

}  // namespace detail

/// Canonical text form; parse_program(print_program(ast)) == ast.
inline std::string print_program(const ProgramAst& ast) {
  std::string out = "program " + ast.name + " {\n";
  for (const auto& s : ast.body) detail::print_node(s, 1, out);
  out += "}\n";
  return out;
}

}  // namespace tpcost::ir
