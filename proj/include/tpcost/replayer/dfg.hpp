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

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tpcost/error.hpp"

namespace tpcost::replayer {

struct DfgNode {
  std::string id;
  /// Nodes sharing a key share one latency prediction.
  std::string tir_key;
  double duration = 0;  // seconds
  double gap = 0;       // idle time after the node on its device, seconds
  int device = 0;
  /// Optional class used by device-parallel expansion, e.g. "conv".
  std::string op_class;
  /// Name of the IR program this node runs.
  std::string program_ref;

  bool operator==(const DfgNode&) const = default;
};

struct Dfg {
  std::vector<DfgNode> nodes;
  std::vector<std::pair<std::string, std::string>> edges;

  /// Node index by id; throws ValidationError on duplicates.
  std::map<std::string, std::size_t> index() const {
    std::map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (!idx.emplace(nodes[i].id, i).second) throw ValidationError("duplicate node id '" + nodes[i].id + "'");
    }
    return idx;
  }

  /// Successor lists by node index, after checking that edge endpoints exist.
  std::vector<std::vector<std::size_t>> successors() const {
    const auto idx = index();
    std::vector<std::vector<std::size_t>> succ(nodes.size());
    for (const auto& [from, to] : edges) {
      auto a = idx.find(from), b = idx.find(to);
      if (a == idx.end() || b == idx.end()) throw ValidationError("edge " + from + " -> " + to + " names an unknown node");
      succ[a->second].push_back(b->second);
    }
    return succ;
  }

  double total_duration() const {
    double s = 0;
    for (const auto& n : nodes) s += n.duration;
    return s;
  }
};

/// Graph with every node on one device.
inline Dfg on_single_device(Dfg g, int device = 0) {
  for (auto& n : g.nodes) n.device = device;
  return g;
}

/// Replaces each node whose op_class has a rule k > 1 by k sub-nodes
/// "<id>#i" of duration/k placed on devices device..device+k-1. Every
/// sub-node inherits the node's in- and out-edges.
inline Dfg expand_device_parallel(const Dfg& g, const std::map<std::string, int>& rules) {
  if (rules.empty()) return g;
  Dfg out;
  std::map<std::string, std::vector<std::string>> parts;
  for (const auto& n : g.nodes) {
    auto r = rules.find(n.op_class);
    const int k = (r == rules.end() || n.op_class.empty()) ? 1 : r->second;
    if (k < 1) throw ValidationError("core count for op class '" + n.op_class + "' must be positive");
    if (k == 1) {
      out.nodes.push_back(n);
      parts[n.id] = {n.id};
      continue;
    }
    auto& ids = parts[n.id];
    for (int i = 0; i < k; ++i) {
      DfgNode s = n;
      s.id = n.id + "#" + std::to_string(i);
      s.duration = n.duration / k;
      s.device = n.device + i;
      ids.push_back(s.id);
      out.nodes.push_back(std::move(s));
    }
  }
  for (const auto& [from, to] : g.edges) {
    auto a = parts.find(from), b = parts.find(to);
    if (a == parts.end() || b == parts.end()) throw ValidationError("edge " + from + " -> " + to + " names an unknown node");
    for (const auto& u : a->second)
      for (const auto& v : b->second) out.edges.emplace_back(u, v);
  }
  return out;
}

}  // namespace tpcost::replayer
