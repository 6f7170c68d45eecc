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

#include <cstdio>
#include <functional>
#include <map>
#include <ostream>
#include <string>

#include <json.hpp>

#include "tpcost/costmodel/trainer.hpp"
#include "tpcost/features/compact_ast.hpp"
#include "tpcost/ir/parser.hpp"
#include "tpcost/replayer/simulate.hpp"

namespace tpcost::replayer {

/// Latency in seconds for a node, keyed by its tir_key.
using NodePredictor = std::function<double(const DfgNode&)>;

/// Fills every node's duration, calling `predict` once per distinct
/// tir_key. Returns the per-key durations.
inline std::map<std::string, double> dedup_predict(Dfg& g, const NodePredictor& predict) {
  std::map<std::string, double> by_key;
  for (const auto& n : g.nodes) {
    if (by_key.contains(n.tir_key)) continue;
    const double d = predict(n);
    if (!(d >= 0) || !std::isfinite(d)) throw DomainError("prediction for '" + n.tir_key + "' is not a valid duration");
    by_key.emplace(n.tir_key, d);
  }
  for (auto& n : g.nodes) n.duration = by_key.at(n.tir_key);
  return by_key;
}

inline Dfg parse_graph_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("graph is not valid JSON: ") + e.what());
  }
  auto id_of = [](const nlohmann::json& v) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    throw ValidationError("node ids must be strings or integers");
  };
  Dfg g;
  try {
    for (const auto& n : j.at("nodes")) {
      DfgNode node;
      node.id = id_of(n.at("id"));
      node.tir_key = n.contains("tir_key") ? n["tir_key"].get<std::string>() : n.value("program_ref", node.id);
      node.program_ref = n.value("program_ref", node.tir_key);
      node.device = n.value("device", 0);
      node.gap = n.value("gap_s", 0.0);
      node.duration = n.value("duration_s", 0.0);
      node.op_class = n.value("op_class", "");
      if (!(node.gap >= 0) || !(node.duration >= 0)) throw ValidationError("node '" + node.id + "' has a negative time");
      g.nodes.push_back(std::move(node));
    }
    for (const auto& e : j.value("edges", nlohmann::json::array())) {
      if (!e.is_array() || e.size() != 2) throw ValidationError("edges must be [from, to] pairs");
      g.edges.emplace_back(id_of(e[0]), id_of(e[1]));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed graph: ") + e.what());
  }
  g.successors();  // validates ids and endpoints
  return g;
}

inline nlohmann::json sim_result_json(const Dfg& g, const SimResult& r) {
  nlohmann::json sched = nlohmann::json::array();
  for (const auto& n : g.nodes) {
    const auto& iv = r.schedule.at(n.id);
    sched.push_back({{"id", n.id}, {"device", n.device}, {"start_s", iv.start}, {"end_s", iv.end}});
  }
  return {{"iteration_time_s", r.iteration_time}, {"schedule", sched}};
}

inline void write_timeline_csv(std::ostream& os, const Dfg& g, const SimResult& r) {
  os << "id,tir_key,device,start_s,end_s\n";
  char buf[96];
  for (const auto& n : g.nodes) {
    const auto& iv = r.schedule.at(n.id);
    std::snprintf(buf, sizeof(buf), ",%d,%.17g,%.17g\n", n.device, iv.start, iv.end);
    os << n.id << ',' << n.tir_key << buf;
  }
}

/// IR programs by name, as referenced by program_ref.
inline std::map<std::string, features::CompactAst> program_table(std::string_view ir_text, int max_leaves) {
  std::map<std::string, features::CompactAst> out;
  ir::ParseOptions opts;
  opts.max_leaves = max_leaves;
  for (const auto& p : ir::parse_programs(ir_text, opts)) {
    if (!out.emplace(p.name, features::build_compact_ast(p, max_leaves)).second)
      throw ValidationError("program '" + p.name + "' is defined twice");
  }
  return out;
}

/// Node predictor backed by a trained model and a program table.
inline NodePredictor model_predictor(const costmodel::CostModel& model, const features::DeviceSpec& device,
                                     const std::map<std::string, features::CompactAst>& programs) {
  return [&model, &device, &programs](const DfgNode& n) {
    auto it = programs.find(n.program_ref);
    if (it == programs.end()) throw ValidationError("node '" + n.id + "' references unknown program '" + n.program_ref + "'");
    return costmodel::predict(model, it->second, device);
  };
}

/// Predict, expand, simulate. Device count covers the expanded graph.
inline SimResult replay_model(Dfg g, const NodePredictor& predict, const std::map<std::string, int>& rules,
                              Dfg* expanded = nullptr) {
  dedup_predict(g, predict);
  Dfg x = expand_device_parallel(g, rules);
  SimResult r = simulate(x, device_count(x));
  if (expanded) *expanded = std::move(x);
  return r;
}

}  // namespace tpcost::replayer
