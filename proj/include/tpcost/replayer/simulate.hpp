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

#include <algorithm>
#include <map>
#include <queue>
#include <string>
#include <tuple>
#include <vector>

#include "tpcost/replayer/dfg.hpp"

namespace tpcost::replayer {

struct Interval {
  double start = 0;
  double end = 0;  // start + duration; the node's gap follows

  bool operator==(const Interval&) const = default;
};

struct SimResult {
  double iteration_time = 0;
  std::map<std::string, Interval> schedule;
  /// Node ids in the order they were scheduled.
  std::vector<std::string> order;
};

/// Discrete-event replay on n_devices queues. Each device serves its ready
/// nodes by (ready time, id); the next device to act is the one with the
/// smallest device time among those with queued work, lowest index first.
/// The iteration time is the final device time, trailing gaps included.
inline SimResult simulate(const Dfg& g, int n_devices) {
  if (n_devices < 1) throw InvalidDevice("need at least one device");
  const auto succ = g.successors();
  const auto n = g.nodes.size();
  for (const auto& node : g.nodes) {
    if (node.device < 0 || node.device >= n_devices)
      throw InvalidDevice("node '" + node.id + "' is on device " + std::to_string(node.device));
    if (!(node.duration >= 0) || !(node.gap >= 0)) throw ValidationError("node '" + node.id + "' has a negative time");
  }
  std::vector<int> ref(n, 0);
  for (const auto& s : succ)
    for (auto v : s) ++ref[v];
  std::vector<double> ready(n, 0.0);

  using Entry = std::tuple<double, const std::string*, std::size_t>;
  auto later = [](const Entry& a, const Entry& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    return *std::get<1>(a) > *std::get<1>(b);
  };
  using Queue = std::priority_queue<Entry, std::vector<Entry>, decltype(later)>;
  std::vector<Queue> queues(static_cast<std::size_t>(n_devices), Queue(later));
  std::vector<double> device_time(static_cast<std::size_t>(n_devices), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (ref[i] == 0) queues[static_cast<std::size_t>(g.nodes[i].device)].emplace(0.0, &g.nodes[i].id, i);
  }

  SimResult r;
  for (;;) {
    int dev = -1;
    for (int d = 0; d < n_devices; ++d) {
      const auto du = static_cast<std::size_t>(d);
      if (queues[du].empty()) continue;
      if (dev < 0 || device_time[du] < device_time[static_cast<std::size_t>(dev)]) dev = d;
    }
    if (dev < 0) break;
    auto& q = queues[static_cast<std::size_t>(dev)];
    const std::size_t u = std::get<2>(q.top());
    q.pop();
    const auto& node = g.nodes[u];
    double& dt = device_time[static_cast<std::size_t>(dev)];
    const double start = std::max(dt, ready[u]);
    const double end = start + node.duration;
    dt = end + node.gap;
    r.schedule[node.id] = {start, end};
    r.order.push_back(node.id);
    for (auto v : succ[u]) {
      ready[v] = std::max(ready[v], dt);
      if (--ref[v] == 0) queues[static_cast<std::size_t>(g.nodes[v].device)].emplace(ready[v], &g.nodes[v].id, v);
    }
  }
  if (r.order.size() != n) throw CycleDetected("dataflow graph has a cycle");
  for (double t : device_time) r.iteration_time = std::max(r.iteration_time, t);
  return r;
}

/// Devices needed to hold every node of `g`.
inline int device_count(const Dfg& g) {
  int d = 0;
  for (const auto& n : g.nodes) d = std::max(d, n.device + 1);
  return std::max(d, 1);
}

}  // namespace tpcost::replayer
