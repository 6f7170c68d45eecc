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
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "tpcost/dataset/dataset.hpp"
#include "tpcost/error.hpp"
#include "tpcost/features/compact_ast.hpp"
#include "tpcost/features/device.hpp"
#include "tpcost/ir/ast.hpp"
#include "tpcost/util/rng.hpp"

namespace tpcost::dataset {

/// Roofline-shaped ground truth used to label synthetic programs.
struct SynthOracleConfig {
  double flops_efficiency = 0.6;
  double mem_efficiency = 0.8;
  double per_leaf_overhead_s = 2e-6;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(flops_efficiency > 0 && flops_efficiency <= 1) || !(mem_efficiency > 0 && mem_efficiency <= 1)) {
      throw ValidationError("oracle efficiencies must lie in (0, 1]");
    }
    if (per_leaf_overhead_s < 0 || noise_sigma < 0) {
      throw ValidationError("oracle overhead and noise must be non-negative");
    }
  }
};

namespace detail {
inline double unlog(double v) { return std::exp2(v) - 1.0; }
}  // namespace detail

/// Noise-free roofline latency of a program, read off its computation vectors.
inline double roofline_latency(const features::CompactAst& compact, const features::DeviceSpec& device,
                               const SynthOracleConfig& cfg) {
  namespace e = features::entry;
  cfg.validate();
  if (!(device.peak_fp32_gflops > 0)) {
    throw MissingPeakFlops("device '" + device.name + "' has no peak FLOPS for the oracle");
  }
  const double flop_rate = device.peak_fp32_gflops * 1e9 * cfg.flops_efficiency;
  const double byte_rate = device.bandwidth_gbps * 1e9 / 8.0 * cfg.mem_efficiency;
  double total = 0;
  for (const auto& v : compact.leaf_vectors) {
    const double flops = detail::unlog(v[e::kLogTotalFlops]);
    const double bytes = detail::unlog(v[e::kLogTotalBytesRead]) + detail::unlog(v[e::kLogTotalBytesWritten]);
    double p = 1.0;
    if (v[e::kNumParallel] > 0) {
      p = std::min(static_cast<double>(device.cores), std::round(detail::unlog(v[e::kLogParallelExtent])));
      p = std::max(p, 1.0);
    }
    total += std::max(flops / (flop_rate * p), bytes / byte_rate);
  }
  return total + cfg.per_leaf_overhead_s * compact.n_leaf;
}

/// Oracle latency with multiplicative log-normal noise drawn from `rng`.
inline double synth_latency(const features::CompactAst& compact, const features::DeviceSpec& device,
                            const SynthOracleConfig& cfg, Rng& rng) {
  const double base = roofline_latency(compact, device, cfg);
  if (cfg.noise_sigma == 0.0) return base;
  return base * std::exp(cfg.noise_sigma * rng.normal());
}

/// Single-draw form; the noise stream is seeded from `cfg.seed`.
inline double synth_latency(const features::CompactAst& compact, const features::DeviceSpec& device,
                            const SynthOracleConfig& cfg) {
  Rng rng(cfg.seed);
  return synth_latency(compact, device, cfg, rng);
}

struct SynthOptions {
  int programs_per_task = 32;
  int max_leaves = ir::kDefaultMaxLeaves;
  int max_depth = 4;
  int max_extent = 512;
  std::vector<std::string> models = {"resnet50", "mobilenet_v2", "bert_tiny", "vgg16",
                                     "inception_v3", "bert_base", "densenet121", "resnet18"};
  /// Per-iteration op counts c are rewritten to c * op_scale + op_offset.
  /// scale 4, offset 3 moves the log2(1+c) features up by exactly 2.
  std::uint64_t op_scale = 1;
  std::uint64_t op_offset = 0;
};

struct SynthProgram {
  std::string task_id;
  std::string model_id;
  ir::ProgramAst ast;
};

namespace detail {

struct Skeleton {
  // Loops carry placeholder extents; leaves carry final statistics.
  ir::AstNode node;
};

inline ir::ComputeStats random_stats(Rng& rng, const SynthOptions& opt) {
  ir::ComputeStats s;
  s.fma_count = rng.below(9);
  s.add_count = rng.below(5);
  s.mul_count = rng.below(5);
  s.div_count = rng.bernoulli(0.2) ? 1 : 0;
  s.special_count = rng.bernoulli(0.25) ? 1 + rng.below(2) : 0;
  if (s.flops_per_iter() == 0) s.add_count = 1;
  s.bytes_read = 4 * (1 + rng.below(16));
  s.bytes_written = 4 * rng.below(5);
  s.buffers_read = 1 + rng.below(3);
  s.buffers_written = s.bytes_written > 0 ? 1 : 0;
  auto remap = [&](std::uint64_t& c) { c = c * opt.op_scale + opt.op_offset; };
  remap(s.fma_count);
  remap(s.add_count);
  remap(s.mul_count);
  remap(s.div_count);
  remap(s.special_count);
  return s;
}

inline int random_leaf_count(Rng& rng, int max_leaves) {
  static constexpr double kWeights[] = {30, 25, 15, 10, 8, 6, 4, 2};
  const int cap = std::min<int>(max_leaves, static_cast<int>(std::size(kWeights)));
  double total = 0;
  for (int i = 0; i < cap; ++i) total += kWeights[i];
  double u = rng.uniform() * total;
  for (int i = 0; i < cap; ++i) {
    u -= kWeights[i];
    if (u < 0) return i + 1;
  }
  return cap;
}

inline std::vector<int> random_partition(Rng& rng, int n, int max_parts) {
  const int parts = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min(n, max_parts))));
  std::vector<int> sizes(static_cast<std::size_t>(parts), 1);
  for (int i = parts; i < n; ++i) ++sizes[rng.below(sizes.size())];
  return sizes;
}

inline ir::AstNode skeleton_nest(Rng& rng, const SynthOptions& opt, int depth, int leaves, int& loop_id);

inline std::vector<ir::AstNode> skeleton_body(Rng& rng, const SynthOptions& opt, int depth, int leaves,
                                              int& loop_id) {
  std::vector<ir::AstNode> body;
  // Innermost permitted level: leaves sit directly in the body.
  if (depth >= opt.max_depth) {
    for (int i = 0; i < leaves; ++i) body.push_back(ir::AstNode::make_leaf("c", random_stats(rng, opt)));
    return body;
  }
  for (int group : random_partition(rng, leaves, 3)) {
    if (group == 1 && depth > 0 && rng.bernoulli(0.35)) {
      body.push_back(ir::AstNode::make_leaf("c", random_stats(rng, opt)));
    } else {
      body.push_back(skeleton_nest(rng, opt, depth, group, loop_id));
    }
  }
  return body;
}

inline ir::AstNode skeleton_nest(Rng& rng, const SynthOptions& opt, int depth, int leaves, int& loop_id) {
  ir::LoopInfo loop{"i" + std::to_string(loop_id++), 1, {}};
  return ir::AstNode::make_loop(std::move(loop), skeleton_body(rng, opt, depth + 1, leaves, loop_id));
}

/// Re-draws extents and annotations of a skeleton: one schedule of the task.
inline void instantiate(ir::AstNode& node, Rng& rng, const SynthOptions& opt, int depth) {
  if (node.is_leaf()) return;
  auto& loop = std::get<ir::LoopInfo>(node.kind);
  const double log_max = std::log2(static_cast<double>(opt.max_extent));
  loop.extent = std::clamp<std::int64_t>(std::llround(std::exp2(rng.uniform() * log_max)), 1, opt.max_extent);
  loop.annotations = {};
  bool has_leaf_child = false;
  for (const auto& c : node.children) has_leaf_child |= c.is_leaf();
  if (depth == 0 && rng.bernoulli(0.35)) loop.annotations.insert(ir::Annotation::kParallel);
  if (has_leaf_child && rng.bernoulli(0.3)) loop.annotations.insert(ir::Annotation::kVectorize);
  if (!has_leaf_child && depth > 0 && rng.bernoulli(0.2)) loop.annotations.insert(ir::Annotation::kUnroll);
  for (auto& c : node.children) instantiate(c, rng, opt, depth + 1);
}

inline std::string numbered(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%06zu", prefix, i);
  return buf;
}

}  // namespace detail

/// Random tensor programs grouped into tasks that share loop structure and
/// compute statistics and differ in extents and annotations.
inline std::vector<SynthProgram> generate_programs(int n, std::uint64_t seed, const SynthOptions& opt = {}) {
  if (n < 1) throw ValidationError("need at least one program");
  Rng rng(seed);
  std::vector<SynthProgram> out;
  std::vector<ir::AstNode> skeleton;
  std::string task_id, model_id;
  for (int i = 0; i < n; ++i) {
    if (i % opt.programs_per_task == 0) {
      const auto task = static_cast<std::size_t>(i / opt.programs_per_task);
      task_id = detail::numbered("t", task);
      model_id = opt.models[task % opt.models.size()];
      const int leaves = detail::random_leaf_count(rng, opt.max_leaves);
      int loop_id = 0;
      skeleton.clear();
      for (int group : detail::random_partition(rng, leaves, 2)) {
        skeleton.push_back(detail::skeleton_nest(rng, opt, 0, group, loop_id));
      }
    }
    std::vector<ir::AstNode> body = skeleton;
    for (auto& s : body) detail::instantiate(s, rng, opt, 0);
    out.push_back({task_id, model_id, ir::make_program(detail::numbered("p", static_cast<std::size_t>(i)), std::move(body))});
  }
  return out;
}

/// Labels every generated program on every device with the oracle.
inline Dataset generate_synthetic(int n, const std::vector<features::DeviceSpec>& devices,
                                  const SynthOracleConfig& cfg, std::uint64_t seed,
                                  const SynthOptions& opt = {}) {
  if (devices.empty()) throw ValidationError("need at least one device");
  cfg.validate();
  Rng noise(cfg.seed);
  Dataset ds;
  std::size_t index = 0;
  for (const auto& prog : generate_programs(n, seed, opt)) {
    const std::string base_id = detail::numbered("s", index++);
    const auto compact = features::build_compact_ast(prog.ast, opt.max_leaves);
    for (const auto& dev : devices) {
      Sample s;
      s.id = base_id;
      if (devices.size() > 1) s.id += "_" + dev.name;
      s.task_id = prog.task_id;
      s.model_id = prog.model_id;
      s.device_id = dev.name;
      s.compact = compact;
      s.latency_s = synth_latency(compact, dev, cfg, noise);
      ds.samples.push_back(std::move(s));
    }
  }
  return ds;
}

}  // namespace tpcost::dataset
