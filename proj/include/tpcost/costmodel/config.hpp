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
#include <vector>

#include "tpcost/error.hpp"
#include "tpcost/ir/ast.hpp"

namespace tpcost::costmodel {

enum class OptimizerKind { kAdam, kSgd };
enum class LrSchedule { kConstant, kCyclic };
/// Which limbs of the pre-training objective are active.
enum class LossKind { kHybrid, kMse, kMape };

inline const char* to_string(OptimizerKind k) { return k == OptimizerKind::kAdam ? "adam" : "sgd"; }
inline const char* to_string(LrSchedule s) { return s == LrSchedule::kConstant ? "constant" : "cyclic"; }
inline const char* to_string(LossKind k) {
  switch (k) {
    case LossKind::kHybrid:
      return "hybrid";
    case LossKind::kMse:
      return "mse";
    case LossKind::kMape:
      return "mape";
  }
  return "?";
}

inline OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "adam") return OptimizerKind::kAdam;
  if (s == "sgd") return OptimizerKind::kSgd;
  throw ConfigError("unknown optimizer '" + s + "'");
}
inline LrSchedule parse_schedule(const std::string& s) {
  if (s == "constant") return LrSchedule::kConstant;
  if (s == "cyclic") return LrSchedule::kCyclic;
  throw ConfigError("unknown lr schedule '" + s + "'");
}
inline LossKind parse_loss(const std::string& s) {
  if (s == "hybrid") return LossKind::kHybrid;
  if (s == "mse") return LossKind::kMse;
  if (s == "mape") return LossKind::kMape;
  throw ConfigError("unknown loss '" + s + "'");
}

struct CostModelConfig {
  int d_model = 64;
  int n_layers = 2;
  int n_heads = 2;
  int d_ff = 128;
  int d_embed = 32;
  int d_device = 16;
  std::vector<int> decoder_dims = {64, 64};
  int n_leaf_max = ir::kDefaultMaxLeaves;

  double lambda_hybrid = 1e-3;
  double alpha_cmd = 1.0;
  int cmd_order = 5;
  LossKind loss = LossKind::kHybrid;

  double lr = 1e-3;
  double weight_decay = 1e-5;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  LrSchedule lr_schedule = LrSchedule::kConstant;
  int cyclic_period = 20;
  int batch_size = 64;
  int epochs = 100;
  std::uint64_t seed = 0;

  void validate() const {
    auto positive = [](int v, const char* name) {
      if (v <= 0) throw ConfigError(std::string(name) + " must be positive");
    };
    positive(d_model, "d_model");
    positive(n_layers, "n_layers");
    positive(n_heads, "n_heads");
    positive(d_ff, "d_ff");
    positive(d_embed, "d_embed");
    positive(d_device, "d_device");
    positive(n_leaf_max, "n_leaf_max");
    positive(batch_size, "batch_size");
    positive(cyclic_period, "cyclic_period");
    if (d_model % n_heads != 0) throw ConfigError("d_model must be divisible by n_heads");
    for (int d : decoder_dims) positive(d, "decoder_dims entry");
    if (!(lambda_hybrid > 0)) throw ConfigError("lambda_hybrid must be positive");
    if (alpha_cmd < 0) throw ConfigError("alpha_cmd must be non-negative");
    if (cmd_order < 1) throw ConfigError("cmd_order must be >= 1");
    if (!(lr > 0)) throw ConfigError("lr must be positive");
    if (weight_decay < 0) throw ConfigError("weight_decay must be non-negative");
    if (epochs < 0) throw ConfigError("epochs must be non-negative");
  }

  bool operator==(const CostModelConfig&) const = default;
};

/// Full-scale configuration found by the original auto-tuning run.
inline CostModelConfig reference_config() {
  CostModelConfig c;
  c.batch_size = 600;
  c.d_model = 716;
  c.n_heads = 4;
  c.n_layers = 11;
  c.d_ff = 985;
  c.d_embed = 69;
  c.d_device = 69;
  c.decoder_dims = {930, 930, 930};
  c.lr = 1.68e-5;
  c.lr_schedule = LrSchedule::kCyclic;
  c.optimizer = OptimizerKind::kAdam;
  c.weight_decay = 0.0013;
  c.alpha_cmd = 1.0;
  return c;
}

}  // namespace tpcost::costmodel
