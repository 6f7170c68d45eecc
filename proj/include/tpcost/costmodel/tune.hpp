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

#include <cmath>
#include <limits>
#include <vector>

#include "tpcost/costmodel/trainer.hpp"

namespace tpcost::costmodel {

/// Candidate values per hyper-parameter. Real ranges are sampled
/// log-uniformly; every other field picks uniformly from its list.
struct SearchSpace {
  std::vector<int> n_layers = {1, 2, 3};
  std::vector<int> d_model = {32, 64, 96};
  std::vector<int> n_heads = {1, 2, 4};
  std::vector<int> d_ff = {64, 128, 256};
  std::vector<int> d_embed = {16, 32, 64};
  std::vector<std::vector<int>> decoder_dims = {{64}, {64, 64}, {128, 128}};
  std::vector<int> batch_size = {32, 64, 128};
  std::vector<OptimizerKind> optimizer = {OptimizerKind::kAdam, OptimizerKind::kSgd};
  std::vector<LrSchedule> lr_schedule = {LrSchedule::kConstant, LrSchedule::kCyclic};
  double lr_min = 1e-4, lr_max = 3e-3;
  double weight_decay_min = 1e-6, weight_decay_max = 1e-2;
  double alpha_min = 0.1, alpha_max = 10.0;
};

struct TuneTrial {
  CostModelConfig config;
  double val_mape = std::numeric_limits<double>::infinity();
};

struct TuneResult {
  CostModelConfig best;
  std::size_t best_trial = 0;
  std::vector<TuneTrial> trials;
};

namespace detail {

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  if (v.empty()) throw ConfigError("empty search-space dimension");
  return v[rng.below(v.size())];
}

inline double log_uniform(double lo, double hi, Rng& rng) {
  return std::exp(rng.uniform(std::log(lo), std::log(hi)));
}

}  // namespace detail

/// Draws one configuration; head count is redrawn until it divides d_model.
inline CostModelConfig sample_config(const SearchSpace& space, const CostModelConfig& base, Rng& rng) {
  CostModelConfig c = base;
  c.n_layers = detail::pick(space.n_layers, rng);
  c.d_model = detail::pick(space.d_model, rng);
  std::vector<int> heads;
  for (int h : space.n_heads) {
    if (c.d_model % h == 0) heads.push_back(h);
  }
  c.n_heads = heads.empty() ? 1 : detail::pick(heads, rng);
  c.d_ff = detail::pick(space.d_ff, rng);
  c.d_embed = detail::pick(space.d_embed, rng);
  c.decoder_dims = detail::pick(space.decoder_dims, rng);
  c.batch_size = detail::pick(space.batch_size, rng);
  c.optimizer = detail::pick(space.optimizer, rng);
  c.lr_schedule = detail::pick(space.lr_schedule, rng);
  c.lr = detail::log_uniform(space.lr_min, space.lr_max, rng);
  c.weight_decay = detail::log_uniform(space.weight_decay_min, space.weight_decay_max, rng);
  c.alpha_cmd = detail::log_uniform(space.alpha_min, space.alpha_max, rng);
  return c;
}

/// Seeded random search. Each trial trains for at most `epoch_cap` epochs;
/// the lowest validation MAPE wins and ties go to the earlier trial.
inline TuneResult tune(const SearchSpace& space, int budget, const dataset::Dataset& ds, const DeviceTable& devices,
                       std::uint64_t seed, const CostModelConfig& base = {}, int epoch_cap = 20) {
  if (budget < 1) throw ConfigError("tuning budget must be at least 1");
  Rng rng(seed);
  TuneResult result;
  for (int t = 0; t < budget; ++t) {
    TuneTrial trial;
    trial.config = sample_config(space, base, rng);
    trial.config.epochs = std::min(trial.config.epochs, epoch_cap);
    trial.config.seed = seed + static_cast<std::uint64_t>(t);
    try {
      trial.val_mape = train(trial.config, ds, devices).best_val_mape;
    } catch (const NonFiniteLoss&) {
      trial.val_mape = std::numeric_limits<double>::infinity();
    }
    if (t == 0 || trial.val_mape < result.trials[result.best_trial].val_mape) result.best_trial = static_cast<std::size_t>(t);
    result.trials.push_back(trial);
  }
  result.best = result.trials[result.best_trial].config;
  return result;
}

}  // namespace tpcost::costmodel
