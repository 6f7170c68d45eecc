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

#include <span>
#include <vector>

#include "tpcost/costmodel/trainer.hpp"

namespace tpcost::costmodel {

/// Aggregated latents for any number of inputs, computed in chunks.
inline LatentBatch latents(const CostModelParams& params, std::span<const EncodedInput> inputs,
                           std::size_t chunk = 512) {
  LatentBatch out;
  const auto n = static_cast<Eigen::Index>(inputs.size());
  for (std::size_t start = 0; start < inputs.size(); start += chunk) {
    const auto len = std::min(chunk, inputs.size() - start);
    auto r = forward(params, inputs.subspan(start, len)).latents;
    if (start == 0) {
      out.z_x.resize(n, r.z_x.cols());
      out.z_v.resize(n, r.z_v.cols());
      out.z.resize(n, r.z.cols());
    }
    const auto s = static_cast<Eigen::Index>(start), l = static_cast<Eigen::Index>(len);
    out.z_x.middleRows(s, l) = r.z_x;
    out.z_v.middleRows(s, l) = r.z_v;
    out.z.middleRows(s, l) = r.z;
  }
  return out;
}

/// CMD between the aggregated latents of two input sets.
inline double domain_cmd(const CostModelParams& params, std::span<const EncodedInput> source,
                         std::span<const EncodedInput> target, int order) {
  if (source.empty() || target.empty()) throw EmptySet("domain_cmd needs two non-empty sets");
  return cmd(latents(params, source).z, latents(params, target).z, order);
}

struct FinetuneData {
  /// Labeled source-domain samples (supervised limb).
  std::vector<dataset::Sample> source;
  /// Unlabeled target-domain programs; only their features are used.
  std::vector<dataset::Sample> target;
  /// Optional labeled target samples, trained on alongside the source.
  std::vector<dataset::Sample> target_labeled;
  /// Optional labeled samples for the per-epoch validation columns.
  std::vector<dataset::Sample> valid;
};

struct FinetuneOptions : TrainOptions {
  /// Rows drawn from each domain for the CMD limb of every step; 0 means
  /// batch_size. High-order sample moments are noisy, so larger is steadier.
  int cmd_batch = 0;
};

struct FinetuneResult {
  CostModel model;
  std::vector<TrainLogRow> log;
  double cmd_before = 0;
  double cmd_after = 0;
};

/// Continues training from `base` on labeled data while pulling the source
/// and target latent distributions together with alpha * CMD. Labeled
/// minibatches are leaf-count buckets, so the CMD limb instead compares
/// uniformly drawn source and target minibatches. The
/// input scaler and label transform of `base` stay fixed.
inline FinetuneResult finetune(const CostModel& base, const CostModelConfig& cfg, const FinetuneData& data,
                               const DeviceTable& devices, const FinetuneOptions& opts = {}) {
  cfg.validate();
  if (data.source.empty() && data.target_labeled.empty()) throw EmptyDataset("fine-tuning needs labeled samples");
  if (data.target.empty()) throw EmptyDataset("fine-tuning needs target-domain features");

  FinetuneResult result;
  result.model = base;
  CostModel& m = result.model;
  m.params.config.alpha_cmd = cfg.alpha_cmd;

  std::vector<dataset::Sample> labeled = data.source;
  labeled.insert(labeled.end(), data.target_labeled.begin(), data.target_labeled.end());
  const auto labeled_in = encode_for(m, labeled, devices);
  const auto source_in = encode_for(m, data.source.empty() ? labeled : data.source, devices);
  const auto target_in = encode_for(m, data.target, devices);
  const auto valid_in = encode_for(m, data.valid, devices);
  std::vector<double> targets, valid_y;
  for (const auto& s : labeled) targets.push_back(m.labels.to_model(s.latency_s));
  for (const auto& s : data.valid) valid_y.push_back(s.latency_s);

  result.cmd_before = domain_cmd(m.params, source_in, target_in, cfg.cmd_order);

  Optimizer opt(cfg.optimizer, m.params.weights, cfg.weight_decay);
  const LossSpec spec = loss_spec(cfg, m.labels, cfg.alpha_cmd);
  Rng rng(cfg.seed ^ 0xf1eULL);
  std::vector<std::size_t> pool(labeled_in.size());
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = scheduled_lr(cfg, epoch);
    double loss_sum = 0;
    for (const auto& batch : bucketed_batches(labeled_in, pool, cfg.batch_size, rng)) {
      std::vector<const EncodedInput*> ptrs, sptrs, tptrs;
      std::vector<double> y;
      for (auto i : batch) {
        ptrs.push_back(&labeled_in[i]);
        y.push_back(targets[i]);
      }
      if (cfg.alpha_cmd > 0) {
        const int cmd_rows = opts.cmd_batch > 0 ? opts.cmd_batch : cfg.batch_size;
        for (int k = 0; k < cmd_rows; ++k) {
          sptrs.push_back(&source_in[rng.below(source_in.size())]);
          tptrs.push_back(&target_in[rng.below(target_in.size())]);
        }
      }
      LossAndGrad lg;
      try {
        lg = loss_and_gradients(m.params, ptrs, y, spec, tptrs, sptrs);
      } catch (const NonFiniteLoss& e) {
        throw DivergenceError(epoch, e.what());
      }
      opt.step(m.params.weights, lg.grads, lr);
      loss_sum += lg.loss * static_cast<double>(batch.size());
    }
    if (!m.params.all_finite()) throw DivergenceError(epoch, "non-finite parameters");
    TrainLogRow row{epoch, loss_sum / static_cast<double>(labeled_in.size()), 0.0, 0.0, lr};
    if (!valid_in.empty()) {
      const Metrics vm = evaluate(m, valid_in, valid_y);
      row.val_mape = vm.mape;
      row.val_rmse = vm.rmse;
    }
    result.log.push_back(row);
    if (opts.on_epoch) opts.on_epoch(row);
  }
  result.cmd_after = domain_cmd(m.params, source_in, target_in, cfg.cmd_order);
  return result;
}

}  // namespace tpcost::costmodel
