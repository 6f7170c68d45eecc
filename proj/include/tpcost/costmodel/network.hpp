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
#include <optional>
#include <span>
#include <vector>

#include "tpcost/costmodel/params.hpp"
#include "tpcost/costmodel/tape.hpp"
#include "tpcost/error.hpp"
#include "tpcost/features/encoding.hpp"

namespace tpcost::costmodel {

using features::EncodedInput;

using WeightVars = NetworkT<Var>;

/// Registers every weight on the tape; gradients land in `grads` when given.
inline WeightVars bind_weights(Tape& tape, const Weights& w, Weights* grads) {
  WeightVars vars = [&] {
    WeightVars v;
    v.layers.resize(w.layers.size());
    v.leaf_embed.resize(w.leaf_embed.size());
    v.decoder.resize(w.decoder.size());
    return v;
  }();
  if (grads) {
    for_each_tensor([&](const std::string&, const Matrix& m, Matrix& g, Var& v) { v = tape.param(m, &g); },
                    w, *grads, vars);
  } else {
    for_each_tensor([&](const std::string&, const Matrix& m, Var& v) { v = tape.param(m, nullptr); }, w, vars);
  }
  return vars;
}

/// Tape handles for one group of samples that share a leaf count.
struct GroupVars {
  Var pred;  // rows x 1
  Var z_x;   // rows x d_embed
  Var z_v;   // rows x d_device
  Var z;     // rows x d_embed
};

/// Rows of `inputs` that share a leaf count, stacked for one pass.
struct LeafGroup {
  int n_leaf = 0;
  std::vector<std::size_t> members;  // positions in the caller's batch
};

inline std::vector<LeafGroup> group_by_leaf_count(std::span<const EncodedInput* const> inputs, int n_leaf_max) {
  std::map<int, LeafGroup> groups;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const int l = inputs[i]->n_leaf();
    if (l < 1 || l > n_leaf_max) {
      throw LeafCountExceeded("input has " + std::to_string(l) + " leaves; model supports 1.." +
                              std::to_string(n_leaf_max));
    }
    auto& g = groups[l];
    g.n_leaf = l;
    g.members.push_back(i);
  }
  std::vector<LeafGroup> out;
  for (auto& [l, g] : groups) out.push_back(std::move(g));
  return out;
}

/// Encoder, leaf-count-specific embedding, device network, gating and
/// decoder for samples that all have `n_leaf` leaves.
inline GroupVars forward_group(Tape& tape, const WeightVars& w, const CostModelConfig& cfg,
                               std::span<const EncodedInput* const> inputs, int n_leaf) {
  const auto rows = static_cast<Eigen::Index>(inputs.size());
  const Eigen::Index L = n_leaf;
  Matrix x(rows * L, features::kNumEntries);
  Matrix dev(rows, features::kDeviceEntries);
  for (Eigen::Index i = 0; i < rows; ++i) {
    x.middleRows(i * L, L) = inputs[static_cast<std::size_t>(i)]->matrix;
    for (int j = 0; j < features::kDeviceEntries; ++j) {
      dev(i, j) = inputs[static_cast<std::size_t>(i)]->device_vector[static_cast<std::size_t>(j)];
    }
  }
  Var h = tape.linear(tape.input(std::move(x)), w.input.w, w.input.b);
  for (const auto& layer : w.layers) {
    Var q = tape.linear(h, layer.q.w, layer.q.b);
    Var k = tape.linear(h, layer.k.w, layer.k.b);
    Var v = tape.linear(h, layer.v.w, layer.v.b);
    Var attn = tape.linear(tape.self_attention(q, k, v, n_leaf, cfg.n_heads), layer.o.w, layer.o.b);
    Var h1 = tape.layer_norm(tape.add(h, attn), layer.ln1_gain, layer.ln1_bias);
    Var ff = tape.linear(tape.gelu(tape.linear(h1, layer.ff1.w, layer.ff1.b)), layer.ff2.w, layer.ff2.b);
    h = tape.layer_norm(tape.add(h1, ff), layer.ln2_gain, layer.ln2_bias);
  }
  const auto& embed = w.leaf_embed[static_cast<std::size_t>(n_leaf - 1)];
  Var flat = tape.reshape(h, rows, L * cfg.d_model);
  GroupVars out;
  out.z_x = tape.linear(flat, embed.w, embed.b);
  out.z_v = tape.gelu(tape.linear(tape.input(std::move(dev)), w.device_hidden.w, w.device_hidden.b));
  out.z = tape.mul(out.z_x, tape.linear(out.z_v, w.device_proj.w, w.device_proj.b));
  Var d = out.z;
  for (std::size_t i = 0; i + 1 < w.decoder.size(); ++i) d = tape.gelu(tape.linear(d, w.decoder[i].w, w.decoder[i].b));
  out.pred = tape.linear(d, w.decoder.back().w, w.decoder.back().b);
  return out;
}

/// Whole-batch tape handles, rows in group order (see `order`).
struct BatchVars {
  Var pred, z_x, z_v, z;
  std::vector<std::size_t> order;  // row r of every output belongs to input order[r]
};

inline BatchVars forward_batch(Tape& tape, const WeightVars& w, const CostModelConfig& cfg,
                               std::span<const EncodedInput* const> inputs) {
  if (inputs.empty()) throw EmptyBatch("forward of empty batch");
  BatchVars out;
  std::vector<Var> preds, zx, zv, z;
  for (const auto& g : group_by_leaf_count(inputs, cfg.n_leaf_max)) {
    std::vector<const EncodedInput*> members;
    for (auto i : g.members) members.push_back(inputs[i]);
    GroupVars gv = forward_group(tape, w, cfg, members, g.n_leaf);
    preds.push_back(gv.pred);
    zx.push_back(gv.z_x);
    zv.push_back(gv.z_v);
    z.push_back(gv.z);
    out.order.insert(out.order.end(), g.members.begin(), g.members.end());
  }
  auto join = [&](const std::vector<Var>& parts) { return parts.size() == 1 ? parts[0] : tape.concat_rows(parts); };
  out.pred = join(preds);
  out.z_x = join(zx);
  out.z_v = join(zv);
  out.z = join(z);
  return out;
}

struct LatentBatch {
  Matrix z_x;
  Matrix z_v;
  Matrix z;
};

struct ForwardResult {
  std::vector<double> predictions;  // transformed-label space
  LatentBatch latents;
};

/// Inference over any mix of leaf counts; outputs follow input order.
inline ForwardResult forward(const CostModelParams& params, std::span<const EncodedInput* const> inputs) {
  Tape tape;
  WeightVars w = bind_weights(tape, params.weights, nullptr);
  BatchVars b = forward_batch(tape, w, params.config, inputs);
  const auto n = inputs.size();
  ForwardResult r;
  r.predictions.resize(n);
  r.latents.z_x.resize(static_cast<Eigen::Index>(n), tape.value(b.z_x).cols());
  r.latents.z_v.resize(static_cast<Eigen::Index>(n), tape.value(b.z_v).cols());
  r.latents.z.resize(static_cast<Eigen::Index>(n), tape.value(b.z).cols());
  for (std::size_t row = 0; row < n; ++row) {
    const auto dst = static_cast<Eigen::Index>(b.order[row]);
    const auto src = static_cast<Eigen::Index>(row);
    r.predictions[b.order[row]] = tape.value(b.pred)(src, 0);
    r.latents.z_x.row(dst) = tape.value(b.z_x).row(src);
    r.latents.z_v.row(dst) = tape.value(b.z_v).row(src);
    r.latents.z.row(dst) = tape.value(b.z).row(src);
  }
  return r;
}

inline ForwardResult forward(const CostModelParams& params, std::span<const EncodedInput> inputs) {
  std::vector<const EncodedInput*> ptrs;
  for (const auto& in : inputs) ptrs.push_back(&in);
  return forward(params, ptrs);
}

/// Objective selection for loss_and_gradients().
struct LossSpec {
  LossKind kind = LossKind::kHybrid;
  double lambda_hybrid = 1e-3;
  /// Relative-error denominators are target + denom_offset.
  double denom_offset = 0.0;
  double alpha_cmd = 0.0;
  int cmd_order = 5;

  double mse_weight() const { return kind == LossKind::kMape ? 0.0 : 1.0; }
  double mape_weight() const {
    switch (kind) {
      case LossKind::kHybrid:
        return lambda_hybrid;
      case LossKind::kMse:
        return 0.0;
      case LossKind::kMape:
        return 1.0;
    }
    return 0.0;
  }
};

struct LossAndGrad {
  double loss = 0;
  double supervised = 0;
  double cmd = 0;
  Weights grads;
};

/// Loss on a labeled batch (targets in input order), plus alpha * CMD between
/// aggregated latents of a source set and `target_domain` when given. The
/// source side is `source_domain`, or the labeled batch itself when empty.
inline LossAndGrad loss_and_gradients(const CostModelParams& params, std::span<const EncodedInput* const> batch,
                                      std::span<const double> targets, const LossSpec& spec,
                                      std::span<const EncodedInput* const> target_domain = {},
                                      std::span<const EncodedInput* const> source_domain = {}) {
  if (batch.size() != targets.size()) throw DimensionMismatch("batch and targets differ in length");
  LossAndGrad out;
  out.grads = zeros_like(params.weights);
  Tape tape;
  WeightVars w = bind_weights(tape, params.weights, &out.grads);
  BatchVars b = forward_batch(tape, w, params.config, batch);
  std::vector<double> y(batch.size()), denom(batch.size());
  for (std::size_t row = 0; row < batch.size(); ++row) {
    y[row] = targets[b.order[row]];
    denom[row] = y[row] + spec.denom_offset;
  }
  Var loss = tape.regression_loss(b.pred, std::move(y), std::move(denom), spec.mse_weight(), spec.mape_weight());
  out.supervised = tape.scalar(loss);
  if (!target_domain.empty() && spec.alpha_cmd > 0) {
    BatchVars t = forward_batch(tape, w, params.config, target_domain);
    Var zs = b.z;
    if (!source_domain.empty()) zs = forward_batch(tape, w, params.config, source_domain).z;
    Var c = tape.cmd_loss(zs, t.z, spec.cmd_order);
    out.cmd = tape.scalar(c);
    loss = tape.weighted_sum(loss, 1.0, c, spec.alpha_cmd);
  }
  out.loss = tape.scalar(loss);
  if (!std::isfinite(out.loss)) throw NonFiniteLoss("loss is not finite");
  tape.backward(loss);
  return out;
}

}  // namespace tpcost::costmodel
