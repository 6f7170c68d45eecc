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
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "tpcost/costmodel/loss.hpp"
#include "tpcost/costmodel/network.hpp"
#include "tpcost/costmodel/optimizer.hpp"
#include "tpcost/dataset/boxcox.hpp"
#include "tpcost/dataset/dataset.hpp"
#include "tpcost/features/encoding.hpp"

namespace tpcost::costmodel {

using DeviceTable = std::map<std::string, features::DeviceSpec>;

inline DeviceTable make_device_table(const std::vector<features::DeviceSpec>& devices) {
  DeviceTable t;
  for (const auto& d : devices) t[d.name] = d;
  return t;
}

inline const features::DeviceSpec& lookup_device(const DeviceTable& devices, const std::string& name) {
  auto it = devices.find(name);
  if (it == devices.end()) throw ValidationError("unknown device '" + name + "'");
  return it->second;
}

inline std::vector<EncodedInput> encode_samples(std::span<const dataset::Sample> samples, const DeviceTable& devices) {
  std::vector<EncodedInput> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(features::encode_input(s.compact, lookup_device(devices, s.device_id)));
  return out;
}

/// Per-column standardization of encoded leaf matrices. Columns that are
/// constant on the training set keep scale 1.
struct InputScaler {
  std::vector<double> mean = std::vector<double>(features::kNumEntries, 0.0);
  std::vector<double> scale = std::vector<double>(features::kNumEntries, 1.0);

  void apply(EncodedInput& in) const {
    for (Eigen::Index r = 0; r < in.matrix.rows(); ++r) {
      for (Eigen::Index c = 0; c < in.matrix.cols(); ++c) {
        const auto j = static_cast<std::size_t>(c);
        in.matrix(r, c) = (in.matrix(r, c) - mean[j]) / scale[j];
      }
    }
  }

  bool operator==(const InputScaler&) const = default;
};

inline InputScaler fit_input_scaler(std::span<const EncodedInput> inputs) {
  InputScaler s;
  const auto w = static_cast<std::size_t>(features::kNumEntries);
  std::vector<double> sum(w, 0.0), sq(w, 0.0);
  double rows = 0;
  for (const auto& in : inputs) {
    for (Eigen::Index r = 0; r < in.matrix.rows(); ++r) {
      for (std::size_t j = 0; j < w; ++j) {
        const double v = in.matrix(r, static_cast<Eigen::Index>(j));
        sum[j] += v;
        sq[j] += v * v;
      }
      rows += 1;
    }
  }
  if (rows == 0) return s;
  for (std::size_t j = 0; j < w; ++j) {
    const double m = sum[j] / rows;
    const double var = std::max(0.0, sq[j] / rows - m * m);
    s.mean[j] = m;
    s.scale[j] = var > 1e-12 ? std::sqrt(var) : 1.0;
  }
  return s;
}

/// Trained predictor: network weights plus the input and label spaces
/// they were fitted in.
struct CostModel {
  CostModelParams params;
  InputScaler inputs;
  dataset::LabelTransform labels;
};

inline EncodedInput encode_for(const CostModel& model, const features::CompactAst& compact,
                               const features::DeviceSpec& device) {
  EncodedInput in = features::encode_input(compact, device);
  model.inputs.apply(in);
  return in;
}

inline std::vector<EncodedInput> encode_for(const CostModel& model, std::span<const dataset::Sample> samples,
                                            const DeviceTable& devices) {
  std::vector<EncodedInput> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(encode_for(model, s.compact, lookup_device(devices, s.device_id)));
  return out;
}

struct TrainLogRow {
  int epoch = 0;
  double train_loss = 0;
  double val_mape = 0;
  double val_rmse = 0;
  double lr = 0;

  bool operator==(const TrainLogRow&) const = default;
};

inline void write_log_csv(std::ostream& os, const std::vector<TrainLogRow>& log) {
  os << "epoch,train_loss,val_mape,val_rmse,lr\n";
  char buf[160];
  for (const auto& r : log) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\n", r.epoch, r.train_loss, r.val_mape, r.val_rmse, r.lr);
    os << buf;
  }
}

/// Inverts a model-space prediction; predictions without a positive preimage
/// are pinned to the nearest representable end of the label range.
inline double to_latency_clamped(const dataset::LabelTransform& lt, double t) {
  try {
    return lt.from_model(t);
  } catch (const DomainError&) {
    const double lam = lt.boxcox.lambda_bc;
    return lam > 0 ? std::numeric_limits<double>::min() : std::numeric_limits<double>::max();
  }
}

/// Model-space predictions for many inputs, processed in fixed-size chunks.
inline std::vector<double> predict_transformed(const CostModelParams& params, std::span<const EncodedInput> inputs,
                                               std::size_t chunk = 512) {
  std::vector<double> out;
  out.reserve(inputs.size());
  for (std::size_t start = 0; start < inputs.size(); start += chunk) {
    const auto n = std::min(chunk, inputs.size() - start);
    auto r = forward(params, inputs.subspan(start, n));
    out.insert(out.end(), r.predictions.begin(), r.predictions.end());
  }
  return out;
}

inline std::vector<double> predict_latencies(const CostModel& model, std::span<const EncodedInput> inputs) {
  auto t = predict_transformed(model.params, inputs);
  for (double& v : t) v = to_latency_clamped(model.labels, v);
  return t;
}

/// Latency in seconds for one program on one device.
inline double predict(const CostModel& model, const features::CompactAst& compact, const features::DeviceSpec& device) {
  const EncodedInput in = encode_for(model, compact, device);
  const EncodedInput* ptr = &in;
  const double t = forward(model.params, std::span<const EncodedInput* const>(&ptr, 1)).predictions[0];
  return model.labels.from_model(t);
}

inline Metrics evaluate(const CostModel& model, std::span<const EncodedInput> inputs, std::span<const double> latency) {
  const auto pred = predict_latencies(model, inputs);
  return metrics(pred, latency);
}

inline LossSpec loss_spec(const CostModelConfig& cfg, const dataset::LabelTransform& lt, double alpha = 0.0) {
  return LossSpec{cfg.loss, cfg.lambda_hybrid, lt.positive_offset, alpha, cfg.cmd_order};
}

/// Minibatches drawn within leaf-count buckets, bucket order interleaved.
inline std::vector<std::vector<std::size_t>> bucketed_batches(std::span<const EncodedInput> inputs,
                                                              std::span<const std::size_t> pool, int batch_size,
                                                              Rng& rng) {
  std::map<int, std::vector<std::size_t>> buckets;
  for (auto i : pool) buckets[inputs[i].n_leaf()].push_back(i);
  std::vector<std::vector<std::size_t>> batches;
  for (auto& [l, members] : buckets) {
    rng.shuffle(members);
    for (std::size_t s = 0; s < members.size(); s += static_cast<std::size_t>(batch_size)) {
      const auto e = std::min(members.size(), s + static_cast<std::size_t>(batch_size));
      batches.emplace_back(members.begin() + static_cast<std::ptrdiff_t>(s), members.begin() + static_cast<std::ptrdiff_t>(e));
    }
  }
  rng.shuffle(batches);
  return batches;
}

struct TrainOptions {
  /// Called after every epoch with the new log row.
  std::function<void(const TrainLogRow&)> on_epoch;
};

struct TrainResult {
  CostModel model;
  std::vector<TrainLogRow> log;
  int best_epoch = -1;
  double best_val_mape = std::numeric_limits<double>::infinity();
};

/// Seeded minibatch training on the train split; returns the parameters
/// with the best validation MAPE.
inline TrainResult train(const CostModelConfig& cfg, const dataset::Dataset& ds, const DeviceTable& devices,
                         const TrainOptions& opts = {}) {
  cfg.validate();
  const auto train_idx = ds.indices(dataset::Split::kTrain);
  const auto valid_idx = ds.indices(dataset::Split::kValid);
  if (train_idx.empty() || valid_idx.empty()) throw EmptyDataset("training needs non-empty train and valid splits");

  std::vector<dataset::Sample> train_samples, valid_samples;
  for (auto i : train_idx) train_samples.push_back(ds.samples[i]);
  for (auto i : valid_idx) valid_samples.push_back(ds.samples[i]);
  auto train_in = encode_samples(train_samples, devices);
  auto valid_in = encode_samples(valid_samples, devices);
  std::vector<double> train_y, valid_y;
  for (const auto& s : train_samples) train_y.push_back(s.latency_s);
  for (const auto& s : valid_samples) valid_y.push_back(s.latency_s);

  TrainResult result;
  result.model.labels = dataset::fit_label_transform(train_y);
  result.model.params = init_params(cfg);
  result.model.inputs = fit_input_scaler(train_in);
  for (auto& in : train_in) result.model.inputs.apply(in);
  for (auto& in : valid_in) result.model.inputs.apply(in);
  std::vector<double> targets(train_y.size());
  for (std::size_t i = 0; i < targets.size(); ++i) targets[i] = result.model.labels.to_model(train_y[i]);

  CostModel current = result.model;
  Optimizer opt(cfg.optimizer, current.params.weights, cfg.weight_decay);
  const LossSpec spec = loss_spec(cfg, current.labels);
  Rng rng(cfg.seed ^ 0x5eedULL);
  std::vector<std::size_t> pool(train_in.size());
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = scheduled_lr(cfg, epoch);
    double loss_sum = 0;
    for (const auto& batch : bucketed_batches(train_in, pool, cfg.batch_size, rng)) {
      std::vector<const EncodedInput*> ptrs;
      std::vector<double> y;
      for (auto i : batch) {
        ptrs.push_back(&train_in[i]);
        y.push_back(targets[i]);
      }
      LossAndGrad lg;
      try {
        lg = loss_and_gradients(current.params, ptrs, y, spec);
      } catch (const NonFiniteLoss& e) {
        throw DivergenceError(epoch, e.what());
      }
      opt.step(current.params.weights, lg.grads, lr);
      loss_sum += lg.loss * static_cast<double>(batch.size());
    }
    if (!current.params.all_finite()) throw DivergenceError(epoch, "non-finite parameters");
    const Metrics m = evaluate(current, valid_in, valid_y);
    TrainLogRow row{epoch, loss_sum / static_cast<double>(train_in.size()), m.mape, m.rmse, lr};
    result.log.push_back(row);
    if (opts.on_epoch) opts.on_epoch(row);
    if (m.mape < result.best_val_mape) {
      result.best_val_mape = m.mape;
      result.best_epoch = epoch;
      result.model.params = current.params;
    }
  }
  return result;
}

}  // namespace tpcost::costmodel
