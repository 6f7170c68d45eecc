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
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "tpcost/costmodel/trainer.hpp"

namespace tpcost::costmodel {

inline constexpr int kCheckpointVersion = 1;

inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline nlohmann::json config_to_json(const CostModelConfig& c) {
  return {{"d_model", c.d_model},
          {"n_layers", c.n_layers},
          {"n_heads", c.n_heads},
          {"d_ff", c.d_ff},
          {"d_embed", c.d_embed},
          {"d_device", c.d_device},
          {"decoder_dims", c.decoder_dims},
          {"n_leaf_max", c.n_leaf_max},
          {"lambda_hybrid", c.lambda_hybrid},
          {"alpha_cmd", c.alpha_cmd},
          {"cmd_order", c.cmd_order},
          {"loss", to_string(c.loss)},
          {"lr", c.lr},
          {"weight_decay", c.weight_decay},
          {"optimizer", to_string(c.optimizer)},
          {"lr_schedule", to_string(c.lr_schedule)},
          {"cyclic_period", c.cyclic_period},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"seed", c.seed}};
}

inline CostModelConfig config_from_json(const nlohmann::json& j) {
  CostModelConfig c;
  try {
    c.d_model = j.at("d_model").get<int>();
    c.n_layers = j.at("n_layers").get<int>();
    c.n_heads = j.at("n_heads").get<int>();
    c.d_ff = j.at("d_ff").get<int>();
    c.d_embed = j.at("d_embed").get<int>();
    c.d_device = j.at("d_device").get<int>();
    c.decoder_dims = j.at("decoder_dims").get<std::vector<int>>();
    c.n_leaf_max = j.at("n_leaf_max").get<int>();
    c.lambda_hybrid = j.at("lambda_hybrid").get<double>();
    c.alpha_cmd = j.at("alpha_cmd").get<double>();
    c.cmd_order = j.at("cmd_order").get<int>();
    c.loss = parse_loss(j.at("loss").get<std::string>());
    c.lr = j.at("lr").get<double>();
    c.weight_decay = j.at("weight_decay").get<double>();
    c.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
    c.lr_schedule = parse_schedule(j.at("lr_schedule").get<std::string>());
    c.cyclic_period = j.at("cyclic_period").get<int>();
    c.batch_size = j.at("batch_size").get<int>();
    c.epochs = j.at("epochs").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad model config: ") + e.what());
  }
  c.validate();
  return c;
}

namespace detail {

inline nlohmann::json checkpoint_body(const CostModel& m) {
  nlohmann::json tensors = nlohmann::json::array();
  Weights w = m.params.weights;
  for_each_tensor(
      [&](const std::string& name, Matrix& t) {
        std::vector<double> data(t.data(), t.data() + t.size());
        tensors.push_back({{"name", name}, {"rows", t.rows()}, {"cols", t.cols()}, {"data", data}});
      },
      w);
  const auto& lt = m.labels;
  return {{"format", "tpcost-checkpoint"},
          {"version", kCheckpointVersion},
          {"config", config_to_json(m.params.config)},
          {"inputs", {{"mean", m.inputs.mean}, {"scale", m.inputs.scale}}},
          {"labels",
           {{"lambda", lt.boxcox.lambda_bc},
            {"shift", lt.boxcox.shift},
            {"mean", lt.mean},
            {"std", lt.std},
            {"positive_offset", lt.positive_offset}}},
          {"tensors", tensors}};
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace detail

/// JSON checkpoint with an FNV-1a checksum over the serialized body.
inline std::string save_checkpoint(const CostModel& m) {
  nlohmann::json body = detail::checkpoint_body(m);
  const std::string dumped = body.dump();
  nlohmann::json out = body;
  out["checksum"] = detail::hex64(fnv1a64(dumped));
  return out.dump() + "\n";
}

inline CostModel load_checkpoint(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("format", "") != "tpcost-checkpoint") throw ValidationError("not a tpcost checkpoint");
  if (j.value("version", 0) != kCheckpointVersion) throw ValidationError("unsupported checkpoint version");
  if (!j.contains("checksum") || !j["checksum"].is_string()) throw ValidationError("checkpoint has no checksum");
  const std::string stored = j["checksum"].get<std::string>();
  j.erase("checksum");
  if (detail::hex64(fnv1a64(j.dump())) != stored) throw ChecksumMismatch("checkpoint checksum mismatch");

  CostModel m;
  try {
    m.params = init_params(config_from_json(j.at("config")));
    m.inputs.mean = j.at("inputs").at("mean").get<std::vector<double>>();
    m.inputs.scale = j.at("inputs").at("scale").get<std::vector<double>>();
    const auto& l = j.at("labels");
    m.labels.boxcox.lambda_bc = l.at("lambda").get<double>();
    m.labels.boxcox.shift = l.at("shift").get<double>();
    m.labels.boxcox.fitted = true;
    m.labels.mean = l.at("mean").get<double>();
    m.labels.std = l.at("std").get<double>();
    m.labels.positive_offset = l.at("positive_offset").get<double>();
    const auto& tensors = j.at("tensors");
    std::size_t idx = 0;
    for_each_tensor(
        [&](const std::string& name, Matrix& t) {
          if (idx >= tensors.size()) throw ValidationError("checkpoint is missing tensor " + name);
          const auto& e = tensors[idx++];
          if (e.at("name").get<std::string>() != name || e.at("rows").get<Eigen::Index>() != t.rows() ||
              e.at("cols").get<Eigen::Index>() != t.cols())
            throw ValidationError("checkpoint tensor " + name + " does not match the config");
          const auto data = e.at("data").get<std::vector<double>>();
          if (static_cast<Eigen::Index>(data.size()) != t.size()) throw ValidationError("bad tensor size for " + name);
          std::copy(data.begin(), data.end(), t.data());
        },
        m.params.weights);
    if (idx != tensors.size()) throw ValidationError("checkpoint has extra tensors");
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed checkpoint: ") + e.what());
  }
  const auto w = static_cast<std::size_t>(features::kNumEntries);
  if (m.inputs.mean.size() != w || m.inputs.scale.size() != w) throw ValidationError("bad input scaler width");
  if (!m.params.all_finite()) throw ValidationError("checkpoint holds non-finite weights");
  return m;
}

inline void save_checkpoint_file(const std::string& path, const CostModel& m) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write " + path);
  f << save_checkpoint(m);
}

inline CostModel load_checkpoint_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot read " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return load_checkpoint(ss.str());
}

}  // namespace tpcost::costmodel
