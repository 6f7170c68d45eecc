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

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tpcost/costmodel/config.hpp"
#include "tpcost/costmodel/tune.hpp"
#include "tpcost/dataset/dataset.hpp"
#include "tpcost/dataset/synth.hpp"

namespace tpcost::cli {

/// Everything a subcommand can be configured with. Loaded from a
/// line-oriented `key = value` file; unknown keys are rejected.
struct RunConfig {
  costmodel::CostModelConfig model;
  dataset::SynthOracleConfig oracle;
  dataset::SynthOptions synth;
  int n_samples = 2000;
  std::vector<std::string> devices = {"synth_gpu"};
  dataset::SplitRatios ratios;
  std::vector<std::string> holdout_models;
  int kappa = 4;
  int tune_budget = 10;
  int tune_epoch_cap = 20;
  int cmd_batch = 256;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  if constexpr (std::is_floating_point_v<T>) {
    try {
      std::size_t pos = 0;
      out = static_cast<T>(std::stod(v, &pos));
      if (pos != v.size()) throw std::invalid_argument(v);
    } catch (const std::exception&) {
      throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
    }
  } else {
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("'" + key + "' expects an integer, got '" + v + "'");
  }
  return out;
}

inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

}  // namespace detail

struct ConfigField {
  std::string key;
  std::string doc;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

/// The accepted keys, in the order they are written back out.
inline const std::vector<ConfigField>& config_schema() {
  using detail::fmt_double;
  using detail::parse_number;
  static const std::vector<ConfigField> schema = [] {
    std::vector<ConfigField> f;
    auto int_field = [&](std::string key, std::string doc, auto member) {
      f.push_back({key, doc, [key, member](RunConfig& c, const std::string& v) { member(c) = parse_number<int>(key, v); },
                   [member](const RunConfig& c) { return std::to_string(member(const_cast<RunConfig&>(c))); }});
    };
    auto real_field = [&](std::string key, std::string doc, auto member) {
      f.push_back({key, doc, [key, member](RunConfig& c, const std::string& v) { member(c) = parse_number<double>(key, v); },
                   [member](const RunConfig& c) { return fmt_double(member(const_cast<RunConfig&>(c))); }});
    };
    auto u64_field = [&](std::string key, std::string doc, auto member) {
      f.push_back({key, doc,
                   [key, member](RunConfig& c, const std::string& v) { member(c) = parse_number<std::uint64_t>(key, v); },
                   [member](const RunConfig& c) { return std::to_string(member(const_cast<RunConfig&>(c))); }});
    };
    auto list_field = [&](std::string key, std::string doc, auto member) {
      f.push_back({key, doc, [member](RunConfig& c, const std::string& v) { member(c) = detail::split_list(v); },
                   [member](const RunConfig& c) { return detail::join(member(const_cast<RunConfig&>(c))); }});
    };

    u64_field("seed", "seed for data generation, splitting, training and sampling", [](RunConfig& c) -> auto& { return c.seed; });
    // Model.
    int_field("d_model", "encoder width", [](RunConfig& c) -> auto& { return c.model.d_model; });
    int_field("n_layers", "encoder layers", [](RunConfig& c) -> auto& { return c.model.n_layers; });
    int_field("n_heads", "attention heads; must divide d_model", [](RunConfig& c) -> auto& { return c.model.n_heads; });
    int_field("d_ff", "feed-forward width", [](RunConfig& c) -> auto& { return c.model.d_ff; });
    int_field("d_embed", "program embedding width", [](RunConfig& c) -> auto& { return c.model.d_embed; });
    int_field("d_device", "device network width", [](RunConfig& c) -> auto& { return c.model.d_device; });
    f.push_back({"decoder_dims", "comma-separated decoder hidden widths",
                 [](RunConfig& c, const std::string& v) {
                   c.model.decoder_dims.clear();
                   for (const auto& s : detail::split_list(v)) c.model.decoder_dims.push_back(parse_number<int>("decoder_dims", s));
                 },
                 [](const RunConfig& c) {
                   std::vector<std::string> s;
                   for (int d : c.model.decoder_dims) s.push_back(std::to_string(d));
                   return detail::join(s);
                 }});
    int_field("n_leaf_max", "largest leaf count the model accepts", [](RunConfig& c) -> auto& { return c.model.n_leaf_max; });
    real_field("lambda_hybrid", "weight of the relative-error limb", [](RunConfig& c) -> auto& { return c.model.lambda_hybrid; });
    real_field("alpha_cmd", "weight of the CMD limb when fine-tuning", [](RunConfig& c) -> auto& { return c.model.alpha_cmd; });
    int_field("cmd_order", "highest CMD moment", [](RunConfig& c) -> auto& { return c.model.cmd_order; });
    f.push_back({"loss", "hybrid | mse | mape",
                 [](RunConfig& c, const std::string& v) { c.model.loss = costmodel::parse_loss(v); },
                 [](const RunConfig& c) { return std::string(costmodel::to_string(c.model.loss)); }});
    real_field("lr", "learning rate", [](RunConfig& c) -> auto& { return c.model.lr; });
    real_field("weight_decay", "L2 weight decay", [](RunConfig& c) -> auto& { return c.model.weight_decay; });
    f.push_back({"optimizer", "adam | sgd",
                 [](RunConfig& c, const std::string& v) { c.model.optimizer = costmodel::parse_optimizer(v); },
                 [](const RunConfig& c) { return std::string(costmodel::to_string(c.model.optimizer)); }});
    f.push_back({"lr_schedule", "constant | cyclic",
                 [](RunConfig& c, const std::string& v) { c.model.lr_schedule = costmodel::parse_schedule(v); },
                 [](const RunConfig& c) { return std::string(costmodel::to_string(c.model.lr_schedule)); }});
    int_field("cyclic_period", "epochs per learning-rate cycle", [](RunConfig& c) -> auto& { return c.model.cyclic_period; });
    int_field("batch_size", "minibatch size", [](RunConfig& c) -> auto& { return c.model.batch_size; });
    int_field("epochs", "training epochs", [](RunConfig& c) -> auto& { return c.model.epochs; });
    int_field("cmd_batch", "rows per domain in each fine-tuning CMD estimate", [](RunConfig& c) -> auto& { return c.cmd_batch; });
    // Synthetic data.
    int_field("n_samples", "programs to generate", [](RunConfig& c) -> auto& { return c.n_samples; });
    list_field("devices", "comma-separated device names", [](RunConfig& c) -> auto& { return c.devices; });
    real_field("flops_efficiency", "oracle fraction of peak compute", [](RunConfig& c) -> auto& { return c.oracle.flops_efficiency; });
    real_field("mem_efficiency", "oracle fraction of peak bandwidth", [](RunConfig& c) -> auto& { return c.oracle.mem_efficiency; });
    real_field("per_leaf_overhead_s", "oracle launch overhead per leaf", [](RunConfig& c) -> auto& { return c.oracle.per_leaf_overhead_s; });
    real_field("noise_sigma", "log-normal label noise", [](RunConfig& c) -> auto& { return c.oracle.noise_sigma; });
    int_field("programs_per_task", "programs per generated task", [](RunConfig& c) -> auto& { return c.synth.programs_per_task; });
    int_field("max_leaves", "leaf limit for generated and parsed programs", [](RunConfig& c) -> auto& { return c.synth.max_leaves; });
    int_field("max_depth", "loop nesting limit for generated programs", [](RunConfig& c) -> auto& { return c.synth.max_depth; });
    int_field("max_extent", "largest generated loop extent", [](RunConfig& c) -> auto& { return c.synth.max_extent; });
    list_field("models", "model names assigned to generated tasks", [](RunConfig& c) -> auto& { return c.synth.models; });
    u64_field("op_scale", "generated op counts c become c * op_scale + op_offset", [](RunConfig& c) -> auto& { return c.synth.op_scale; });
    u64_field("op_offset", "see op_scale", [](RunConfig& c) -> auto& { return c.synth.op_offset; });
    // Splits, sampling, tuning.
    real_field("train_ratio", "relative size of the train split", [](RunConfig& c) -> auto& { return c.ratios.train; });
    real_field("valid_ratio", "relative size of the valid split", [](RunConfig& c) -> auto& { return c.ratios.valid; });
    real_field("test_ratio", "relative size of the test split", [](RunConfig& c) -> auto& { return c.ratios.test; });
    list_field("holdout_models", "models moved entirely to the holdout split", [](RunConfig& c) -> auto& { return c.holdout_models; });
    int_field("kappa", "tasks to select for profiling", [](RunConfig& c) -> auto& { return c.kappa; });
    int_field("tune_budget", "random-search trials", [](RunConfig& c) -> auto& { return c.tune_budget; });
    int_field("tune_epoch_cap", "epochs per tuning trial", [](RunConfig& c) -> auto& { return c.tune_epoch_cap; });
    return f;
  }();
  return schema;
}

/// Applies one `key = value` pair.
inline void set_config_value(RunConfig& c, const std::string& key, const std::string& value) {
  for (const auto& f : config_schema()) {
    if (f.key == key) {
      f.set(c, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

/// Seeds every component from the single run seed.
inline void propagate_seed(RunConfig& c) {
  c.model.seed = c.seed;
  c.oracle.seed = c.seed;
}

inline void validate(const RunConfig& c) {
  c.model.validate();
  c.oracle.validate();
  if (c.n_samples < 1) throw ConfigError("n_samples must be positive");
  if (c.devices.empty()) throw ConfigError("devices must name at least one device");
  if (c.kappa < 1) throw ConfigError("kappa must be positive");
  if (c.tune_budget < 1 || c.tune_epoch_cap < 1) throw ConfigError("tuning budget and epoch cap must be positive");
  if (c.cmd_batch < 1) throw ConfigError("cmd_batch must be positive");
  if (c.synth.programs_per_task < 1 || c.synth.max_leaves < 1 || c.synth.max_depth < 1 || c.synth.max_extent < 1)
    throw ConfigError("generator limits must be positive");
  if (c.synth.models.empty()) throw ConfigError("models must not be empty");
  if (c.synth.op_scale < 1) throw ConfigError("op_scale must be positive");
  if (!(c.ratios.train >= 0 && c.ratios.valid >= 0 && c.ratios.test >= 0) ||
      !(c.ratios.train + c.ratios.valid + c.ratios.test > 0))
    throw ConfigError("split ratios must be non-negative with a positive sum");
}

/// Parses config text. Blank lines and `#` comments are ignored; a key may
/// appear only once.
inline RunConfig parse_run_config(const std::string& text, RunConfig base = {}) {
  std::istringstream in(text);
  std::string line;
  std::set<std::string> seen;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    try {
      set_config_value(base, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  propagate_seed(base);
  validate(base);
  return base;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot read config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_run_config(ss.str());
}

/// Canonical text form: every key, schema order.
inline std::string dump_run_config(const RunConfig& c) {
  std::string out;
  for (const auto& f : config_schema()) out += f.key + " = " + f.get(c) + "\n";
  return out;
}

}  // namespace tpcost::cli
