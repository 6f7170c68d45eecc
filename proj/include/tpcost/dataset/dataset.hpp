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
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tpcost/error.hpp"
#include "tpcost/features/compact_ast.hpp"
#include "tpcost/features/device.hpp"
#include "tpcost/util/rng.hpp"

namespace tpcost::dataset {

struct Sample {
  std::string id;
  std::string task_id;
  std::string model_id;
  std::string device_id;
  features::CompactAst compact;
  double latency_s = 0;

  bool operator==(const Sample&) const = default;
};

enum class Split { kTrain, kValid, kTest, kHoldout };

inline const char* split_name(Split s) {
  switch (s) {
    case Split::kTrain:
      return "train";
    case Split::kValid:
      return "valid";
    case Split::kTest:
      return "test";
    case Split::kHoldout:
      return "holdout";
  }
  return "?";
}

inline Split parse_split(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "valid") return Split::kValid;
  if (s == "test") return Split::kTest;
  if (s == "holdout") return Split::kHoldout;
  throw ValidationError("unknown split '" + s + "'");
}

struct Dataset {
  std::vector<Sample> samples;
  std::map<std::string, Split> splits;

  /// Indices of samples assigned to `s`, in sample order.
  std::vector<std::size_t> indices(Split s) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      auto it = splits.find(samples[i].id);
      if (it != splits.end() && it->second == s) out.push_back(i);
    }
    return out;
  }

  std::vector<Sample> subset(Split s) const {
    std::vector<Sample> out;
    for (auto i : indices(s)) out.push_back(samples[i]);
    return out;
  }

  bool operator==(const Dataset&) const = default;
};

struct SplitRatios {
  double train = 8;
  double valid = 1;
  double test = 1;
};

/// Holdout models go to the holdout split; the rest is shuffled with `seed`
/// and cut by `ratios` (largest-remainder rounding).
inline Dataset split_dataset(Dataset ds, SplitRatios ratios, std::uint64_t seed,
                             const std::set<std::string>& holdout_models = {}) {
  if (ds.samples.empty()) throw EmptyDataset("cannot split an empty dataset");
  if (!(ratios.train > 0) || !(ratios.valid > 0) || !(ratios.test > 0)) {
    throw ValidationError("split ratios must be positive");
  }
  ds.splits.clear();
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    if (holdout_models.count(ds.samples[i].model_id)) {
      ds.splits[ds.samples[i].id] = Split::kHoldout;
    } else {
      pool.push_back(i);
    }
  }
  Rng rng(seed);
  rng.shuffle(pool);
  const double total = ratios.train + ratios.valid + ratios.test;
  const double n = static_cast<double>(pool.size());
  const double exact[3] = {n * ratios.train / total, n * ratios.valid / total, n * ratios.test / total};
  std::size_t counts[3];
  std::size_t assigned = 0;
  for (int k = 0; k < 3; ++k) {
    counts[k] = static_cast<std::size_t>(std::floor(exact[k]));
    assigned += counts[k];
  }
  // Hand leftovers to the largest fractional parts, earlier split on ties.
  while (assigned < pool.size()) {
    int best = 0;
    for (int k = 1; k < 3; ++k) {
      if (exact[k] - static_cast<double>(counts[k]) > exact[best] - static_cast<double>(counts[best])) best = k;
    }
    ++counts[best];
    ++assigned;
  }
  std::size_t pos = 0;
  const Split order[3] = {Split::kTrain, Split::kValid, Split::kTest};
  for (int k = 0; k < 3; ++k) {
    for (std::size_t j = 0; j < counts[k]; ++j) ds.splits[ds.samples[pool[pos++]].id] = order[k];
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Serialization. Floats are written with 17 significant digits.

namespace detail {

inline void write_double(std::ostream& os, double v) {
  if (!std::isfinite(v)) throw ValidationError("cannot serialize non-finite value");
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  os << buf;
}

inline void write_string(std::ostream& os, const std::string& s) { os << nlohmann::json(s).dump(); }

template <class T>
T get_field(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError(std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad field '") + key + "': " + e.what());
  }
}

}  // namespace detail

inline void write_sample_jsonl(std::ostream& os, const Sample& s) {
  using detail::write_double;
  using detail::write_string;
  os << "{\"id\":";
  write_string(os, s.id);
  os << ",\"task_id\":";
  write_string(os, s.task_id);
  os << ",\"model_id\":";
  write_string(os, s.model_id);
  os << ",\"device_id\":";
  write_string(os, s.device_id);
  os << ",\"n_leaf\":" << s.compact.n_leaf << ",\"vectors\":[";
  for (std::size_t i = 0; i < s.compact.leaf_vectors.size(); ++i) {
    if (i) os << ',';
    os << '[';
    for (std::size_t j = 0; j < s.compact.leaf_vectors[i].size(); ++j) {
      if (j) os << ',';
      write_double(os, s.compact.leaf_vectors[i][j]);
    }
    os << ']';
  }
  os << "],\"ordering\":[";
  for (std::size_t i = 0; i < s.compact.ordering.size(); ++i) os << (i ? "," : "") << s.compact.ordering[i];
  os << "],\"serialized\":[";
  for (std::size_t i = 0; i < s.compact.serialized.size(); ++i) os << (i ? "," : "") << s.compact.serialized[i];
  os << "],\"latency_s\":";
  if (s.latency_s > 0) {
    write_double(os, s.latency_s);
  } else {
    os << "null";  // unlabeled, e.g. freshly extracted features
  }
  os << "}\n";
}

/// Unlabeled samples carry "latency_s": null and load with latency 0 when
/// `require_label` is false.
inline Sample parse_sample_json(const nlohmann::json& j, bool require_label = true) {
  using detail::get_field;
  Sample s;
  s.id = get_field<std::string>(j, "id");
  s.task_id = get_field<std::string>(j, "task_id");
  s.model_id = get_field<std::string>(j, "model_id");
  s.device_id = get_field<std::string>(j, "device_id");
  s.compact.n_leaf = get_field<int>(j, "n_leaf");
  auto vectors = get_field<std::vector<std::vector<double>>>(j, "vectors");
  for (const auto& v : vectors) {
    if (v.size() != features::kNumEntries) throw ValidationError("vector has wrong width in sample " + s.id);
    features::ComputationVector cv;
    std::copy(v.begin(), v.end(), cv.begin());
    s.compact.leaf_vectors.push_back(cv);
  }
  s.compact.ordering = get_field<std::vector<int>>(j, "ordering");
  s.compact.serialized = get_field<std::vector<int>>(j, "serialized");
  const bool unlabeled = !require_label && j.contains("latency_s") && j["latency_s"].is_null();
  s.latency_s = unlabeled ? 0.0 : get_field<double>(j, "latency_s");
  const auto n = static_cast<std::size_t>(s.compact.n_leaf);
  if (s.compact.n_leaf < 1 || s.compact.leaf_vectors.size() != n || s.compact.ordering.size() != n) {
    throw ValidationError("inconsistent leaf count in sample " + s.id);
  }
  for (int pos : s.compact.ordering) {
    if (pos < 0 || static_cast<std::size_t>(pos) >= s.compact.serialized.size()) {
      throw ValidationError("ordering entry out of range in sample " + s.id);
    }
  }
  if (!unlabeled && !(s.latency_s > 0)) throw ValidationError("latency must be positive in sample " + s.id);
  return s;
}

inline void save_jsonl(std::ostream& os, const std::vector<Sample>& samples) {
  for (const auto& s : samples) write_sample_jsonl(os, s);
}

inline std::vector<Sample> load_jsonl(std::istream& is, bool require_label = true) {
  std::vector<Sample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(parse_sample_json(nlohmann::json::parse(line), require_label));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline void save_jsonl_file(const std::string& path, const std::vector<Sample>& samples) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot write '" + path + "'");
  save_jsonl(os, samples);
}

inline std::vector<Sample> load_jsonl_file(const std::string& path, bool require_label = true) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot read '" + path + "'");
  return load_jsonl(is, require_label);
}

/// Split assignments as a JSON object {sample id: split name}.
inline void save_splits(std::ostream& os, const Dataset& ds) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& s : ds.samples) {
    auto it = ds.splits.find(s.id);
    if (it != ds.splits.end()) j[s.id] = split_name(it->second);
  }
  os << j.dump(1) << '\n';
}

inline std::map<std::string, Split> load_splits(std::istream& is) {
  std::map<std::string, Split> out;
  try {
    auto j = nlohmann::json::parse(is);
    for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = parse_split(it.value().get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad split file: ") + e.what());
  }
  return out;
}

inline void save_device_catalog(std::ostream& os, const std::vector<features::DeviceSpec>& devices) {
  using detail::write_double;
  os << "[\n";
  for (std::size_t i = 0; i < devices.size(); ++i) {
    const auto& d = devices[i];
    os << "  {\"name\":";
    detail::write_string(os, d.name);
    os << ",\"clock_mhz\":";
    write_double(os, d.clock_mhz);
    os << ",\"mem_gb\":";
    write_double(os, d.mem_gb);
    os << ",\"bandwidth_gbps\":";
    write_double(os, d.bandwidth_gbps);
    os << ",\"cores\":" << d.cores << ",\"peak_fp32_gflops\":";
    write_double(os, d.peak_fp32_gflops);
    os << ",\"l2_cache_mb\":";
    write_double(os, d.l2_cache_mb);
    os << '}' << (i + 1 < devices.size() ? "," : "") << '\n';
  }
  os << "]\n";
}

inline std::vector<features::DeviceSpec> load_device_catalog(std::istream& is) {
  std::vector<features::DeviceSpec> out;
  try {
    auto j = nlohmann::json::parse(is);
    if (!j.is_array()) throw ValidationError("device catalog must be a JSON list");
    for (const auto& e : j) {
      features::DeviceSpec d;
      d.name = detail::get_field<std::string>(e, "name");
      d.clock_mhz = detail::get_field<double>(e, "clock_mhz");
      d.mem_gb = detail::get_field<double>(e, "mem_gb");
      d.bandwidth_gbps = detail::get_field<double>(e, "bandwidth_gbps");
      d.cores = detail::get_field<int>(e, "cores");
      d.peak_fp32_gflops = e.value("peak_fp32_gflops", 0.0);
      d.l2_cache_mb = e.value("l2_cache_mb", 0.0);
      d.validate();
      out.push_back(d);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad device catalog: ") + e.what());
  }
  return out;
}

}  // namespace tpcost::dataset
