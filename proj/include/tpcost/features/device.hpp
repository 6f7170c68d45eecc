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

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "tpcost/error.hpp"

namespace tpcost::features {

inline constexpr int kDeviceEntries = 6;

/// Hardware descriptor. Zero in the optional fields means "unknown".
struct DeviceSpec {
  std::string name;
  double clock_mhz = 0;
  double mem_gb = 0;
  double bandwidth_gbps = 0;
  int cores = 0;
  double peak_fp32_gflops = 0;
  double l2_cache_mb = 0;

  void validate() const {
    if (!(clock_mhz > 0) || !(mem_gb > 0) || !(bandwidth_gbps > 0) || cores <= 0) {
      throw ValidationError("device '" + name + "': clock, memory, bandwidth and cores must be positive");
    }
    if (peak_fp32_gflops < 0 || l2_cache_mb < 0) {
      throw ValidationError("device '" + name + "': optional fields must be non-negative");
    }
  }

  bool operator==(const DeviceSpec&) const = default;
};

using DeviceVector = std::array<double, kDeviceEntries>;

inline DeviceVector device_vector(const DeviceSpec& d) {
  return {std::log2(1.0 + d.clock_mhz),        std::log2(1.0 + d.mem_gb),
          std::log2(1.0 + d.bandwidth_gbps),   std::log2(1.0 + d.cores),
          std::log2(1.0 + d.peak_fp32_gflops), std::log2(1.0 + d.l2_cache_mb)};
}

/// Devices from the evaluation hardware table (peak and L2 unknown), plus a
/// synthetic accelerator with every field populated for the roofline oracle.
inline std::vector<DeviceSpec> builtin_devices() {
  return {
      {"t4", 1590, 16, 320, 40, 0, 0},
      {"k80", 824, 12, 240.6, 26, 0, 0},
      {"p100", 1329, 16, 732.2, 56, 0, 0},
      {"v100", 1530, 32, 900, 80, 0, 0},
      {"a100", 1410, 40, 1555, 108, 0, 0},
      {"hl100", 1575, 8, 40, 11, 0, 0},
      {"e5_2673", 2300, 2048, 572.24, 8, 0, 0},
      {"epyc_7452", 2350, 2048, 1525.6, 4, 0, 0},
      {"graviton2", 2500, 32, 4.75, 32, 0, 0},
      {"synth_gpu", 1500, 16, 900, 80, 14000, 6},
      {"synth_cpu", 2400, 64, 200, 16, 1200, 32},
  };
}

inline DeviceSpec find_builtin_device(const std::string& name) {
  for (auto& d : builtin_devices()) {
    if (d.name == name) return d;
  }
  throw ValidationError("unknown device '" + name + "'");
}

}  // namespace tpcost::features
