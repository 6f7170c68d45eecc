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

#include "tpcost/features/compact_ast.hpp"
#include "tpcost/features/device.hpp"
#include "tpcost/util/matrix.hpp"

namespace tpcost::features {

inline constexpr double kDefaultTheta = 10000.0;

/// Sinusoidal encoding of each leaf's serialized position:
///   pe(xi, 2d)   = sin(V[xi] / theta^(2d / width))
///   pe(xi, 2d+1) = cos(V[xi] / theta^(2d / width))
inline Matrix positional_encoding(std::span<const int> ordering, int width = kNumEntries,
                                  double theta = kDefaultTheta) {
  if (width <= 0 || width % 2 != 0) throw ValidationError("encoding width must be even and positive");
  if (!(theta > 0)) throw ValidationError("theta must be positive");
  Matrix pe(static_cast<Eigen::Index>(ordering.size()), width);
  for (std::size_t xi = 0; xi < ordering.size(); ++xi) {
    for (int d = 0; d < width / 2; ++d) {
      const double angle = ordering[xi] / std::pow(theta, 2.0 * d / width);
      pe(static_cast<Eigen::Index>(xi), 2 * d) = std::sin(angle);
      pe(static_cast<Eigen::Index>(xi), 2 * d + 1) = std::cos(angle);
    }
  }
  return pe;
}

inline Matrix positional_encoding(const CompactAst& compact, double theta = kDefaultTheta) {
  return positional_encoding(compact.ordering, kNumEntries, theta);
}

/// Model input for one program on one device.
struct EncodedInput {
  Matrix matrix;  // n_leaf x kNumEntries
  DeviceVector device_vector{};

  int n_leaf() const { return static_cast<int>(matrix.rows()); }
};

inline Matrix leaf_matrix(const CompactAst& compact) {
  Matrix m(compact.n_leaf, kNumEntries);
  for (int i = 0; i < compact.n_leaf; ++i) {
    for (int j = 0; j < kNumEntries; ++j) m(i, j) = compact.leaf_vectors[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return m;
}

inline EncodedInput encode_input(const CompactAst& compact, const DeviceSpec& device,
                                 double theta = kDefaultTheta) {
  return {leaf_matrix(compact) + positional_encoding(compact, theta), device_vector(device)};
}

}  // namespace tpcost::features
