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
#include <limits>
#include <span>
#include <vector>

#include "tpcost/costmodel/finetune.hpp"

namespace tpcost::costmodel {

/// max over rows x of `all` of min over rows c of `selected` of |x - c|.
inline double epsilon_from_latents(const Matrix& all, const Matrix& selected) {
  if (selected.rows() == 0) throw EmptySelection("epsilon needs at least one selected point");
  if (all.rows() > 0 && all.cols() != selected.cols()) throw DimensionMismatch("latent widths differ");
  double eps = 0;
  for (Eigen::Index i = 0; i < all.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < selected.rows(); ++j) best = std::min(best, (all.row(i) - selected.row(j)).norm());
    eps = std::max(eps, best);
  }
  return eps;
}

/// Device-independent latents z_x of compact ASTs. The device only feeds
/// z_v, so any valid spec gives the same rows.
inline Matrix program_latents(const CostModel& model, std::span<const features::CompactAst> programs,
                              const features::DeviceSpec& device = features::find_builtin_device("synth_gpu")) {
  std::vector<EncodedInput> in;
  in.reserve(programs.size());
  for (const auto& c : programs) in.push_back(encode_for(model, c, device));
  if (in.empty()) return Matrix(0, model.params.config.d_embed);
  return latents(model.params, in).z_x;
}

/// Largest latent distance from any program to its nearest selected program.
inline double epsilon_diag(const CostModel& model, std::span<const features::CompactAst> all,
                           std::span<const features::CompactAst> selected) {
  if (selected.empty()) throw EmptySelection("epsilon needs at least one selected program");
  return epsilon_from_latents(program_latents(model, all), program_latents(model, selected));
}

}  // namespace tpcost::costmodel
