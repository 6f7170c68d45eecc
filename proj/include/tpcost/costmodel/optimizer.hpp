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
#include <numbers>

#include "tpcost/costmodel/config.hpp"
#include "tpcost/costmodel/params.hpp"

namespace tpcost::costmodel {

/// Learning rate for `epoch`. Cyclic is triangular between lr/10 and lr.
inline double scheduled_lr(const CostModelConfig& cfg, int epoch) {
  if (cfg.lr_schedule == LrSchedule::kConstant) return cfg.lr;
  const double lo = cfg.lr / 10.0, hi = cfg.lr;
  const int period = cfg.cyclic_period;
  const double pos = static_cast<double>(epoch % period) / period;
  return lo + (hi - lo) * (1.0 - std::abs(2.0 * pos - 1.0));
}

/// Adam (beta 0.9/0.999) or SGD with momentum 0.9; weight decay is an L2
/// term added to the gradient.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, const Weights& like, double weight_decay)
      : kind_(kind), weight_decay_(weight_decay), m_(zeros_like(like)), v_(zeros_like(like)) {}

  void step(Weights& w, const Weights& g, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(kBeta1, t_);
    const double bc2 = 1.0 - std::pow(kBeta2, t_);
    for_each_tensor(
        [&](const std::string&, Matrix& wt, const Matrix& gt, Matrix& mt, Matrix& vt) {
          Matrix grad = gt + weight_decay_ * wt;
          if (kind_ == OptimizerKind::kSgd) {
            mt = kMomentum * mt + grad;
            wt -= lr * mt;
            return;
          }
          mt = kBeta1 * mt + (1.0 - kBeta1) * grad;
          vt = kBeta2 * vt + (1.0 - kBeta2) * grad.cwiseProduct(grad);
          wt.array() -= lr * (mt.array() / bc1) / ((vt.array() / bc2).sqrt() + kEps);
        },
        w, g, m_, v_);
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  static constexpr double kMomentum = 0.9;

  OptimizerKind kind_;
  double weight_decay_;
  Weights m_, v_;
  int t_ = 0;
};

}  // namespace tpcost::costmodel
