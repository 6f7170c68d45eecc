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
#include <span>

#include "tpcost/error.hpp"

namespace tpcost::stats {

inline double mean(std::span<const double> x) {
  if (x.empty()) throw EmptySet("mean of empty set");
  double s = 0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

/// Population (1/n) central moment of order k.
inline double central_moment(std::span<const double> x, int k) {
  const double m = mean(x);
  double s = 0;
  for (double v : x) s += std::pow(v - m, k);
  return s / static_cast<double>(x.size());
}

inline double stddev(std::span<const double> x) { return std::sqrt(central_moment(x, 2)); }

/// Sample skewness g1 = m3 / m2^(3/2).
inline double skewness(std::span<const double> x) {
  const double m2 = central_moment(x, 2);
  if (m2 <= 0) return 0.0;
  return central_moment(x, 3) / std::pow(m2, 1.5);
}

}  // namespace tpcost::stats
