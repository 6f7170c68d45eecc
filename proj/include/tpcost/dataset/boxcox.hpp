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
#include <limits>
#include <span>
#include <vector>

#include "tpcost/error.hpp"

namespace tpcost::dataset {

inline constexpr double kLambdaZeroTol = 1e-9;

/// Box-Cox power transform with a positivity shift.
struct BoxCoxNormalizer {
  double lambda_bc = 1.0;
  double shift = 0.0;
  bool fitted = false;

  double apply(double y) const {
    if (!fitted) throw NotFitted("Box-Cox normalizer is not fitted");
    const double x = y + shift;
    if (!(x > 0)) throw DomainError("Box-Cox input must be positive");
    if (std::abs(lambda_bc) < kLambdaZeroTol) return std::log(x);
    return (std::pow(x, lambda_bc) - 1.0) / lambda_bc;
  }

  double invert(double t) const {
    if (!fitted) throw NotFitted("Box-Cox normalizer is not fitted");
    double x;
    if (std::abs(lambda_bc) < kLambdaZeroTol) {
      x = std::exp(t);
    } else {
      const double base = lambda_bc * t + 1.0;
      if (!(base > 0)) throw DomainError("value has no positive Box-Cox preimage");
      x = std::pow(base, 1.0 / lambda_bc);
    }
    const double y = x - shift;
    if (!(y > 0) || !std::isfinite(y)) throw DomainError("value has no positive Box-Cox preimage");
    return y;
  }

  bool operator==(const BoxCoxNormalizer&) const = default;
};

/// Profile log-likelihood of the Box-Cox model at `lambda`:
///   -n/2 * log(var(transformed)) + (lambda - 1) * sum(log x).
inline double boxcox_log_likelihood(std::span<const double> x, double lambda) {
  const auto n = static_cast<double>(x.size());
  double log_sum = 0;
  std::vector<double> t(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    log_sum += lx;
    t[i] = std::abs(lambda) < kLambdaZeroTol ? lx : std::expm1(lambda * lx) / lambda;
  }
  double m = 0;
  for (double v : t) m += v;
  m /= n;
  double var = 0;
  for (double v : t) var += (v - m) * (v - m);
  var /= n;
  return -0.5 * n * std::log(var) + (lambda - 1.0) * log_sum;
}

/// Maximum-likelihood lambda over [-2, 2] by golden-section search.
inline BoxCoxNormalizer fit_boxcox(std::span<const double> labels, double tol = 1e-5) {
  if (labels.size() < 2) throw DegenerateLabels("Box-Cox fit needs at least two labels");
  const auto [lo_it, hi_it] = std::minmax_element(labels.begin(), labels.end());
  if (!(*lo_it > 0)) throw DomainError("Box-Cox labels must be positive");
  if (*lo_it == *hi_it) throw DegenerateLabels("all labels are equal");

  BoxCoxNormalizer norm;
  norm.shift = *lo_it < std::numeric_limits<double>::min() ? 1e-12 : 0.0;
  std::vector<double> x(labels.begin(), labels.end());
  for (double& v : x) v += norm.shift;

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = -2.0, b = 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = boxcox_log_likelihood(x, c);
  double fd = boxcox_log_likelihood(x, d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = boxcox_log_likelihood(x, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = boxcox_log_likelihood(x, d);
    }
  }
  norm.lambda_bc = 0.5 * (a + b);
  norm.fitted = true;
  return norm;
}

/// Box-Cox followed by standardization with training-set moments. This is
/// the label space the cost model regresses in.
struct LabelTransform {
  BoxCoxNormalizer boxcox;
  double mean = 0.0;
  double std = 1.0;
  /// Added to standardized values in the relative-error limb so that every
  /// training label is >= 1.
  double positive_offset = 0.0;

  double to_model(double y) const { return (boxcox.apply(y) - mean) / std; }
  double from_model(double t) const { return boxcox.invert(t * std + mean); }

  bool operator==(const LabelTransform&) const = default;
};

inline LabelTransform fit_label_transform(std::span<const double> train_labels) {
  LabelTransform lt;
  lt.boxcox = fit_boxcox(train_labels);
  std::vector<double> t(train_labels.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = lt.boxcox.apply(train_labels[i]);
  double m = 0;
  for (double v : t) m += v;
  m /= static_cast<double>(t.size());
  double var = 0;
  for (double v : t) var += (v - m) * (v - m);
  var /= static_cast<double>(t.size());
  lt.mean = m;
  lt.std = var > 0 ? std::sqrt(var) : 1.0;
  double min_std = std::numeric_limits<double>::infinity();
  for (double v : t) min_std = std::min(min_std, (v - m) / lt.std);
  lt.positive_offset = 1.0 - min_std;
  return lt;
}

}  // namespace tpcost::dataset
