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

#include <limits>
#include <optional>
#include <vector>

#include "tpcost/error.hpp"
#include "tpcost/util/matrix.hpp"
#include "tpcost/util/rng.hpp"

namespace tpcost::sampling {

inline constexpr int kMaxLloydIterations = 300;

struct ClusterModel {
  Matrix centers;               // kappa x d
  std::vector<int> assignment;  // point -> cluster
  std::vector<int> sizes;
  int iterations = 0;

  double inertia(const Matrix& x) const {
    double s = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) s += (x.row(i) - centers.row(assignment[static_cast<std::size_t>(i)])).squaredNorm();
    return s;
  }
};

namespace detail {

inline int nearest_center(const Matrix& centers, const Eigen::Ref<const RowVector>& p, double* dist2 = nullptr) {
  int best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centers.rows(); ++c) {
    const double d = (centers.row(c) - p).squaredNorm();
    if (d < bd) {
      bd = d;
      best = static_cast<int>(c);
    }
  }
  if (dist2) *dist2 = bd;
  return best;
}

/// k-means++ seeding: first center uniform, later ones with probability
/// proportional to squared distance from the nearest chosen center.
inline Matrix plus_plus_init(const Matrix& x, int kappa, Rng& rng) {
  const auto n = static_cast<std::size_t>(x.rows());
  Matrix centers(kappa, x.cols());
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::size_t pick = rng.below(n);
  for (int c = 0; c < kappa; ++c) {
    centers.row(c) = x.row(static_cast<Eigen::Index>(pick));
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (x.row(static_cast<Eigen::Index>(i)) - centers.row(c)).squaredNorm());
      total += d2[i];
    }
    if (c + 1 == kappa) break;
    if (total <= 0) {
      pick = rng.below(n);
      continue;
    }
    double r = rng.uniform() * total;
    pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      r -= d2[i];
      if (r < 0 && d2[i] > 0) {
        pick = i;
        break;
      }
    }
  }
  return centers;
}

}  // namespace detail

/// Lloyd's algorithm until the assignment stops changing or the iteration
/// cap is hit. An emptied cluster takes the point farthest from its own
/// center among clusters with more than one member.
inline ClusterModel kmeans(const Matrix& x, int kappa, std::uint64_t seed,
                           const std::optional<Matrix>& initial_centers = std::nullopt) {
  if (kappa < 1) throw ValidationError("kappa must be at least 1");
  if (x.rows() < kappa) throw TooFewPoints("kmeans needs at least kappa points");
  ClusterModel m;
  if (initial_centers) {
    if (initial_centers->rows() != kappa || initial_centers->cols() != x.cols())
      throw DimensionMismatch("initial centers have the wrong shape");
    m.centers = *initial_centers;
  } else {
    Rng rng(seed);
    m.centers = detail::plus_plus_init(x, kappa, rng);
  }
  const auto n = static_cast<std::size_t>(x.rows());
  const auto k = static_cast<std::size_t>(kappa);
  m.assignment.assign(n, -1);
  for (int it = 0; it < kMaxLloydIterations; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const int c = detail::nearest_center(m.centers, x.row(static_cast<Eigen::Index>(i)));
      if (c != m.assignment[i]) {
        m.assignment[i] = c;
        changed = true;
      }
    }
    m.sizes.assign(k, 0);
    for (int a : m.assignment) ++m.sizes[static_cast<std::size_t>(a)];
    for (std::size_t c = 0; c < k; ++c) {
      if (m.sizes[c] > 0) continue;
      std::size_t far = n;
      double fd = -1;
      for (std::size_t i = 0; i < n; ++i) {
        const auto a = static_cast<std::size_t>(m.assignment[i]);
        if (m.sizes[a] < 2) continue;
        const double d = (x.row(static_cast<Eigen::Index>(i)) - m.centers.row(static_cast<Eigen::Index>(a))).squaredNorm();
        if (d > fd) {
          fd = d;
          far = i;
        }
      }
      --m.sizes[static_cast<std::size_t>(m.assignment[far])];
      m.assignment[far] = static_cast<int>(c);
      m.sizes[c] = 1;
      changed = true;
    }
    m.centers.setZero();
    for (std::size_t i = 0; i < n; ++i) m.centers.row(m.assignment[i]) += x.row(static_cast<Eigen::Index>(i));
    for (std::size_t c = 0; c < k; ++c) m.centers.row(static_cast<Eigen::Index>(c)) /= static_cast<double>(m.sizes[c]);
    m.iterations = it + 1;
    if (!changed) break;
  }
  return m;
}

}  // namespace tpcost::sampling
