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
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tpcost/dataset/dataset.hpp"
#include "tpcost/features/compact_ast.hpp"
#include "tpcost/sampling/kmeans.hpp"

namespace tpcost::sampling {

/// Feature vectors of all programs belonging to one task.
struct TaskFeatureSet {
  std::string task_id;
  Matrix features;  // one row per program
};

/// Mean of a program's leaf computation vectors.
inline RowVector program_feature(const features::CompactAst& c) {
  RowVector v = RowVector::Zero(features::kNumEntries);
  for (const auto& leaf : c.leaf_vectors) {
    for (int j = 0; j < features::kNumEntries; ++j) v(j) += leaf[static_cast<std::size_t>(j)];
  }
  if (c.n_leaf > 0) v /= static_cast<double>(c.n_leaf);
  return v;
}

/// One feature row per sample, grouped by task id in order of first appearance.
inline std::vector<TaskFeatureSet> task_features(std::span<const dataset::Sample> samples) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<RowVector>> rows;
  for (const auto& s : samples) {
    auto [it, fresh] = rows.try_emplace(s.task_id);
    if (fresh) order.push_back(s.task_id);
    it->second.push_back(program_feature(s.compact));
  }
  std::vector<TaskFeatureSet> out;
  for (const auto& id : order) {
    const auto& r = rows[id];
    TaskFeatureSet t{id, Matrix(static_cast<Eigen::Index>(r.size()), features::kNumEntries)};
    for (std::size_t i = 0; i < r.size(); ++i) t.features.row(static_cast<Eigen::Index>(i)) = r[i];
    out.push_back(std::move(t));
  }
  return out;
}

/// Stacks every task's rows into one matrix.
inline Matrix stack_features(std::span<const TaskFeatureSet> tasks) {
  Eigen::Index rows = 0, cols = 0;
  for (const auto& t : tasks) {
    rows += t.features.rows();
    cols = t.features.cols();
  }
  Matrix x(rows, cols);
  Eigen::Index r = 0;
  for (const auto& t : tasks) {
    if (t.features.cols() != cols) throw DimensionMismatch("tasks have different feature widths");
    x.middleRows(r, t.features.rows()) = t.features;
    r += t.features.rows();
  }
  return x;
}

/// psi(e, t): mean L2 distance from task t's programs to center e.
inline Matrix build_distance_table(const ClusterModel& clusters, std::span<const TaskFeatureSet> tasks) {
  Matrix psi(clusters.centers.rows(), static_cast<Eigen::Index>(tasks.size()));
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const auto& f = tasks[t].features;
    if (f.cols() != clusters.centers.cols()) throw DimensionMismatch("task features and centers differ in width");
    if (f.rows() == 0) throw EmptySet("task " + tasks[t].task_id + " has no programs");
    for (Eigen::Index e = 0; e < clusters.centers.rows(); ++e) {
      double s = 0;
      for (Eigen::Index i = 0; i < f.rows(); ++i) s += (f.row(i) - clusters.centers.row(e)).norm();
      psi(e, static_cast<Eigen::Index>(t)) = s / static_cast<double>(f.rows());
    }
  }
  return psi;
}

struct Selection {
  std::vector<std::string> task_ids;
  ClusterModel clusters;
  Matrix psi;
};

/// Cluster the program features, then walk clusters from largest to
/// smallest and take the closest unselected task for each.
inline Selection select_tasks(const Matrix& x, int kappa, std::span<const TaskFeatureSet> tasks, std::uint64_t seed,
                              const std::optional<Matrix>& initial_centers = std::nullopt) {
  if (kappa < 1) throw ValidationError("kappa must be at least 1");
  if (static_cast<int>(tasks.size()) < kappa) throw TooFewTasks("fewer tasks than kappa");
  Selection s;
  s.clusters = kmeans(x, kappa, seed, initial_centers);
  s.psi = build_distance_table(s.clusters, tasks);
  std::vector<int> order(static_cast<std::size_t>(kappa));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return s.clusters.sizes[static_cast<std::size_t>(a)] > s.clusters.sizes[static_cast<std::size_t>(b)];
  });
  std::vector<bool> taken(tasks.size(), false);
  for (int e : order) {
    std::size_t best = tasks.size();
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      if (taken[t]) continue;
      if (best == tasks.size() || s.psi(e, static_cast<Eigen::Index>(t)) < s.psi(e, static_cast<Eigen::Index>(best))) best = t;
    }
    taken[best] = true;
    s.task_ids.push_back(tasks[best].task_id);
  }
  return s;
}

inline Selection select_tasks(std::span<const TaskFeatureSet> tasks, int kappa, std::uint64_t seed) {
  return select_tasks(stack_features(tasks), kappa, tasks, seed);
}

/// Uniformly random choice of kappa distinct task ids, the baseline for selection.
inline std::vector<std::string> random_tasks(std::span<const TaskFeatureSet> tasks, int kappa, std::uint64_t seed) {
  if (static_cast<int>(tasks.size()) < kappa) throw TooFewTasks("fewer tasks than kappa");
  std::vector<std::size_t> idx(tasks.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  rng.shuffle(idx);
  std::vector<std::string> out;
  for (int i = 0; i < kappa; ++i) out.push_back(tasks[idx[static_cast<std::size_t>(i)]].task_id);
  return out;
}

}  // namespace tpcost::sampling
