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
#include <span>
#include <utility>
#include <vector>

#include "tpcost/error.hpp"
#include "tpcost/util/matrix.hpp"

namespace tpcost::costmodel {

/// (1/n) * (mse_weight * sum (p - y)^2 + mape_weight * sum |p - y| / denom).
inline double weighted_loss(std::span<const double> pred, std::span<const double> y,
                            std::span<const double> denom, double mse_weight, double mape_weight) {
  if (pred.empty()) throw EmptyBatch("loss of empty batch");
  if (pred.size() != y.size() || denom.size() != y.size()) throw DimensionMismatch("loss size mismatch");
  double sq = 0, rel = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - y[i];
    sq += d * d;
    rel += std::abs(d) / denom[i];
  }
  return (mse_weight * sq + mape_weight * rel) / static_cast<double>(pred.size());
}

/// Hybrid objective: squared error plus lambda-weighted relative error.
inline double loss_pretrain(std::span<const double> pred, std::span<const double> y, double lambda_hybrid) {
  return weighted_loss(pred, y, y, 1.0, lambda_hybrid);
}

// ---------------------------------------------------------------------------
// Central moment discrepancy.

inline constexpr double kMinSupportWidth = 1e-6;

namespace detail {

struct ColumnMoments {
  double mean = 0;
  std::vector<double> central;  // central[j] = E[(x - mean)^j], j = 0..K
};

inline ColumnMoments column_moments(const Matrix& z, Eigen::Index col, int order) {
  ColumnMoments m;
  const auto n = static_cast<double>(z.rows());
  for (Eigen::Index i = 0; i < z.rows(); ++i) m.mean += z(i, col);
  m.mean /= n;
  m.central.assign(static_cast<std::size_t>(order) + 1, 0.0);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double c = z(i, col) - m.mean;
    double p = 1.0;
    for (int j = 0; j <= order; ++j) {
      m.central[static_cast<std::size_t>(j)] += p;
      p *= c;
    }
  }
  for (double& v : m.central) v /= n;
  return m;
}

struct CmdTerms {
  // diff[j][c]: per-column normalized difference for order j (j = 1 is the mean).
  std::vector<std::vector<double>> diff;
  std::vector<double> norm;
  std::vector<double> width;
  std::vector<Eigen::Index> argmin_row, argmax_row;
  std::vector<bool> min_in_s, max_in_s, clamped;
  std::vector<ColumnMoments> ms, mt;
  double value = 0;
};

inline CmdTerms cmd_terms(const Matrix& zs, const Matrix& zt, int order) {
  if (zs.rows() == 0 || zt.rows() == 0) throw EmptySet("CMD needs two non-empty sets");
  if (zs.cols() != zt.cols()) throw DimensionMismatch("CMD sets differ in dimensionality");
  if (order < 1) throw ValidationError("CMD order must be >= 1");
  const auto cols = static_cast<std::size_t>(zs.cols());
  CmdTerms t;
  t.diff.assign(static_cast<std::size_t>(order) + 1, std::vector<double>(cols, 0.0));
  t.norm.assign(static_cast<std::size_t>(order) + 1, 0.0);
  t.width.resize(cols);
  t.argmin_row.resize(cols);
  t.argmax_row.resize(cols);
  t.min_in_s.resize(cols);
  t.max_in_s.resize(cols);
  t.clamped.resize(cols);
  for (std::size_t c = 0; c < cols; ++c) {
    const auto col = static_cast<Eigen::Index>(c);
    Eigen::Index smin, smax, tmin, tmax;
    const double lo_s = zs.col(col).minCoeff(&smin), hi_s = zs.col(col).maxCoeff(&smax);
    const double lo_t = zt.col(col).minCoeff(&tmin), hi_t = zt.col(col).maxCoeff(&tmax);
    t.min_in_s[c] = lo_s <= lo_t;
    t.max_in_s[c] = hi_s >= hi_t;
    t.argmin_row[c] = t.min_in_s[c] ? smin : tmin;
    t.argmax_row[c] = t.max_in_s[c] ? smax : tmax;
    const double w = std::max(hi_s, hi_t) - std::min(lo_s, lo_t);
    t.clamped[c] = w < kMinSupportWidth;
    t.width[c] = std::max(w, kMinSupportWidth);
    t.ms.push_back(column_moments(zs, col, order));
    t.mt.push_back(column_moments(zt, col, order));
    double scale = 1.0;
    for (int j = 1; j <= order; ++j) {
      scale /= t.width[c];
      const double ds = j == 1 ? t.ms[c].mean : t.ms[c].central[static_cast<std::size_t>(j)];
      const double dt = j == 1 ? t.mt[c].mean : t.mt[c].central[static_cast<std::size_t>(j)];
      t.diff[static_cast<std::size_t>(j)][c] = (ds - dt) * scale;
    }
  }
  for (int j = 1; j <= order; ++j) {
    double sq = 0;
    for (double d : t.diff[static_cast<std::size_t>(j)]) sq += d * d;
    t.norm[static_cast<std::size_t>(j)] = std::sqrt(sq);
    t.value += t.norm[static_cast<std::size_t>(j)];
  }
  return t;
}

}  // namespace detail

/// CMD between the row sets `zs` and `zt` up to moment `order`. Each column is
/// normalized by the width of its joint empirical support [a, b].
inline double cmd(const Matrix& zs, const Matrix& zt, int order = 5) {
  return detail::cmd_terms(zs, zt, order).value;
}

/// Gradients of cmd() with respect to every entry of both sets. The support
/// endpoints are treated as functions of the extreme points, so the gradient
/// also flows through the per-column minimum and maximum.
inline std::pair<Matrix, Matrix> cmd_gradient(const Matrix& zs, const Matrix& zt, int order = 5) {
  const auto t = detail::cmd_terms(zs, zt, order);
  Matrix gs = Matrix::Zero(zs.rows(), zs.cols());
  Matrix gt = Matrix::Zero(zt.rows(), zt.cols());
  const double ns = static_cast<double>(zs.rows()), nt = static_cast<double>(zt.rows());
  for (Eigen::Index c = 0; c < zs.cols(); ++c) {
    const auto cu = static_cast<std::size_t>(c);
    const auto& ms = t.ms[cu];
    const auto& mt = t.mt[cu];
    double dwidth = 0;
    for (int j = 1; j <= order; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      if (t.norm[ju] == 0) continue;
      // d||u||/du_c, where u_c = (moment_s - moment_t) / w^j.
      const double g = t.diff[ju][cu] / t.norm[ju];
      const double inv_wj = std::pow(t.width[cu], -j);
      dwidth += -j * g * t.diff[ju][cu] / t.width[cu];
      if (j == 1) {
        for (Eigen::Index i = 0; i < zs.rows(); ++i) gs(i, c) += g * inv_wj / ns;
        for (Eigen::Index i = 0; i < zt.rows(); ++i) gt(i, c) -= g * inv_wj / nt;
        continue;
      }
      // dM_j/dx_i = (j/n) * ((x_i - mean)^(j-1) - M_{j-1}).
      const double prev_s = ms.central[ju - 1], prev_t = mt.central[ju - 1];
      for (Eigen::Index i = 0; i < zs.rows(); ++i) {
        const double d = zs(i, c) - ms.mean;
        gs(i, c) += g * inv_wj * (j / ns) * (std::pow(d, j - 1) - prev_s);
      }
      for (Eigen::Index i = 0; i < zt.rows(); ++i) {
        const double d = zt(i, c) - mt.mean;
        gt(i, c) -= g * inv_wj * (j / nt) * (std::pow(d, j - 1) - prev_t);
      }
    }
    if (t.clamped[cu] || dwidth == 0) continue;
    (t.max_in_s[cu] ? gs : gt)(t.argmax_row[cu], c) += dwidth;
    (t.min_in_s[cu] ? gs : gt)(t.argmin_row[cu], c) -= dwidth;
  }
  return {gs, gt};
}

/// Fine-tuning objective: pre-training loss plus alpha * CMD(zs, zt).
inline double loss_finetune(std::span<const double> pred, std::span<const double> y, const Matrix& zs,
                            const Matrix& zt, double lambda_hybrid, double alpha_cmd, int order = 5) {
  const double base = loss_pretrain(pred, y, lambda_hybrid);
  if (alpha_cmd == 0) return base;
  return base + alpha_cmd * cmd(zs, zt, order);
}

// ---------------------------------------------------------------------------

struct Metrics {
  double mape = 0;
  double rmse = 0;
  double mspe = 0;
};

inline Metrics metrics(std::span<const double> pred, std::span<const double> y) {
  if (pred.empty()) throw EmptyBatch("metrics of empty batch");
  if (pred.size() != y.size()) throw DimensionMismatch("metrics size mismatch");
  Metrics m;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!(y[i] > 0)) throw DomainError("metric labels must be positive");
    const double d = pred[i] - y[i];
    m.mape += std::abs(d) / y[i];
    m.rmse += d * d;
    m.mspe += (d / y[i]) * (d / y[i]);
  }
  const auto n = static_cast<double>(y.size());
  m.mape /= n;
  m.rmse = std::sqrt(m.rmse / n);
  m.mspe /= n;
  return m;
}

}  // namespace tpcost::costmodel
