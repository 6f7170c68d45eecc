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
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <vector>

#include "tpcost/costmodel/loss.hpp"
#include "tpcost/error.hpp"
#include "tpcost/util/matrix.hpp"

namespace tpcost::costmodel {

/// Handle to a value recorded on a Tape.
struct Var {
  int id = -1;
};

/// Reverse-mode differentiation over dense matrices. Every op records its
/// output and a closure that pushes the output gradient to its inputs.
/// Parameters are referenced, not copied, and their gradients are
/// accumulated into caller-owned matrices by backward().
class Tape {
 public:
  Var input(Matrix value) {
    Node n;
    n.value = std::move(value);
    return push(std::move(n));
  }

  Var param(const Matrix& value, Matrix* grad_sink) {
    Node n;
    n.external = &value;
    n.grad_sink = grad_sink;
    n.needs_grad = grad_sink != nullptr;
    return push(std::move(n));
  }

  const Matrix& value(Var v) const {
    const Node& n = nodes_[static_cast<std::size_t>(v.id)];
    return n.external ? *n.external : n.value;
  }

  double scalar(Var v) const { return value(v)(0, 0); }

  /// x * w + b, with b a 1 x out row broadcast over rows.
  Var linear(Var x, Var w, Var b) {
    Matrix out = value(x) * value(w);
    out.rowwise() += value(b).row(0);
    return record(std::move(out), {x, w, b}, [x, w, b](Tape& t, const Matrix& g) {
      if (t.wants(x)) t.accumulate(x, g * t.value(w).transpose());
      if (t.wants(w)) t.accumulate(w, t.value(x).transpose() * g);
      if (t.wants(b)) t.accumulate(b, g.colwise().sum());
    });
  }

  Var add(Var a, Var b) {
    return record(value(a) + value(b), {a, b}, [a, b](Tape& t, const Matrix& g) {
      if (t.wants(a)) t.accumulate(a, g);
      if (t.wants(b)) t.accumulate(b, g);
    });
  }

  Var mul(Var a, Var b) {
    return record(value(a).cwiseProduct(value(b)), {a, b}, [a, b](Tape& t, const Matrix& g) {
      if (t.wants(a)) t.accumulate(a, g.cwiseProduct(t.value(b)));
      if (t.wants(b)) t.accumulate(b, g.cwiseProduct(t.value(a)));
    });
  }

  /// GELU, tanh approximation.
  Var gelu(Var a) {
    const Matrix& x = value(a);
    Matrix out(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) out.data()[i] = gelu_value(x.data()[i]);
    return record(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
      const Matrix& x = t.value(a);
      Matrix dx(x.rows(), x.cols());
      for (Eigen::Index i = 0; i < x.size(); ++i) dx.data()[i] = g.data()[i] * gelu_slope(x.data()[i]);
      t.accumulate(a, dx);
    });
  }

  /// Row-wise layer normalization with learned gain and bias (1 x cols each).
  Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5) {
    const Matrix& in = value(x);
    auto xhat = std::make_shared<Matrix>(in.rows(), in.cols());
    auto inv_std = std::make_shared<std::vector<double>>(static_cast<std::size_t>(in.rows()));
    const double cols = static_cast<double>(in.cols());
    for (Eigen::Index r = 0; r < in.rows(); ++r) {
      const double mu = in.row(r).sum() / cols;
      const double var = (in.row(r).array() - mu).square().sum() / cols;
      const double is = 1.0 / std::sqrt(var + eps);
      (*inv_std)[static_cast<std::size_t>(r)] = is;
      xhat->row(r) = (in.row(r).array() - mu) * is;
    }
    Matrix out = xhat->array().rowwise() * value(gain).row(0).array();
    out.rowwise() += value(bias).row(0);
    return record(std::move(out), {x, gain, bias}, [x, gain, bias, xhat, inv_std](Tape& t, const Matrix& g) {
      if (t.wants(gain)) t.accumulate(gain, g.cwiseProduct(*xhat).colwise().sum());
      if (t.wants(bias)) t.accumulate(bias, g.colwise().sum());
      if (!t.wants(x)) return;
      Matrix dxhat = g.array().rowwise() * t.value(gain).row(0).array();
      Matrix dx(g.rows(), g.cols());
      const double n = static_cast<double>(g.cols());
      for (Eigen::Index r = 0; r < g.rows(); ++r) {
        const double m1 = dxhat.row(r).sum() / n;
        const double m2 = dxhat.row(r).dot(xhat->row(r)) / n;
        dx.row(r) = ((dxhat.row(r).array() - m1 - xhat->row(r).array() * m2) *
                     (*inv_std)[static_cast<std::size_t>(r)]).matrix();
      }
      t.accumulate(x, dx);
    });
  }

  /// Multi-head scaled dot-product self-attention. Rows come in consecutive
  /// blocks of `seq_len`, one block per sample; attention never crosses blocks.
  Var self_attention(Var q, Var k, Var v, int seq_len, int n_heads) {
    const Matrix& Q = value(q);
    const Matrix& K = value(k);
    const Matrix& V = value(v);
    const Eigen::Index L = seq_len;
    const Eigen::Index dh = Q.cols() / n_heads;
    const Eigen::Index blocks = Q.rows() / L;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    auto probs = std::make_shared<std::vector<Matrix>>();
    probs->reserve(static_cast<std::size_t>(blocks * n_heads));
    Matrix out(Q.rows(), Q.cols());
    for (Eigen::Index b = 0; b < blocks; ++b) {
      for (Eigen::Index h = 0; h < n_heads; ++h) {
        Matrix s = Q.block(b * L, h * dh, L, dh) * K.block(b * L, h * dh, L, dh).transpose() * scale;
        for (Eigen::Index r = 0; r < L; ++r) {
          const double mx = s.row(r).maxCoeff();
          s.row(r) = (s.row(r).array() - mx).exp().matrix();
          s.row(r) /= s.row(r).sum();
        }
        out.block(b * L, h * dh, L, dh).noalias() = s * V.block(b * L, h * dh, L, dh);
        probs->push_back(std::move(s));
      }
    }
    return record(std::move(out), {q, k, v}, [q, k, v, L, dh, blocks, n_heads, scale, probs](Tape& t, const Matrix& g) {
      const Matrix& Q = t.value(q);
      const Matrix& K = t.value(k);
      const Matrix& V = t.value(v);
      Matrix dQ = Matrix::Zero(Q.rows(), Q.cols());
      Matrix dK = Matrix::Zero(K.rows(), K.cols());
      Matrix dV = Matrix::Zero(V.rows(), V.cols());
      std::size_t idx = 0;
      for (Eigen::Index b = 0; b < blocks; ++b) {
        for (Eigen::Index h = 0; h < n_heads; ++h, ++idx) {
          const Matrix& P = (*probs)[idx];
          const auto gO = g.block(b * L, h * dh, L, dh);
          dV.block(b * L, h * dh, L, dh).noalias() = P.transpose() * gO;
          Matrix dP = gO * V.block(b * L, h * dh, L, dh).transpose();
          Matrix dS(L, L);
          for (Eigen::Index r = 0; r < L; ++r) {
            const double dot = dP.row(r).dot(P.row(r));
            dS.row(r) = (P.row(r).array() * (dP.row(r).array() - dot)).matrix();
          }
          dS *= scale;
          dQ.block(b * L, h * dh, L, dh).noalias() = dS * K.block(b * L, h * dh, L, dh);
          dK.block(b * L, h * dh, L, dh).noalias() = dS.transpose() * Q.block(b * L, h * dh, L, dh);
        }
      }
      if (t.wants(q)) t.accumulate(q, dQ);
      if (t.wants(k)) t.accumulate(k, dK);
      if (t.wants(v)) t.accumulate(v, dV);
    });
  }

  /// Row-major reinterpretation to a new shape with the same element count.
  Var reshape(Var a, Eigen::Index rows, Eigen::Index cols) {
    const Matrix& x = value(a);
    if (rows * cols != x.size()) throw DimensionMismatch("reshape changes element count");
    Matrix out = Eigen::Map<const Matrix>(x.data(), rows, cols);
    const Eigen::Index r0 = x.rows(), c0 = x.cols();
    return record(std::move(out), {a}, [a, r0, c0](Tape& t, const Matrix& g) {
      t.accumulate(a, Eigen::Map<const Matrix>(g.data(), r0, c0));
    });
  }

  Var concat_rows(std::span<const Var> parts) {
    Eigen::Index rows = 0;
    const Eigen::Index cols = value(parts.front()).cols();
    for (Var p : parts) rows += value(p).rows();
    Matrix out(rows, cols);
    Eigen::Index r = 0;
    for (Var p : parts) {
      out.middleRows(r, value(p).rows()) = value(p);
      r += value(p).rows();
    }
    std::vector<Var> inputs(parts.begin(), parts.end());
    return record(std::move(out), inputs, [inputs](Tape& t, const Matrix& g) {
      Eigen::Index r = 0;
      for (Var p : inputs) {
        const Eigen::Index n = t.value(p).rows();
        if (t.wants(p)) t.accumulate(p, g.middleRows(r, n));
        r += n;
      }
    });
  }

  /// Scalar (1 x 1) weighted_loss over a column of predictions.
  Var regression_loss(Var pred, std::vector<double> y, std::vector<double> denom, double mse_weight,
                      double mape_weight) {
    const Matrix& p = value(pred);
    std::span<const double> ps(p.data(), static_cast<std::size_t>(p.size()));
    Matrix out(1, 1);
    out(0, 0) = weighted_loss(ps, y, denom, mse_weight, mape_weight);
    return record(std::move(out), {pred},
                  [pred, y = std::move(y), denom = std::move(denom), mse_weight, mape_weight](Tape& t, const Matrix& g) {
                    const Matrix& p = t.value(pred);
                    const double n = static_cast<double>(p.size());
                    Matrix dp(p.rows(), p.cols());
                    for (Eigen::Index i = 0; i < p.size(); ++i) {
                      const double d = p.data()[i] - y[static_cast<std::size_t>(i)];
                      const double sign = (d > 0) - (d < 0);
                      dp.data()[i] = g(0, 0) * (2.0 * mse_weight * d + mape_weight * sign / denom[static_cast<std::size_t>(i)]) / n;
                    }
                    t.accumulate(pred, dp);
                  });
  }

  /// Scalar central moment discrepancy between two row sets.
  Var cmd_loss(Var zs, Var zt, int order) {
    Matrix out(1, 1);
    out(0, 0) = cmd(value(zs), value(zt), order);
    return record(std::move(out), {zs, zt}, [zs, zt, order](Tape& t, const Matrix& g) {
      auto [gs, gt] = cmd_gradient(t.value(zs), t.value(zt), order);
      if (t.wants(zs)) t.accumulate(zs, gs * g(0, 0));
      if (t.wants(zt)) t.accumulate(zt, gt * g(0, 0));
    });
  }

  /// wa * a + wb * b for scalars.
  Var weighted_sum(Var a, double wa, Var b, double wb) {
    Matrix out = value(a) * wa + value(b) * wb;
    return record(std::move(out), {a, b}, [a, b, wa, wb](Tape& t, const Matrix& g) {
      if (t.wants(a)) t.accumulate(a, g * wa);
      if (t.wants(b)) t.accumulate(b, g * wb);
    });
  }

  /// Propagates d(loss)/d(.) from a scalar root and flushes parameter gradients.
  void backward(Var loss) {
    for (auto& n : nodes_) n.grad.resize(0, 0);
    Node& root = nodes_[static_cast<std::size_t>(loss.id)];
    root.grad = Matrix::Ones(1, 1);
    for (int i = loss.id; i >= 0; --i) {
      Node& n = nodes_[static_cast<std::size_t>(i)];
      if (n.grad.size() == 0 || !n.needs_grad) continue;
      if (n.backward) {
        // The closure may grow other nodes' gradients but never this one's.
        n.backward(*this, n.grad);
      } else if (n.grad_sink) {
        *n.grad_sink += n.grad;
      }
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  using Backward = std::function<void(Tape&, const Matrix&)>;

  struct Node {
    Matrix value;
    const Matrix* external = nullptr;
    Matrix* grad_sink = nullptr;
    Matrix grad;
    Backward backward;
    bool needs_grad = false;
  };

  static constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)

  static double gelu_value(double x) {
    return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + 0.044715 * x * x * x)));
  }
  static double gelu_slope(double x) {
    const double th = std::tanh(kGeluC * (x + 0.044715 * x * x * x));
    return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * kGeluC * (1.0 + 3.0 * 0.044715 * x * x);
  }

  Var push(Node n) {
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  Var record(Matrix value, std::initializer_list<Var> inputs, Backward bw) {
    return record(std::move(value), std::vector<Var>(inputs), std::move(bw));
  }

  Var record(Matrix value, const std::vector<Var>& inputs, Backward bw) {
    Node n;
    n.value = std::move(value);
    for (Var in : inputs) n.needs_grad |= wants(in);
    if (n.needs_grad) n.backward = std::move(bw);
    return push(std::move(n));
  }

  bool wants(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].needs_grad; }

  template <class M>
  void accumulate(Var v, const M& g) {
    Node& n = nodes_[static_cast<std::size_t>(v.id)];
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

  std::vector<Node> nodes_;
};

}  // namespace tpcost::costmodel
