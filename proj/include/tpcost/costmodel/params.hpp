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
#include <string>
#include <vector>

#include "tpcost/costmodel/config.hpp"
#include "tpcost/features/compact_ast.hpp"
#include "tpcost/features/device.hpp"
#include "tpcost/util/matrix.hpp"
#include "tpcost/util/rng.hpp"

namespace tpcost::costmodel {

template <class T>
struct LinearT {
  T w;  // in x out
  T b;  // 1 x out
};

template <class T>
struct EncoderLayerT {
  LinearT<T> q, k, v, o;
  T ln1_gain, ln1_bias;
  LinearT<T> ff1, ff2;
  T ln2_gain, ln2_bias;
};

/// Every learnable tensor of the predictor. Instantiated with Matrix for
/// weights and gradients, and with Var for their tape handles.
template <class T>
struct NetworkT {
  LinearT<T> input;
  std::vector<EncoderLayerT<T>> layers;
  std::vector<LinearT<T>> leaf_embed;  // entry l-1 serves programs with l leaves
  LinearT<T> device_hidden;
  LinearT<T> device_proj;
  std::vector<LinearT<T>> decoder;
};

using Weights = NetworkT<Matrix>;

/// Calls f(name, t...) on corresponding tensors of one or more networks of the same shape.
template <class F, class... Nets>
void for_each_tensor(F&& f, Nets&... nets) {
  auto lin = [&](const std::string& name, auto&... l) {
    f(name + ".w", l.w...);
    f(name + ".b", l.b...);
  };
  lin("input", nets.input...);
  const auto first = [](auto& n, auto&...) -> auto& { return n; };
  const std::size_t n_layers = first(nets...).layers.size();
  for (std::size_t i = 0; i < n_layers; ++i) {
    const std::string p = "layers." + std::to_string(i) + ".";
    lin(p + "q", nets.layers[i].q...);
    lin(p + "k", nets.layers[i].k...);
    lin(p + "v", nets.layers[i].v...);
    lin(p + "o", nets.layers[i].o...);
    f(p + "ln1.gain", nets.layers[i].ln1_gain...);
    f(p + "ln1.bias", nets.layers[i].ln1_bias...);
    lin(p + "ff1", nets.layers[i].ff1...);
    lin(p + "ff2", nets.layers[i].ff2...);
    f(p + "ln2.gain", nets.layers[i].ln2_gain...);
    f(p + "ln2.bias", nets.layers[i].ln2_bias...);
  }
  const std::size_t n_embed = first(nets...).leaf_embed.size();
  for (std::size_t i = 0; i < n_embed; ++i) lin("leaf_embed." + std::to_string(i + 1), nets.leaf_embed[i]...);
  lin("device_hidden", nets.device_hidden...);
  lin("device_proj", nets.device_proj...);
  const std::size_t n_dec = first(nets...).decoder.size();
  for (std::size_t i = 0; i < n_dec; ++i) lin("decoder." + std::to_string(i), nets.decoder[i]...);
}

/// Network with the shape implied by `cfg`; tensors are left unallocated
/// for T != Matrix.
template <class T>
NetworkT<T> make_network_shape(const CostModelConfig& cfg) {
  NetworkT<T> n;
  n.layers.resize(static_cast<std::size_t>(cfg.n_layers));
  n.leaf_embed.resize(static_cast<std::size_t>(cfg.n_leaf_max));
  n.decoder.resize(cfg.decoder_dims.size() + 1);
  return n;
}

namespace detail {

inline void xavier(Matrix& w, Eigen::Index in, Eigen::Index out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(in + out));
  w.resize(in, out);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-a, a);
}

inline void init_linear(LinearT<Matrix>& l, Eigen::Index in, Eigen::Index out, Rng& rng) {
  xavier(l.w, in, out, rng);
  l.b = Matrix::Zero(1, out);
}

}  // namespace detail

/// Config plus weights: everything needed to run the predictor.
struct CostModelParams {
  CostModelConfig config;
  Weights weights;

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for_each_tensor([&](const std::string&, const Matrix& m) { n += static_cast<std::size_t>(m.size()); },
                    weights);
    return n;
  }

  bool all_finite() const {
    bool ok = true;
    for_each_tensor([&](const std::string&, const Matrix& m) { ok = ok && m.allFinite(); }, weights);
    return ok;
  }

  bool operator==(const CostModelParams& o) const {
    if (!(config == o.config)) return false;
    bool eq = true;
    for_each_tensor(
        [&](const std::string&, const Matrix& a, const Matrix& b) {
          eq = eq && a.rows() == b.rows() && a.cols() == b.cols() && a == b;
        },
        weights, const_cast<Weights&>(o.weights));
    return eq;
  }
};

/// Seeded fan-based uniform init; layer-norm gains 1, biases 0.
inline CostModelParams init_params(const CostModelConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  CostModelParams p{cfg, make_network_shape<Matrix>(cfg)};
  auto& w = p.weights;
  const Eigen::Index d = cfg.d_model;
  detail::init_linear(w.input, features::kNumEntries, d, rng);
  for (auto& layer : w.layers) {
    detail::init_linear(layer.q, d, d, rng);
    detail::init_linear(layer.k, d, d, rng);
    detail::init_linear(layer.v, d, d, rng);
    detail::init_linear(layer.o, d, d, rng);
    layer.ln1_gain = Matrix::Ones(1, d);
    layer.ln1_bias = Matrix::Zero(1, d);
    detail::init_linear(layer.ff1, d, cfg.d_ff, rng);
    detail::init_linear(layer.ff2, cfg.d_ff, d, rng);
    layer.ln2_gain = Matrix::Ones(1, d);
    layer.ln2_bias = Matrix::Zero(1, d);
  }
  for (std::size_t l = 0; l < w.leaf_embed.size(); ++l) {
    detail::init_linear(w.leaf_embed[l], static_cast<Eigen::Index>(l + 1) * d, cfg.d_embed, rng);
  }
  detail::init_linear(w.device_hidden, features::kDeviceEntries, cfg.d_device, rng);
  detail::init_linear(w.device_proj, cfg.d_device, cfg.d_embed, rng);
  Eigen::Index in = cfg.d_embed;
  for (std::size_t i = 0; i < cfg.decoder_dims.size(); ++i) {
    detail::init_linear(w.decoder[i], in, cfg.decoder_dims[i], rng);
    in = cfg.decoder_dims[i];
  }
  detail::init_linear(w.decoder.back(), in, 1, rng);
  return p;
}

/// Zero tensors shaped like `w`.
inline Weights zeros_like(const Weights& w) {
  Weights z = w;
  for_each_tensor([](const std::string&, Matrix& m) { m.setZero(); }, z);
  return z;
}

}  // namespace tpcost::costmodel
