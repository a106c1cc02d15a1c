// Copyright 2026 The EAGR Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "eagr/ops.hpp"
#include "eagr/random.hpp"

// Edge-aware graph reasoning block:
//
//   P     = softmax_pixels( anchors(pool(phi(X) ⊙ y)) · phi(X)^T )   [Nv x HW]
//   X_G   = P · theta(X)                                            [Nv x K]
//   X^_G  = ReLU((I - A) X_G W_G) (+ X_G)                           [Nv x K]
//   Z     = X + sigma(P^T X^_G)                                     [HW x C]
//
// Feature maps enter and leave as [H, W, C].

namespace eagr {

struct EagrConfig {
  std::size_t t_dim = 64;   ///< reduced channels of phi
  std::size_t k_dim = 128;  ///< vertex feature channels (theta output)
  Grid pool_grid{6, 6};
  Grid central_sel{4, 4};
  bool residual_reasoning = true;
  /// Reject selections whose margin inside the grid is odd.
  bool strict_centering = false;

  std::size_t vertices() const { return central_sel.cells(); }

  void validate(std::size_t channels) const {
    if (t_dim == 0 || k_dim == 0) throw ContractError("EagrConfig: t_dim and k_dim must be positive");
    if (t_dim >= channels)
      throw ContractError("EagrConfig: t_dim " + std::to_string(t_dim) + " must be below input channels " +
                          std::to_string(channels));
    if (central_sel.cells() == 0 || central_sel.rows > pool_grid.rows || central_sel.cols > pool_grid.cols)
      throw DimensionError("EagrConfig: central selection does not fit the pooling grid");
    if (strict_centering && ((pool_grid.rows - central_sel.rows) % 2 || (pool_grid.cols - central_sel.cols) % 2))
      throw ContractError("EagrConfig: strict centering needs even margins");
  }
};

struct EagrParams {
  Tensor w_phi, b_phi;      // C -> T
  Tensor w_theta, b_theta;  // C -> K
  Tensor w_sigma, b_sigma;  // K -> C
  Tensor w_g;               // K x K
  Tensor adj;               // Nv x Nv

  /// Conv weights U(±1/sqrt(fan_in)), zero biases, adjacency U(±0.01).
  static EagrParams init(std::size_t channels, const EagrConfig& cfg, Rng& rng) {
    cfg.validate(channels);
    EagrParams p;
    p.w_phi = fan_in_weight({channels, cfg.t_dim}, channels, rng);
    p.b_phi = zero_bias(cfg.t_dim);
    p.w_theta = fan_in_weight({channels, cfg.k_dim}, channels, rng);
    p.b_theta = zero_bias(cfg.k_dim);
    p.w_sigma = fan_in_weight({cfg.k_dim, channels}, cfg.k_dim, rng);
    p.b_sigma = zero_bias(channels);
    p.w_g = fan_in_weight({cfg.k_dim, cfg.k_dim}, cfg.k_dim, rng);
    const std::size_t nv = cfg.vertices();
    p.adj = uniform_tensor({nv, nv}, -0.01, 0.01, rng).set_requires_grad();
    return p;
  }

  std::vector<std::pair<std::string, Tensor*>> named(const std::string& prefix) {
    return {{prefix + ".w_phi", &w_phi},     {prefix + ".b_phi", &b_phi},     {prefix + ".w_theta", &w_theta},
            {prefix + ".b_theta", &b_theta}, {prefix + ".w_sigma", &w_sigma}, {prefix + ".b_sigma", &b_sigma},
            {prefix + ".w_g", &w_g},         {prefix + ".adj", &adj}};
  }
};

/// Which stages of the block run. Disabling reasoning keeps projection and
/// reprojection (X^_G = X_G).
struct EagrMode {
  bool reasoning = true;
};

/// Top-left corner of the centered selection; odd margins round down.
inline std::pair<std::size_t, std::size_t> anchor_offset(Grid grid, Grid sel) {
  if (sel.rows > grid.rows || sel.cols > grid.cols || sel.cells() == 0)
    throw DimensionError("anchor selection " + std::to_string(sel.rows) + "x" + std::to_string(sel.cols) +
                         " exceeds pooling grid " + std::to_string(grid.rows) + "x" + std::to_string(grid.cols));
  return {(grid.rows - sel.rows) / 2, (grid.cols - sel.cols) / 2};
}

/// Central Sh x Sw block of pooled anchors [Ph, Pw, T], flattened row-major to [Nv, T].
inline Tensor select_central_anchors(const Tensor& pooled, Grid sel) {
  detail::require_rank(pooled, 3, "select_central_anchors");
  const Grid grid{pooled.dim(0), pooled.dim(1)};
  auto [r0, c0] = anchor_offset(grid, sel);
  std::vector<std::size_t> rows;
  rows.reserve(sel.cells());
  for (std::size_t i = 0; i < sel.rows; ++i)
    for (std::size_t j = 0; j < sel.cols; ++j) rows.push_back((r0 + i) * grid.cols + (c0 + j));
  return take_rows(reshape(pooled, {grid.cells(), pooled.dim(2)}), std::move(rows));
}

namespace detail {

inline void check_feature_map(const Tensor& x, const char* op) {
  if (x.rank() != 3) throw DimensionError(std::string(op) + ": feature map must be [H, W, C], got " + shape_str(x.shape()));
}

inline Tensor edge_column(const Tensor& y, std::size_t pixels) {
  if (y.numel() != pixels)
    throw DimensionError("edge map " + shape_str(y.shape()) + " does not cover " + std::to_string(pixels) + " pixels");
  for (double v : y.data()) {
    if (!std::isfinite(v)) throw DomainError("edge map contains a non-finite value");
    if (v < 0.0 || v > 1.0) throw ContractError("edge map values must lie in [0, 1], got " + std::to_string(v));
  }
  return y.rank() == 2 && y.dim(1) == 1 ? y : reshape(y, {pixels, 1});
}

}  // namespace detail

/// Row-stochastic projection [Nv, HW]: each vertex row is a distribution over pixels.
inline Tensor build_projection(const Tensor& x, const Tensor& y, const EagrParams& params, const EagrConfig& cfg) {
  detail::check_feature_map(x, "build_projection");
  const std::size_t h = x.dim(0), w = x.dim(1), c = x.dim(2), hw = h * w;
  cfg.validate(c);
  detail::check_finite(x.data(), "build_projection");
  Tensor y_col = detail::edge_column(y, hw);
  Tensor phi = reshape(conv1x1(x, params.w_phi, params.b_phi, "eagr.phi"), {hw, cfg.t_dim});
  Tensor weighted = reshape(hadamard(phi, y_col), {h, w, cfg.t_dim});
  Tensor anchors = select_central_anchors(adaptive_avg_pool(weighted, cfg.pool_grid), cfg.central_sel);
  return softmax_rows(matmul(anchors, transpose(phi), "eagr.projection"));
}

/// X_G = P · theta(X).
inline Tensor project(const Tensor& p, const Tensor& x, const EagrParams& params) {
  detail::check_feature_map(x, "project");
  const std::size_t hw = x.dim(0) * x.dim(1);
  if (p.rank() != 2 || p.dim(1) != hw) throw detail::mismatch("project", p, x);
  Tensor theta = conv1x1(x, params.w_theta, params.b_theta, "eagr.theta");
  return matmul(p, reshape(theta, {hw, theta.shape().back()}), "eagr.graph_projection");
}

/// One graph-convolution layer over the learned adjacency.
inline Tensor reason(const Tensor& x_g, const EagrParams& params, const EagrConfig& cfg) {
  detail::require_rank(x_g, 2, "reason");
  const std::size_t nv = x_g.dim(0);
  if (params.adj.rank() != 2 || params.adj.dim(0) != nv || params.adj.dim(1) != nv)
    throw detail::mismatch("reason", params.adj, x_g);
  Tensor propagated = sub(x_g, matmul(params.adj, x_g, "eagr.adjacency"));
  Tensor core = relu(matmul(propagated, params.w_g, "eagr.gcn_weights"));
  return cfg.residual_reasoning ? add(core, x_g) : core;
}

/// Z = X + sigma(P^T · X^_G), returned as [H, W, C].
inline Tensor reproject(const Tensor& p, const Tensor& x_hat_g, const Tensor& x, const EagrParams& params) {
  detail::check_feature_map(x, "reproject");
  const std::size_t hw = x.dim(0) * x.dim(1);
  if (p.rank() != 2 || p.dim(1) != hw || x_hat_g.rank() != 2 || x_hat_g.dim(0) != p.dim(0))
    throw detail::mismatch("reproject", p, x_hat_g);
  Tensor back = matmul(transpose(p), x_hat_g, "eagr.reprojection");
  Tensor lifted = conv1x1(back, params.w_sigma, params.b_sigma, "eagr.sigma");
  return add(x, reshape(lifted, x.shape()));
}

/// Intermediate results of one forward pass, kept for inspection.
struct EagrTrace {
  Tensor projection;
  Tensor vertices;
  Tensor reasoned;
};

inline Tensor eagr_forward(const Tensor& x, const Tensor& y, const EagrParams& params, const EagrConfig& cfg,
                           EagrMode mode = {}, EagrTrace* trace = nullptr) {
  Tensor p = build_projection(x, y, params, cfg);
  Tensor x_g = project(p, x, params);
  Tensor x_hat = mode.reasoning ? reason(x_g, params, cfg) : x_g;
  if (trace) *trace = {p, x_g, x_hat};
  return reproject(p, x_hat, x, params);
}

}  // namespace eagr
