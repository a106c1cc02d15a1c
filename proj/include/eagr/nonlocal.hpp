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

namespace eagr {

/// 1x1 convs of the dense non-local block; gamma keeps the channel count.
struct NonLocalParams {
  Tensor w_theta, b_theta;  // C -> T
  Tensor w_phi, b_phi;      // C -> T
  Tensor w_gamma, b_gamma;  // C -> C

  static NonLocalParams init(std::size_t channels, std::size_t t_dim, Rng& rng) {
    NonLocalParams p;
    p.w_theta = fan_in_weight({channels, t_dim}, channels, rng);
    p.b_theta = zero_bias(t_dim);
    p.w_phi = fan_in_weight({channels, t_dim}, channels, rng);
    p.b_phi = zero_bias(t_dim);
    p.w_gamma = fan_in_weight({channels, channels}, channels, rng);
    p.b_gamma = zero_bias(channels);
    return p;
  }

  std::vector<std::pair<std::string, Tensor*>> named(const std::string& prefix) {
    return {{prefix + ".w_theta", &w_theta}, {prefix + ".b_theta", &b_theta}, {prefix + ".w_phi", &w_phi},
            {prefix + ".b_phi", &b_phi},     {prefix + ".w_gamma", &w_gamma}, {prefix + ".b_gamma", &b_gamma}};
  }
};

/// softmax(theta(X) phi(X)^T) gamma(X) on X: [H, W, C]. No residual.
inline Tensor nonlocal_forward(const Tensor& x, const NonLocalParams& params, Tensor* attention = nullptr) {
  if (x.rank() != 3) throw DimensionError("nonlocal_forward: feature map must be [H, W, C], got " + shape_str(x.shape()));
  const std::size_t hw = x.dim(0) * x.dim(1), c = x.dim(2);
  if (params.w_gamma.rank() != 2 || params.w_gamma.dim(1) != c) throw detail::mismatch("nonlocal_forward", x, params.w_gamma);
  Tensor flat = reshape(x, {hw, c});
  Tensor theta = conv1x1(flat, params.w_theta, params.b_theta, "nonlocal.theta");
  Tensor phi = conv1x1(flat, params.w_phi, params.b_phi, "nonlocal.phi");
  Tensor gamma = conv1x1(flat, params.w_gamma, params.b_gamma, "nonlocal.gamma");
  Tensor v = softmax_rows(matmul(theta, transpose(phi), "nonlocal.attention"));
  if (attention) *attention = v;
  return reshape(matmul(v, gamma, "nonlocal.aggregation"), x.shape());
}

}  // namespace eagr
