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

#include <span>
#include <vector>

#include "eagr/tensor.hpp"

namespace eagr {

/// SGD with momentum and L2 weight decay:
///   v <- momentum * v + grad + weight_decay * param
///   param <- param - lr * v
/// Velocity buffers are matched to parameters by position.
class Sgd {
 public:
  Sgd(double lr, double weight_decay, double momentum) : lr_(lr), wd_(weight_decay), momentum_(momentum) {}

  void step(std::span<Tensor> params) {
    if (velocity_.empty()) {
      for (const auto& p : params) velocity_.emplace_back(p.numel(), 0.0);
    } else if (velocity_.size() != params.size()) {
      throw ContractError("Sgd::step: parameter list changed between steps");
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
      Tensor& p = params[k];
      if (!p.has_grad()) throw ContractError("Sgd::step: parameter " + std::to_string(k) + " has no gradient");
      auto& v = velocity_[k];
      if (v.size() != p.numel()) throw ContractError("Sgd::step: parameter " + std::to_string(k) + " changed size");
      auto data = p.data();
      auto grad = p.grad_values();
      for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = momentum_ * v[i] + grad[i] + wd_ * data[i];
        data[i] -= lr_ * v[i];
      }
    }
  }

  double lr() const { return lr_; }
  const std::vector<std::vector<double>>& velocity() const { return velocity_; }

 private:
  double lr_, wd_, momentum_;
  std::vector<std::vector<double>> velocity_;
};

}  // namespace eagr
