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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <map>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "eagr/error.hpp"

namespace eagr {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

// ---------------------------------------------------------------------------
// Flop accounting. Only contractions (matmul and the convolutions) are
// charged; elementwise work is free in this model.
// ---------------------------------------------------------------------------

class FlopCounter {
 public:
  void record(std::string_view op, std::uint64_t macs) {
    total_ += macs;
    by_op_[std::string(op)] += macs;
  }
  void reset() {
    total_ = 0;
    by_op_.clear();
  }
  std::uint64_t total() const { return total_; }
  std::uint64_t count(std::string_view op) const {
    auto it = by_op_.find(std::string(op));
    return it == by_op_.end() ? 0 : it->second;
  }
  const std::map<std::string, std::uint64_t>& breakdown() const { return by_op_; }

 private:
  std::uint64_t total_ = 0;
  std::map<std::string, std::uint64_t> by_op_;
};

namespace detail {
inline FlopCounter*& active_counter() {
  thread_local FlopCounter* counter = nullptr;
  return counter;
}
}  // namespace detail

/// Routes MAC records of the current thread into `counter` for the lifetime
/// of the scope. Scopes nest; the innermost one receives the records.
class FlopScope {
 public:
  explicit FlopScope(FlopCounter& counter) : previous_(detail::active_counter()) {
    detail::active_counter() = &counter;
  }
  ~FlopScope() { detail::active_counter() = previous_; }
  FlopScope(const FlopScope&) = delete;
  FlopScope& operator=(const FlopScope&) = delete;

 private:
  FlopCounter* previous_;
};

inline void record_macs(std::string_view op, std::uint64_t macs) {
  if (auto* counter = detail::active_counter()) counter->record(op, macs);
}

// ---------------------------------------------------------------------------
// Tensor
// ---------------------------------------------------------------------------

class Tensor;

namespace detail {

struct TensorState;

using BackwardFn = std::function<void(const TensorState& out)>;

struct Node {
  std::vector<std::shared_ptr<TensorState>> inputs;
  BackwardFn backward;
  const char* name = "";
};

struct TensorState {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::shared_ptr<Node> node;  // producer; null for leaves
};

}  // namespace detail

/// Dense row-major array of doubles. Copies share storage (handle
/// semantics), so an op result keeps its operands alive for backward.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape, double fill = 0.0) : state_(std::make_shared<detail::TensorState>()) {
    for (auto e : shape)
      if (e == 0) throw DimensionError("tensor extents must be positive, got " + shape_str(shape));
    state_->data.assign(shape_numel(shape), fill);
    state_->shape = std::move(shape);
  }

  Tensor(Shape shape, std::vector<double> data) : state_(std::make_shared<detail::TensorState>()) {
    for (auto e : shape)
      if (e == 0) throw DimensionError("tensor extents must be positive, got " + shape_str(shape));
    if (shape_numel(shape) != data.size())
      throw DimensionError("data length " + std::to_string(data.size()) + " does not match shape " +
                           shape_str(shape));
    state_->shape = std::move(shape);
    state_->data = std::move(data);
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape), 0.0); }
  static Tensor ones(Shape shape) { return Tensor(std::move(shape), 1.0); }
  static Tensor scalar(double v) { return Tensor(Shape{1}, v); }
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows) {
    std::vector<double> data;
    std::size_t cols = rows.begin()->size();
    for (const auto& r : rows) {
      if (r.size() != cols) throw DimensionError("ragged matrix literal");
      data.insert(data.end(), r.begin(), r.end());
    }
    return Tensor(Shape{rows.size(), cols}, std::move(data));
  }

  bool defined() const { return static_cast<bool>(state_); }
  const Shape& shape() const { return state_->shape; }
  std::size_t rank() const { return state_->shape.size(); }
  std::size_t dim(std::size_t i) const { return state_->shape.at(i); }
  std::size_t numel() const { return state_->data.size(); }

  std::span<double> data() { return state_->data; }
  std::span<const double> data() const { return state_->data; }
  const std::vector<double>& values() const { return state_->data; }

  double item() const {
    if (numel() != 1) throw ContractError("item() on a tensor of shape " + shape_str(shape()));
    return state_->data[0];
  }
  double at(std::size_t i, std::size_t j) const { return state_->data[i * state_->shape.back() + j]; }

  bool requires_grad() const { return state_->requires_grad; }
  Tensor& set_requires_grad(bool on = true) {
    state_->requires_grad = on;
    return *this;
  }
  bool is_leaf() const { return !state_->node; }

  bool has_grad() const { return !state_->grad.empty(); }
  /// Gradient as a fresh tensor; zeros when nothing was accumulated.
  Tensor grad() const {
    return has_grad() ? Tensor(shape(), state_->grad) : Tensor::zeros(shape());
  }
  std::span<const double> grad_values() const { return state_->grad; }
  /// Mutable gradient buffer, allocated (zero-filled) on first use.
  std::span<double> grad_buffer() {
    if (state_->grad.empty()) state_->grad.assign(numel(), 0.0);
    return state_->grad;
  }
  void zero_grad() { state_->grad.clear(); }

  /// New leaf with copied values and no history.
  Tensor detach() const { return Tensor(shape(), state_->data); }

  const std::shared_ptr<detail::TensorState>& state() const { return state_; }
  explicit Tensor(std::shared_ptr<detail::TensorState> s) : state_(std::move(s)) {}

 private:
  std::shared_ptr<detail::TensorState> state_;
};

namespace detail {
inline bool& grad_mode_enabled() {
  thread_local bool enabled = true;
  return enabled;
}
}  // namespace detail

/// Disables history recording on this thread for the lifetime of the scope.
class NoGradGuard {
 public:
  NoGradGuard() : previous_(detail::grad_mode_enabled()) { detail::grad_mode_enabled() = false; }
  ~NoGradGuard() { detail::grad_mode_enabled() = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

namespace detail {

inline void check_finite(std::span<const double> v, const char* op) {
  for (double x : v)
    if (!std::isfinite(x)) throw DomainError(std::string(op) + ": non-finite value produced");
}

/// Creates an op output. History is recorded only when some input requires
/// grad. `backward` reads out.grad and accumulates into its captured inputs.
inline Tensor make_result(const char* name, Shape shape, std::vector<double> data,
                          std::initializer_list<Tensor> inputs, BackwardFn backward) {
  check_finite(data, name);
  Tensor out(std::move(shape), std::move(data));
  bool needs = grad_mode_enabled() && std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
  if (needs) {
    auto node = std::make_shared<Node>();
    node->name = name;
    for (const auto& t : inputs) node->inputs.push_back(t.state());
    node->backward = std::move(backward);
    out.state()->node = std::move(node);
    out.state()->requires_grad = true;
  }
  return out;
}

/// Reverse topological order of every recorded state reachable from root.
inline std::vector<TensorState*> topological_order(TensorState* root) {
  std::vector<TensorState*> order;
  std::unordered_set<TensorState*> seen;
  std::vector<std::pair<TensorState*, std::size_t>> stack{{root, 0}};
  seen.insert(root);
  while (!stack.empty()) {
    auto& [s, next] = stack.back();
    if (s->node && next < s->node->inputs.size()) {
      TensorState* child = s->node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
      continue;
    }
    order.push_back(s);
    stack.pop_back();
  }
  std::reverse(order.begin(), order.end());
  return order;
}

}  // namespace detail

/// Accumulates d(loss)/d(leaf) into every requires_grad leaf reachable from
/// `loss`, then releases the recorded history.
inline void backward(Tensor& loss) {
  if (loss.numel() != 1) throw ContractError("backward requires a scalar loss, got " + shape_str(loss.shape()));
  if (!loss.state()->node) throw ContractError("backward on a tensor with no recorded operations");
  auto order = detail::topological_order(loss.state().get());
  loss.grad_buffer()[0] += 1.0;
  for (auto* s : order) {
    if (!s->node) continue;
    if (s->grad.empty()) s->grad.assign(s->data.size(), 0.0);
    for (auto& in : s->node->inputs)
      if (in->requires_grad && in->grad.empty()) in->grad.assign(in->data.size(), 0.0);
    s->node->backward(*s);
  }
  // Hold the released nodes until every state has been visited; dropping a
  // node can free the intermediate states it references.
  std::vector<std::shared_ptr<detail::Node>> released;
  for (auto* s : order) {
    if (!s->node) continue;
    released.push_back(std::move(s->node));
    s->grad.clear();
    s->grad.shrink_to_fit();
  }
}

}  // namespace eagr
