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
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "eagr/eagr_module.hpp"
#include "eagr/losses.hpp"
#include "eagr/net.hpp"
#include "eagr/nonlocal.hpp"
#include "eagr/ops.hpp"
#include "eagr/random.hpp"

// Central finite differences against reverse-mode gradients. Relative error
// is |analytic - numeric| / max(1, |analytic|).

namespace eagr {

inline constexpr double kGradCheckStep = 1e-5;
inline constexpr double kOpGradTolerance = 1e-4;
inline constexpr double kEndToEndGradTolerance = 1e-3;

struct GradCheckResult {
  std::string name;
  double worst_rel_err = 0.0;
  double tolerance = kOpGradTolerance;
  std::size_t entries = 0;
  bool pass() const { return std::isfinite(worst_rel_err) && worst_rel_err <= tolerance; }
};

struct GradProbe {
  std::size_t leaf;
  std::size_t index;
};

/// Compares gradients of the scalar `f()` at the given (leaf, index) probes.
inline GradCheckResult check_gradients_at(std::string name, const std::function<Tensor()>& f, std::vector<Tensor> leaves,
                                          const std::vector<GradProbe>& probes, double tol = kOpGradTolerance,
                                          double h = kGradCheckStep) {
  for (auto& l : leaves) {
    l.set_requires_grad(true);
    l.zero_grad();
  }
  Tensor loss = f();
  backward(loss);
  GradCheckResult r{std::move(name), 0.0, tol, probes.size()};
  NoGradGuard no_grad;
  for (const auto& pr : probes) {
    Tensor& leaf = leaves[pr.leaf];
    const double analytic = leaf.has_grad() ? leaf.grad_values()[pr.index] : 0.0;
    double& v = leaf.data()[pr.index];
    const double saved = v;
    v = saved + h;
    const double fp = f().item();
    v = saved - h;
    const double fm = f().item();
    v = saved;
    const double numeric = (fp - fm) / (2.0 * h);
    const double err = std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
    r.worst_rel_err = std::max(r.worst_rel_err, std::isnan(err) ? INFINITY : err);
  }
  return r;
}

/// Checks every entry of every leaf.
inline GradCheckResult check_gradients(std::string name, const std::function<Tensor()>& f, std::vector<Tensor> leaves,
                                       double tol = kOpGradTolerance, double h = kGradCheckStep) {
  std::vector<GradProbe> probes;
  for (std::size_t l = 0; l < leaves.size(); ++l)
    for (std::size_t i = 0; i < leaves[l].numel(); ++i) probes.push_back({l, i});
  return check_gradients_at(std::move(name), f, std::move(leaves), probes, tol, h);
}

/// Checks `count` entries drawn uniformly over all entries of all leaves.
inline GradCheckResult check_gradients_sampled(std::string name, const std::function<Tensor()>& f,
                                               std::vector<Tensor> leaves, std::size_t count, Rng& rng,
                                               double tol = kOpGradTolerance, double h = kGradCheckStep) {
  std::size_t total = 0;
  for (const auto& l : leaves) total += l.numel();
  std::uniform_int_distribution<std::size_t> pick(0, total - 1);
  std::vector<GradProbe> probes;
  for (std::size_t k = 0; k < count; ++k) {
    std::size_t flat = pick(rng), l = 0;
    while (flat >= leaves[l].numel()) flat -= leaves[l++].numel();
    probes.push_back({l, flat});
  }
  return check_gradients_at(std::move(name), f, std::move(leaves), probes, tol, h);
}

namespace detail {

/// Values bounded away from 0 so ReLU kinks stay out of reach of the step.
inline Tensor off_zero(Shape shape, Rng& rng) {
  Tensor t = uniform_tensor(std::move(shape), -1.0, 1.0, rng);
  for (auto& v : t.data()) v = (v < 0 ? -0.1 : 0.1) + v;
  return t;
}

inline std::size_t pick_dim(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

/// Weighted sum with fixed random weights, so every output entry matters.
inline Tensor probe_sum(const Tensor& out, const Tensor& weights) { return sum_all(hadamard(out, weights)); }

inline LabelMap random_labels(std::size_t h, std::size_t w, std::size_t n, Rng& rng) {
  LabelMap m(h, w);
  std::uniform_int_distribution<int> d(0, static_cast<int>(n) - 1);
  for (auto& c : m.classes) c = static_cast<std::uint8_t>(d(rng));
  return m;
}

}  // namespace detail

/// Small network used for end-to-end gradient checks.
inline NetConfig tiny_net_config(std::uint64_t seed) {
  NetConfig cfg;
  cfg.num_classes = 4;
  cfg.input_h = cfg.input_w = 8;
  cfg.c_stem = 3;
  cfg.c_low = 4;
  cfg.c_high = 6;
  cfg.eagr_low = {2, 3, {2, 2}, {2, 2}, true, false};
  cfg.eagr_high = {3, 4, {2, 2}, {2, 2}, true, false};
  cfg.seed = seed;
  return cfg;
}

/// Every op suite, each graph stage, the non-local block and the end-to-end
/// loss, on random inputs of extent at most 6x6x4 derived from `seed`.
inline std::vector<GradCheckResult> run_gradcheck_suite(std::uint64_t seed) {
  using detail::off_zero;
  using detail::pick_dim;
  using detail::probe_sum;
  Rng rng = make_rng(seed, 0x67726164);
  std::vector<GradCheckResult> out;

  {
    const std::size_t m = pick_dim(rng, 1, 6), k = pick_dim(rng, 1, 6), n = pick_dim(rng, 1, 6);
    Tensor a = off_zero({m, k}, rng), b = off_zero({k, n}, rng), w = off_zero({m, n}, rng);
    out.push_back(check_gradients("matmul", [=] { return probe_sum(matmul(a, b), w); }, {a, b}));
    Tensor wt = off_zero({k, m}, rng);
    out.push_back(check_gradients("transpose", [=] { return probe_sum(transpose(a), wt); }, {a}));
  }
  {
    const std::size_t m = pick_dim(rng, 1, 6), n = pick_dim(rng, 2, 6);
    Tensor x = uniform_tensor({m, n}, -3.0, 3.0, rng), w = off_zero({m, n}, rng);
    out.push_back(check_gradients("softmax_rows", [=] { return probe_sum(softmax_rows(x), w); }, {x}));
  }
  {
    const std::size_t m = pick_dim(rng, 1, 6), n = pick_dim(rng, 1, 6);
    Tensor a = off_zero({m, n}, rng), b = off_zero({m, n}, rng), c = off_zero({m, 1}, rng), w = off_zero({m, n}, rng);
    out.push_back(check_gradients("hadamard", [=] { return probe_sum(hadamard(a, b), w); }, {a, b}));
    out.push_back(check_gradients("hadamard_broadcast", [=] { return probe_sum(hadamard(a, c), w); }, {a, c}));
  }
  {
    const std::size_t h = pick_dim(rng, 2, 6), wd = pick_dim(rng, 2, 6), c = pick_dim(rng, 1, 4);
    const Grid g{pick_dim(rng, 1, h), pick_dim(rng, 1, wd)};
    Tensor x = off_zero({h, wd, c}, rng), w = off_zero({g.rows, g.cols, c}, rng);
    out.push_back(check_gradients("adaptive_avg_pool", [=] { return probe_sum(adaptive_avg_pool(x, g), w); }, {x}));
  }
  {
    const std::size_t hw = pick_dim(rng, 1, 36), ci = pick_dim(rng, 1, 4), co = pick_dim(rng, 1, 4);
    Tensor x = off_zero({hw, ci}, rng), w = off_zero({ci, co}, rng), b = off_zero({co}, rng), p = off_zero({hw, co}, rng);
    out.push_back(check_gradients("conv1x1", [=] { return probe_sum(conv1x1(x, w, b), p); }, {x, w, b}));
  }
  for (std::size_t stride : {1, 2}) {
    const std::size_t h = pick_dim(rng, 2, 6), wd = pick_dim(rng, 2, 6), ci = pick_dim(rng, 1, 4), co = pick_dim(rng, 1, 4);
    Tensor x = off_zero({h, wd, ci}, rng), w = off_zero({3, 3, ci, co}, rng), b = off_zero({co}, rng);
    Tensor p = off_zero({(h - 1) / stride + 1, (wd - 1) / stride + 1, co}, rng);
    out.push_back(check_gradients(stride == 1 ? "conv3x3_s1" : "conv3x3_s2",
                                  [=] { return probe_sum(conv3x3(x, w, b, stride), p); }, {x, w, b}));
  }
  {
    const std::size_t h = pick_dim(rng, 1, 3), wd = pick_dim(rng, 1, 3), c = pick_dim(rng, 1, 4);
    Tensor x = off_zero({h, wd, c}, rng), pu = off_zero({2 * h, 2 * wd, c}, rng);
    out.push_back(check_gradients("upsample_nearest", [=] { return probe_sum(upsample_nearest(x, 2), pu); }, {x}));
    Tensor big = off_zero({2 * h, 2 * wd, c}, rng), pd = off_zero({h, wd, c}, rng);
    out.push_back(check_gradients("downsample_nearest", [=] { return probe_sum(downsample_nearest(big, 2), pd); }, {big}));
    const std::size_t c2 = pick_dim(rng, 1, 4);
    Tensor y = off_zero({h, wd, c2}, rng), pc = off_zero({h, wd, c + c2}, rng);
    out.push_back(check_gradients("concat_channels", [=] { return probe_sum(concat_channels(x, y), pc); }, {x, y}));
    Tensor pr = off_zero({h * wd, c}, rng), pch = off_zero({h, wd, 1}, rng);
    out.push_back(check_gradients("reshape_take_rows", [=] {
      return probe_sum(take_rows(reshape(x, {h * wd, c}), [&] {
        std::vector<std::size_t> idx(h * wd);
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = idx.size() - 1 - i;
        return idx;
      }()), pr);
    }, {x}));
    out.push_back(check_gradients("channel", [=] { return probe_sum(channel(x, c - 1), pch); }, {x}));
  }
  {
    const std::size_t m = pick_dim(rng, 1, 6), n = pick_dim(rng, 1, 6);
    Tensor a = off_zero({m, n}, rng), b = off_zero({m, n}, rng), w = off_zero({m, n}, rng);
    Tensor pos = uniform_tensor({m, n}, 0.5, 2.0, rng);
    out.push_back(check_gradients("relu", [=] { return probe_sum(relu(a), w); }, {a}));
    out.push_back(check_gradients("add", [=] { return probe_sum(add(a, b), w); }, {a, b}));
    out.push_back(check_gradients("sub", [=] { return probe_sum(sub(a, b), w); }, {a, b}));
    out.push_back(check_gradients("scale", [=] { return probe_sum(scale(a, -1.7), w); }, {a}));
    out.push_back(check_gradients("sum_all", [=] { return sum_all(a); }, {a}));
    out.push_back(check_gradients("log", [=] { return probe_sum(log(pos), w); }, {pos}));
  }
  {
    const std::size_t h = pick_dim(rng, 2, 6), wd = pick_dim(rng, 2, 6), n = pick_dim(rng, 2, 4);
    Tensor logits = uniform_tensor({h, wd, n}, -2.0, 2.0, rng);
    Tensor edge_logits = uniform_tensor({h, wd, 2}, -2.0, 2.0, rng);
    LabelMap labels = detail::random_labels(h, wd, n, rng);
    EdgeMask mask = extract_edge_mask(labels);
    out.push_back(check_gradients("loss_parsing", [=] { return loss_parsing(logits, labels); }, {logits}));
    out.push_back(check_gradients("loss_edge", [=] { return loss_edge(edge_logits, mask); }, {edge_logits}));
    out.push_back(check_gradients("loss_ba", [=] { return loss_ba(logits, labels, mask); }, {logits}));
  }
  {
    const std::size_t h = 4, w = 4, c = 5;
    const EagrConfig cfg{3, 4, {2, 2}, {2, 2}, true, false};
    EagrParams p = EagrParams::init(c, cfg, rng);
    // A larger adjacency than the default init so the propagation term matters.
    p.adj = uniform_tensor({4, 4}, -0.5, 0.5, rng);
    Tensor x = uniform_tensor({h, w, c}, -1.0, 1.0, rng);
    Tensor y = uniform_tensor({h, w, 1}, 0.05, 0.95, rng);
    Tensor pw = off_zero({h, w, c}, rng);
    std::vector<Tensor> leaves{x, y, p.w_phi, p.b_phi, p.w_theta, p.b_theta, p.w_sigma, p.b_sigma, p.w_g, p.adj};
    Tensor pp = off_zero({4, h * w}, rng), pg = off_zero({4, 4}, rng);
    out.push_back(check_gradients("eagr.build_projection",
                                  [=] { return probe_sum(build_projection(x, y, p, cfg), pp); }, leaves));
    Tensor proj = softmax_rows(uniform_tensor({4, h * w}, -1.0, 1.0, rng));
    out.push_back(check_gradients("eagr.project", [=] { return probe_sum(project(proj, x, p), pg); },
                                  {proj, x, p.w_theta, p.b_theta}));
    Tensor xg = off_zero({4, 4}, rng);
    out.push_back(check_gradients("eagr.reason", [=] { return probe_sum(reason(xg, p, cfg), pg); }, {xg, p.w_g, p.adj}));
    out.push_back(check_gradients("eagr.reproject", [=] { return probe_sum(reproject(proj, xg, x, p), pw); },
                                  {proj, xg, x, p.w_sigma, p.b_sigma}));
    out.push_back(check_gradients("eagr_forward", [=] { return probe_sum(eagr_forward(x, y, p, cfg), pw); }, leaves));
  }
  {
    const std::size_t c = 4;
    NonLocalParams p = NonLocalParams::init(c, 2, rng);
    Tensor x = uniform_tensor({3, 3, c}, -1.0, 1.0, rng), pw = off_zero({3, 3, c}, rng);
    out.push_back(check_gradients("nonlocal_forward", [=] { return probe_sum(nonlocal_forward(x, p), pw); },
                                  {x, p.w_theta, p.b_theta, p.w_phi, p.b_phi, p.w_gamma, p.b_gamma}));
  }
  {
    NetConfig cfg = tiny_net_config(seed);
    NetParams params = NetParams::init(cfg);
    Tensor image = uniform_tensor({cfg.input_h, cfg.input_w, 3}, 0.0, 1.0, rng);
    Targets targets = make_targets(detail::random_labels(cfg.input_h, cfg.input_w, cfg.num_classes, rng), cfg.low_h(),
                                   cfg.low_w());
    auto f = [=] { return loss_total(forward(image, params, cfg), targets, cfg).total; };
    out.push_back(check_gradients_sampled("end_to_end_loss", f, params.tensors(), 10, rng, kEndToEndGradTolerance));
  }
  return out;
}

}  // namespace eagr
