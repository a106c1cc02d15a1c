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
#include <vector>

#include "eagr/data.hpp"
#include "eagr/net.hpp"
#include "eagr/ops.hpp"

namespace eagr {

/// Labels and the boundary mask at the resolution of a logit grid.
struct Targets {
  LabelMap labels;
  EdgeMask edges;
};

/// Nearest-downsamples labels to h x w, then extracts the boundary mask there.
inline Targets make_targets(const LabelMap& labels, std::size_t h, std::size_t w) {
  Targets t;
  t.labels = labels.height == h && labels.width == w ? labels : resize_nearest(labels, h, w);
  t.edges = extract_edge_mask(t.labels);
  return t;
}

namespace detail {
inline void check_grid(const Tensor& logits, std::size_t h, std::size_t w, const char* op) {
  if (logits.rank() != 3 || logits.dim(0) != h || logits.dim(1) != w)
    throw DimensionError(std::string(op) + ": logits " + shape_str(logits.shape()) + " do not match target grid " +
                         std::to_string(h) + "x" + std::to_string(w));
}
}  // namespace detail

/// Mean per-pixel cross entropy of logits [H, W, N]; labels are
/// nearest-downsampled to the logit grid when larger.
inline Tensor loss_parsing(const Tensor& logits, const LabelMap& labels) {
  const std::size_t h = logits.dim(0), w = logits.dim(1);
  const LabelMap& lab = labels.height == h && labels.width == w ? labels : resize_nearest(labels, h, w);
  detail::check_grid(logits, lab.height, lab.width, "loss_parsing");
  std::vector<double> ones(lab.size(), 1.0);
  return softmax_cross_entropy(logits, lab.classes, ones, static_cast<double>(lab.size()));
}

/// Two-class cross entropy of edge logits [H, W, 2] against the mask.
inline Tensor loss_edge(const Tensor& edge_logits, const EdgeMask& mask) {
  detail::check_grid(edge_logits, mask.height, mask.width, "loss_edge");
  if (edge_logits.dim(2) != 2) throw DimensionError("loss_edge: expected 2 channels, got " + shape_str(edge_logits.shape()));
  std::vector<double> ones(mask.bits.size(), 1.0);
  return softmax_cross_entropy(edge_logits, mask.bits, ones, static_cast<double>(mask.bits.size()));
}

/// Cross entropy restricted to boundary pixels, divided by max(1, #boundary).
/// Exactly 0 when the mask is empty.
inline Tensor loss_ba(const Tensor& logits, const LabelMap& labels, const EdgeMask& mask) {
  detail::check_grid(logits, labels.height, labels.width, "loss_ba");
  detail::check_grid(logits, mask.height, mask.width, "loss_ba");
  std::vector<double> weights(mask.bits.begin(), mask.bits.end());
  const double denom = static_cast<double>(std::max<std::size_t>(1, mask.count()));
  return softmax_cross_entropy(logits, labels.classes, weights, denom);
}

struct LossTerms {
  Tensor total;
  double parsing = 0.0, edge = 0.0, ba = 0.0;
};

/// L = L_parsing + lambda1 L_edge + lambda2 L_BA at the logit grid.
inline LossTerms loss_total(const Tensor& parsing_logits, const Tensor& edge_logits, const LabelMap& labels,
                            const EdgeMask& mask, double lambda1, double lambda2) {
  Tensor lp = loss_parsing(parsing_logits, labels);
  Tensor le = loss_edge(edge_logits, mask);
  Tensor lb = loss_ba(parsing_logits, labels, mask);
  LossTerms t;
  t.parsing = lp.item();
  t.edge = le.item();
  t.ba = lb.item();
  t.total = add(add(lp, scale(le, lambda1)), scale(lb, lambda2));
  return t;
}

inline LossTerms loss_total(const NetOutput& out, const Targets& targets, const NetConfig& cfg) {
  return loss_total(out.parsing_logits, out.edge_logits, targets.labels, targets.edges, cfg.lambda1,
                    cfg.effective_lambda2());
}

/// Arg-max class per pixel of logits [H, W, N]; ties go to the lower id.
inline LabelMap argmax_labels(const Tensor& logits) {
  const std::size_t h = logits.dim(0), w = logits.dim(1), n = logits.dim(2);
  LabelMap out(h, w);
  auto v = logits.data();
  for (std::size_t p = 0; p < h * w; ++p)
    out.classes[p] = static_cast<std::uint8_t>(std::max_element(&v[p * n], &v[p * n] + n) - &v[p * n]);
  return out;
}

}  // namespace eagr
