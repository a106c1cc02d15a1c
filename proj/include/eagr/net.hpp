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

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "eagr/eagr_module.hpp"
#include "eagr/ops.hpp"
#include "eagr/random.hpp"

namespace eagr {

/// Which parts of the full model are switched off.
enum class Ablation {
  kNone,         ///< full model
  kBaseline,     ///< graph blocks bypassed
  kNoEdge,       ///< edge map replaced by ones inside the projection
  kNoReasoning,  ///< graph convolution skipped, projection + reprojection kept
  kNoBa,         ///< boundary-attention loss weight forced to 0
};

inline const char* ablation_name(Ablation a) {
  switch (a) {
    case Ablation::kNone: return "full";
    case Ablation::kBaseline: return "baseline";
    case Ablation::kNoEdge: return "no-edge";
    case Ablation::kNoReasoning: return "no-reasoning";
    case Ablation::kNoBa: return "no-ba";
  }
  return "?";
}

inline Ablation parse_ablation(const std::string& s) {
  for (auto a : {Ablation::kNone, Ablation::kBaseline, Ablation::kNoEdge, Ablation::kNoReasoning, Ablation::kNoBa})
    if (s == ablation_name(a)) return a;
  throw ContractError("unknown ablation \"" + s + "\" (expected baseline|no-edge|no-reasoning|no-ba)");
}

struct NetConfig {
  std::size_t num_classes = 8;
  std::size_t input_h = 32, input_w = 32;
  std::size_t c_stem = 8;   ///< first stride-1 conv
  std::size_t c_low = 16;   ///< H/2 features
  std::size_t c_high = 32;  ///< H/4 features
  EagrConfig eagr_low{8, 16, {6, 6}, {4, 4}, true, false};
  EagrConfig eagr_high{16, 32, {6, 6}, {4, 4}, true, false};
  double lambda1 = 1.0, lambda2 = 1.0;
  double lr = 0.001, weight_decay = 0.0005, momentum = 0.9;
  std::uint64_t seed = 0;
  std::size_t epochs = 20, batch_size = 4;
  bool augment = true;
  Ablation ablation = Ablation::kNone;

  std::size_t low_h() const { return input_h / 2; }
  std::size_t low_w() const { return input_w / 2; }
  bool uses_graph() const { return ablation != Ablation::kBaseline; }
  double effective_lambda2() const { return ablation == Ablation::kNoBa ? 0.0 : lambda2; }

  void validate() const {
    if (num_classes < 2 || num_classes > 256) throw ContractError("num_classes must be in [2, 256]");
    if (input_h == 0 || input_w == 0 || input_h % 4 || input_w % 4)
      throw ContractError("input size must be positive and divisible by 4");
    if (c_stem == 0 || c_low == 0 || c_high == 0) throw ContractError("channel counts must be positive");
    if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0) || !std::isfinite(lambda1) || !std::isfinite(lambda2))
      throw ContractError("loss weights must be finite and non-negative");
    if (!std::isfinite(lr) || lr < 0.0 || !std::isfinite(weight_decay) || !std::isfinite(momentum))
      throw ContractError("optimizer settings must be finite with lr >= 0");
    if (batch_size == 0) throw ContractError("batch_size must be positive");
    if (uses_graph()) {
      eagr_low.validate(c_low);
      eagr_high.validate(c_high);
      auto fits = [](Grid g, std::size_t h, std::size_t w) { return g.rows <= h && g.cols <= w; };
      if (!fits(eagr_low.pool_grid, input_h / 2, input_w / 2) || !fits(eagr_high.pool_grid, input_h / 4, input_w / 4))
        throw DimensionError("pooling grid larger than the feature map it pools");
    }
  }
};

struct NetParams {
  Tensor conv1_w, conv1_b;  // 3 -> c_stem, stride 1
  Tensor conv2_w, conv2_b;  // c_stem -> c_low, stride 2
  Tensor conv3_w, conv3_b;  // c_low -> c_high, stride 2
  Tensor edge_w, edge_b;    // c_low -> 2 (3x3)
  bool has_graph = false;
  EagrParams eagr_low, eagr_high;
  Tensor dec_w, dec_b;      // c_low + c_high -> N (1x1)

  static NetParams init(const NetConfig& cfg) {
    cfg.validate();
    Rng rng = make_rng(cfg.seed, 0x6e6574);
    NetParams p;
    p.conv1_w = fan_in_weight({3, 3, 3, cfg.c_stem}, 9 * 3, rng);
    p.conv1_b = zero_bias(cfg.c_stem);
    p.conv2_w = fan_in_weight({3, 3, cfg.c_stem, cfg.c_low}, 9 * cfg.c_stem, rng);
    p.conv2_b = zero_bias(cfg.c_low);
    p.conv3_w = fan_in_weight({3, 3, cfg.c_low, cfg.c_high}, 9 * cfg.c_low, rng);
    p.conv3_b = zero_bias(cfg.c_high);
    p.edge_w = fan_in_weight({3, 3, cfg.c_low, 2}, 9 * cfg.c_low, rng);
    p.edge_b = zero_bias(2);
    if (cfg.uses_graph()) {
      p.has_graph = true;
      p.eagr_low = EagrParams::init(cfg.c_low, cfg.eagr_low, rng);
      p.eagr_high = EagrParams::init(cfg.c_high, cfg.eagr_high, rng);
    }
    p.dec_w = fan_in_weight({cfg.c_low + cfg.c_high, cfg.num_classes}, cfg.c_low + cfg.c_high, rng);
    p.dec_b = zero_bias(cfg.num_classes);
    return p;
  }

  /// Every trainable tensor with its checkpoint name, in a fixed order.
  std::vector<std::pair<std::string, Tensor*>> named() {
    std::vector<std::pair<std::string, Tensor*>> out{{"enc.conv1.w", &conv1_w}, {"enc.conv1.b", &conv1_b},
                                                     {"enc.conv2.w", &conv2_w}, {"enc.conv2.b", &conv2_b},
                                                     {"enc.conv3.w", &conv3_w}, {"enc.conv3.b", &conv3_b},
                                                     {"edge.w", &edge_w},       {"edge.b", &edge_b}};
    if (has_graph) {
      for (auto& e : eagr_low.named("eagr.0")) out.push_back(e);
      for (auto& e : eagr_high.named("eagr.1")) out.push_back(e);
    }
    out.emplace_back("dec.w", &dec_w);
    out.emplace_back("dec.b", &dec_b);
    return out;
  }

  std::vector<Tensor> tensors() {
    std::vector<Tensor> out;
    for (auto& [name, t] : named()) out.push_back(*t);
    return out;
  }

  void zero_grad() {
    for (auto& [name, t] : named()) t->zero_grad();
  }
};

struct NetOutput {
  Tensor parsing_logits;  ///< [H/2, W/2, N]
  Tensor edge_logits;     ///< [H/2, W/2, 2]
  Tensor edge_prob;       ///< [H/2, W/2, 1]
  EagrTrace low, high;
};

/// stem -> low (H/2) -> high (H/4); edge head on low; a graph block refines
/// each level; high is upsampled, concatenated with low and decoded by 1x1.
inline NetOutput forward(const Tensor& image, const NetParams& params, const NetConfig& cfg) {
  if (image.rank() != 3 || image.dim(0) != cfg.input_h || image.dim(1) != cfg.input_w || image.dim(2) != 3)
    throw DimensionError("forward: image " + shape_str(image.shape()) + " does not match configured input " +
                         shape_str({cfg.input_h, cfg.input_w, 3}));
  if (params.has_graph != cfg.uses_graph()) throw ContractError("forward: parameters do not match the ablation setting");
  NetOutput out;
  Tensor stem = relu(conv3x3(image, params.conv1_w, params.conv1_b, 1, "enc.conv1"));
  Tensor low = relu(conv3x3(stem, params.conv2_w, params.conv2_b, 2, "enc.conv2"));
  Tensor high = relu(conv3x3(low, params.conv3_w, params.conv3_b, 2, "enc.conv3"));
  out.edge_logits = conv3x3(low, params.edge_w, params.edge_b, 1, "edge.head");
  out.edge_prob = channel(softmax_rows(out.edge_logits), 1);
  if (cfg.uses_graph()) {
    Tensor y_low = cfg.ablation == Ablation::kNoEdge ? Tensor::ones(out.edge_prob.shape()) : out.edge_prob;
    Tensor y_high = downsample_nearest(y_low, 2);
    EagrMode mode{cfg.ablation != Ablation::kNoReasoning};
    low = eagr_forward(low, y_low, params.eagr_low, cfg.eagr_low, mode, &out.low);
    high = eagr_forward(high, y_high, params.eagr_high, cfg.eagr_high, mode, &out.high);
  }
  Tensor fused = concat_channels(low, upsample_nearest(high, 2));
  out.parsing_logits = conv1x1(fused, params.dec_w, params.dec_b, "decoder");
  return out;
}

}  // namespace eagr
