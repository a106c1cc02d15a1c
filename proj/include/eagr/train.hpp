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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "eagr/config.hpp"
#include "eagr/data.hpp"
#include "eagr/losses.hpp"
#include "eagr/metrics.hpp"
#include "eagr/net.hpp"
#include "eagr/netpbm.hpp"
#include "eagr/optim.hpp"
#include "eagr/serialize.hpp"

namespace eagr {

// -------------------- dataset on disk --------------------
//
//   DIR/manifest.txt           one sample index per line
//   DIR/<index>_image.ppm      P6
//   DIR/<index>_labels.pgm     P5 class ids

inline std::string sample_stem(std::uint64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06llu", static_cast<unsigned long long>(index));
  return buf;
}

inline void write_dataset(const std::filesystem::path& dir, const SynthConfig& cfg, std::size_t count) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  std::string manifest;
  for (std::uint64_t i = 0; i < count; ++i) {
    Sample s = synth_sample(cfg, i);
    write_ppm(s.image, dir / (sample_stem(i) + "_image.ppm"));
    write_pgm(s.labels, dir / (sample_stem(i) + "_labels.pgm"));
    manifest += std::to_string(i) + "\n";
  }
  std::ofstream out(dir / "manifest.txt", std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir / "manifest.txt").string());
  out << manifest;
}

inline std::vector<Sample> load_dataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.txt");
  if (!in) throw IoError("cannot open " + (dir / "manifest.txt").string());
  std::vector<Sample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::trim(line);
    if (line.empty()) continue;
    std::uint64_t index = 0;
    try {
      index = detail::parse_uint(line);
    } catch (const std::exception&) {
      throw ParseError((dir / "manifest.txt").string() + ": line " + std::to_string(lineno) + ": bad index", lineno);
    }
    Sample s{read_ppm(dir / (sample_stem(index) + "_image.ppm")), read_pgm(dir / (sample_stem(index) + "_labels.pgm"))};
    if (s.image.dim(0) != s.labels.height || s.image.dim(1) != s.labels.width)
      throw ParseError("sample " + sample_stem(index) + ": image and labels differ in size", 0);
    out.push_back(std::move(s));
  }
  return out;
}

// -------------------- checkpoints --------------------

inline constexpr const char* kAblationEntry = "meta.ablation";

inline Checkpoint to_checkpoint(NetParams& params, const NetConfig& cfg) {
  Checkpoint ck;
  for (auto& [name, t] : params.named()) ck.add(name, t->detach());
  ck.add(kAblationEntry, Tensor::scalar(static_cast<double>(static_cast<int>(cfg.ablation))));
  return ck;
}

/// Rebuilds parameters for `cfg` from a checkpoint; the stored ablation
/// overrides cfg.ablation. Throws IoError naming the first offending tensor.
inline NetParams params_from_checkpoint(const Checkpoint& ck, NetConfig& cfg) {
  if (const Tensor* a = ck.find(kAblationEntry)) {
    const double code = a->numel() == 1 ? a->data()[0] : -1.0;
    if (!(code >= 0.0 && code <= static_cast<double>(Ablation::kNoBa)) || code != std::floor(code))
      throw IoError("checkpoint: invalid " + std::string(kAblationEntry));
    cfg.ablation = static_cast<Ablation>(static_cast<int>(code));
  }
  NetParams params = NetParams::init(cfg);
  const auto named = params.named();
  for (const auto& [name, t] : named) {
    const Tensor* src = ck.find(name);
    if (!src) throw IoError("checkpoint: missing tensor \"" + name + "\"");
    if (src->shape() != t->shape())
      throw IoError("checkpoint: tensor \"" + name + "\" has shape " + shape_str(src->shape()) + ", expected " +
                    shape_str(t->shape()));
    std::copy(src->data().begin(), src->data().end(), t->data().begin());
  }
  for (const auto& e : ck.entries())
    if (e.name != kAblationEntry && std::none_of(named.begin(), named.end(), [&](const auto& p) { return p.first == e.name; }))
      throw IoError("checkpoint: unexpected tensor \"" + e.name + "\" for this configuration");
  return params;
}

// -------------------- training --------------------

struct StepRecord {
  std::size_t step = 0;
  double parsing = 0.0, edge = 0.0, ba = 0.0, total = 0.0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double mean_total = 0.0;
  std::optional<double> pixel_acc, miou, mean_f1;
};

struct RunLog {
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;
  double initial_loss = 0.0;  ///< mean L_total over the training set before the first step, no augmentation
  double final_loss = 0.0;    ///< same after the last step

  std::string format() const {
    std::ostringstream os;
    os.precision(17);
    os << "initial_loss=" << initial_loss << "\n";
    for (const auto& s : steps)
      os << "step=" << s.step << " l_parsing=" << s.parsing << " l_edge=" << s.edge << " l_ba=" << s.ba
         << " l_total=" << s.total << "\n";
    for (const auto& e : epochs) {
      os << "epoch=" << e.epoch << " mean_l_total=" << e.mean_total;
      if (e.miou) os << " pixel_acc=" << *e.pixel_acc << " miou=" << *e.miou << " mean_f1=" << *e.mean_f1;
      os << "\n";
    }
    os << "final_loss=" << final_loss << "\n";
    return os.str();
  }
};

/// Mean total loss over samples at the logit grid, without augmentation.
inline double mean_loss(const NetParams& params, const NetConfig& cfg, const std::vector<Sample>& data) {
  NoGradGuard no_grad;
  double sum = 0.0;
  for (const auto& s : data) {
    NetOutput out = forward(s.image, params, cfg);
    sum += loss_total(out, make_targets(s.labels, cfg.low_h(), cfg.low_w()), cfg).total.item();
  }
  return data.empty() ? 0.0 : sum / static_cast<double>(data.size());
}

/// Full-resolution prediction (decoder output upsampled by nearest).
inline LabelMap predict(const NetParams& params, const NetConfig& cfg, const Tensor& image) {
  NoGradGuard no_grad;
  LabelMap small = argmax_labels(forward(image, params, cfg).parsing_logits);
  return resize_nearest(small, cfg.input_h, cfg.input_w);
}

inline ConfusionMatrix evaluate(const NetParams& params, const NetConfig& cfg, const std::vector<Sample>& data) {
  ConfusionMatrix cm(cfg.num_classes);
  for (const auto& s : data) accumulate(cm, predict(params, cfg, s.image), s.labels);
  return cm;
}

struct TrainResult {
  NetParams params;
  RunLog log;
};

/// Mini-batch SGD over `data` for cfg.epochs epochs. Deterministic in cfg.seed:
/// shuffling and augmentation draw from seeded streams and gradients are
/// accumulated in sample order.
inline TrainResult train(const NetConfig& cfg, const std::vector<Sample>& data,
                         const std::vector<Sample>* eval_data = nullptr,
                         const std::function<void(const StepRecord&)>& on_step = {}) {
  cfg.validate();
  for (const auto& s : data) {
    s.labels.validate(cfg.num_classes);
    if (s.image.dim(0) != cfg.input_h || s.image.dim(1) != cfg.input_w)
      throw DimensionError("training sample size does not match input_size");
  }
  TrainResult res{NetParams::init(cfg), {}};
  NetParams& params = res.params;
  Sgd opt(cfg.lr, cfg.weight_decay, cfg.momentum);
  Rng order_rng = make_rng(cfg.seed, 0x6f72646572);
  Rng aug_rng = make_rng(cfg.seed, 0x617567);
  res.log.initial_loss = mean_loss(params, cfg, data);

  std::vector<std::size_t> order(data.size());
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), order_rng);
    double epoch_sum = 0.0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), b + cfg.batch_size);
      const double inv = 1.0 / static_cast<double>(end - b);
      params.zero_grad();
      for (auto& [name, t] : params.named()) t->grad_buffer();
      StepRecord rec{++step};
      for (std::size_t k = b; k < end; ++k) {
        const Sample& raw = data[order[k]];
        Sample s = cfg.augment ? augment(raw, aug_rng) : raw;
        NetOutput out = forward(s.image, params, cfg);
        LossTerms terms = loss_total(out, make_targets(s.labels, cfg.low_h(), cfg.low_w()), cfg);
        rec.parsing += terms.parsing * inv;
        rec.edge += terms.edge * inv;
        rec.ba += terms.ba * inv;
        rec.total += terms.total.item() * inv;
        Tensor scaled = scale(terms.total, inv);
        backward(scaled);
      }
      auto tensors = params.tensors();
      opt.step(tensors);
      epoch_sum += rec.total * static_cast<double>(end - b);
      res.log.steps.push_back(rec);
      if (on_step) on_step(rec);
    }
    EpochRecord er{epoch, data.empty() ? 0.0 : epoch_sum / static_cast<double>(data.size()), {}, {}, {}};
    if (eval_data && !eval_data->empty()) {
      Scores sc = scores(evaluate(params, cfg, *eval_data));
      er.pixel_acc = sc.pixel_acc;
      er.miou = sc.miou;
      er.mean_f1 = sc.mean_f1_excl_bg;
    }
    res.log.epochs.push_back(er);
  }
  res.log.final_loss = mean_loss(params, cfg, data);
  return res;
}

// -------------------- response maps --------------------

struct ResponseMap {
  std::size_t height = 0, width = 0;
  std::vector<double> response;  ///< one projection row, sums to 1
  double row_sum = 0.0;
  PnmImage image;                ///< min-max normalized, darker = higher
};

/// Row `vertex` of the high-level projection matrix on the H/4 feature grid.
inline ResponseMap response_map(const NetParams& params, const NetConfig& cfg, const Tensor& image, std::size_t vertex) {
  if (!cfg.uses_graph()) throw ContractError("response map needs a model with graph blocks");
  if (vertex >= cfg.eagr_high.vertices())
    throw ContractError("vertex " + std::to_string(vertex) + " out of range (" + std::to_string(cfg.eagr_high.vertices()) +
                        " vertices)");
  NoGradGuard no_grad;
  NetOutput out = forward(image, params, cfg);
  const Tensor& p = out.high.projection;
  ResponseMap m;
  m.height = cfg.input_h / 4;
  m.width = cfg.input_w / 4;
  const std::size_t hw = p.dim(1);
  m.response.assign(p.data().begin() + static_cast<std::ptrdiff_t>(vertex * hw),
                    p.data().begin() + static_cast<std::ptrdiff_t>((vertex + 1) * hw));
  for (double v : m.response) m.row_sum += v;
  const auto [lo, hi] = std::minmax_element(m.response.begin(), m.response.end());
  m.image = {m.height, m.width, 1, {}};
  for (double v : m.response) {
    const double norm = *hi > *lo ? (v - *lo) / (*hi - *lo) : 0.5;
    m.image.bytes.push_back(quantize_unit(1.0 - norm));
  }
  return m;
}

}  // namespace eagr
