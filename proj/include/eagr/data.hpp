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
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "eagr/random.hpp"
#include "eagr/tensor.hpp"

namespace eagr {

/// Per-pixel class indices, row-major.
struct LabelMap {
  std::size_t height = 0, width = 0;
  std::vector<std::uint8_t> classes;

  LabelMap() = default;
  LabelMap(std::size_t h, std::size_t w, std::uint8_t fill = 0) : height(h), width(w), classes(h * w, fill) {}
  LabelMap(std::size_t h, std::size_t w, std::vector<std::uint8_t> c) : height(h), width(w), classes(std::move(c)) {
    if (classes.size() != h * w) throw DimensionError("LabelMap: payload does not match " + std::to_string(h) + "x" + std::to_string(w));
  }

  std::uint8_t at(std::size_t i, std::size_t j) const { return classes[i * width + j]; }
  std::uint8_t& at(std::size_t i, std::size_t j) { return classes[i * width + j]; }
  std::size_t size() const { return classes.size(); }

  void validate(std::size_t num_classes) const {
    for (auto c : classes)
      if (c >= num_classes)
        throw ContractError("label " + std::to_string(c) + " out of range for " + std::to_string(num_classes) + " classes");
  }
  friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

/// Binary boundary indicator, row-major, values in {0, 1}.
struct EdgeMask {
  std::size_t height = 0, width = 0;
  std::vector<std::uint8_t> bits;

  std::uint8_t at(std::size_t i, std::size_t j) const { return bits[i * width + j]; }
  std::size_t count() const { return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), 1)); }
  friend bool operator==(const EdgeMask&, const EdgeMask&) = default;
};

/// A pixel is an edge pixel when any in-bounds 4-neighbour carries a different
/// class. Missing neighbours at the border are skipped.
inline EdgeMask extract_edge_mask(const LabelMap& labels) {
  EdgeMask m{labels.height, labels.width, std::vector<std::uint8_t>(labels.size(), 0)};
  const std::size_t h = labels.height, w = labels.width;
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j) {
      const auto c = labels.at(i, j);
      const bool edge = (i > 0 && labels.at(i - 1, j) != c) || (i + 1 < h && labels.at(i + 1, j) != c) ||
                        (j > 0 && labels.at(i, j - 1) != c) || (j + 1 < w && labels.at(i, j + 1) != c);
      m.bits[i * w + j] = edge ? 1 : 0;
    }
  return m;
}

/// Nearest-neighbour resize; source index floor(i * H / h).
inline LabelMap resize_nearest(const LabelMap& in, std::size_t h, std::size_t w) {
  LabelMap out(h, w);
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j) out.at(i, j) = in.at(i * in.height / h, j * in.width / w);
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic faces
// ---------------------------------------------------------------------------

enum FaceClass : std::uint8_t {
  kBackground = 0,
  kSkin = 1,
  kLeftEye = 2,
  kRightEye = 3,
  kLeftBrow = 4,
  kRightBrow = 5,
  kNose = 6,
  kMouth = 7,
};

inline constexpr std::size_t kFaceClasses = 8;

inline const std::array<const char*, kFaceClasses>& face_class_names() {
  static const std::array<const char*, kFaceClasses> names{"background", "skin",   "l-eye", "r-eye",
                                                           "l-brow",     "r-brow", "nose",  "mouth"};
  return names;
}

inline const std::array<std::array<double, 3>, kFaceClasses>& face_class_colors() {
  static const std::array<std::array<double, 3>, kFaceClasses> colors{{{0.15, 0.20, 0.30},
                                                                       {0.85, 0.68, 0.55},
                                                                       {0.25, 0.35, 0.70},
                                                                       {0.30, 0.45, 0.75},
                                                                       {0.35, 0.22, 0.12},
                                                                       {0.45, 0.28, 0.15},
                                                                       {0.92, 0.60, 0.48},
                                                                       {0.75, 0.20, 0.25}}};
  return colors;
}

struct SynthConfig {
  std::size_t height = 32, width = 32;
  double center_jitter = 0.03;  ///< max shift of a part center, fraction of the canvas
  double radius_jitter = 0.10;  ///< max relative change of a part's extents
  double noise_stddev = 0.08;
  std::uint64_t seed = 0;
};

/// One face part in normalized canvas coordinates (u = x / W, v = y / H).
struct FacePart {
  FaceClass cls;
  bool ellipse;  ///< otherwise an axis-aligned rectangle
  double cu, cv, ru, rv;

  bool contains(double u, double v) const {
    const double du = (u - cu) / ru, dv = (v - cv) / rv;
    return ellipse ? du * du + dv * dv <= 1.0 : std::abs(du) <= 1.0 && std::abs(dv) <= 1.0;
  }
};

/// Painting order: later parts cover earlier ones.
inline std::array<FacePart, 7> nominal_face_parts() {
  return {{{kSkin, true, 0.50, 0.50, 0.34, 0.42},
           {kLeftEye, true, 0.36, 0.42, 0.085, 0.06},
           {kRightEye, true, 0.64, 0.42, 0.085, 0.06},
           {kLeftBrow, false, 0.36, 0.31, 0.10, 0.035},
           {kRightBrow, false, 0.64, 0.31, 0.10, 0.035},
           {kNose, false, 0.50, 0.54, 0.05, 0.09},
           {kMouth, true, 0.50, 0.72, 0.15, 0.06}}};
}

struct Sample {
  Tensor image;  ///< [H, W, 3] in [0, 1]
  LabelMap labels;
};

/// Deterministic in (cfg, index).
inline Sample synth_sample(const SynthConfig& cfg, std::uint64_t index) {
  Rng rng = make_rng(cfg.seed, index);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  auto parts = nominal_face_parts();
  for (auto& p : parts) {
    p.cu += cfg.center_jitter * unit(rng);
    p.cv += cfg.center_jitter * unit(rng);
    p.ru *= 1.0 + cfg.radius_jitter * unit(rng);
    p.rv *= 1.0 + cfg.radius_jitter * unit(rng);
  }
  const std::size_t h = cfg.height, w = cfg.width;
  Sample s{Tensor({h, w, 3}), LabelMap(h, w)};
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j) {
      const double u = (static_cast<double>(j) + 0.5) / static_cast<double>(w);
      const double v = (static_cast<double>(i) + 0.5) / static_cast<double>(h);
      for (const auto& p : parts)
        if (p.contains(u, v)) s.labels.at(i, j) = p.cls;
    }
  std::normal_distribution<double> noise(0.0, 1.0);
  auto img = s.image.data();
  const auto& colors = face_class_colors();
  for (std::size_t px = 0; px < h * w; ++px)
    for (std::size_t k = 0; k < 3; ++k) {
      const double n = cfg.noise_stddev > 0.0 ? cfg.noise_stddev * noise(rng) : 0.0;
      img[px * 3 + k] = std::clamp(colors[s.labels.classes[px]][k] + n, 0.0, 1.0);
    }
  return s;
}

// ---------------------------------------------------------------------------
// Augmentation
// ---------------------------------------------------------------------------

struct AugmentParams {
  double angle_deg = 0.0;
  double scale = 1.0;
};

inline AugmentParams sample_augment(Rng& rng) {
  std::uniform_real_distribution<double> angle(-30.0, 30.0), scale(0.75, 1.25);
  AugmentParams a;
  a.angle_deg = angle(rng);
  a.scale = scale(rng);
  return a;
}

/// Rotation and scaling about the canvas center by inverse mapping: each
/// output pixel pulls from the source. Image bilinear, labels nearest;
/// samples outside the canvas read black / background.
inline Sample augment_with(const Sample& in, AugmentParams a) {
  const std::size_t h = in.labels.height, w = in.labels.width, ch = in.image.dim(2);
  const double th = a.angle_deg * std::numbers::pi / 180.0;
  const double cs = std::cos(th), sn = std::sin(th);
  const double cx = (static_cast<double>(w) - 1.0) / 2.0, cy = (static_cast<double>(h) - 1.0) / 2.0;
  Sample out{Tensor({h, w, ch}), LabelMap(h, w, kBackground)};
  auto src = in.image.data();
  auto dst = out.image.data();
  auto pixel = [&](long r, long c, std::size_t k) {
    if (r < 0 || c < 0 || r >= static_cast<long>(h) || c >= static_cast<long>(w)) return 0.0;
    return src[(static_cast<std::size_t>(r) * w + static_cast<std::size_t>(c)) * ch + k];
  };
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j) {
      const double dx = static_cast<double>(j) - cx, dy = static_cast<double>(i) - cy;
      const double sx = cx + (cs * dx + sn * dy) / a.scale;
      const double sy = cy + (-sn * dx + cs * dy) / a.scale;
      const long nr = std::lround(sy), nc = std::lround(sx);
      if (nr >= 0 && nc >= 0 && nr < static_cast<long>(h) && nc < static_cast<long>(w))
        out.labels.at(i, j) = in.labels.at(static_cast<std::size_t>(nr), static_cast<std::size_t>(nc));
      const double fy = std::floor(sy), fx = std::floor(sx);
      const double ty = sy - fy, tx = sx - fx;
      const long r0 = static_cast<long>(fy), c0 = static_cast<long>(fx);
      for (std::size_t k = 0; k < ch; ++k) {
        dst[(i * w + j) * ch + k] = (1 - ty) * ((1 - tx) * pixel(r0, c0, k) + tx * pixel(r0, c0 + 1, k)) +
                                    ty * ((1 - tx) * pixel(r0 + 1, c0, k) + tx * pixel(r0 + 1, c0 + 1, k));
      }
    }
  return out;
}

inline Sample augment(const Sample& in, Rng& rng) { return augment_with(in, sample_augment(rng)); }

}  // namespace eagr
