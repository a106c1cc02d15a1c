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

// Naive reference implementations used only by tests. They work on plain
// vectors and share no code path with the library kernels.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace oracle {

using Mat = std::vector<std::vector<double>>;

inline Mat from_flat(const std::vector<double>& v, std::size_t rows, std::size_t cols) {
  Mat m(rows, std::vector<double>(cols));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m[i][j] = v[i * cols + j];
  return m;
}

inline std::vector<double> flat(const Mat& m) {
  std::vector<double> v;
  for (const auto& r : m) v.insert(v.end(), r.begin(), r.end());
  return v;
}

inline Mat matmul(const Mat& a, const Mat& b) {
  Mat c(a.size(), std::vector<double>(b[0].size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b[0].size(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < b.size(); ++k) s += a[i][k] * b[k][j];
      c[i][j] = s;
    }
  return c;
}

inline Mat transpose(const Mat& a) {
  Mat t(a[0].size(), std::vector<double>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[0].size(); ++j) t[j][i] = a[i][j];
  return t;
}

/// Plain exp / normalize without max subtraction (inputs kept small).
inline Mat softmax_rows(const Mat& x) {
  Mat y = x;
  for (auto& r : y) {
    double s = 0.0;
    for (auto& v : r) s += (v = std::exp(v));
    for (auto& v : r) v /= s;
  }
  return y;
}

/// pixels x cin times cin x cout plus bias.
inline Mat affine(const Mat& x, const Mat& w, const std::vector<double>& b) {
  Mat y = matmul(x, w);
  for (auto& r : y)
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += b[j];
  return y;
}

/// Bin average of an h x w x c map stored as pixels x c rows.
inline Mat bin_average(const Mat& x, std::size_t h, std::size_t w, std::size_t ph, std::size_t pw) {
  const std::size_t c = x[0].size();
  Mat out(ph * pw, std::vector<double>(c, 0.0));
  for (std::size_t bi = 0; bi < ph; ++bi)
    for (std::size_t bj = 0; bj < pw; ++bj) {
      std::size_t count = 0;
      for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j) {
          // floor(b*h/p) <= i < floor((b+1)*h/p)  <=>  b*h < (i+1)*p <= (b+1)*h
          const bool in_row = bi * h < (i + 1) * ph && (i + 1) * ph <= (bi + 1) * h;
          const bool in_col = bj * w < (j + 1) * pw && (j + 1) * pw <= (bj + 1) * w;
          if (!in_row || !in_col) continue;
          ++count;
          for (std::size_t k = 0; k < c; ++k) out[bi * pw + bj][k] += x[i * w + j][k];
        }
      for (auto& v : out[bi * pw + bj]) v /= static_cast<double>(count);
    }
  return out;
}

struct EagrWeights {
  Mat w_phi, w_theta, w_sigma, w_g, adj;
  std::vector<double> b_phi, b_theta, b_sigma;
};

struct EagrShape {
  std::size_t h, w, ph, pw, sh, sw;
  bool residual;
};

/// Projection rows as explicit loops.
inline Mat eagr_projection(const Mat& x, const std::vector<double>& y, const EagrWeights& p, const EagrShape& s) {
  Mat phi = affine(x, p.w_phi, p.b_phi);
  Mat weighted = phi;
  for (std::size_t i = 0; i < weighted.size(); ++i)
    for (auto& v : weighted[i]) v *= y[i];
  Mat pooled = bin_average(weighted, s.h, s.w, s.ph, s.pw);
  Mat anchors;
  const std::size_t r0 = (s.ph - s.sh) / 2, c0 = (s.pw - s.sw) / 2;
  for (std::size_t i = 0; i < s.sh; ++i)
    for (std::size_t j = 0; j < s.sw; ++j) anchors.push_back(pooled[(r0 + i) * s.pw + (c0 + j)]);
  Mat logits(anchors.size(), std::vector<double>(phi.size(), 0.0));
  for (std::size_t v = 0; v < anchors.size(); ++v)
    for (std::size_t px = 0; px < phi.size(); ++px)
      for (std::size_t t = 0; t < phi[px].size(); ++t) logits[v][px] += anchors[v][t] * phi[px][t];
  return softmax_rows(logits);
}

/// Monolithic forward: projection, aggregation, graph convolution, reprojection.
inline Mat eagr_forward(const Mat& x, const std::vector<double>& y, const EagrWeights& p, const EagrShape& s) {
  Mat proj = eagr_projection(x, y, p, s);
  Mat theta = affine(x, p.w_theta, p.b_theta);
  const std::size_t nv = proj.size(), k = theta[0].size();
  Mat xg(nv, std::vector<double>(k, 0.0));
  for (std::size_t v = 0; v < nv; ++v)
    for (std::size_t px = 0; px < x.size(); ++px)
      for (std::size_t j = 0; j < k; ++j) xg[v][j] += proj[v][px] * theta[px][j];
  Mat mixed(nv, std::vector<double>(k, 0.0));
  for (std::size_t v = 0; v < nv; ++v)
    for (std::size_t u = 0; u < nv; ++u) {
      const double coef = (u == v ? 1.0 : 0.0) - p.adj[v][u];
      for (std::size_t j = 0; j < k; ++j) mixed[v][j] += coef * xg[u][j];
    }
  Mat reasoned = matmul(mixed, p.w_g);
  for (std::size_t v = 0; v < nv; ++v)
    for (std::size_t j = 0; j < k; ++j) reasoned[v][j] = std::max(0.0, reasoned[v][j]) + (s.residual ? xg[v][j] : 0.0);
  Mat back(x.size(), std::vector<double>(k, 0.0));
  for (std::size_t px = 0; px < x.size(); ++px)
    for (std::size_t v = 0; v < nv; ++v)
      for (std::size_t j = 0; j < k; ++j) back[px][j] += proj[v][px] * reasoned[v][j];
  Mat lifted = affine(back, p.w_sigma, p.b_sigma);
  Mat z = x;
  for (std::size_t px = 0; px < x.size(); ++px)
    for (std::size_t c = 0; c < x[0].size(); ++c) z[px][c] += lifted[px][c];
  return z;
}

struct NonLocalWeights {
  Mat w_theta, w_phi, w_gamma;
  std::vector<double> b_theta, b_phi, b_gamma;
};

inline Mat nonlocal_forward(const Mat& x, const NonLocalWeights& p) {
  Mat th = affine(x, p.w_theta, p.b_theta), ph = affine(x, p.w_phi, p.b_phi), ga = affine(x, p.w_gamma, p.b_gamma);
  const std::size_t n = x.size();
  Mat att(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t t = 0; t < th[0].size(); ++t) att[i][j] += th[i][t] * ph[j][t];
  att = softmax_rows(att);
  Mat out(n, std::vector<double>(ga[0].size(), 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t c = 0; c < ga[0].size(); ++c) out[i][c] += att[i][j] * ga[j][c];
  return out;
}

/// Per-pixel cross entropy summed over pixels with nonzero weight.
inline double masked_ce(const std::vector<double>& logits, std::size_t n, const std::vector<std::uint8_t>& labels,
                        const std::vector<std::uint8_t>& mask) {
  double sum = 0.0;
  for (std::size_t px = 0; px < labels.size(); ++px) {
    if (!mask[px]) continue;
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += std::exp(logits[px * n + j]);
    const double p = std::exp(logits[px * n + labels[px]]) / z;
    sum += -std::log(std::max(p, 1e-12));
  }
  return sum;
}

/// Boundary rule written as an explicit neighbour-offset scan.
inline std::vector<std::uint8_t> edge_mask(const std::vector<std::uint8_t>& labels, long h, long w) {
  std::vector<std::uint8_t> out(labels.size(), 0);
  const long offsets[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
  for (long i = 0; i < h; ++i)
    for (long j = 0; j < w; ++j)
      for (const auto& o : offsets) {
        const long ni = i + o[0], nj = j + o[1];
        if (ni < 0 || nj < 0 || ni >= h || nj >= w) continue;
        if (labels[ni * w + nj] != labels[i * w + j]) out[i * w + j] = 1;
      }
  return out;
}

struct PixelScores {
  double acc;
  std::vector<double> f1, iou;
  std::vector<bool> present;
  double miou, mean_f1_excl_bg;
};

/// Scores straight from the maps, counting TP/FP/FN per class by scanning.
inline PixelScores score_maps(const std::vector<std::uint8_t>& pred, const std::vector<std::uint8_t>& gt, std::size_t n) {
  PixelScores s{0.0, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), std::vector<bool>(n, false), 0.0, 0.0};
  std::uint64_t correct = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) correct += pred[i] == gt[i];
  s.acc = static_cast<double>(correct) / static_cast<double>(gt.size());
  double iou_sum = 0.0, f1_sum = 0.0;
  std::size_t iou_n = 0, f1_n = 0;
  for (std::size_t c = 0; c < n; ++c) {
    std::uint64_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
      tp += pred[i] == c && gt[i] == c;
      fp += pred[i] == c && gt[i] != c;
      fn += pred[i] != c && gt[i] == c;
    }
    if (tp + fp + fn == 0) continue;
    s.present[c] = true;
    s.f1[c] = static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn);
    s.iou[c] = static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
    iou_sum += s.iou[c];
    ++iou_n;
    if (c) {
      f1_sum += s.f1[c];
      ++f1_n;
    }
  }
  s.miou = iou_n ? iou_sum / static_cast<double>(iou_n) : 0.0;
  s.mean_f1_excl_bg = f1_n ? f1_sum / static_cast<double>(f1_n) : 0.0;
  return s;
}

/// Relabels both maps into merged categories (unlisted classes -> bucket
/// `categories`), then micro-F1 over the merged categories by pixel scan.
inline double relabel_micro_f1(const std::vector<std::uint8_t>& pred, const std::vector<std::uint8_t>& gt,
                               const std::vector<std::vector<std::size_t>>& groups) {
  auto relabel = [&](std::uint8_t c) {
    for (std::size_t g = 0; g < groups.size(); ++g)
      if (std::find(groups[g].begin(), groups[g].end(), c) != groups[g].end()) return g;
    return groups.size();
  };
  std::uint64_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const std::size_t p = relabel(pred[i]), g = relabel(gt[i]);
    if (p == g && g < groups.size()) ++tp;
    if (p != g && p < groups.size()) ++fp;
    if (p != g && g < groups.size()) ++fn;
  }
  const std::uint64_t d = 2 * tp + fp + fn;
  return d == 0 ? 0.0 : static_cast<double>(2 * tp) / static_cast<double>(d);
}

}  // namespace oracle
