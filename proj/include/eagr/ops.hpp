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
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eagr/tensor.hpp"

// Differentiable kernels. Spatial maps are [H, W, C]; matrices are [rows,
// cols]. Every op validates shapes and throws DimensionError with both
// shapes on mismatch.

namespace eagr {

namespace detail {

inline std::span<double> gbuf(const Tensor& t) {
  auto& g = t.state()->grad;
  if (g.empty()) g.assign(t.numel(), 0.0);
  return g;
}

inline void require_rank(const Tensor& t, std::size_t r, const char* op) {
  if (t.rank() != r)
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(r) + ", got " + shape_str(t.shape()));
}

inline DimensionError mismatch(const char* op, const Tensor& a, const Tensor& b) {
  return DimensionError(std::string(op) + ": incompatible shapes " + shape_str(a.shape()) + " and " +
                        shape_str(b.shape()));
}

}  // namespace detail

// -------------------- contractions --------------------

inline Tensor matmul(const Tensor& a, const Tensor& b, std::string_view tag = "matmul") {
  detail::require_rank(a, 2, "matmul");
  detail::require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) throw detail::mismatch("matmul", a, b);
  std::vector<double> c(m * n, 0.0);
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      const double* brow = &bv[p * n];
      double* crow = &c[i * n];
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  record_macs(tag, static_cast<std::uint64_t>(m) * k * n);
  return detail::make_result("matmul", {m, n}, std::move(c), {a, b}, [a, b, m, k, n](const detail::TensorState& out) {
    const auto& g = out.grad;
    auto av = a.data();
    auto bv = b.data();
    if (a.requires_grad()) {
      auto ga = detail::gbuf(a);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * bv[p * n + j];
          ga[i * k + p] += s;
        }
    }
    if (b.requires_grad()) {
      auto gb = detail::gbuf(b);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = av[i * k + p];
          for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * g[i * n + j];
        }
    }
  });
}

inline Tensor transpose(const Tensor& a) {
  detail::require_rank(a, 2, "transpose");
  const std::size_t m = a.dim(0), n = a.dim(1);
  std::vector<double> t(m * n);
  auto av = a.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) t[j * m + i] = av[i * n + j];
  return detail::make_result("transpose", {n, m}, std::move(t), {a}, [a, m, n](const detail::TensorState& out) {
    auto ga = detail::gbuf(a);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += out.grad[j * m + i];
  });
}

/// Pointwise convolution over the trailing channel axis: x[..., Cin] * w[Cin, Cout] + bias[Cout].
inline Tensor conv1x1(const Tensor& x, const Tensor& w, const Tensor& bias, std::string_view tag = "conv1x1") {
  detail::require_rank(w, 2, "conv1x1");
  const std::size_t cin = w.dim(0), cout = w.dim(1);
  if (x.rank() < 1 || x.shape().back() != cin) throw detail::mismatch("conv1x1", x, w);
  if (bias.numel() != cout) throw detail::mismatch("conv1x1", w, bias);
  const std::size_t rows = x.numel() / cin;
  std::vector<double> y(rows * cout);
  auto xv = x.data();
  auto wv = w.data();
  auto bv = bias.data();
  for (std::size_t r = 0; r < rows; ++r) {
    double* yr = &y[r * cout];
    for (std::size_t o = 0; o < cout; ++o) yr[o] = bv[o];
    for (std::size_t i = 0; i < cin; ++i) {
      const double xi = xv[r * cin + i];
      const double* wr = &wv[i * cout];
      for (std::size_t o = 0; o < cout; ++o) yr[o] += xi * wr[o];
    }
  }
  record_macs(tag, static_cast<std::uint64_t>(rows) * cin * cout);
  Shape shape = x.shape();
  shape.back() = cout;
  return detail::make_result("conv1x1", std::move(shape), std::move(y), {x, w, bias},
                             [x, w, bias, rows, cin, cout](const detail::TensorState& out) {
                               const auto& g = out.grad;
                               auto xv = x.data();
                               auto wv = w.data();
                               if (x.requires_grad()) {
                                 auto gx = detail::gbuf(x);
                                 for (std::size_t r = 0; r < rows; ++r)
                                   for (std::size_t i = 0; i < cin; ++i) {
                                     double s = 0.0;
                                     for (std::size_t o = 0; o < cout; ++o) s += g[r * cout + o] * wv[i * cout + o];
                                     gx[r * cin + i] += s;
                                   }
                               }
                               if (w.requires_grad()) {
                                 auto gw = detail::gbuf(w);
                                 for (std::size_t r = 0; r < rows; ++r)
                                   for (std::size_t i = 0; i < cin; ++i) {
                                     const double xi = xv[r * cin + i];
                                     for (std::size_t o = 0; o < cout; ++o) gw[i * cout + o] += xi * g[r * cout + o];
                                   }
                               }
                               if (bias.requires_grad()) {
                                 auto gb = detail::gbuf(bias);
                                 for (std::size_t r = 0; r < rows; ++r)
                                   for (std::size_t o = 0; o < cout; ++o) gb[o] += g[r * cout + o];
                               }
                             });
}

/// 3x3 convolution with zero padding 1. x: [H, W, Cin], w: [3, 3, Cin, Cout].
inline Tensor conv3x3(const Tensor& x, const Tensor& w, const Tensor& bias, std::size_t stride = 1,
                      std::string_view tag = "conv3x3") {
  detail::require_rank(x, 3, "conv3x3");
  detail::require_rank(w, 4, "conv3x3");
  if (stride != 1 && stride != 2) throw ContractError("conv3x3: stride must be 1 or 2");
  const std::size_t h = x.dim(0), wd = x.dim(1), cin = x.dim(2), cout = w.dim(3);
  if (w.dim(0) != 3 || w.dim(1) != 3 || w.dim(2) != cin) throw detail::mismatch("conv3x3", x, w);
  if (bias.numel() != cout) throw detail::mismatch("conv3x3", w, bias);
  const std::size_t ho = (h - 1) / stride + 1, wo = (wd - 1) / stride + 1;
  std::vector<double> y(ho * wo * cout);
  auto xv = x.data();
  auto wv = w.data();
  auto bv = bias.data();
  for (std::size_t oi = 0; oi < ho; ++oi)
    for (std::size_t oj = 0; oj < wo; ++oj) {
      double* yr = &y[(oi * wo + oj) * cout];
      for (std::size_t o = 0; o < cout; ++o) yr[o] = bv[o];
      for (std::size_t ki = 0; ki < 3; ++ki) {
        const long ii = static_cast<long>(oi * stride + ki) - 1;
        if (ii < 0 || ii >= static_cast<long>(h)) continue;
        for (std::size_t kj = 0; kj < 3; ++kj) {
          const long jj = static_cast<long>(oj * stride + kj) - 1;
          if (jj < 0 || jj >= static_cast<long>(wd)) continue;
          const double* xr = &xv[(static_cast<std::size_t>(ii) * wd + static_cast<std::size_t>(jj)) * cin];
          const double* wk = &wv[(ki * 3 + kj) * cin * cout];
          for (std::size_t c = 0; c < cin; ++c) {
            const double xc = xr[c];
            const double* wr = wk + c * cout;
            for (std::size_t o = 0; o < cout; ++o) yr[o] += xc * wr[o];
          }
        }
      }
    }
  record_macs(tag, static_cast<std::uint64_t>(ho) * wo * 9 * cin * cout);
  return detail::make_result(
      "conv3x3", {ho, wo, cout}, std::move(y), {x, w, bias},
      [x, w, bias, stride, h, wd, cin, cout, ho, wo](const detail::TensorState& out) {
        const auto& g = out.grad;
        auto xv = x.data();
        auto wv = w.data();
        std::span<double> gx, gw;
        if (x.requires_grad()) gx = detail::gbuf(x);
        if (w.requires_grad()) gw = detail::gbuf(w);
        for (std::size_t oi = 0; oi < ho; ++oi)
          for (std::size_t oj = 0; oj < wo; ++oj) {
            const double* gr = &g[(oi * wo + oj) * cout];
            for (std::size_t ki = 0; ki < 3; ++ki) {
              const long ii = static_cast<long>(oi * stride + ki) - 1;
              if (ii < 0 || ii >= static_cast<long>(h)) continue;
              for (std::size_t kj = 0; kj < 3; ++kj) {
                const long jj = static_cast<long>(oj * stride + kj) - 1;
                if (jj < 0 || jj >= static_cast<long>(wd)) continue;
                const std::size_t xoff = (static_cast<std::size_t>(ii) * wd + static_cast<std::size_t>(jj)) * cin;
                const std::size_t woff = (ki * 3 + kj) * cin * cout;
                for (std::size_t c = 0; c < cin; ++c) {
                  if (!gx.empty()) {
                    double s = 0.0;
                    for (std::size_t o = 0; o < cout; ++o) s += gr[o] * wv[woff + c * cout + o];
                    gx[xoff + c] += s;
                  }
                  if (!gw.empty()) {
                    const double xc = xv[xoff + c];
                    for (std::size_t o = 0; o < cout; ++o) gw[woff + c * cout + o] += xc * gr[o];
                  }
                }
              }
            }
          }
        if (bias.requires_grad()) {
          auto gb = detail::gbuf(bias);
          for (std::size_t p = 0; p < ho * wo; ++p)
            for (std::size_t o = 0; o < cout; ++o) gb[o] += g[p * cout + o];
        }
      });
}

// -------------------- normalization / pooling --------------------

/// Softmax over the trailing axis, stabilized by per-row max subtraction.
inline Tensor softmax_rows(const Tensor& x) {
  detail::check_finite(x.data(), "softmax_rows");
  const std::size_t n = x.shape().back(), rows = x.numel() / n;
  std::vector<double> y(x.numel());
  auto xv = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = &xv[r * n];
    double* yr = &y[r * n];
    const double mx = *std::max_element(xr, xr + n);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += (yr[j] = std::exp(xr[j] - mx));
    for (std::size_t j = 0; j < n; ++j) yr[j] /= sum;
  }
  return detail::make_result("softmax_rows", x.shape(), std::move(y), {x}, [x, rows, n](const detail::TensorState& out) {
    auto gx = detail::gbuf(x);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* yr = &out.data[r * n];
      const double* gr = &out.grad[r * n];
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += gr[j] * yr[j];
      for (std::size_t j = 0; j < n; ++j) gx[r * n + j] += yr[j] * (gr[j] - dot);
    }
  });
}

struct Grid {
  std::size_t rows = 1;
  std::size_t cols = 1;
  std::size_t cells() const { return rows * cols; }
  friend bool operator==(const Grid&, const Grid&) = default;
};

/// Spatial bin [begin, end) of output cell i when `extent` is split into `cells`.
inline std::pair<std::size_t, std::size_t> pool_bin(std::size_t i, std::size_t extent, std::size_t cells) {
  return {i * extent / cells, (i + 1) * extent / cells};
}

/// Output-size average pooling of x: [H, W, C] onto grid [Ph, Pw, C].
inline Tensor adaptive_avg_pool(const Tensor& x, Grid grid) {
  detail::require_rank(x, 3, "adaptive_avg_pool");
  const std::size_t h = x.dim(0), w = x.dim(1), c = x.dim(2);
  if (grid.rows == 0 || grid.cols == 0 || grid.rows > h || grid.cols > w)
    throw DimensionError("adaptive_avg_pool: grid " + std::to_string(grid.rows) + "x" + std::to_string(grid.cols) +
                         " does not fit input " + shape_str(x.shape()));
  std::vector<double> y(grid.cells() * c, 0.0);
  auto xv = x.data();
  for (std::size_t pi = 0; pi < grid.rows; ++pi) {
    auto [r0, r1] = pool_bin(pi, h, grid.rows);
    for (std::size_t pj = 0; pj < grid.cols; ++pj) {
      auto [c0, c1] = pool_bin(pj, w, grid.cols);
      const double inv = 1.0 / static_cast<double>((r1 - r0) * (c1 - c0));
      double* yr = &y[(pi * grid.cols + pj) * c];
      for (std::size_t i = r0; i < r1; ++i)
        for (std::size_t j = c0; j < c1; ++j)
          for (std::size_t k = 0; k < c; ++k) yr[k] += xv[(i * w + j) * c + k];
      for (std::size_t k = 0; k < c; ++k) yr[k] *= inv;
    }
  }
  return detail::make_result("adaptive_avg_pool", {grid.rows, grid.cols, c}, std::move(y), {x},
                             [x, grid, h, w, c](const detail::TensorState& out) {
                               auto gx = detail::gbuf(x);
                               for (std::size_t pi = 0; pi < grid.rows; ++pi) {
                                 auto [r0, r1] = pool_bin(pi, h, grid.rows);
                                 for (std::size_t pj = 0; pj < grid.cols; ++pj) {
                                   auto [c0, c1] = pool_bin(pj, w, grid.cols);
                                   const double inv = 1.0 / static_cast<double>((r1 - r0) * (c1 - c0));
                                   const double* gr = &out.grad[(pi * grid.cols + pj) * c];
                                   for (std::size_t i = r0; i < r1; ++i)
                                     for (std::size_t j = c0; j < c1; ++j)
                                       for (std::size_t k = 0; k < c; ++k) gx[(i * w + j) * c + k] += gr[k] * inv;
                                 }
                               }
                             });
}

// -------------------- spatial resampling / layout --------------------

inline Tensor upsample_nearest(const Tensor& x, std::size_t factor) {
  detail::require_rank(x, 3, "upsample_nearest");
  if (factor < 1) throw ContractError("upsample_nearest: factor must be >= 1");
  const std::size_t h = x.dim(0), w = x.dim(1), c = x.dim(2), ho = h * factor, wo = w * factor;
  std::vector<double> y(ho * wo * c);
  auto xv = x.data();
  for (std::size_t i = 0; i < ho; ++i)
    for (std::size_t j = 0; j < wo; ++j)
      for (std::size_t k = 0; k < c; ++k) y[(i * wo + j) * c + k] = xv[((i / factor) * w + j / factor) * c + k];
  return detail::make_result("upsample_nearest", {ho, wo, c}, std::move(y), {x},
                             [x, factor, w, c, ho, wo](const detail::TensorState& out) {
                               auto gx = detail::gbuf(x);
                               for (std::size_t i = 0; i < ho; ++i)
                                 for (std::size_t j = 0; j < wo; ++j)
                                   for (std::size_t k = 0; k < c; ++k)
                                     gx[((i / factor) * w + j / factor) * c + k] += out.grad[(i * wo + j) * c + k];
                             });
}

/// Keeps the top-left sample of every factor x factor block.
inline Tensor downsample_nearest(const Tensor& x, std::size_t factor) {
  detail::require_rank(x, 3, "downsample_nearest");
  const std::size_t h = x.dim(0), w = x.dim(1), c = x.dim(2);
  if (factor < 1 || h % factor || w % factor)
    throw DimensionError("downsample_nearest: factor " + std::to_string(factor) + " does not divide " +
                         shape_str(x.shape()));
  const std::size_t ho = h / factor, wo = w / factor;
  std::vector<double> y(ho * wo * c);
  auto xv = x.data();
  for (std::size_t i = 0; i < ho; ++i)
    for (std::size_t j = 0; j < wo; ++j)
      for (std::size_t k = 0; k < c; ++k) y[(i * wo + j) * c + k] = xv[((i * factor) * w + j * factor) * c + k];
  return detail::make_result("downsample_nearest", {ho, wo, c}, std::move(y), {x},
                             [x, factor, w, c, ho, wo](const detail::TensorState& out) {
                               auto gx = detail::gbuf(x);
                               for (std::size_t i = 0; i < ho; ++i)
                                 for (std::size_t j = 0; j < wo; ++j)
                                   for (std::size_t k = 0; k < c; ++k)
                                     gx[((i * factor) * w + j * factor) * c + k] += out.grad[(i * wo + j) * c + k];
                             });
}

/// Concatenates along the trailing axis; leading extents must agree.
inline Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (a.rank() != b.rank() || a.rank() < 1 ||
      !std::equal(a.shape().begin(), a.shape().end() - 1, b.shape().begin()))
    throw detail::mismatch("concat_channels", a, b);
  const std::size_t ca = a.shape().back(), cb = b.shape().back(), rows = a.numel() / ca, c = ca + cb;
  std::vector<double> y(rows * c);
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(&av[r * ca], ca, &y[r * c]);
    std::copy_n(&bv[r * cb], cb, &y[r * c + ca]);
  }
  Shape shape = a.shape();
  shape.back() = c;
  return detail::make_result("concat_channels", std::move(shape), std::move(y), {a, b},
                             [a, b, rows, ca, cb, c](const detail::TensorState& out) {
                               if (a.requires_grad()) {
                                 auto ga = detail::gbuf(a);
                                 for (std::size_t r = 0; r < rows; ++r)
                                   for (std::size_t k = 0; k < ca; ++k) ga[r * ca + k] += out.grad[r * c + k];
                               }
                               if (b.requires_grad()) {
                                 auto gb = detail::gbuf(b);
                                 for (std::size_t r = 0; r < rows; ++r)
                                   for (std::size_t k = 0; k < cb; ++k) gb[r * cb + k] += out.grad[r * c + ca + k];
                               }
                             });
}

/// Same buffer contents under a new shape of equal element count.
inline Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel())
    throw DimensionError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  return detail::make_result("reshape", std::move(shape), x.values(), {x}, [x](const detail::TensorState& out) {
    auto gx = detail::gbuf(x);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += out.grad[i];
  });
}

/// Gathers rows of a matrix in the given order.
inline Tensor take_rows(const Tensor& x, std::vector<std::size_t> rows) {
  detail::require_rank(x, 2, "take_rows");
  const std::size_t n = x.dim(1);
  std::vector<double> y(rows.size() * n);
  auto xv = x.data();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= x.dim(0)) throw DimensionError("take_rows: row index out of range for " + shape_str(x.shape()));
    std::copy_n(&xv[rows[r] * n], n, &y[r * n]);
  }
  const std::size_t count = rows.size();
  return detail::make_result("take_rows", {count, n}, std::move(y), {x},
                             [x, rows = std::move(rows), n](const detail::TensorState& out) {
                               auto gx = detail::gbuf(x);
                               for (std::size_t r = 0; r < rows.size(); ++r)
                                 for (std::size_t j = 0; j < n; ++j) gx[rows[r] * n + j] += out.grad[r * n + j];
                             });
}

/// Selects one channel of the trailing axis, keeping it as an extent-1 axis.
inline Tensor channel(const Tensor& x, std::size_t index) {
  const std::size_t c = x.shape().back(), rows = x.numel() / c;
  if (index >= c) throw DimensionError("channel: index out of range for " + shape_str(x.shape()));
  std::vector<double> y(rows);
  auto xv = x.data();
  for (std::size_t r = 0; r < rows; ++r) y[r] = xv[r * c + index];
  Shape shape = x.shape();
  shape.back() = 1;
  return detail::make_result("channel", std::move(shape), std::move(y), {x},
                             [x, index, c, rows](const detail::TensorState& out) {
                               auto gx = detail::gbuf(x);
                               for (std::size_t r = 0; r < rows; ++r) gx[r * c + index] += out.grad[r];
                             });
}

// -------------------- elementwise --------------------

/// a ⊙ b, where b either matches a or has trailing extent 1 (broadcast across the last axis).
inline Tensor hadamard(const Tensor& a, const Tensor& b) {
  const bool same = a.shape() == b.shape();
  const bool bcast = !same && a.rank() == b.rank() && b.shape().back() == 1 &&
                     std::equal(a.shape().begin(), a.shape().end() - 1, b.shape().begin());
  if (!same && !bcast) throw detail::mismatch("hadamard", a, b);
  const std::size_t n = a.shape().back(), rows = a.numel() / n;
  std::vector<double> y(a.numel());
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < n; ++j) y[r * n + j] = av[r * n + j] * bv[same ? r * n + j : r];
  return detail::make_result("hadamard", a.shape(), std::move(y), {a, b}, [a, b, same, rows, n](const detail::TensorState& out) {
    auto av = a.data();
    auto bv = b.data();
    if (a.requires_grad()) {
      auto ga = detail::gbuf(a);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < n; ++j) ga[r * n + j] += out.grad[r * n + j] * bv[same ? r * n + j : r];
    }
    if (b.requires_grad()) {
      auto gb = detail::gbuf(b);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < n; ++j) gb[same ? r * n + j : r] += out.grad[r * n + j] * av[r * n + j];
    }
  });
}

inline Tensor relu(const Tensor& x) {
  std::vector<double> y(x.values());
  for (auto& v : y) v = v > 0.0 ? v : 0.0;
  return detail::make_result("relu", x.shape(), std::move(y), {x}, [x](const detail::TensorState& out) {
    auto gx = detail::gbuf(x);
    auto xv = x.data();
    for (std::size_t i = 0; i < gx.size(); ++i)
      if (xv[i] > 0.0) gx[i] += out.grad[i];
  });
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw detail::mismatch("add", a, b);
  std::vector<double> y(a.values());
  auto bv = b.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
  return detail::make_result("add", a.shape(), std::move(y), {a, b}, [a, b](const detail::TensorState& out) {
    for (const Tensor* t : {&a, &b})
      if (t->requires_grad()) {
        auto g = detail::gbuf(*t);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i];
      }
  });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw detail::mismatch("sub", a, b);
  std::vector<double> y(a.values());
  auto bv = b.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= bv[i];
  return detail::make_result("sub", a.shape(), std::move(y), {a, b}, [a, b](const detail::TensorState& out) {
    if (a.requires_grad()) {
      auto g = detail::gbuf(a);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i];
    }
    if (b.requires_grad()) {
      auto g = detail::gbuf(b);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= out.grad[i];
    }
  });
}

inline Tensor scale(const Tensor& a, double k) {
  std::vector<double> y(a.values());
  for (auto& v : y) v *= k;
  return detail::make_result("scale", a.shape(), std::move(y), {a}, [a, k](const detail::TensorState& out) {
    auto g = detail::gbuf(a);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += k * out.grad[i];
  });
}

inline Tensor sum_all(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  return detail::make_result("sum_all", {1}, {s}, {x}, [x](const detail::TensorState& out) {
    auto g = detail::gbuf(x);
    for (auto& v : g) v += out.grad[0];
  });
}

inline Tensor log(const Tensor& x) {
  std::vector<double> y(x.values());
  for (auto& v : y) {
    if (!(v > 0.0)) throw DomainError("log: non-positive argument " + std::to_string(v));
    v = std::log(v);
  }
  return detail::make_result("log", x.shape(), std::move(y), {x}, [x](const detail::TensorState& out) {
    auto g = detail::gbuf(x);
    auto xv = x.data();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i] / xv[i];
  });
}

// -------------------- fused classification loss --------------------

inline constexpr double kProbFloor = 1e-12;

/// sum_i weight_i * -log(max(softmax(logits_i)[label_i], 1e-12)) / denom over
/// the rows of `logits` (trailing axis = classes). Rows with weight 0 are
/// skipped. The clamp has zero derivative where it is active.
inline Tensor softmax_cross_entropy(const Tensor& logits, std::span<const std::uint8_t> labels,
                                    std::span<const double> weights, double denom) {
  const std::size_t n = logits.shape().back(), rows = logits.numel() / n;
  if (labels.size() != rows || weights.size() != rows)
    throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for logits " +
                         shape_str(logits.shape()));
  if (!(denom > 0.0)) throw ContractError("softmax_cross_entropy: normalizer must be positive");
  std::vector<double> probs(logits.numel());
  auto lv = logits.data();
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (labels[r] >= n)
      throw ContractError("label " + std::to_string(labels[r]) + " out of range for " + std::to_string(n) + " classes");
    const double* z = &lv[r * n];
    double* p = &probs[r * n];
    const double mx = *std::max_element(z, z + n);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += (p[j] = std::exp(z[j] - mx));
    for (std::size_t j = 0; j < n; ++j) p[j] /= sum;
    if (weights[r] != 0.0) loss += weights[r] * -std::log(std::max(p[labels[r]], kProbFloor));
  }
  loss /= denom;
  std::vector<std::uint8_t> lab(labels.begin(), labels.end());
  std::vector<double> wts(weights.begin(), weights.end());
  return detail::make_result(
      "softmax_cross_entropy", {1}, {loss}, {logits},
      [logits, probs = std::move(probs), lab = std::move(lab), wts = std::move(wts), denom, rows,
       n](const detail::TensorState& out) {
        auto g = detail::gbuf(logits);
        const double go = out.grad[0] / denom;
        for (std::size_t r = 0; r < rows; ++r) {
          if (wts[r] == 0.0 || probs[r * n + lab[r]] < kProbFloor) continue;
          const double k = go * wts[r];
          for (std::size_t j = 0; j < n; ++j) g[r * n + j] += k * (probs[r * n + j] - (j == lab[r] ? 1.0 : 0.0));
        }
      });
}

}  // namespace eagr
