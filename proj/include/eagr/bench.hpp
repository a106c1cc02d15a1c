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
#include <chrono>
#include <cstdint>
#include <numeric>
#include <vector>

#include "eagr/eagr_module.hpp"
#include "eagr/nonlocal.hpp"

// MAC accounting for the non-local block against the graph block. The
// attention-product term is the pixel/anchor similarity matmul of each.

namespace eagr {

inline constexpr const char* kNonLocalAttentionOp = "nonlocal.attention";
inline constexpr const char* kEagrAttentionOp = "eagr.projection";

struct ModuleMacs {
  std::uint64_t total = 0;
  std::uint64_t attention = 0;
};

inline ModuleMacs nonlocal_macs(std::uint64_t h, std::uint64_t w, std::uint64_t c, std::uint64_t t) {
  const std::uint64_t hw = h * w;
  ModuleMacs m;
  m.attention = hw * t * hw;
  m.total = 2 * hw * c * t + hw * c * c + m.attention + hw * hw * c;
  return m;
}

inline ModuleMacs eagr_macs(std::uint64_t h, std::uint64_t w, std::uint64_t c, std::uint64_t t, std::uint64_t k,
                            std::uint64_t nv, bool reasoning = true) {
  const std::uint64_t hw = h * w;
  ModuleMacs m;
  m.attention = nv * t * hw;
  m.total = hw * c * t          // phi
            + m.attention       // anchors · phi^T
            + hw * c * k        // theta
            + nv * hw * k       // P · theta
            + (reasoning ? nv * nv * k + nv * k * k : 0)
            + hw * nv * k       // P^T · X^_G
            + hw * k * c;       // sigma
  return m;
}

/// Exact rational a / b in lowest terms.
struct Ratio {
  std::uint64_t num = 0;
  std::uint64_t den = 1;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Ratio&, const Ratio&) = default;
};

inline Ratio make_ratio(std::uint64_t a, std::uint64_t b) {
  const std::uint64_t g = std::gcd(a, b);
  return {a / g, b / g};
}

struct AttentionFlopRatio {
  Ratio measured;   ///< live counter readings
  Ratio analytic;   ///< HW / Nv
  std::uint64_t nonlocal_attention_macs = 0;
  std::uint64_t eagr_attention_macs = 0;
};

struct MeasuredMacs {
  FlopCounter nonlocal;
  FlopCounter eagr;
};

/// Runs both blocks once on the same random input with live flop counters.
inline MeasuredMacs measure_module_macs(std::size_t h, std::size_t w, std::size_t c, const EagrConfig& cfg,
                                        std::uint64_t seed = 0) {
  NoGradGuard no_grad;
  Rng rng = make_rng(seed);
  Tensor x = uniform_tensor({h, w, c}, -1.0, 1.0, rng);
  Tensor y = uniform_tensor({h, w, 1}, 0.0, 1.0, rng);
  auto nl = NonLocalParams::init(c, cfg.t_dim, rng);
  auto eg = EagrParams::init(c, cfg, rng);
  MeasuredMacs out;
  {
    FlopScope scope(out.nonlocal);
    nonlocal_forward(x, nl);
  }
  {
    FlopScope scope(out.eagr);
    eagr_forward(x, y, eg, cfg);
  }
  return out;
}

inline AttentionFlopRatio attention_flop_ratio(std::size_t h, std::size_t w, std::size_t c, std::size_t t, Grid grid,
                                               Grid sel, std::uint64_t seed = 0) {
  EagrConfig cfg;
  cfg.t_dim = t;
  cfg.k_dim = t;
  cfg.pool_grid = grid;
  cfg.central_sel = sel;
  auto m = measure_module_macs(h, w, c, cfg, seed);
  AttentionFlopRatio r;
  r.nonlocal_attention_macs = m.nonlocal.count(kNonLocalAttentionOp);
  r.eagr_attention_macs = m.eagr.count(kEagrAttentionOp);
  r.measured = make_ratio(r.nonlocal_attention_macs, r.eagr_attention_macs);
  r.analytic = make_ratio(static_cast<std::uint64_t>(h) * w, sel.cells());
  return r;
}

struct BenchOptions {
  std::size_t height = 48, width = 48, channels = 64;
  EagrConfig eagr{32, 64, {6, 6}, {4, 4}, true, false};
  std::size_t runs = 5;
  std::uint64_t seed = 0;
};

struct BenchReport {
  BenchOptions options;
  ModuleMacs nonlocal_measured, eagr_measured;
  ModuleMacs nonlocal_analytic, eagr_analytic;
  Ratio attention_ratio, attention_ratio_analytic;
  double nonlocal_median_ms = 0.0, eagr_median_ms = 0.0;
};

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline BenchReport run_bench(const BenchOptions& opt) {
  opt.eagr.validate(opt.channels);
  BenchReport rep;
  rep.options = opt;
  auto m = measure_module_macs(opt.height, opt.width, opt.channels, opt.eagr, opt.seed);
  rep.nonlocal_measured = {m.nonlocal.total(), m.nonlocal.count(kNonLocalAttentionOp)};
  rep.eagr_measured = {m.eagr.total(), m.eagr.count(kEagrAttentionOp)};
  rep.nonlocal_analytic = nonlocal_macs(opt.height, opt.width, opt.channels, opt.eagr.t_dim);
  rep.eagr_analytic = eagr_macs(opt.height, opt.width, opt.channels, opt.eagr.t_dim, opt.eagr.k_dim,
                                opt.eagr.vertices(), true);
  rep.attention_ratio = make_ratio(rep.nonlocal_measured.attention, rep.eagr_measured.attention);
  rep.attention_ratio_analytic = make_ratio(static_cast<std::uint64_t>(opt.height) * opt.width, opt.eagr.vertices());

  Rng rng = make_rng(opt.seed, 1);
  Tensor x = uniform_tensor({opt.height, opt.width, opt.channels}, -1.0, 1.0, rng);
  Tensor y = uniform_tensor({opt.height, opt.width, 1}, 0.0, 1.0, rng);
  auto nl = NonLocalParams::init(opt.channels, opt.eagr.t_dim, rng);
  auto eg = EagrParams::init(opt.channels, opt.eagr, rng);
  NoGradGuard no_grad;
  using clock = std::chrono::steady_clock;
  std::vector<double> tn, te;
  for (std::size_t r = 0; r < std::max<std::size_t>(opt.runs, 1); ++r) {
    auto t0 = clock::now();
    nonlocal_forward(x, nl);
    auto t1 = clock::now();
    eagr_forward(x, y, eg, opt.eagr);
    auto t2 = clock::now();
    tn.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    te.push_back(std::chrono::duration<double, std::milli>(t2 - t1).count());
  }
  rep.nonlocal_median_ms = median(tn);
  rep.eagr_median_ms = median(te);
  return rep;
}

}  // namespace eagr
