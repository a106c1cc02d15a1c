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

#include <gtest/gtest.h>

#include "eagr/bench.hpp"
#include "eagr/nonlocal.hpp"
#include "eagr/random.hpp"
#include "oracles.hpp"

namespace eagr {
namespace {

oracle::Mat to_mat(const Tensor& t) { return oracle::from_flat(t.values(), t.dim(0), t.numel() / t.dim(0)); }

NonLocalParams random_params(std::size_t c, std::size_t t, Rng& rng) {
  NonLocalParams p = NonLocalParams::init(c, t, rng);
  for (Tensor* b : {&p.b_theta, &p.b_phi, &p.b_gamma})
    for (double& v : b->data()) v = std::uniform_real_distribution<double>(-0.5, 0.5)(rng);
  return p;
}

TEST(NonLocal, ZeroThetaAveragesGamma) {
  Rng rng = make_rng(1);
  NonLocalParams p = random_params(4, 2, rng);
  p.w_theta = Tensor::zeros({4, 2});
  p.b_theta = Tensor::zeros({2});
  Tensor x = uniform_tensor({3, 2, 4}, -1, 1, rng);
  Tensor out = nonlocal_forward(x, p);
  Tensor gamma = conv1x1(reshape(x, {6, 4}), p.w_gamma, p.b_gamma);
  for (std::size_t c = 0; c < 4; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < 6; ++r) mean += gamma.at(r, c);
    mean /= 6.0;
    for (std::size_t r = 0; r < 6; ++r) EXPECT_NEAR(out.data()[r * 4 + c], mean, 1e-12);
  }
}

TEST(NonLocal, MatchesOracle) {
  Rng rng = make_rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    NonLocalParams p = random_params(3, 2, rng);
    Tensor x = uniform_tensor({2, 2, 3}, -1, 1, rng);
    oracle::NonLocalWeights w{to_mat(p.w_theta), to_mat(p.w_phi), to_mat(p.w_gamma),
                              p.b_theta.values(), p.b_phi.values(), p.b_gamma.values()};
    auto ref = oracle::flat(oracle::nonlocal_forward(to_mat(reshape(x, {4, 3})), w));
    auto got = nonlocal_forward(x, p).values();
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(got[i], ref[i], 1e-12);
  }
}

TEST(NonLocal, AttentionRowsSumToOne) {
  Rng rng = make_rng(3);
  NonLocalParams p = random_params(6, 3, rng);
  Tensor att;
  Tensor out = nonlocal_forward(uniform_tensor({5, 4, 6}, -3, 3, rng), p, &att);
  ASSERT_EQ(att.shape(), (Shape{20, 20}));
  EXPECT_EQ(out.shape(), (Shape{5, 4, 6}));
  for (std::size_t r = 0; r < 20; ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < 20; ++j) s += att.at(r, j);
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

TEST(NonLocal, RowConstantLogitShiftLeavesOutputUnchanged) {
  // A theta bias adds theta_bias · phi_j to logit (i, j), which depends on j;
  // a phi bias adds theta_i · phi_bias, constant along each row.
  Rng rng = make_rng(4);
  NonLocalParams p = random_params(4, 3, rng);
  Tensor x = uniform_tensor({3, 3, 4}, -1, 1, rng);
  Tensor base = nonlocal_forward(x, p);
  NonLocalParams q = p;
  q.b_phi = add(p.b_phi, Tensor({3}, std::vector<double>{2.5, -1.0, 4.0}));
  Tensor shifted = nonlocal_forward(x, q);
  for (std::size_t i = 0; i < base.numel(); ++i) EXPECT_NEAR(base.data()[i], shifted.data()[i], 1e-10);
}

TEST(NonLocal, ShapeMismatch) {
  Rng rng = make_rng(5);
  NonLocalParams p = NonLocalParams::init(4, 2, rng);
  EXPECT_THROW(nonlocal_forward(Tensor({3, 3, 5}), p), DimensionError);
  EXPECT_THROW(nonlocal_forward(Tensor({9, 4}), p), DimensionError);
}

TEST(Complexity, AttentionRatioExamples) {
  auto small = attention_flop_ratio(4, 4, 4, 3, {2, 2}, {2, 2});
  EXPECT_EQ(small.nonlocal_attention_macs, 16u * 16u * 3u);
  EXPECT_EQ(small.eagr_attention_macs, 4u * 16u * 3u);
  EXPECT_EQ(small.measured, (Ratio{4, 1}));
  EXPECT_EQ(small.analytic, (Ratio{4, 1}));

  auto degenerate = attention_flop_ratio(2, 3, 4, 3, {2, 3}, {2, 3});
  EXPECT_EQ(degenerate.measured, (Ratio{1, 1}));
}

TEST(Complexity, RatioEqualsPixelsOverVertices) {
  for (auto [h, w, g, s] : {std::array<std::size_t, 4>{6, 6, 3, 2}, {8, 4, 4, 2}, {9, 6, 3, 3}, {12, 12, 6, 4}}) {
    auto r = attention_flop_ratio(h, w, 5, 3, {g, g}, {s, s});
    EXPECT_EQ(r.measured, r.analytic);
    EXPECT_EQ(r.analytic, make_ratio(h * w, s * s));
  }
}

TEST(Complexity, MeasuredCountsMatchAnalyticTotals) {
  EagrConfig cfg{3, 5, {3, 3}, {2, 2}, true, false};
  auto m = measure_module_macs(6, 5, 4, cfg, 9);
  EXPECT_EQ(m.nonlocal.total(), nonlocal_macs(6, 5, 4, 3).total);
  EXPECT_EQ(m.eagr.total(), eagr_macs(6, 5, 4, 3, 5, 4).total);
  EXPECT_EQ(m.eagr.count(kEagrAttentionOp), eagr_macs(6, 5, 4, 3, 5, 4).attention);
}

TEST(Complexity, DeskScaleClaim) {
  BenchOptions opt;
  opt.runs = 1;
  BenchReport rep = run_bench(opt);
  EXPECT_EQ(rep.attention_ratio, (Ratio{144, 1}));
  EXPECT_EQ(rep.attention_ratio_analytic, (Ratio{144, 1}));
  EXPECT_LT(rep.eagr_measured.total, rep.nonlocal_measured.total);
  EXPECT_EQ(rep.eagr_measured.total, rep.eagr_analytic.total);
  EXPECT_EQ(rep.nonlocal_measured.total, rep.nonlocal_analytic.total);
  EXPECT_GT(rep.nonlocal_median_ms, 0.0);
}

TEST(Complexity, Median) {
  EXPECT_EQ(median({3, 1, 2}), 2.0);
  EXPECT_EQ(median({4, 1, 3, 2}), 2.5);
}

}  // namespace
}  // namespace eagr
