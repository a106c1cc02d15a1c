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

#include <filesystem>

#include "eagr/netpbm.hpp"
#include "eagr/random.hpp"

namespace eagr {
namespace {

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

class NetpbmFiles : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("eagr_netpbm_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

TEST(Netpbm, HandEncodedGrayMap) {
  auto in = bytes_of("P5\n2 2\n255\n");
  for (std::uint8_t b : {0, 1, 2, 3}) in.push_back(b);
  PnmImage img = decode_pnm(in);
  EXPECT_EQ(img.width, 2u);
  EXPECT_EQ(img.height, 2u);
  EXPECT_EQ(img.channels, 1u);
  LabelMap m(img.height, img.width, img.bytes);
  EXPECT_EQ(m.at(0, 1), 1);
  EXPECT_EQ(m.at(1, 0), 2);
  EXPECT_EQ(encode_pnm(img), in);
}

TEST(Netpbm, HeaderCommentsAndWhitespace) {
  auto in = bytes_of("P5 # gray\n 3\t1 # dims\n255 ");
  for (std::uint8_t b : {9, 8, 7}) in.push_back(b);
  EXPECT_EQ(decode_pnm(in).bytes, (std::vector<std::uint8_t>{9, 8, 7}));
}

TEST(Netpbm, TruncatedPayloadReportsMissingByteOffset) {
  auto in = bytes_of("P5 2 2 255\n");
  for (std::uint8_t b : {0, 1, 2}) in.push_back(b);
  try {
    decode_pnm(in);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 14u);
  }
}

TEST(Netpbm, MalformedHeaders) {
  auto offset_of = [](const std::string& s) -> std::size_t {
    try {
      decode_pnm(bytes_of(s));
    } catch (const ParseError& e) {
      return e.offset();
    }
    return std::string::npos;
  };
  EXPECT_EQ(offset_of("P2 1 1 255\n0"), 0u);
  EXPECT_EQ(offset_of("P5 x 1 255\n0"), 3u);
  EXPECT_EQ(offset_of("P5 1 1 65535\n00"), 7u);
  EXPECT_EQ(offset_of("P5 1 1"), 6u);
  EXPECT_EQ(offset_of("P5 1 1 255"), 10u);
  EXPECT_EQ(offset_of("P5 0 1 255\n"), 3u);
}

TEST_F(NetpbmFiles, LabelMapRoundTrip) {
  Rng rng = make_rng(1);
  LabelMap m(7, 5);
  std::uniform_int_distribution<int> d(0, 255);
  for (auto& v : m.classes) v = static_cast<std::uint8_t>(d(rng));
  write_pgm(m, dir_ / "m.pgm");
  EXPECT_EQ(read_pgm(dir_ / "m.pgm"), m);
  EdgeMask e{2, 2, {0, 1, 1, 0}};
  write_pgm(e, dir_ / "e.pgm");
  EXPECT_EQ(read_pgm(dir_ / "e.pgm").classes, e.bits);
}

TEST_F(NetpbmFiles, ImageQuantization) {
  Tensor img({1, 2, 3}, std::vector<double>{0.0, 1.0, 0.5, 0.2, -0.1, 1.3});
  write_ppm(img, dir_ / "i.ppm");
  PnmImage raw = read_pnm(dir_ / "i.ppm");
  EXPECT_EQ(raw.channels, 3u);
  EXPECT_EQ(raw.bytes, (std::vector<std::uint8_t>{0, 255, 128, 51, 0, 255}));
  Tensor back = read_ppm(dir_ / "i.ppm");
  EXPECT_EQ(back.shape(), img.shape());
  EXPECT_EQ(back.data()[2], 128.0 / 255.0);
  EXPECT_THROW(read_pgm(dir_ / "i.ppm"), ParseError);
  EXPECT_THROW(read_ppm(dir_ / "missing.ppm"), IoError);
}

TEST(Netpbm, QuantizeUnitRoundsToNearest) {
  EXPECT_EQ(quantize_unit(0.0), 0);
  EXPECT_EQ(quantize_unit(1.0), 255);
  EXPECT_EQ(quantize_unit(0.5), 128);
  EXPECT_EQ(quantize_unit(100.0 / 255.0), 100);
}

}  // namespace
}  // namespace eagr
