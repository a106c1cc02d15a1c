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

#include <cmath>
#include <limits>

#include "eagr/random.hpp"
#include "eagr/serialize.hpp"

namespace eagr {
namespace {

std::vector<std::uint8_t> le32(std::uint32_t v) {
  return {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v >> 16),
          static_cast<std::uint8_t>(v >> 24)};
}

TEST(TensorFormat, ByteLayout) {
  Tensor t({1, 2}, std::vector<double>{1.0, -2.0});
  auto bytes = encode_tensor(t);
  std::vector<std::uint8_t> expected{'E', 'A', 'G', 'T'};
  for (std::uint32_t v : {1u, 2u, 1u, 2u})
    for (auto b : le32(v)) expected.push_back(b);
  // 1.0 = 0x3FF0000000000000, -2.0 = 0xC000000000000000, little-endian.
  for (std::uint8_t b : {0, 0, 0, 0, 0, 0, 0xF0, 0x3F}) expected.push_back(b);
  for (std::uint8_t b : {0, 0, 0, 0, 0, 0, 0, 0xC0}) expected.push_back(b);
  EXPECT_EQ(bytes, expected);
}

TEST(TensorFormat, RoundTripIsBitExact) {
  Rng rng = make_rng(1);
  Tensor t = normal_tensor({3, 4, 2}, 10.0, rng);
  t.data()[0] = -0.0;
  t.data()[1] = std::numeric_limits<double>::denorm_min();
  t.data()[2] = std::numeric_limits<double>::max();
  Tensor u = decode_tensor(encode_tensor(t));
  EXPECT_EQ(u.shape(), t.shape());
  EXPECT_EQ(encode_tensor(u), encode_tensor(t));
  EXPECT_TRUE(std::signbit(u.data()[0]));
}

TEST(TensorFormat, TruncationReportsOffset) {
  auto bytes = encode_tensor(Tensor({2, 2}, 1.0));
  for (std::size_t cut : {0u, 3u, 6u, 13u, 20u, 30u}) {
    std::vector<std::uint8_t> part(bytes.begin(), bytes.begin() + cut);
    try {
      decode_tensor(part);
      FAIL() << cut;
    } catch (const ParseError& e) {
      EXPECT_EQ(e.offset(), cut);
    }
  }
}

TEST(TensorFormat, RejectsMalformedHeaders) {
  auto bytes = encode_tensor(Tensor({2}, 1.0));
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_tensor(bad), ParseError);
  bad = bytes;
  bad[4] = 9;  // version
  EXPECT_THROW(decode_tensor(bad), ParseError);
  bad = bytes;
  bad[12] = 0;  // zero extent
  EXPECT_THROW(decode_tensor(bad), ParseError);
  bad = bytes;
  bad.push_back(0);
  EXPECT_THROW(decode_tensor(bad), ParseError);
  // Huge extents against a tiny payload fail as truncation, without allocating.
  std::vector<std::uint8_t> huge{'E', 'A', 'G', 'T'};
  for (std::uint32_t v : {1u, 3u, 0xFFFFFFFFu, 0xFFFFFFFFu, 0xFFFFFFFFu})
    for (auto b : le32(v)) huge.push_back(b);
  EXPECT_THROW(decode_tensor(huge), ParseError);
}

TEST(Checkpoint, RoundTripAndLookup) {
  Rng rng = make_rng(2);
  Checkpoint ck;
  ck.add("a.w", uniform_tensor({3, 3}, -1, 1, rng));
  ck.add("b", Tensor::scalar(4.0));
  EXPECT_THROW(ck.add("b", Tensor::scalar(1.0)), ContractError);
  auto bytes = ck.encode();
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "EAGR");
  Checkpoint back = Checkpoint::decode(bytes);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.entries()[0].name, "a.w");
  EXPECT_EQ(back.find("b")->item(), 4.0);
  EXPECT_EQ(back.find("c"), nullptr);
  EXPECT_EQ(back.encode(), bytes);
}

TEST(Checkpoint, FileRoundTripIsByteIdentical) {
  auto dir = std::filesystem::temp_directory_path() / "eagr_serialize_test";
  std::filesystem::create_directories(dir);
  Rng rng = make_rng(3);
  Checkpoint ck;
  ck.add("x", normal_tensor({5, 2}, 1.0, rng));
  ck.save(dir / "a.ckpt");
  Checkpoint::load(dir / "a.ckpt").save(dir / "b.ckpt");
  EXPECT_EQ(detail::read_file(dir / "a.ckpt"), detail::read_file(dir / "b.ckpt"));
  EXPECT_THROW(Checkpoint::load(dir / "missing.ckpt"), IoError);
  std::filesystem::remove_all(dir);
}

TEST(Checkpoint, TruncationAndDuplicates) {
  Checkpoint ck;
  ck.add("a", Tensor::scalar(1.0));
  auto bytes = ck.encode();
  std::vector<std::uint8_t> part(bytes.begin(), bytes.end() - 3);
  try {
    Checkpoint::decode(part);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), part.size());
  }
  // Two entries named "a".
  auto dup = bytes;
  dup[8] = 2;
  dup.insert(dup.end(), bytes.begin() + 12, bytes.end());
  EXPECT_THROW(Checkpoint::decode(dup), ParseError);
}

}  // namespace
}  // namespace eagr
