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

#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "eagr/data.hpp"
#include "eagr/serialize.hpp"

// Binary netpbm: P5 (8-bit gray) for label maps and masks, P6 (8-bit RGB)
// for images. Only maxval 255 is accepted.

namespace eagr {

struct PnmImage {
  std::size_t height = 0, width = 0, channels = 1;
  std::vector<std::uint8_t> bytes;
};

namespace detail {

class PnmHeaderReader {
 public:
  explicit PnmHeaderReader(std::span<const std::uint8_t> in) : in_(in) {}

  void skip_space_and_comments() {
    while (pos_ < in_.size()) {
      if (in_[pos_] == '#') {
        while (pos_ < in_.size() && in_[pos_] != '\n') ++pos_;
      } else if (std::isspace(in_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::size_t number(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    std::size_t v = 0;
    while (pos_ < in_.size() && std::isdigit(in_[pos_])) {
      v = v * 10 + (in_[pos_] - '0');
      if (v > 1u << 24) throw ParseError(std::string(what) + " too large at byte " + std::to_string(start), start);
      ++pos_;
    }
    if (pos_ == start)
      throw ParseError(std::string("expected ") + what + " at byte " + std::to_string(start), start);
    return v;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline PnmImage decode_pnm(std::span<const std::uint8_t> in) {
  if (in.size() < 2 || in[0] != 'P' || (in[1] != '5' && in[1] != '6'))
    throw ParseError("not a binary PGM/PPM file (expected P5 or P6) at byte 0", 0);
  PnmImage img;
  img.channels = in[1] == '5' ? 1 : 3;
  detail::PnmHeaderReader r(in);
  r.advance(2);
  auto extent = [&r](const char* what) {
    r.skip_space_and_comments();
    const std::size_t at = r.pos();
    const std::size_t v = r.number(what);
    if (v == 0) throw ParseError(std::string("zero ") + what + " at byte " + std::to_string(at), at);
    return v;
  };
  img.width = extent("width");
  img.height = extent("height");
  r.skip_space_and_comments();
  const std::size_t maxval_at = r.pos();
  if (const auto maxval = r.number("maxval"); maxval != 255)
    throw ParseError("unsupported maxval " + std::to_string(maxval) + " at byte " + std::to_string(maxval_at), maxval_at);
  if (r.pos() >= in.size() || !std::isspace(in[r.pos()]))
    throw ParseError("missing whitespace after header at byte " + std::to_string(r.pos()), r.pos());
  r.advance(1);
  const std::size_t need = img.width * img.height * img.channels;
  const std::size_t have = in.size() - r.pos();
  if (have < need)
    throw ParseError("truncated payload: missing byte at offset " + std::to_string(in.size()), in.size());
  img.bytes.assign(in.begin() + static_cast<std::ptrdiff_t>(r.pos()),
                   in.begin() + static_cast<std::ptrdiff_t>(r.pos() + need));
  return img;
}

inline std::vector<std::uint8_t> encode_pnm(const PnmImage& img) {
  if (img.channels != 1 && img.channels != 3) throw ContractError("netpbm: 1 or 3 channels required");
  const std::string header = std::string(img.channels == 1 ? "P5" : "P6") + "\n" + std::to_string(img.width) + " " +
                             std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.bytes.begin(), img.bytes.end());
  return out;
}

inline PnmImage read_pnm(const std::filesystem::path& path) {
  auto bytes = detail::read_file(path);
  try {
    return decode_pnm(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.offset());
  }
}

inline LabelMap read_pgm(const std::filesystem::path& path) {
  auto img = read_pnm(path);
  if (img.channels != 1) throw ParseError(path.string() + ": expected P5 gray map", 0);
  return LabelMap(img.height, img.width, std::move(img.bytes));
}

inline void write_pgm(const LabelMap& map, const std::filesystem::path& path) {
  detail::write_file(path, encode_pnm({map.height, map.width, 1, map.classes}));
}

inline void write_pgm(const EdgeMask& mask, const std::filesystem::path& path) {
  detail::write_file(path, encode_pnm({mask.height, mask.width, 1, mask.bits}));
}

inline std::uint8_t quantize_unit(double v) {
  return static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
}

/// Image [H, W, 3] with values in [0, 1], quantized by round(255 v).
inline void write_ppm(const Tensor& image, const std::filesystem::path& path) {
  if (image.rank() != 3 || image.dim(2) != 3) throw DimensionError("write_ppm: expected [H, W, 3], got " + shape_str(image.shape()));
  PnmImage img{image.dim(0), image.dim(1), 3, {}};
  img.bytes.reserve(image.numel());
  for (double v : image.data()) img.bytes.push_back(quantize_unit(v));
  detail::write_file(path, encode_pnm(img));
}

inline Tensor read_ppm(const std::filesystem::path& path) {
  auto img = read_pnm(path);
  if (img.channels != 3) throw ParseError(path.string() + ": expected P6 color image", 0);
  std::vector<double> data(img.bytes.size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = img.bytes[i] / 255.0;
  return Tensor({img.height, img.width, 3}, std::move(data));
}

}  // namespace eagr
