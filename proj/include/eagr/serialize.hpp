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
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "eagr/tensor.hpp"

// Binary formats, all integers and reals little-endian.
//
//   tensor:      "EAGT" | version u32 | rank u32 | extent u32 * rank | f64 * numel
//   checkpoint:  "EAGR" | version u32 | count u32 |
//                (name_len u16 | name bytes (UTF-8) | tensor) * count

namespace eagr {

inline constexpr std::uint32_t kTensorFormatVersion = 1;
inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

namespace detail {

class ByteWriter {
 public:
  void bytes(const void* p, std::size_t n) {
    auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <typename U>
  void uint(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void real(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
  std::vector<std::uint8_t>& buffer() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in, std::size_t offset = 0) : in_(in), pos_(offset) {}

  void need(std::size_t n, const char* what) const {
    if (in_.size() - pos_ < n)
      throw ParseError(std::string("truncated input while reading ") + what + " at byte " + std::to_string(in_.size()),
                       in_.size());
  }
  template <typename U>
  U uint(const char* what) {
    need(sizeof(U), what);
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(in_[pos_ + i]) << (8 * i));
    pos_ += sizeof(U);
    return v;
  }
  double real(const char* what) { return std::bit_cast<double>(uint<std::uint64_t>(what)); }
  std::string str(std::size_t n, const char* what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void magic(const char (&m)[5]) {
    const std::size_t at = pos_;
    if (str(4, "magic") != std::string(m, 4))
      throw ParseError(std::string("bad magic, expected \"") + m + "\" at byte " + std::to_string(at), at);
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return in_.size() - pos_; }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_;
};

inline void write_tensor(ByteWriter& w, const Tensor& t) {
  w.bytes("EAGT", 4);
  w.uint<std::uint32_t>(kTensorFormatVersion);
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
  for (auto e : t.shape()) w.uint<std::uint32_t>(static_cast<std::uint32_t>(e));
  for (double v : t.data()) w.real(v);
}

inline Tensor read_tensor(ByteReader& r) {
  r.magic("EAGT");
  const std::size_t vat = r.pos();
  if (auto v = r.uint<std::uint32_t>("tensor version"); v != kTensorFormatVersion)
    throw ParseError("unsupported tensor format version " + std::to_string(v), vat);
  const std::size_t rat = r.pos();
  const auto rank = r.uint<std::uint32_t>("tensor rank");
  if (rank == 0 || rank > 8) throw ParseError("invalid tensor rank " + std::to_string(rank), rat);
  Shape shape(rank);
  std::size_t n = 1;
  for (auto& e : shape) {
    const std::size_t at = r.pos();
    e = r.uint<std::uint32_t>("tensor extent");
    if (e == 0) throw ParseError("zero tensor extent", at);
    // Extents beyond the remaining payload can only describe a truncated file.
    const std::size_t cap = r.remaining() / 8 + 1;
    n = e > cap / n ? cap : std::min(n * e, cap);
  }
  r.need(n * 8, "tensor data");
  std::vector<double> data(n);
  for (auto& v : data) v = r.real("tensor data");
  return Tensor(std::move(shape), std::move(data));
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
  detail::ByteWriter w;
  detail::write_tensor(w, t);
  return std::move(w.buffer());
}

inline Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  Tensor t = detail::read_tensor(r);
  if (!r.done()) throw ParseError("trailing bytes after tensor", r.pos());
  return t;
}

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

/// Ordered collection of uniquely named tensors.
class Checkpoint {
 public:
  void add(std::string name, Tensor t) {
    if (find(name)) throw ContractError("duplicate checkpoint entry \"" + name + "\"");
    if (name.size() > 0xFFFF) throw ContractError("checkpoint entry name too long");
    entries_.push_back({std::move(name), std::move(t)});
  }
  const Tensor* find(std::string_view name) const {
    for (const auto& e : entries_)
      if (e.name == name) return &e.tensor;
    return nullptr;
  }
  const std::vector<NamedTensor>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  std::vector<std::uint8_t> encode() const {
    detail::ByteWriter w;
    w.bytes("EAGR", 4);
    w.uint<std::uint32_t>(kCheckpointFormatVersion);
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(entries_.size()));
    for (const auto& e : entries_) {
      w.uint<std::uint16_t>(static_cast<std::uint16_t>(e.name.size()));
      w.bytes(e.name.data(), e.name.size());
      detail::write_tensor(w, e.tensor);
    }
    return std::move(w.buffer());
  }

  static Checkpoint decode(std::span<const std::uint8_t> bytes) {
    detail::ByteReader r(bytes);
    r.magic("EAGR");
    const std::size_t vat = r.pos();
    if (auto v = r.uint<std::uint32_t>("checkpoint version"); v != kCheckpointFormatVersion)
      throw ParseError("unsupported checkpoint version " + std::to_string(v), vat);
    const auto count = r.uint<std::uint32_t>("entry count");
    Checkpoint ck;
    for (std::uint32_t i = 0; i < count; ++i) {
      const std::size_t at = r.pos();
      const auto len = r.uint<std::uint16_t>("name length");
      std::string name = r.str(len, "entry name");
      if (ck.find(name)) throw ParseError("duplicate entry \"" + name + "\"", at);
      ck.entries_.push_back({std::move(name), detail::read_tensor(r)});
    }
    if (!r.done()) throw ParseError("trailing bytes after checkpoint", r.pos());
    return ck;
  }

  void save(const std::filesystem::path& path) const { detail::write_file(path, encode()); }
  static Checkpoint load(const std::filesystem::path& path) { return decode(detail::read_file(path)); }

 private:
  std::vector<NamedTensor> entries_;
};

}  // namespace eagr
