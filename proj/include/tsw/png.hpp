// Copyright 2026 The tsw Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "tsw/errors.hpp"

// 8-bit RGB PNG writer. The deflate stream uses fixed Huffman codes and
// distance-1 run matches only, which makes the output byte-identical on every
// platform (no zlib version dependence) while still compressing the sparse
// wireframe frames by two orders of magnitude. Decodability is checked against
// zlib in the test suite.

namespace tsw::png {

namespace detail {

inline uint32_t crc32(const uint8_t* data, size_t len, uint32_t crc = 0) {
  static const auto table = [] {
    std::array<uint32_t, 256> t{};
    for (uint32_t n = 0; n < 256; ++n) {
      uint32_t c = n;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[n] = c;
    }
    return t;
  }();
  crc ^= 0xFFFFFFFFu;
  for (size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xFF] ^ (crc >> 8);
  return crc ^ 0xFFFFFFFFu;
}

inline uint32_t adler32(const uint8_t* data, size_t len) {
  uint32_t a = 1, b = 0;
  for (size_t i = 0; i < len; ++i) {
    a = (a + data[i]) % 65521;
    b = (b + a) % 65521;
  }
  return (b << 16) | a;
}

class BitWriter {
 public:
  explicit BitWriter(std::vector<uint8_t>& out) : out_(out) {}

  // Deflate packs data LSB-first within each byte.
  void put_bits(uint32_t value, int count) {
    for (int i = 0; i < count; ++i) {
      acc_ |= ((value >> i) & 1u) << nbits_;
      if (++nbits_ == 8) flush_byte();
    }
  }

  // Huffman codes go on the wire most-significant bit first.
  void put_code(uint32_t code, int len) {
    for (int i = len - 1; i >= 0; --i) {
      acc_ |= ((code >> i) & 1u) << nbits_;
      if (++nbits_ == 8) flush_byte();
    }
  }

  void align_byte() {
    if (nbits_ > 0) flush_byte();
  }

 private:
  void flush_byte() {
    out_.push_back(acc_);
    acc_ = 0;
    nbits_ = 0;
  }

  std::vector<uint8_t>& out_;
  uint8_t acc_ = 0;
  int nbits_ = 0;
};

inline void put_fixed_literal(BitWriter& bw, int lit) {
  if (lit < 144) bw.put_code(0x30 + lit, 8);
  else bw.put_code(0x190 + (lit - 144), 9);
}

inline void put_fixed_lensym(BitWriter& bw, int sym) {  // 256..287
  if (sym < 280) bw.put_code(sym - 256, 7);
  else bw.put_code(0xC0 + (sym - 280), 8);
}

inline void put_length(BitWriter& bw, int length) {  // 3..258
  static constexpr int base[29] = {3,  4,  5,  6,  7,  8,  9,  10, 11,  13,  15,  17,  19, 23, 27,
                                   31, 35, 43, 51, 59, 67, 83, 99, 115, 131, 163, 195, 227, 258};
  static constexpr int extra[29] = {0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2,
                                    2, 3, 3, 3, 3, 4, 4, 4, 4, 5, 5, 5, 5, 0};
  int code = 28;
  while (length < base[code]) --code;
  put_fixed_lensym(bw, 257 + code);
  if (extra[code] > 0) bw.put_bits(static_cast<uint32_t>(length - base[code]), extra[code]);
}

/// One fixed-Huffman deflate block over `data`, emitting distance-1 matches
/// for byte runs. zlib wrapper (0x78 0x01 header + adler32 trailer) included.
inline std::vector<uint8_t> zlib_compress_rle(const std::vector<uint8_t>& data) {
  std::vector<uint8_t> out;
  out.reserve(data.size() / 16 + 64);
  out.push_back(0x78);
  out.push_back(0x01);
  BitWriter bw(out);
  bw.put_bits(1, 1);  // final block
  bw.put_bits(1, 2);  // fixed Huffman
  size_t i = 0;
  const size_t n = data.size();
  while (i < n) {
    if (i > 0) {
      uint8_t prev = data[i - 1];
      size_t run = 0;
      while (i + run < n && run < 258 && data[i + run] == prev) ++run;
      if (run >= 3) {
        put_length(bw, static_cast<int>(run));
        bw.put_code(0, 5);  // distance code 0 == distance 1
        i += run;
        continue;
      }
    }
    put_fixed_literal(bw, data[i]);
    ++i;
  }
  put_fixed_lensym(bw, 256);  // end of block
  bw.align_byte();
  uint32_t ad = adler32(data.data(), data.size());
  out.push_back(static_cast<uint8_t>(ad >> 24));
  out.push_back(static_cast<uint8_t>(ad >> 16));
  out.push_back(static_cast<uint8_t>(ad >> 8));
  out.push_back(static_cast<uint8_t>(ad));
  return out;
}

inline void put_u32_be(std::vector<uint8_t>& v, uint32_t x) {
  v.push_back(static_cast<uint8_t>(x >> 24));
  v.push_back(static_cast<uint8_t>(x >> 16));
  v.push_back(static_cast<uint8_t>(x >> 8));
  v.push_back(static_cast<uint8_t>(x));
}

inline void put_chunk(std::vector<uint8_t>& out, const char type[4],
                      const std::vector<uint8_t>& payload) {
  put_u32_be(out, static_cast<uint32_t>(payload.size()));
  size_t crc_start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), payload.begin(), payload.end());
  put_u32_be(out, crc32(out.data() + crc_start, out.size() - crc_start));
}

}  // namespace detail

/// Encode interleaved RGB8 (row-major, 3 bytes per pixel) as a PNG byte vector.
inline std::vector<uint8_t> encode_rgb8(const uint8_t* rgb, int width, int height) {
  require(width > 0 && height > 0, Errc::domain_error, "png dimensions must be positive");
  // Filter type 0 on every scanline.
  std::vector<uint8_t> filtered;
  filtered.reserve(static_cast<size_t>(height) * (static_cast<size_t>(width) * 3 + 1));
  for (int y = 0; y < height; ++y) {
    filtered.push_back(0);
    const uint8_t* row = rgb + static_cast<size_t>(y) * width * 3;
    filtered.insert(filtered.end(), row, row + static_cast<size_t>(width) * 3);
  }

  std::vector<uint8_t> out = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  std::vector<uint8_t> ihdr;
  detail::put_u32_be(ihdr, static_cast<uint32_t>(width));
  detail::put_u32_be(ihdr, static_cast<uint32_t>(height));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(2);  // truecolor
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  detail::put_chunk(out, "IHDR", ihdr);
  detail::put_chunk(out, "IDAT", detail::zlib_compress_rle(filtered));
  detail::put_chunk(out, "IEND", {});
  return out;
}

inline void write_rgb8(const std::string& path, const uint8_t* rgb, int width, int height) {
  auto bytes = encode_rgb8(rgb, width, height);
  std::ofstream f(path, std::ios::binary);
  require(f.good(), Errc::io_error, "cannot open " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  require(f.good(), Errc::io_error, "write failed: " + path);
}

}  // namespace tsw::png
