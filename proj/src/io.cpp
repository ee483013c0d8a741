// Copyright (c) 2026 The Synetgy-Sim Authors. All Rights Reserved.
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

#include "synetgy/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <zlib.h>

#include "synetgy/errors.hpp"

namespace synetgy::io {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::vector<std::uint8_t> out((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return out;
}

void write_file(const std::filesystem::path& path,
                std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

std::string read_text(const std::filesystem::path& path) {
  auto bytes = read_file(path);
  return {bytes.begin(), bytes.end()};
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in chunks.
  std::size_t off = 0;
  while (off < bytes.size()) {
    auto n = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
    crc = ::crc32(crc, bytes.data() + off, n);
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

void ByteWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }

void ByteWriter::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

void ByteWriter::f64(double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

void ByteWriter::bytes(std::span<const std::uint8_t> b) {
  buf_.insert(buf_.end(), b.begin(), b.end());
}

void ByteWriter::seal() { u32(crc32(buf_)); }

std::span<const std::uint8_t> ByteReader::take(std::size_t n, const char* field) {
  if (remaining() < n) {
    std::ostringstream msg;
    msg << what_ << ": truncated while reading '" << field << "' (need " << n
        << " bytes at offset " << pos_ << ", have " << remaining() << ")";
    throw LengthError(msg.str());
  }
  auto s = data_.subspan(pos_, n);
  pos_ += n;
  return s;
}

std::uint32_t ByteReader::u32(const char* field) {
  auto s = take(4, field);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(s[i]) << (8 * i);
  return v;
}

std::int32_t ByteReader::i32(const char* field) {
  return static_cast<std::int32_t>(u32(field));
}

float ByteReader::f32(const char* field) { return std::bit_cast<float>(u32(field)); }

double ByteReader::f64(const char* field) {
  auto s = take(8, field);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(s[i]) << (8 * i);
  return std::bit_cast<double>(v);
}

std::span<const std::uint8_t> ByteReader::bytes(std::size_t n, const char* field) {
  return take(n, field);
}

std::span<const std::uint8_t> verify_sealed(std::span<const std::uint8_t> blob,
                                            const std::string& what) {
  if (blob.size() < 4) throw LengthError(what + ": too short to hold a checksum");
  auto body = blob.first(blob.size() - 4);
  ByteReader tail(blob.last(4), what);
  std::uint32_t stored = tail.u32("checksum");
  std::uint32_t actual = crc32(body);
  if (stored != actual) {
    std::ostringstream msg;
    msg << what << ": checksum mismatch (stored 0x" << std::hex << stored
        << ", computed 0x" << actual << ")";
    throw ChecksumError(msg.str());
  }
  return body;
}

}  // namespace synetgy::io
