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

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace synetgy::io {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

// zlib CRC-32 of the buffer.
std::uint32_t crc32(std::span<const std::uint8_t> bytes);

// Little-endian append-only encoder.
class ByteWriter {
 public:
  void u32(std::uint32_t v);
  void i32(std::int32_t v);
  void f32(float v);
  void f64(double v);
  void bytes(std::span<const std::uint8_t> b);
  // Appends the CRC-32 of everything written so far.
  void seal();

  const std::vector<std::uint8_t>& data() const { return buf_; }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

// Little-endian cursor; every read names the field it was decoding when the
// buffer runs out.
class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> data, std::string what)
      : data_(data), what_(std::move(what)) {}

  std::uint32_t u32(const char* field);
  std::int32_t i32(const char* field);
  float f32(const char* field);
  double f64(const char* field);
  std::span<const std::uint8_t> bytes(std::size_t n, const char* field);

  std::size_t remaining() const { return data_.size() - pos_; }
  std::size_t position() const { return pos_; }

 private:
  std::span<const std::uint8_t> take(std::size_t n, const char* field);

  std::span<const std::uint8_t> data_;
  std::string what_;
  std::size_t pos_ = 0;
};

// Splits off and verifies the trailing CRC-32 written by ByteWriter::seal().
std::span<const std::uint8_t> verify_sealed(std::span<const std::uint8_t> blob,
                                            const std::string& what);

}  // namespace synetgy::io
