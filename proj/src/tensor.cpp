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

#include "synetgy/tensor.hpp"

#include <string>

#include "synetgy/errors.hpp"
#include "synetgy/io.hpp"

namespace synetgy {

namespace {

void check_dims(int h, int w, int c) {
  if (h < 0 || w < 0 || c < 0) {
    throw ShapeError("feature map dims must be non-negative, got " + std::to_string(h) +
                     "x" + std::to_string(w) + "x" + std::to_string(c));
  }
}

}  // namespace

std::vector<std::uint8_t> pack(std::span<const Code> codes) {
  std::vector<std::uint8_t> out(packed_size(codes.size()), 0);
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (codes[i] > kMaxCode) {
      throw DomainError("pack: code " + std::to_string(codes[i]) + " at index " +
                        std::to_string(i) + " is outside [0, 15]");
    }
    out[i / 2] |= static_cast<std::uint8_t>(codes[i] << (4 * (i & 1)));
  }
  return out;
}

std::vector<Code> unpack(std::span<const std::uint8_t> bytes, std::size_t count) {
  if (bytes.size() < packed_size(count)) {
    throw LengthError("unpack: " + std::to_string(count) + " codes need " +
                      std::to_string(packed_size(count)) + " bytes, buffer has " +
                      std::to_string(bytes.size()));
  }
  std::vector<Code> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = static_cast<Code>((bytes[i / 2] >> (4 * (i & 1))) & 0x0F);
  }
  return out;
}

FeatureMap::FeatureMap(int height, int width, int channels)
    : height_(height), width_(width), channels_(channels) {
  check_dims(height, width, channels);
  bytes_.assign(packed_size(size()), 0);
}

FeatureMap::FeatureMap(int height, int width, int channels, std::span<const Code> codes)
    : height_(height), width_(width), channels_(channels) {
  check_dims(height, width, channels);
  if (codes.size() != size()) {
    throw ShapeError("feature map " + std::to_string(height) + "x" + std::to_string(width) +
                     "x" + std::to_string(channels) + " needs " + std::to_string(size()) +
                     " codes, got " + std::to_string(codes.size()));
  }
  bytes_ = pack(codes);
}

FeatureMap FeatureMap::from_packed(int height, int width, int channels,
                                   std::vector<std::uint8_t> bytes) {
  FeatureMap fm;
  check_dims(height, width, channels);
  fm.height_ = height;
  fm.width_ = width;
  fm.channels_ = channels;
  if (bytes.size() != packed_size(fm.size())) {
    throw LengthError("packed feature map needs " + std::to_string(packed_size(fm.size())) +
                      " bytes, got " + std::to_string(bytes.size()));
  }
  // A non-zero pad nibble would make equal maps compare unequal.
  if (fm.size() % 2 == 1 && (bytes.back() & 0xF0) != 0) {
    throw DomainError("packed feature map has a non-zero padding nibble");
  }
  fm.bytes_ = std::move(bytes);
  return fm;
}

Code FeatureMap::at(int y, int x, int c) const {
  auto i = index(y, x, c);
  return static_cast<Code>((bytes_[i / 2] >> (4 * (i & 1))) & 0x0F);
}

std::vector<Code> FeatureMap::codes() const { return unpack(bytes_, size()); }

WeightMatrix::WeightMatrix(int out_channels, int in_channels, std::vector<Code> codes)
    : out_(out_channels), in_(in_channels), codes_(std::move(codes)) {
  if (out_channels <= 0 || in_channels <= 0) {
    throw ShapeError("weight matrix dims must be positive");
  }
  if (codes_.size() != static_cast<std::size_t>(out_channels) * in_channels) {
    throw ShapeError("weight matrix " + std::to_string(out_channels) + "x" +
                     std::to_string(in_channels) + " needs " +
                     std::to_string(static_cast<std::size_t>(out_channels) * in_channels) +
                     " codes, got " + std::to_string(codes_.size()));
  }
  for (std::size_t i = 0; i < codes_.size(); ++i) {
    if (codes_[i] > kMaxCode) {
      throw DomainError("weight code " + std::to_string(codes_[i]) + " at index " +
                        std::to_string(i) + " is outside [0, 15]");
    }
  }
}

BlockedBuffer to_blocked_layout(const FeatureMap& fm, int block) {
  if (block <= 0) throw ConfigError("block size must be positive");
  BlockedBuffer buf{fm.height(), fm.width(), fm.channels(), block, {}};
  const int nb = buf.num_blocks();
  const auto src = fm.codes();
  buf.codes.assign(static_cast<std::size_t>(nb) * fm.height() * fm.width() * block, 0);
  std::size_t k = 0;
  for (int b = 0; b < nb; ++b) {
    for (int y = 0; y < fm.height(); ++y) {
      for (int x = 0; x < fm.width(); ++x) {
        for (int c = 0; c < block; ++c, ++k) {
          int ch = b * block + c;
          if (ch < fm.channels()) buf.codes[k] = src[fm.index(y, x, ch)];
        }
      }
    }
  }
  return buf;
}

FeatureMap from_blocked_layout(const BlockedBuffer& buf) {
  std::vector<Code> out(static_cast<std::size_t>(buf.height) * buf.width * buf.channels);
  std::size_t k = 0;
  for (int b = 0; b < buf.num_blocks(); ++b) {
    for (int y = 0; y < buf.height; ++y) {
      for (int x = 0; x < buf.width; ++x) {
        for (int c = 0; c < buf.block; ++c, ++k) {
          int ch = b * buf.block + c;
          if (ch < buf.channels) {
            out[(static_cast<std::size_t>(y) * buf.width + x) * buf.channels + ch] =
                buf.codes.at(k);
          }
        }
      }
    }
  }
  return FeatureMap(buf.height, buf.width, buf.channels, out);
}

std::vector<std::uint8_t> encode_tensor_blob(const FeatureMap& fm) {
  io::ByteWriter w;
  w.u32(static_cast<std::uint32_t>(fm.height()));
  w.u32(static_cast<std::uint32_t>(fm.width()));
  w.u32(static_cast<std::uint32_t>(fm.channels()));
  w.bytes(fm.packed());
  return w.take();
}

FeatureMap decode_tensor_blob(std::span<const std::uint8_t> blob) {
  io::ByteReader r(blob, "tensor blob");
  constexpr std::uint32_t kMaxDim = 1u << 16;
  auto h = r.u32("height");
  auto w = r.u32("width");
  auto c = r.u32("channels");
  if (h == 0 || h > kMaxDim) throw ValidationError("tensor blob: bad height field " + std::to_string(h));
  if (w == 0 || w > kMaxDim) throw ValidationError("tensor blob: bad width field " + std::to_string(w));
  if (c == 0 || c > kMaxDim) throw ValidationError("tensor blob: bad channels field " + std::to_string(c));
  std::size_t need = packed_size(static_cast<std::size_t>(h) * w * c);
  if (r.remaining() != need) {
    throw LengthError("tensor blob: payload is " + std::to_string(r.remaining()) +
                      " bytes, header " + std::to_string(h) + "x" + std::to_string(w) + "x" +
                      std::to_string(c) + " requires " + std::to_string(need));
  }
  auto payload = r.bytes(need, "payload");
  return FeatureMap::from_packed(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c),
                                 {payload.begin(), payload.end()});
}

}  // namespace synetgy
