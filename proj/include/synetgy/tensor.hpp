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

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace synetgy {

// Unsigned 4-bit activation or weight code.
using Code = std::uint8_t;
inline constexpr Code kMaxCode = 15;

// Signed partial sum of a 1x1 convolution. 32 bits hold the 18-bit signed
// range with room to spare.
using Accumulator = std::int32_t;

// Largest |accumulator| a 1x1 conv over `ic_total` channels can produce:
// |2*15-15| * 15 per input channel.
constexpr Accumulator accumulator_bound(int ic_total) { return 15 * 15 * ic_total; }

// Widest layer in DiracDeltaNet has 512 input channels.
inline constexpr Accumulator kAccumulatorBound = accumulator_bound(512);
static_assert(kAccumulatorBound == 115200);
static_assert(kAccumulatorBound < (1 << 17));

// Code 2k goes to the low nibble of byte k, code 2k+1 to the high nibble. An
// odd count leaves the final high nibble zero. Throws DomainError naming the
// first code above 15.
std::vector<std::uint8_t> pack(std::span<const Code> codes);

// Inverse of pack(). Throws LengthError if `bytes` holds fewer than
// ceil(count / 2) bytes.
std::vector<Code> unpack(std::span<const std::uint8_t> bytes, std::size_t count);

inline constexpr std::size_t packed_size(std::size_t count) { return (count + 1) / 2; }

// HxWxC tensor of 4-bit activation codes, channel innermost, stored packed.
class FeatureMap {
 public:
  FeatureMap() = default;
  // All-zero map.
  FeatureMap(int height, int width, int channels);
  // Validates dims and every code.
  FeatureMap(int height, int width, int channels, std::span<const Code> codes);

  static FeatureMap from_packed(int height, int width, int channels,
                                std::vector<std::uint8_t> bytes);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t size() const {
    return static_cast<std::size_t>(height_) * width_ * channels_;
  }
  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  Code at(int y, int x, int c) const;
  std::vector<Code> codes() const;
  const std::vector<std::uint8_t>& packed() const { return bytes_; }

  bool same_shape(const FeatureMap& o) const {
    return height_ == o.height_ && width_ == o.width_ && channels_ == o.channels_;
  }
  bool operator==(const FeatureMap&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> bytes_;
};

// OC x IC matrix of 4-bit weight codes. The integer weight a code stands for
// is 2*code - 15, an odd value in [-15, 15].
class WeightMatrix {
 public:
  WeightMatrix() = default;
  WeightMatrix(int out_channels, int in_channels, std::vector<Code> codes);

  int out_channels() const { return out_; }
  int in_channels() const { return in_; }
  Code code(int oc, int ic) const { return codes_[static_cast<std::size_t>(oc) * in_ + ic]; }
  int effective(int oc, int ic) const { return 2 * code(oc, ic) - 15; }
  const std::vector<Code>& codes() const { return codes_; }

  bool operator==(const WeightMatrix&) const = default;

 private:
  int out_ = 0;
  int in_ = 0;
  std::vector<Code> codes_;
};

constexpr int effective_weight(Code code) { return 2 * static_cast<int>(code) - 15; }

// Channel-blocked copy of a feature map, ordered (channel block, y, x,
// channel within block). The last block is zero padded.
struct BlockedBuffer {
  int height = 0;
  int width = 0;
  int channels = 0;
  int block = 0;
  std::vector<Code> codes;

  int num_blocks() const { return (channels + block - 1) / block; }
};

BlockedBuffer to_blocked_layout(const FeatureMap& fm, int block);
FeatureMap from_blocked_layout(const BlockedBuffer& buf);

// Tensor blob: u32 H, u32 W, u32 C (little endian) then pack() payload.
std::vector<std::uint8_t> encode_tensor_blob(const FeatureMap& fm);
FeatureMap decode_tensor_blob(std::span<const std::uint8_t> blob);

}  // namespace synetgy
