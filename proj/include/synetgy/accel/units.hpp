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

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "synetgy/ops.hpp"
#include "synetgy/quant.hpp"
#include "synetgy/tensor.hpp"

namespace synetgy::accel {

// Widest channel vector a unit moves per step (IC and OC are at most 32).
inline constexpr int kMaxLanes = 32;
using Lanes = std::array<Code, kMaxLanes>;

// One pixel's slice of a channel block: channels [block * width, block * width + width).
struct PixelGroup {
  int y = 0;
  int x = 0;
  int block = 0;
  Lanes codes{};
};

struct AccGroup {
  int y = 0;
  int x = 0;
  int block = 0;
  std::array<Accumulator, kMaxLanes> acc{};
};

// Conversion unit: the balanced comparator tree.
inline Code conversion_unit(Accumulator acc, const quant::ThresholdTable& table) {
  return table.lookup_tree(acc);
}

// Same mapping, one comparator at a time.
inline Code conversion_unit_linear(Accumulator acc, const quant::ThresholdTable& table) {
  return table.lookup_linear(acc);
}

// 2x2 stride-2 max pool over a row-major pixel stream. Holds the WIDTH + 1
// most recent pixels; the next pixel then completes a window.
class PoolLineBuffer {
 public:
  PoolLineBuffer(int height, int width) : height_(height), width_(width) {}

  struct Output {
    int y = 0;
    int x = 0;
    Lanes codes{};
    std::int64_t cycle = 0;
  };

  std::optional<Output> push(const Lanes& px) {
    const int y = static_cast<int>(count_ / width_);
    const int x = static_cast<int>(count_ % width_);
    ++count_;
    std::optional<Output> out;
    if ((y & 1) && (x & 1) && y / 2 < height_ / 2 && x / 2 < width_ / 2) {
      const auto n = buf_.size();
      const Lanes& up_left = buf_[n - static_cast<std::size_t>(width_) - 1];
      const Lanes& up = buf_[n - static_cast<std::size_t>(width_)];
      const Lanes& left = buf_[n - 1];
      Output o{y / 2, x / 2, {}, count_};
      for (int c = 0; c < kMaxLanes; ++c) o.codes[c] = std::max({up_left[c], up[c], left[c], px[c]});
      out = o;
    }
    buf_.push_back(px);
    if (buf_.size() > static_cast<std::size_t>(width_) + 1) buf_.pop_front();
    max_occupancy_ = std::max(max_occupancy_, buf_.size());
    return out;
  }

  std::size_t occupancy() const { return buf_.size(); }
  std::size_t max_occupancy() const { return max_occupancy_; }
  std::int64_t cycles() const { return count_; }
  bool finished() const { return count_ == static_cast<std::int64_t>(height_) * width_; }

 private:
  int height_;
  int width_;
  std::int64_t count_ = 0;
  std::deque<Lanes> buf_;
  std::size_t max_occupancy_ = 0;
};

// Shift over a row-major pixel stream. The unit surrounds the image with one
// ring of zero pixels and keeps the 2 * (WIDTH + 2) + 2 most recent padded
// pixels, enough for any 3x3 window around the next output.
class ShiftLineBuffer {
 public:
  ShiftLineBuffer(int height, int width, std::vector<ops::Shift> lane_shift);

  struct Output {
    int y = 0;
    int x = 0;
    Lanes codes{};
    std::int64_t cycle = 0;
  };

  // Feeds the next real pixel; appends any outputs it completes.
  void push(const Lanes& px, std::vector<Output>& out);

  std::size_t capacity() const { return capacity_; }
  std::size_t max_occupancy() const { return max_occupancy_; }
  std::int64_t cycles() const { return fed_; }

 private:
  void feed(const Lanes& px, std::vector<Output>& out);
  void feed_zeros(int n, std::vector<Output>& out);

  int height_;
  int width_;
  int padded_width_;
  std::size_t capacity_;
  std::array<int, kMaxLanes> back_{};  // distance from the newest pixel, per lane
  std::int64_t real_ = 0;              // real pixels received
  std::int64_t fed_ = 0;               // padded pixels consumed (model cycles)
  std::deque<Lanes> buf_;
  std::size_t max_occupancy_ = 0;
};

// Output buffer in DRAM that branches write into at shuffled channel offsets.
class PlacedBuffer {
 public:
  PlacedBuffer() = default;
  PlacedBuffer(int height, int width, int channels);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }

  void set(int y, int x, int c, Code v) {
    codes_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c] = v;
    written_[c] = true;
  }
  void mark_written(int c) { written_[c] = true; }
  bool channel_written(int c) const { return written_[c]; }
  bool complete() const { return std::all_of(written_.begin(), written_.end(), [](bool b) { return b; }); }

  // Throws GraphError if some channel was never written.
  FeatureMap to_feature_map() const;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<Code> codes_;
  std::vector<bool> written_;
};

// Copies `branch`, which occupies concatenated channels
// [branch_offset, branch_offset + C_branch), to its shuffled positions.
// Returns the packed bytes moved.
std::int64_t shuffle_writeback(PlacedBuffer& out, const FeatureMap& branch, int branch_offset);

struct WritebackResult {
  FeatureMap output;
  std::int64_t host_memcpy_bytes = 0;
};

// Accelerator writes the residual branch at its shuffled offsets and the host
// copies the skip branch next to it. The host copy is H * W * C_skip / 2 bytes.
WritebackResult shuffle_writeback(const FeatureMap& skip, const FeatureMap& residual);

}  // namespace synetgy::accel
