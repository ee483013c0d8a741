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

#include "synetgy/accel/units.hpp"

#include <string>

#include "synetgy/errors.hpp"

namespace synetgy::accel {

ShiftLineBuffer::ShiftLineBuffer(int height, int width, std::vector<ops::Shift> lane_shift)
    : height_(height),
      width_(width),
      padded_width_(width + 2),
      capacity_(2 * static_cast<std::size_t>(width + 2) + 2) {
  if (lane_shift.size() > static_cast<std::size_t>(kMaxLanes)) {
    throw ConfigError("shift unit handles at most 32 lanes");
  }
  back_.fill(padded_width_ + 1);  // identity: the window center
  for (std::size_t c = 0; c < lane_shift.size(); ++c) {
    auto d = ops::direction_of(lane_shift[c]);
    back_[c] = (1 - d.dy) * padded_width_ + (1 - d.dx);
  }
}

void ShiftLineBuffer::feed(const Lanes& px, std::vector<Output>& out) {
  const int py = static_cast<int>(fed_ / padded_width_);
  const int px_col = static_cast<int>(fed_ % padded_width_);
  ++fed_;
  if (py >= 2 && px_col >= 2) {
    Output o{py - 2, px_col - 2, {}, fed_};
    const auto n = buf_.size();
    for (int c = 0; c < kMaxLanes; ++c) {
      const int k = back_[c];
      o.codes[c] = k == 0 ? px[c] : buf_[n - static_cast<std::size_t>(k)][c];
    }
    out.push_back(o);
  }
  buf_.push_back(px);
  if (buf_.size() > capacity_) buf_.pop_front();
  max_occupancy_ = std::max(max_occupancy_, buf_.size());
}

void ShiftLineBuffer::feed_zeros(int n, std::vector<Output>& out) {
  static const Lanes zero{};
  for (int i = 0; i < n; ++i) feed(zero, out);
}

void ShiftLineBuffer::push(const Lanes& px, std::vector<Output>& out) {
  const int y = static_cast<int>(real_ / width_);
  const int x = static_cast<int>(real_ % width_);
  ++real_;
  if (y == 0 && x == 0) feed_zeros(padded_width_ + 1, out);  // top ring + left pad
  feed(px, out);
  if (x == width_ - 1) {
    if (y < height_ - 1) {
      feed_zeros(2, out);  // right pad, next row's left pad
    } else {
      feed_zeros(1 + padded_width_, out);  // right pad + bottom ring
    }
  }
}

PlacedBuffer::PlacedBuffer(int height, int width, int channels)
    : height_(height),
      width_(width),
      channels_(channels),
      codes_(static_cast<std::size_t>(height) * width * channels, 0),
      written_(static_cast<std::size_t>(channels), false) {}

FeatureMap PlacedBuffer::to_feature_map() const {
  for (int c = 0; c < channels_; ++c) {
    if (!written_[c]) {
      throw GraphError("output channel " + std::to_string(c) + " was never written back");
    }
  }
  return FeatureMap(height_, width_, channels_, codes_);
}

std::int64_t shuffle_writeback(PlacedBuffer& out, const FeatureMap& branch, int branch_offset) {
  if (branch.height() != out.height() || branch.width() != out.width() ||
      branch_offset < 0 || branch_offset + branch.channels() > out.channels()) {
    throw ShapeError("shuffle writeback: branch does not fit the output buffer");
  }
  const auto src = branch.codes();
  for (int c = 0; c < branch.channels(); ++c)
    out.mark_written(ops::shuffle_destination(branch_offset + c, out.channels()));
  for (int y = 0; y < branch.height(); ++y)
    for (int x = 0; x < branch.width(); ++x)
      for (int c = 0; c < branch.channels(); ++c)
        out.set(y, x, ops::shuffle_destination(branch_offset + c, out.channels()),
                src[branch.index(y, x, c)]);
  return static_cast<std::int64_t>(packed_size(branch.size()));
}

WritebackResult shuffle_writeback(const FeatureMap& skip, const FeatureMap& residual) {
  if (!skip.same_shape(residual)) throw ShapeError("shuffle writeback: branch shapes differ");
  const int total = skip.channels() + residual.channels();
  if (total == 0) return {FeatureMap(skip.height(), skip.width(), 0), 0};
  PlacedBuffer buf(skip.height(), skip.width(), total);
  shuffle_writeback(buf, residual, skip.channels());
  auto copied = shuffle_writeback(buf, skip, 0);
  return {buf.to_feature_map(), copied};
}

}  // namespace synetgy::accel
