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
#include <span>
#include <utility>
#include <vector>

#include "synetgy/quant.hpp"
#include "synetgy/tensor.hpp"

// Schedule-free integer reference for every DiracDeltaNet operator. The
// accelerator simulator is checked against these bit for bit.
namespace synetgy::ops {

// The five shift choices. The enumerator order is the per-channel cycle.
enum class Shift : std::uint8_t { identity = 0, up, down, left, right };
inline constexpr int kShiftKinds = 5;

// Offset of the source pixel: out[y][x] = in[y + dy][x + dx]. "up" moves
// content up, so it reads the row below.
struct ShiftDirection {
  int dy = 0;
  int dx = 0;
};

constexpr ShiftDirection direction_of(Shift s) {
  switch (s) {
    case Shift::up: return {1, 0};
    case Shift::down: return {-1, 0};
    case Shift::left: return {0, 1};
    case Shift::right: return {0, -1};
    case Shift::identity: break;
  }
  return {0, 0};
}

// Channel c shifts by direction c mod 5.
constexpr Shift shift_for_channel(int c) { return static_cast<Shift>(c % kShiftKinds); }
std::vector<Shift> default_shift_assignment(int channels);

// Signed partial sums of a 1x1 conv, same (y, x, c) order as FeatureMap.
struct AccumulatorMap {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<Accumulator> values;

  Accumulator at(int y, int x, int c) const {
    return values[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  bool operator==(const AccumulatorMap&) const = default;
};

// out[y][x][oc] = sum_ic (2 w[oc][ic] - 15) * in[y][x][ic], exact.
AccumulatorMap conv1x1_ref(const FeatureMap& in, const WeightMatrix& w);

// Applies the conversion step function to every accumulator.
FeatureMap activation_quant(const AccumulatorMap& acc, const quant::ThresholdTable& table);

// 2x2 stride-2 max pool; an odd trailing row or column is dropped.
FeatureMap maxpool2x2(const FeatureMap& in);

// Per-channel shift with zero fill at the border.
FeatureMap shift(const FeatureMap& in, std::span<const Shift> assignment);
inline FeatureMap shift(const FeatureMap& in) {
  return shift(in, default_shift_assignment(in.channels()));
}

// Halves along the channel axis: (first half, second half).
std::pair<FeatureMap, FeatureMap> channel_split(const FeatureMap& in);

FeatureMap slice_channels(const FeatureMap& in, int begin, int count);
FeatureMap concat_channels(const FeatureMap& a, const FeatureMap& b);

// Position that concatenated channel k lands on after the circular shuffle:
// out[j] = concat[(j + C/4) mod C].
constexpr int shuffle_destination(int k, int total_channels) {
  return ((k - total_channels / 4) % total_channels + total_channels) % total_channels;
}

// concat [skip | residual] then rotate channels left by C/4.
FeatureMap concat_shuffle(const FeatureMap& skip, const FeatureMap& residual);

// Mean of dequantized activations over the 7x7 map, (sum codes) * s / (49 * 15).
std::vector<double> global_avgpool(const FeatureMap& in, const quant::NetworkQuantParams& net);

// Per-channel code sums over all pixels; the integer core of global_avgpool.
std::vector<std::int32_t> channel_sums(const FeatureMap& in);

// Fully connected layer evaluated one weight bit plane at a time:
// d_b = sum_ic bit_b(w[oc][ic]) * a[ic], out = 2 * sum_b 2^b d_b - 15 * sum a.
std::vector<Accumulator> fc_bit_serial(std::span<const Code> in, const WeightMatrix& w);

}  // namespace synetgy::ops
