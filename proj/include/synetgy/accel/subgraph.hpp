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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "synetgy/accel/process.hpp"
#include "synetgy/accel/units.hpp"
#include "synetgy/quant.hpp"
#include "synetgy/tensor.hpp"

namespace synetgy::accel {

// Tiling of the conv engine. Each inner iteration multiplies an IC-wide input
// group by an OC x IC weight tile.
struct TileSchedule {
  int ic = 32;
  int oc = 32;
  std::size_t fifo_capacity = 2;

  void validate() const;
  int ic_blocks(int ic_total) const { return (ic_total + ic - 1) / ic; }
  int oc_blocks(int oc_total) const { return (oc_total + oc - 1) / oc; }
  // Inner iterations for one HxW output map.
  std::int64_t conv_iterations(int height, int width, int ic_total, int oc_total) const {
    return static_cast<std::int64_t>(height) * width * ic_blocks(ic_total) * oc_blocks(oc_total);
  }
};

// Concatenated tensor the subgraph's output belongs to.
struct ShuffleTarget {
  int total_channels = 0;
  int branch_offset = 0;
};

// One accelerator call: an optional 1x1 conv followed by optional pool, shift
// and shuffled writeback. Without weights the input streams straight to the
// pool/shift units.
struct SubgraphSpec {
  std::string name;
  const WeightMatrix* weights = nullptr;
  const quant::ThresholdTable* table = nullptr;
  int in_channel_begin = 0;
  int in_channel_count = -1;  // -1: every channel from in_channel_begin on
  bool pool = false;
  bool shift = false;
  std::optional<ShuffleTarget> shuffle;
};

struct SubgraphStats {
  std::int64_t conv_iterations = 0;
  std::int64_t macs = 0;  // useful multiplies, excluding padding
  Accumulator max_abs_acc = 0;
  std::size_t pool_max_occupancy = 0;
  std::size_t shift_max_occupancy = 0;
  std::int64_t pool_cycles = 0;   // pixels consumed per lane
  std::int64_t shift_cycles = 0;  // padded pixels consumed per lane
  std::int64_t dram_read_bytes = 0;
  std::int64_t dram_write_bytes = 0;
  std::int64_t weight_bytes = 0;
  std::size_t fifo_high_water = 0;
};

struct SubgraphResult {
  FeatureMap output;  // empty when the result went to a PlacedBuffer
  SubgraphStats stats;
};

// Throws ConfigError on a schedule or shape mismatch. A spec with a shuffle
// target writes into `placed`, which must match the target.
SubgraphResult run_subgraph(const FeatureMap& in, const SubgraphSpec& spec,
                            const TileSchedule& schedule = {},
                            SchedulerKind scheduler = SchedulerKind::single_thread,
                            PlacedBuffer* placed = nullptr);

struct FcResult {
  std::vector<Accumulator> acc;
  SubgraphStats stats;
};

// Fully connected layer on the conv engine: one pass per weight bit plane
// with 0/1 weights, then the host folds the planes into effective weights.
// Matches ops::fc_bit_serial.
FcResult run_fc_bit_serial(std::span<const Code> in, const WeightMatrix& w,
                           const TileSchedule& schedule = {},
                           SchedulerKind scheduler = SchedulerKind::single_thread);

}  // namespace synetgy::accel
