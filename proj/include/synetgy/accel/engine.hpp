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

#include "synetgy/accel/subgraph.hpp"
#include "synetgy/net.hpp"

namespace synetgy::accel {

// A run of layers the accelerator executes in one call: an optional leading
// 1x1 conv, then pool and/or shift.
struct Segment {
  std::vector<std::string> layers;
  const net::LayerSpec* conv = nullptr;
  bool pool = false;
  bool shift = false;
  int in_height = 0;
  int in_width = 0;
  int in_channels = 0;
  int out_height = 0;
  int out_width = 0;
  int out_channels = 0;

  const std::string& name() const { return layers.front(); }
};

// Splits a layer chain at every conv. Throws GraphError on layers the
// accelerator cannot fuse.
std::vector<Segment> segment_chain(std::span<const net::LayerSpec> layers);

// One accelerator call with its place in the network, as both the simulator
// and the cost model see it.
struct CallPlan {
  std::string group;  // "stem", a block name, "conv5", "fc"
  Segment segment;
  int in_channel_begin = 0;
  std::optional<ShuffleTarget> shuffle;
  std::int64_t host_memcpy_bytes = 0;  // host copy that follows this call
  bool fc = false;
};

std::vector<CallPlan> plan_network(const net::NetworkSpec& spec);

struct CallRecord {
  std::string name;
  std::string group;
  SubgraphStats stats;
};

struct SimulationResult {
  std::vector<double> logits;
  int top1 = 0;
  std::vector<CallRecord> calls;
  std::int64_t host_memcpy_bytes = 0;
  Accumulator max_abs_acc = 0;
};

// Whole-network inference on the simulated accelerator. Global average
// pooling runs on the host; everything else goes through run_subgraph or
// run_fc_bit_serial.
SimulationResult simulate_forward(const net::ModelBundle& bundle, const FeatureMap& input,
                                  SchedulerKind scheduler = SchedulerKind::single_thread,
                                  const TileSchedule& schedule = {});

}  // namespace synetgy::accel
