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
#include <string_view>
#include <vector>

#include "json.hpp"
#include "synetgy/accel/engine.hpp"
#include "synetgy/net.hpp"

namespace synetgy::accel {

struct CostModelParams {
  int cycles_per_ic_iter = 8;
  double clock_hz = 250e6;
  double dram_bandwidth = 6e9;          // bytes/s
  double invocation_overhead_s = 0.40e-3;
  double host_memcpy_bytes_per_s = 8.769e7;
  double host_ops_per_s = 1e9;          // average pool and FC fix-up on the CPU
  double memcpy_overlap = 0.0;          // fraction of host copies hidden behind compute
  int ic = 32;
  int oc = 32;

  // Throws ConfigError.
  void validate() const;
};

// `key = value` lines; '#' starts a comment. Unknown keys and malformed values
// throw ConfigError.
CostModelParams parse_cost_config(std::string_view text);
CostModelParams load_cost_config(const std::filesystem::path& path);

struct MemcpySample {
  double bytes = 0.0;
  double seconds = 0.0;
};

// Least-squares rate through the origin: sum(b^2) / sum(b * t).
double calibrate_host_memcpy_rate(std::span<const MemcpySample> samples);

// Two measured host copies at batch 10: the difference between the shuffled
// and conv-only runtimes of a 28x28x128 and a 7x7x512 block.
std::vector<MemcpySample> reference_memcpy_samples();

enum class Bound { compute, memory };
const char* to_string(Bound b);

struct RooflinePoint {
  double compute_gmacs = 0.0;
  double memory_gmacs = 0.0;
  double attainable_gmacs = 0.0;
  Bound bound = Bound::compute;
};

// Input features arrive at 2 per byte and each is reused OC_TOTAL times.
RooflinePoint roofline(int oc_total, const CostModelParams& params);

struct CallCost {
  std::string name;
  std::string group;
  std::int64_t conv_iterations = 0;  // per frame
  std::int64_t cycles = 0;           // per frame, conv or streaming
  std::int64_t fill_cycles = 0;      // per frame, line buffer warm-up
  std::int64_t macs = 0;             // per frame
  std::int64_t io_bytes = 0;         // per frame, features in and out
  std::int64_t weight_bytes = 0;     // once per call
  std::int64_t memcpy_bytes = 0;     // per frame
  double seconds = 0.0;              // whole batch, accelerator side
  double memcpy_seconds = 0.0;       // whole batch, exposed host copy
};

struct RooflineRow {
  std::string name;
  int oc_total = 0;
  RooflinePoint roof;
  double achieved_gmacs = 0.0;
};

struct BatchPoint {
  int batch = 0;
  double seconds = 0.0;
  double fps = 0.0;
};

struct BlockBreakdown {
  std::string config;  // "conv only", "conv+pool", "conv+shift", "conv+shuffle", "overall"
  double block1_ms = 0.0;
  double block2_ms = 0.0;
};

struct PerfReport {
  CostModelParams params;
  int batch = 1;
  std::vector<CallCost> calls;
  double accelerator_s = 0.0;
  double overhead_s = 0.0;  // included in accelerator_s
  double memcpy_s = 0.0;
  double host_s = 0.0;
  double total_s = 0.0;
  double fps = 0.0;
  std::int64_t dram_bytes = 0;
  std::int64_t memcpy_bytes = 0;
  std::vector<BatchPoint> batch_sweep;
  std::vector<RooflineRow> roofline;
  std::string block1;
  std::string block2;
  std::vector<BlockBreakdown> blocks;
};

struct BatchCost {
  double accelerator_s = 0.0;
  double overhead_s = 0.0;
  double memcpy_s = 0.0;
  double host_s = 0.0;
  double total_s = 0.0;
};

// Cost of one accelerator call for `batch` frames.
CallCost cost_call(const CallPlan& call, const CostModelParams& params, int batch);

BatchCost cost_network(const net::NetworkSpec& spec, const CostModelParams& params, int batch);

// Full report; the batch sweep covers 1, 2, 4, 8, 16 and the block breakdown
// uses batch 10. Throws DomainError for batch < 1.
PerfReport estimate_cycles(const net::NetworkSpec& spec, const CostModelParams& params,
                           int batch);

nlohmann::json to_json(const PerfReport& r);
std::string to_text(const PerfReport& r);

}  // namespace synetgy::accel
