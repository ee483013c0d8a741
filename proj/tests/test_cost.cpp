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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "support.hpp"
#include "synetgy/accel/cost.hpp"
#include "synetgy/errors.hpp"

using namespace synetgy;
using namespace synetgy::accel;

namespace {

net::LayerSpec conv_layer(int h, int ic, int oc) {
  net::LayerSpec l;
  l.name = "probe";
  l.kind = net::LayerKind::conv1x1;
  l.in_channels = ic;
  l.out_channels = oc;
  l.in_height = l.in_width = l.out_height = l.out_width = h;
  return l;
}

CallPlan single_call(const net::LayerSpec& l) {
  CallPlan p;
  p.group = "probe";
  p.segment = segment_chain(std::span<const net::LayerSpec>(&l, 1)).front();
  return p;
}

}  // namespace

TEST_CASE("cost config parsing") {
  const auto p = parse_cost_config(
      "# tuned\n"
      "cycles_per_ic_iter = 7\n"
      "clock_hz = 2.5e8   # 250 MHz\n"
      "\n"
      "dram_bandwidth=6e9\n"
      "memcpy_overlap = 0.25\n");
  CHECK(p.cycles_per_ic_iter == 7);
  CHECK(p.clock_hz == 250e6);
  CHECK(p.memcpy_overlap == 0.25);
  CHECK(p.invocation_overhead_s == CostModelParams{}.invocation_overhead_s);
  CHECK_THROWS_AS(parse_cost_config("bogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_cost_config("cycles_per_ic_iter = 6\n"), ConfigError);
  CHECK_THROWS_AS(parse_cost_config("cycles_per_ic_iter = 39\n"), ConfigError);
  CHECK_NOTHROW(parse_cost_config("cycles_per_ic_iter = 38\n"));
  CHECK_THROWS_AS(parse_cost_config("clock_hz = fast\n"), ConfigError);
  CHECK_THROWS_AS(parse_cost_config("memcpy_overlap = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_cost_config("just a line\n"), ConfigError);
  CHECK_THROWS_AS(load_cost_config("/nonexistent/cost.cfg"), IoError);
}

TEST_CASE("roofline arithmetic") {
  const CostModelParams d;
  const auto big = roofline(512, d);
  CHECK(big.compute_gmacs == 256.0);
  CHECK(2 * big.compute_gmacs == 512.0);
  CHECK(big.memory_gmacs == 6144.0);
  CHECK(2 * big.memory_gmacs == 12288.0);
  CHECK(big.attainable_gmacs == 256.0);
  CHECK(big.bound == Bound::compute);
  const auto small = roofline(16, d);
  CHECK(small.memory_gmacs == 192.0);
  CHECK(small.attainable_gmacs == 192.0);
  CHECK(small.bound == Bound::memory);
  CHECK(roofline(21, d).bound == Bound::memory);
  CHECK(roofline(22, d).bound == Bound::compute);
  CHECK_THROWS_AS(roofline(0, d), DomainError);
}

TEST_CASE("conv cycles closed form") {
  CostModelParams p;
  p.cycles_per_ic_iter = 7;
  const auto l = conv_layer(7, 512, 512);
  const auto c = cost_call(single_call(l), p, 1);
  CHECK(c.cycles == 7 * 7 * 16 * 16 * 7);
  CHECK(c.conv_iterations == 7 * 7 * 16 * 16);
  CHECK(c.macs == 7LL * 7 * 512 * 512);
  CHECK(c.weight_bytes == 512 * 512 / 2);
  CHECK(c.fill_cycles == 0);

  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    CostModelParams q;
    q.cycles_per_ic_iter = rng.range(7, 38);
    const int h = rng.range(1, 30), ic = rng.range(1, 600), oc = rng.range(1, 600);
    const auto cc = cost_call(single_call(conv_layer(h, ic, oc)), q, 1);
    REQUIRE(cc.cycles ==
            static_cast<std::int64_t>(h) * h * ((ic + 31) / 32) * ((oc + 31) / 32) * q.cycles_per_ic_iter);
  }
}

TEST_CASE("weight prefetch amortizes over the batch") {
  const CostModelParams p;
  const auto call = single_call(conv_layer(7, 512, 1024));
  const auto b1 = cost_call(call, p, 1);
  const auto b16 = cost_call(call, p, 16);
  CHECK(b16.seconds < 16 * b1.seconds);
  CHECK(b16.seconds / 16 < b1.seconds);
}

TEST_CASE("frame rate is monotone and saturates") {
  const auto spec = net::build_diracdeltanet();
  const auto r = estimate_cycles(spec, CostModelParams{}, 16);
  REQUIRE(r.batch_sweep.size() == 5u);
  for (std::size_t i = 1; i < r.batch_sweep.size(); ++i) CHECK(r.batch_sweep[i].fps >= r.batch_sweep[i - 1].fps);
  const double ratio = r.batch_sweep.back().fps / r.batch_sweep.front().fps;
  CHECK(std::isfinite(ratio));
  CHECK(ratio > 1.0);
  // gains shrink as batch grows
  CHECK(r.batch_sweep[4].fps - r.batch_sweep[3].fps < r.batch_sweep[1].fps - r.batch_sweep[0].fps);
  CHECK(r.fps == doctest::Approx(r.batch_sweep.back().fps));
  CHECK_THROWS_AS(estimate_cycles(spec, CostModelParams{}, 0), DomainError);
}

TEST_CASE("block breakdown: shuffle costs more on the large map") {
  const auto r = estimate_cycles(net::build_diracdeltanet(), CostModelParams{}, 16);
  CHECK(r.block1 == "stage2.block1");
  CHECK(r.block2 == "stage4.block3");
  REQUIRE(r.blocks.size() == 5u);
  const auto& conv = r.blocks[0];
  const auto& shuffle = r.blocks[3];
  CHECK(conv.config == "conv only");
  CHECK(r.blocks[1].config == "conv+pool");
  CHECK(r.blocks[2].config == "conv+shift");
  CHECK(shuffle.config == "conv+shuffle");
  CHECK(r.blocks[4].config == "overall");
  const double over1 = shuffle.block1_ms - conv.block1_ms;
  const double over2 = shuffle.block2_ms - conv.block2_ms;
  CHECK(over1 > over2);
  CHECK(over2 > 0.0);
  const double ratio = conv.block1_ms / conv.block2_ms;
  CHECK(ratio <= 2.0);
  CHECK(ratio >= 0.5);
  for (const auto& row : r.blocks) {
    CHECK(row.block1_ms >= conv.block1_ms);
    CHECK(row.block2_ms >= conv.block2_ms);
  }
}

TEST_CASE("host memcpy bytes track the feature map size") {
  const auto plan = plan_network(net::build_diracdeltanet());
  std::int64_t b28 = -1, b7 = -1;
  for (const auto& c : plan) {
    if (c.group == "stage2.block1" && c.host_memcpy_bytes > 0) b28 = c.host_memcpy_bytes;
    if (c.group == "stage4.block3" && c.host_memcpy_bytes > 0) b7 = c.host_memcpy_bytes;
  }
  CHECK(b28 == 28 * 28 * 64 / 2);
  CHECK(b7 == 7 * 7 * 256 / 2);
  CHECK(b28 == 4 * b7);
}

TEST_CASE("achieved throughput stays under both roofs") {
  Rng rng(7);
  for (int t = 0; t < 20; ++t) {
    const auto spec = net::build_network(testing::random_config(rng));
    CostModelParams p;
    p.cycles_per_ic_iter = rng.range(7, 38);
    const auto r = estimate_cycles(spec, p, rng.range(1, 16));
    for (const auto& row : r.roofline) {
      REQUIRE(row.achieved_gmacs <= row.roof.attainable_gmacs + 1e-9);
      REQUIRE(row.roof.attainable_gmacs <= 256.0);
      REQUIRE(row.roof.attainable_gmacs <= row.oc_total * 12.0);
    }
  }
  const auto r = estimate_cycles(net::build_diracdeltanet(), CostModelParams{}, 16);
  for (const auto& row : r.roofline) {
    CHECK(row.achieved_gmacs <= row.roof.attainable_gmacs);
    CHECK(row.roof.attainable_gmacs <= 256.0);
    CHECK(row.roof.attainable_gmacs <= row.oc_total * 12.0);
  }
}

TEST_CASE("first conv pads its three input channels to a full tile") {
  const auto r = estimate_cycles(net::build_diracdeltanet(), CostModelParams{}, 1);
  const auto& first = r.calls.front();
  CHECK(first.conv_iterations == 224LL * 224 * 1 * 1);
  const auto& row = r.roofline.front();
  CHECK(row.achieved_gmacs < 0.1 * row.roof.attainable_gmacs);
}

TEST_CASE("report renders as JSON and text") {
  const auto r = estimate_cycles(net::build_diracdeltanet(), CostModelParams{}, 16);
  const auto j = to_json(r);
  REQUIRE(j["batch_sweep"].size() == 5u);
  std::vector<int> batches;
  for (const auto& b : j["batch_sweep"]) batches.push_back(b["batch"].get<int>());
  CHECK(batches == std::vector<int>{1, 2, 4, 8, 16});
  CHECK(j["roofline"].size() == r.roofline.size());
  CHECK(j["roofline"][0]["compute_roof_gmacs"] == 256.0);
  CHECK(j["block_breakdown"]["rows"].size() == 5u);
  const auto text = to_text(r);
  CHECK(text.find("compute roof 256 GMAC/s = 512 GOP/s") != std::string::npos);
  CHECK(text.find("Batch sweep") != std::string::npos);
  CHECK(text.find("conv+shuffle") != std::string::npos);
  CHECK(text.find("stage2.block1") != std::string::npos);
  CHECK(to_text(r) == text);
}

TEST_CASE("memcpy rate calibration") {
  const auto samples = reference_memcpy_samples();
  REQUIRE(samples.size() == 2u);
  const double rate = calibrate_host_memcpy_rate(samples);
  CHECK(rate == doctest::Approx(8.769e7).epsilon(1e-3));
  CHECK(CostModelParams{}.host_memcpy_bytes_per_s == doctest::Approx(rate).epsilon(1e-3));
  const std::vector<MemcpySample> exact{{100.0, 1.0}, {300.0, 3.0}};
  CHECK(calibrate_host_memcpy_rate(exact) == doctest::Approx(100.0));
  CHECK_THROWS_AS(calibrate_host_memcpy_rate(std::vector<MemcpySample>{}), DomainError);
}

TEST_CASE("overlap hides host copies") {
  const auto spec = net::build_diracdeltanet();
  CostModelParams serial, hidden;
  hidden.memcpy_overlap = 1.0;
  const auto a = cost_network(spec, serial, 4);
  const auto b = cost_network(spec, hidden, 4);
  CHECK(a.memcpy_s > 0.0);
  CHECK(b.memcpy_s == 0.0);
  CHECK(b.total_s < a.total_s);
}
