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

#include "synetgy/accel/cost.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "synetgy/errors.hpp"
#include "synetgy/io.hpp"

namespace synetgy::accel {

void CostModelParams::validate() const {
  if (cycles_per_ic_iter < 7 || cycles_per_ic_iter > 38) {
    throw ConfigError("cycles_per_ic_iter must lie in [7, 38], got " +
                      std::to_string(cycles_per_ic_iter));
  }
  auto positive = [](double v, const char* key) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(key) + " must be positive");
  };
  positive(clock_hz, "clock_hz");
  positive(dram_bandwidth, "dram_bandwidth");
  positive(host_memcpy_bytes_per_s, "host_memcpy_bytes_per_s");
  positive(host_ops_per_s, "host_ops_per_s");
  if (!(invocation_overhead_s >= 0.0)) throw ConfigError("invocation_overhead_s must be >= 0");
  if (!(memcpy_overlap >= 0.0 && memcpy_overlap <= 1.0)) {
    throw ConfigError("memcpy_overlap must lie in [0, 1]");
  }
  TileSchedule{ic, oc}.validate();
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& key, const std::string& v, int line) {
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) {
    throw ConfigError("cost config line " + std::to_string(line) + ": " + key +
                      " needs a number, got '" + v + "'");
  }
  return d;
}

int parse_int(const std::string& key, const std::string& v, int line) {
  int n = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
  if (ec != std::errc{} || p != v.data() + v.size()) {
    throw ConfigError("cost config line " + std::to_string(line) + ": " + key +
                      " needs an integer, got '" + v + "'");
  }
  return n;
}

}  // namespace

CostModelParams parse_cost_config(std::string_view text) {
  CostModelParams p;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    const auto body = trim(raw);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("cost config line " + std::to_string(line) + ": expected key = value");
    }
    const auto key = trim(std::string_view(body).substr(0, eq));
    const auto val = trim(std::string_view(body).substr(eq + 1));
    if (key == "cycles_per_ic_iter") p.cycles_per_ic_iter = parse_int(key, val, line);
    else if (key == "clock_hz") p.clock_hz = parse_double(key, val, line);
    else if (key == "dram_bandwidth") p.dram_bandwidth = parse_double(key, val, line);
    else if (key == "invocation_overhead_s") p.invocation_overhead_s = parse_double(key, val, line);
    else if (key == "host_memcpy_bytes_per_s") p.host_memcpy_bytes_per_s = parse_double(key, val, line);
    else if (key == "host_ops_per_s") p.host_ops_per_s = parse_double(key, val, line);
    else if (key == "memcpy_overlap") p.memcpy_overlap = parse_double(key, val, line);
    else if (key == "ic") p.ic = parse_int(key, val, line);
    else if (key == "oc") p.oc = parse_int(key, val, line);
    else throw ConfigError("cost config line " + std::to_string(line) + ": unknown key '" + key + "'");
  }
  p.validate();
  return p;
}

CostModelParams load_cost_config(const std::filesystem::path& path) {
  return parse_cost_config(io::read_text(path));
}

double calibrate_host_memcpy_rate(std::span<const MemcpySample> samples) {
  double bb = 0.0, bt = 0.0;
  for (const auto& s : samples) {
    bb += s.bytes * s.bytes;
    bt += s.bytes * s.seconds;
  }
  if (!(bt > 0.0)) throw DomainError("memcpy calibration needs a sample with positive time");
  return bb / bt;
}

std::vector<MemcpySample> reference_memcpy_samples() {
  // bytes = 10 frames * H * W * (C / 2) / 2; seconds = conv+shuffle - conv only
  return {{10.0 * 28 * 28 * 64 / 2, 4.409e-3 - 1.531e-3},
          {10.0 * 7 * 7 * 256 / 2, 1.636e-3 - 0.989e-3}};
}

const char* to_string(Bound b) { return b == Bound::compute ? "compute" : "memory"; }

RooflinePoint roofline(int oc_total, const CostModelParams& params) {
  if (oc_total < 1) throw DomainError("roofline needs OC_TOTAL >= 1");
  RooflinePoint r;
  r.compute_gmacs = static_cast<double>(params.ic) * params.oc * params.clock_hz / 1e9;
  r.memory_gmacs = static_cast<double>(oc_total) * 2.0 * params.dram_bandwidth / 1e9;
  r.bound = r.memory_gmacs < r.compute_gmacs ? Bound::memory : Bound::compute;
  r.attainable_gmacs = std::min(r.compute_gmacs, r.memory_gmacs);
  return r;
}

namespace {

struct Work {
  std::int64_t iterations = 0;
  std::int64_t cycles = 0;
  std::int64_t fill = 0;
  std::int64_t macs = 0;
  std::int64_t io_bytes = 0;
  std::int64_t weight_bytes = 0;
};

std::int64_t packed(std::int64_t n) { return static_cast<std::int64_t>(packed_size(static_cast<std::size_t>(n))); }

Work call_work(const CallPlan& call, const CostModelParams& p) {
  const TileSchedule s{p.ic, p.oc};
  const auto& g = call.segment;
  Work w;
  if (call.fc) {
    w.iterations = 4LL * s.ic_blocks(g.in_channels) * s.oc_blocks(g.out_channels);
    w.cycles = w.iterations * p.cycles_per_ic_iter;
    w.macs = static_cast<std::int64_t>(g.in_channels) * g.out_channels;
    w.io_bytes = 4 * packed(g.in_channels) + 4LL * g.out_channels;
    w.weight_bytes = packed(static_cast<std::int64_t>(g.in_channels) * g.out_channels);
    return w;
  }
  const std::int64_t in_px = static_cast<std::int64_t>(g.in_height) * g.in_width;
  if (g.conv != nullptr) {
    w.iterations = s.conv_iterations(g.in_height, g.in_width, g.in_channels, g.conv->out_channels);
    w.cycles = w.iterations * p.cycles_per_ic_iter;
    w.macs = in_px * g.in_channels * g.conv->out_channels;
    w.weight_bytes = packed(static_cast<std::int64_t>(g.in_channels) * g.conv->out_channels);
  } else {
    w.cycles = in_px * s.ic_blocks(g.in_channels);  // one group per cycle through the line buffers
  }
  if (g.pool) w.fill += g.in_width + 1;
  if (g.shift) w.fill += 2 * (g.out_width + 2) + 2;
  w.io_bytes = packed(in_px * g.in_channels) +
               packed(static_cast<std::int64_t>(g.out_height) * g.out_width * g.out_channels);
  return w;
}

double call_seconds(const Work& w, const CostModelParams& p, int batch) {
  const double compute = static_cast<double>(batch) * static_cast<double>(w.cycles + w.fill) / p.clock_hz;
  const double transfer = static_cast<double>(batch) * static_cast<double>(w.io_bytes) / p.dram_bandwidth;
  return p.invocation_overhead_s + static_cast<double>(w.weight_bytes) / p.dram_bandwidth +
         std::max(compute, transfer);
}

double memcpy_seconds(std::int64_t bytes, const CostModelParams& p, int batch) {
  return (1.0 - p.memcpy_overlap) * static_cast<double>(batch) * static_cast<double>(bytes) /
         p.host_memcpy_bytes_per_s;
}

double host_seconds(const net::NetworkSpec& spec, const CostModelParams& p, int batch) {
  const auto& gp = spec.global_pool;
  const double ops = static_cast<double>(gp.in_height) * gp.in_width * gp.in_channels +
                     2.0 * spec.fc.out_channels;  // average pool, FC fix-up
  return static_cast<double>(batch) * ops / p.host_ops_per_s;
}

void check_batch(int batch) {
  if (batch < 1) throw DomainError("batch must be >= 1, got " + std::to_string(batch));
}

}  // namespace

CallCost cost_call(const CallPlan& call, const CostModelParams& params, int batch) {
  check_batch(batch);
  const auto w = call_work(call, params);
  CallCost c;
  c.name = call.segment.name();
  c.group = call.group;
  c.conv_iterations = w.iterations;
  c.cycles = w.cycles;
  c.fill_cycles = w.fill;
  c.macs = w.macs;
  c.io_bytes = w.io_bytes;
  c.weight_bytes = w.weight_bytes;
  c.memcpy_bytes = call.host_memcpy_bytes;
  c.seconds = call_seconds(w, params, batch);
  c.memcpy_seconds = memcpy_seconds(call.host_memcpy_bytes, params, batch);
  return c;
}

BatchCost cost_network(const net::NetworkSpec& spec, const CostModelParams& params, int batch) {
  check_batch(batch);
  params.validate();
  BatchCost b;
  for (const auto& call : plan_network(spec)) {
    const auto c = cost_call(call, params, batch);
    b.accelerator_s += c.seconds;
    b.overhead_s += params.invocation_overhead_s;
    b.memcpy_s += c.memcpy_seconds;
  }
  b.host_s = host_seconds(spec, params, batch);
  b.total_s = b.accelerator_s + b.memcpy_s + b.host_s;
  return b;
}

namespace {

constexpr int kBreakdownBatch = 10;

std::vector<BlockBreakdown> block_breakdown(const std::vector<CallPlan>& plan,
                                            const CostModelParams& p, const std::string& b1,
                                            const std::string& b2) {
  // seconds for one configuration of one block
  auto config = [&](const std::string& block, bool pool, bool shift, bool shuffle, bool overall) {
    double t = 0.0;
    for (const auto& call : plan) {
      if (call.group != block) continue;
      if (overall) {
        t += call_seconds(call_work(call, p), p, kBreakdownBatch) +
             memcpy_seconds(call.host_memcpy_bytes, p, kBreakdownBatch);
        continue;
      }
      if (call.segment.conv == nullptr) continue;
      CallPlan bare = call;
      bare.segment.pool = bare.segment.shift = false;
      auto w = call_work(bare, p);
      // the unit joins the pipeline after the conv; it costs its warm-up only
      if (pool) w.fill += call.segment.in_width + 1;
      if (shift) w.fill += 2 * (call.segment.in_width + 2) + 2;
      t += call_seconds(w, p, kBreakdownBatch);
      if (shuffle) t += memcpy_seconds(call.host_memcpy_bytes, p, kBreakdownBatch);
    }
    return t * 1e3;
  };
  std::vector<BlockBreakdown> rows;
  auto add = [&](const char* name, bool pool, bool shift, bool shuffle, bool overall) {
    rows.push_back({name, config(b1, pool, shift, shuffle, overall),
                    config(b2, pool, shift, shuffle, overall)});
  };
  add("conv only", false, false, false, false);
  add("conv+pool", true, false, false, false);
  add("conv+shift", false, true, false, false);
  add("conv+shuffle", false, false, true, false);
  add("overall", false, false, false, true);
  return rows;
}

}  // namespace

PerfReport estimate_cycles(const net::NetworkSpec& spec, const CostModelParams& params,
                           int batch) {
  check_batch(batch);
  params.validate();
  PerfReport r;
  r.params = params;
  r.batch = batch;
  const auto plan = plan_network(spec);
  for (const auto& call : plan) {
    auto c = cost_call(call, params, batch);
    r.accelerator_s += c.seconds;
    r.overhead_s += params.invocation_overhead_s;
    r.memcpy_s += c.memcpy_seconds;
    r.dram_bytes += c.io_bytes * batch + c.weight_bytes;
    r.memcpy_bytes += c.memcpy_bytes * batch;
    if (call.segment.conv != nullptr || call.fc) {
      RooflineRow row;
      row.name = c.name;
      row.oc_total = call.segment.out_channels;
      if (call.segment.conv != nullptr) row.oc_total = call.segment.conv->out_channels;
      row.roof = roofline(row.oc_total, params);
      row.achieved_gmacs = static_cast<double>(c.macs) * batch / c.seconds / 1e9;
      r.roofline.push_back(row);
    }
    r.calls.push_back(std::move(c));
  }
  r.host_s = host_seconds(spec, params, batch);
  r.total_s = r.accelerator_s + r.memcpy_s + r.host_s;
  r.fps = batch / r.total_s;

  for (int b : {1, 2, 4, 8, 16}) {
    const auto cost = cost_network(spec, params, b);
    r.batch_sweep.push_back({b, cost.total_s, b / cost.total_s});
  }

  std::vector<const net::BlockSpec*> basic;
  for (const auto& b : spec.blocks)
    if (b.kind == net::BlockKind::basic) basic.push_back(&b);
  if (!basic.empty()) {
    r.block1 = basic.front()->name;
    r.block2 = basic.back()->name;
    r.blocks = block_breakdown(plan, params, r.block1, r.block2);
  }
  return r;
}

nlohmann::json to_json(const PerfReport& r) {
  using nlohmann::json;
  const auto& p = r.params;
  json j;
  j["params"] = {{"cycles_per_ic_iter", p.cycles_per_ic_iter},
                 {"clock_hz", p.clock_hz},
                 {"dram_bandwidth", p.dram_bandwidth},
                 {"invocation_overhead_s", p.invocation_overhead_s},
                 {"host_memcpy_bytes_per_s", p.host_memcpy_bytes_per_s},
                 {"host_ops_per_s", p.host_ops_per_s},
                 {"memcpy_overlap", p.memcpy_overlap},
                 {"ic", p.ic},
                 {"oc", p.oc}};
  j["batch"] = r.batch;
  j["latency_s"] = {{"accelerator", r.accelerator_s},
                    {"invocation_overhead", r.overhead_s},
                    {"host_memcpy", r.memcpy_s},
                    {"host_compute", r.host_s},
                    {"total", r.total_s}};
  j["fps"] = r.fps;
  j["dram_bytes"] = r.dram_bytes;
  j["host_memcpy_bytes"] = r.memcpy_bytes;
  json calls = json::array();
  for (const auto& c : r.calls) {
    calls.push_back({{"name", c.name},
                     {"group", c.group},
                     {"conv_iterations", c.conv_iterations},
                     {"cycles", c.cycles},
                     {"fill_cycles", c.fill_cycles},
                     {"macs", c.macs},
                     {"io_bytes", c.io_bytes},
                     {"weight_bytes", c.weight_bytes},
                     {"memcpy_bytes", c.memcpy_bytes},
                     {"seconds", c.seconds},
                     {"memcpy_seconds", c.memcpy_seconds}});
  }
  j["subgraphs"] = std::move(calls);
  json sweep = json::array();
  for (const auto& b : r.batch_sweep) sweep.push_back({{"batch", b.batch}, {"seconds", b.seconds}, {"fps", b.fps}});
  j["batch_sweep"] = std::move(sweep);
  json roof = json::array();
  for (const auto& row : r.roofline) {
    roof.push_back({{"name", row.name},
                    {"oc_total", row.oc_total},
                    {"compute_roof_gmacs", row.roof.compute_gmacs},
                    {"memory_roof_gmacs", row.roof.memory_gmacs},
                    {"attainable_gmacs", row.roof.attainable_gmacs},
                    {"achieved_gmacs", row.achieved_gmacs},
                    {"bound", to_string(row.roof.bound)}});
  }
  j["roofline"] = std::move(roof);
  json blocks = json::array();
  for (const auto& b : r.blocks) {
    blocks.push_back({{"config", b.config}, {"block1_ms", b.block1_ms}, {"block2_ms", b.block2_ms}});
  }
  j["block_breakdown"] = {{"batch", kBreakdownBatch},
                          {"block1", r.block1},
                          {"block2", r.block2},
                          {"rows", std::move(blocks)}};
  return j;
}

std::string to_text(const PerfReport& r) {
  std::ostringstream o;
  o << std::fixed;
  o << "batch " << r.batch << "  total " << std::setprecision(3) << r.total_s * 1e3
    << " ms  " << std::setprecision(2) << r.fps << " fps\n";
  o << "  accelerator " << std::setprecision(3) << r.accelerator_s * 1e3 << " ms (overhead "
    << r.overhead_s * 1e3 << " ms)  host memcpy " << r.memcpy_s * 1e3 << " ms  host compute "
    << r.host_s * 1e3 << " ms\n\n";

  o << "Batch sweep\n" << std::left << std::setw(8) << "batch" << std::right << std::setw(14)
    << "latency_ms" << std::setw(12) << "fps" << "\n";
  for (const auto& b : r.batch_sweep) {
    o << std::left << std::setw(8) << b.batch << std::right << std::setw(14) << std::setprecision(3)
      << b.seconds * 1e3 << std::setw(12) << std::setprecision(2) << b.fps << "\n";
  }

  if (!r.roofline.empty()) {
    const auto& roof = r.roofline.front().roof;
    o << "\nRoofline (compute roof " << std::setprecision(0) << roof.compute_gmacs << " GMAC/s = "
      << 2 * roof.compute_gmacs << " GOP/s)\n";
  }
  o << std::left << std::setw(34) << "layer" << std::right << std::setw(8) << "oc" << std::setw(12)
    << "compute" << std::setw(12) << "memory" << std::setw(12) << "attain" << std::setw(12)
    << "achieved" << std::setw(10) << "bound" << "\n";
  for (const auto& row : r.roofline) {
    o << std::left << std::setw(34) << row.name << std::right << std::setw(8) << row.oc_total
      << std::setprecision(1) << std::setw(12) << row.roof.compute_gmacs << std::setw(12)
      << row.roof.memory_gmacs << std::setw(12) << row.roof.attainable_gmacs << std::setw(12)
      << row.achieved_gmacs << std::setw(10) << to_string(row.roof.bound) << "\n";
  }

  if (!r.blocks.empty()) {
    o << "\nBlock breakdown, batch " << kBreakdownBatch << " (ms)\n";
    o << std::left << std::setw(16) << "" << std::right << std::setw(22) << r.block1
      << std::setw(22) << r.block2 << "\n";
    for (const auto& b : r.blocks) {
      o << std::left << std::setw(16) << b.config << std::right << std::setprecision(3)
        << std::setw(22) << b.block1_ms << std::setw(22) << b.block2_ms << "\n";
    }
  }

  o << "\nSubgraphs\n" << std::left << std::setw(34) << "name" << std::right << std::setw(12)
    << "iters" << std::setw(12) << "cycles" << std::setw(10) << "fill" << std::setw(12)
    << "io_bytes" << std::setw(12) << "memcpy_B" << std::setw(12) << "ms" << "\n";
  for (const auto& c : r.calls) {
    o << std::left << std::setw(34) << c.name << std::right << std::setw(12) << c.conv_iterations
      << std::setw(12) << c.cycles << std::setw(10) << c.fill_cycles << std::setw(12)
      << c.io_bytes << std::setw(12) << c.memcpy_bytes << std::setw(12) << std::setprecision(4)
      << (c.seconds + c.memcpy_seconds) * 1e3 << "\n";
  }
  return o.str();
}

}  // namespace synetgy::accel
