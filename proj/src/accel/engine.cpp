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

#include "synetgy/accel/engine.hpp"

#include <algorithm>
#include <string>

#include "synetgy/errors.hpp"
#include "synetgy/ops.hpp"

namespace synetgy::accel {

std::vector<Segment> segment_chain(std::span<const net::LayerSpec> layers) {
  std::vector<Segment> out;
  for (const auto& l : layers) {
    switch (l.kind) {
      case net::LayerKind::conv1x1:
        out.emplace_back();
        out.back().conv = &l;
        break;
      case net::LayerKind::maxpool:
      case net::LayerKind::shift: {
        // a pool after a shift, or a second pool or shift, starts a new call
        const bool fits = !out.empty() && !out.back().shift &&
                          !(l.kind == net::LayerKind::maxpool && out.back().pool);
        if (!fits) out.emplace_back();
        (l.kind == net::LayerKind::maxpool ? out.back().pool : out.back().shift) = true;
        break;
      }
      default:
        throw GraphError("layer " + l.name + " (" + net::to_string(l.kind) +
                         ") cannot run as an accelerator subgraph");
    }
    auto& s = out.back();
    if (s.layers.empty()) {
      s.in_height = l.in_height;
      s.in_width = l.in_width;
      s.in_channels = l.in_channels;
    }
    s.layers.push_back(l.name);
    s.out_height = l.out_height;
    s.out_width = l.out_width;
    s.out_channels = l.out_channels;
  }
  return out;
}

namespace {

void append_chain(std::vector<CallPlan>& plan, const std::string& group,
                  std::span<const net::LayerSpec> layers, int in_channel_begin,
                  std::optional<ShuffleTarget> last_target) {
  auto segs = segment_chain(layers);
  for (std::size_t i = 0; i < segs.size(); ++i) {
    CallPlan c;
    c.group = group;
    c.segment = std::move(segs[i]);
    if (i == 0) c.in_channel_begin = in_channel_begin;
    if (i + 1 == segs.size()) c.shuffle = last_target;
    plan.push_back(std::move(c));
  }
}

}  // namespace

std::vector<CallPlan> plan_network(const net::NetworkSpec& spec) {
  std::vector<CallPlan> plan;
  append_chain(plan, "stem", spec.stem, 0, std::nullopt);
  for (const auto& b : spec.blocks) {
    const int total = b.out_channels;
    const int out_hw = b.kind == net::BlockKind::basic ? b.spatial : b.spatial / 2;
    if (b.kind == net::BlockKind::basic) {
      const int half = b.in_channels / 2;
      append_chain(plan, b.name, b.residual, half, ShuffleTarget{total, half});
      plan.back().host_memcpy_bytes =
          static_cast<std::int64_t>(packed_size(static_cast<std::size_t>(out_hw) * out_hw * half));
    } else {
      const int skip_c = b.skip.back().out_channels;
      append_chain(plan, b.name, b.skip, 0, ShuffleTarget{total, 0});
      append_chain(plan, b.name, b.residual, 0, ShuffleTarget{total, skip_c});
    }
  }
  append_chain(plan, "conv5", std::span(&spec.conv5, 1), 0, std::nullopt);
  CallPlan fc;
  fc.group = "fc";
  fc.fc = true;
  fc.segment.layers = {spec.fc.name};
  fc.segment.in_height = fc.segment.in_width = 1;
  fc.segment.out_height = fc.segment.out_width = 1;
  fc.segment.in_channels = spec.fc.in_channels;
  fc.segment.out_channels = spec.fc.out_channels;
  plan.push_back(std::move(fc));
  return plan;
}

namespace {

class Runner {
 public:
  Runner(const net::ModelBundle& b, SchedulerKind k, const TileSchedule& s)
      : bundle_(b), kind_(k), schedule_(s) {}

  // Runs a branch starting from `in`. The last call either returns its map or
  // writes into `placed`.
  FeatureMap chain(const std::string& group, std::span<const net::LayerSpec> layers,
                   const FeatureMap& in, int begin, int count,
                   std::optional<ShuffleTarget> target, PlacedBuffer* placed) {
    auto segs = segment_chain(layers);
    FeatureMap x = in;
    for (std::size_t i = 0; i < segs.size(); ++i) {
      const auto& seg = segs[i];
      const bool last = i + 1 == segs.size();
      SubgraphSpec spec;
      spec.name = seg.name();
      if (seg.conv != nullptr) {
        const auto& p = bundle_.conv(seg.conv->name);
        spec.weights = &p.weights;
        spec.table = &p.table;
      }
      if (i == 0) {
        spec.in_channel_begin = begin;
        spec.in_channel_count = count;
      }
      spec.pool = seg.pool;
      spec.shift = seg.shift;
      if (last) spec.shuffle = target;
      auto r = run_subgraph(x, spec, schedule_, kind_, last && target ? placed : nullptr);
      record(spec.name, group, r.stats);
      x = std::move(r.output);
    }
    return x;
  }

  void record(const std::string& name, const std::string& group, const SubgraphStats& st) {
    result.calls.push_back({name, group, st});
    result.max_abs_acc = std::max(result.max_abs_acc, st.max_abs_acc);
  }

  SimulationResult result;

 private:
  const net::ModelBundle& bundle_;
  SchedulerKind kind_;
  TileSchedule schedule_;
};

}  // namespace

SimulationResult simulate_forward(const net::ModelBundle& bundle, const FeatureMap& input,
                                  SchedulerKind scheduler, const TileSchedule& schedule) {
  const auto& cfg = bundle.spec.config;
  if (input.height() != cfg.input_size || input.width() != cfg.input_size ||
      input.channels() != cfg.input_channels) {
    throw ShapeError("input is " + std::to_string(input.height()) + "x" +
                     std::to_string(input.width()) + "x" + std::to_string(input.channels()) +
                     ", network expects " + std::to_string(cfg.input_size) + "x" +
                     std::to_string(cfg.input_size) + "x" + std::to_string(cfg.input_channels));
  }
  Runner run(bundle, scheduler, schedule);
  FeatureMap x = run.chain("stem", bundle.spec.stem, input, 0, -1, std::nullopt, nullptr);
  for (const auto& b : bundle.spec.blocks) {
    const int out_hw = b.kind == net::BlockKind::basic ? b.spatial : b.spatial / 2;
    PlacedBuffer placed(out_hw, out_hw, b.out_channels);
    if (b.kind == net::BlockKind::basic) {
      const int half = x.channels() / 2;
      run.chain(b.name, b.residual, x, half, half, ShuffleTarget{b.out_channels, half}, &placed);
      run.result.host_memcpy_bytes +=
          shuffle_writeback(placed, ops::slice_channels(x, 0, half), 0);
    } else {
      const int skip_c = b.skip.back().out_channels;
      run.chain(b.name, b.skip, x, 0, -1, ShuffleTarget{b.out_channels, 0}, &placed);
      run.chain(b.name, b.residual, x, 0, -1, ShuffleTarget{b.out_channels, skip_c}, &placed);
    }
    x = placed.to_feature_map();
  }
  x = run.chain("conv5", std::span(&bundle.spec.conv5, 1), x, 0, -1, std::nullopt, nullptr);

  const auto pooled = net::pooled_codes(x, bundle.net);  // host
  auto fc = run_fc_bit_serial(pooled, bundle.fc, schedule, scheduler);
  run.record(bundle.spec.fc.name, "fc", fc.stats);
  auto r = std::move(run.result);
  r.logits = net::logits_from_accumulators(fc.acc, bundle);
  r.top1 = net::argmax(r.logits);
  return r;
}

}  // namespace synetgy::accel
