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

#include "synetgy/accel/subgraph.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

#include "synetgy/errors.hpp"
#include "synetgy/ops.hpp"

namespace synetgy::accel {

void TileSchedule::validate() const {
  if (ic < 1 || ic > kMaxLanes || oc < 1 || oc > kMaxLanes) {
    throw ConfigError("tile sizes must lie in [1, 32], got IC=" + std::to_string(ic) +
                      " OC=" + std::to_string(oc));
  }
  if (fifo_capacity == 0) throw ConfigError("fifo capacity must be positive");
}

namespace {

// Weights as the on-chip buffer holds them: [oc block][ic block][OC][IC],
// zero padded to whole tiles.
struct TiledWeights {
  int ic = 0;
  int oc = 0;
  int ic_blocks = 0;
  int oc_blocks = 0;
  std::vector<std::int16_t> data;

  const std::int16_t* tile(int ob, int ib) const {
    return data.data() + (static_cast<std::size_t>(ob) * ic_blocks + ib) * oc * ic;
  }
};

template <class F>
TiledWeights prefetch(int oc_total, int ic_total, const TileSchedule& s, F weight) {
  TiledWeights t{s.ic, s.oc, s.ic_blocks(ic_total), s.oc_blocks(oc_total), {}};
  t.data.assign(static_cast<std::size_t>(t.oc_blocks) * t.ic_blocks * s.oc * s.ic, 0);
  for (int o = 0; o < oc_total; ++o)
    for (int i = 0; i < ic_total; ++i) {
      const int ob = o / s.oc, ib = i / s.ic;
      t.data[((static_cast<std::size_t>(ob) * t.ic_blocks + ib) * s.oc + o % s.oc) * s.ic +
             i % s.ic] = static_cast<std::int16_t>(weight(o, i));
    }
  return t;
}

struct ConvCounters {
  std::int64_t iterations = 0;
  Accumulator max_abs = 0;
};

Process loader(const FeatureMap& in, int begin, int count, int width, Fifo<PixelGroup>& out) {
  const auto codes = in.codes();
  const int blocks = (count + width - 1) / width;
  for (int y = 0; y < in.height(); ++y)
    for (int x = 0; x < in.width(); ++x)
      for (int b = 0; b < blocks; ++b) {
        PixelGroup g{y, x, b, {}};
        for (int l = 0; l < width && b * width + l < count; ++l)
          g.codes[l] = codes[in.index(y, x, begin + b * width + l)];
        co_await out.write(g);
      }
}

// Output stationary: one pixel's OC_TOTAL partial sums stay in the register
// file while its IC groups stream past.
Process conv_engine(const TiledWeights& w, std::int64_t pixels, Fifo<PixelGroup>& in,
                    Fifo<AccGroup>& out, ConvCounters& counters) {
  std::vector<std::array<Accumulator, kMaxLanes>> psum(static_cast<std::size_t>(w.oc_blocks));
  for (std::int64_t p = 0; p < pixels; ++p) {
    for (auto& r : psum) r.fill(0);
    int y = 0, x = 0;
    for (int ib = 0; ib < w.ic_blocks; ++ib) {
      PixelGroup g = co_await in.read();
      y = g.y;
      x = g.x;
      for (int ob = 0; ob < w.oc_blocks; ++ob) {
        const std::int16_t* t = w.tile(ob, ib);
        auto& r = psum[static_cast<std::size_t>(ob)];
        for (int o = 0; o < w.oc; ++o) {
          Accumulator acc = r[o];
          for (int i = 0; i < w.ic; ++i) acc += t[o * w.ic + i] * g.codes[i];
          r[o] = acc;
        }
        ++counters.iterations;
      }
    }
    for (int ob = 0; ob < w.oc_blocks; ++ob) {
      AccGroup a{y, x, ob, psum[static_cast<std::size_t>(ob)]};
      for (auto v : a.acc) counters.max_abs = std::max(counters.max_abs, std::abs(v));
      co_await out.write(a);
    }
  }
}

Process conversion(const quant::ThresholdTable& table, std::int64_t groups, Fifo<AccGroup>& in,
                   Fifo<PixelGroup>& out) {
  for (std::int64_t n = 0; n < groups; ++n) {
    AccGroup a = co_await in.read();
    PixelGroup g{a.y, a.x, a.block, {}};
    for (int l = 0; l < kMaxLanes; ++l) g.codes[l] = conversion_unit(a.acc[l], table);
    co_await out.write(g);
  }
}

Process pool_unit(int height, int width, int blocks, Fifo<PixelGroup>& in,
                  Fifo<PixelGroup>& out, SubgraphStats& stats) {
  std::vector<PoolLineBuffer> lanes(static_cast<std::size_t>(blocks), PoolLineBuffer(height, width));
  const std::int64_t groups = static_cast<std::int64_t>(height) * width * blocks;
  for (std::int64_t n = 0; n < groups; ++n) {
    PixelGroup g = co_await in.read();
    auto& lb = lanes[static_cast<std::size_t>(g.block)];
    if (auto o = lb.push(g.codes)) co_await out.write(PixelGroup{o->y, o->x, g.block, o->codes});
  }
  for (const auto& lb : lanes) {
    stats.pool_max_occupancy = std::max(stats.pool_max_occupancy, lb.max_occupancy());
    stats.pool_cycles = std::max(stats.pool_cycles, lb.cycles());
  }
}

Process shift_unit(int height, int width, int blocks, int lane_width, Fifo<PixelGroup>& in,
                   Fifo<PixelGroup>& out, SubgraphStats& stats) {
  std::vector<ShiftLineBuffer> lanes;
  for (int b = 0; b < blocks; ++b) {
    std::vector<ops::Shift> dirs;
    for (int l = 0; l < lane_width; ++l) dirs.push_back(ops::shift_for_channel(b * lane_width + l));
    lanes.emplace_back(height, width, std::move(dirs));
  }
  const std::int64_t groups = static_cast<std::int64_t>(height) * width * blocks;
  std::vector<ShiftLineBuffer::Output> ready;
  for (std::int64_t n = 0; n < groups; ++n) {
    PixelGroup g = co_await in.read();
    ready.clear();
    lanes[static_cast<std::size_t>(g.block)].push(g.codes, ready);
    for (const auto& o : ready) co_await out.write(PixelGroup{o.y, o.x, g.block, o.codes});
  }
  for (const auto& lb : lanes) {
    stats.shift_max_occupancy = std::max(stats.shift_max_occupancy, lb.max_occupancy());
    stats.shift_cycles = std::max(stats.shift_cycles, lb.cycles());
  }
}

struct WritebackTarget {
  int channels = 0;
  int lane_width = 0;
  std::vector<Code>* plain = nullptr;  // HxWxC, used without a shuffle target
  int plain_width = 0;
  PlacedBuffer* placed = nullptr;
  ShuffleTarget shuffle;
};

Process writeback(const WritebackTarget& t, std::int64_t groups, Fifo<PixelGroup>& in) {
  for (std::int64_t n = 0; n < groups; ++n) {
    PixelGroup g = co_await in.read();
    for (int l = 0; l < t.lane_width; ++l) {
      const int c = g.block * t.lane_width + l;
      if (c >= t.channels) break;
      if (t.placed != nullptr) {
        t.placed->set(g.y, g.x,
                      ops::shuffle_destination(t.shuffle.branch_offset + c, t.shuffle.total_channels),
                      g.codes[l]);
      } else {
        (*t.plain)[(static_cast<std::size_t>(g.y) * t.plain_width + g.x) * t.channels + c] =
            g.codes[l];
      }
    }
  }
}

Process acc_sink(std::int64_t groups, int lane_width, int channels, Fifo<AccGroup>& in,
                 std::vector<Accumulator>& out) {
  for (std::int64_t n = 0; n < groups; ++n) {
    AccGroup a = co_await in.read();
    for (int l = 0; l < lane_width && a.block * lane_width + l < channels; ++l)
      out[static_cast<std::size_t>(a.block * lane_width + l)] = a.acc[l];
  }
}

std::size_t high_water(const ProcessNetwork& net) {
  std::size_t hw = 0;
  for (const auto& c : net.channels()) hw = std::max(hw, c->high_water());
  return hw;
}

}  // namespace

SubgraphResult run_subgraph(const FeatureMap& in, const SubgraphSpec& spec,
                            const TileSchedule& schedule, SchedulerKind scheduler,
                            PlacedBuffer* placed) {
  schedule.validate();
  const int begin = spec.in_channel_begin;
  const int count = spec.in_channel_count < 0 ? in.channels() - begin : spec.in_channel_count;
  if (begin < 0 || count <= 0 || begin + count > in.channels()) {
    throw ConfigError(spec.name + ": channel window [" + std::to_string(begin) + ", " +
                      std::to_string(begin + count) + ") outside " +
                      std::to_string(in.channels()) + " input channels");
  }
  if (spec.weights != nullptr) {
    if (spec.weights->in_channels() != count) {
      throw ConfigError(spec.name + ": weights expect " +
                        std::to_string(spec.weights->in_channels()) + " input channels, stream has " +
                        std::to_string(count));
    }
    if (spec.table == nullptr) throw ConfigError(spec.name + ": conv without a threshold table");
  }
  if ((spec.pool || spec.shift) && in.height() * in.width() == 0) {
    throw ConfigError(spec.name + ": empty feature map");
  }

  const int channels = spec.weights != nullptr ? spec.weights->out_channels() : count;
  const int lane_width = spec.weights != nullptr ? schedule.oc : schedule.ic;
  const int blocks = (channels + lane_width - 1) / lane_width;
  const int out_h = spec.pool ? in.height() / 2 : in.height();
  const int out_w = spec.pool ? in.width() / 2 : in.width();

  if (spec.shuffle) {
    const auto& s = *spec.shuffle;
    if (placed == nullptr) throw ConfigError(spec.name + ": shuffle target without an output buffer");
    if (placed->height() != out_h || placed->width() != out_w ||
        placed->channels() != s.total_channels || s.branch_offset < 0 ||
        s.branch_offset + channels > s.total_channels) {
      throw ConfigError(spec.name + ": branch does not fit the shuffled output buffer");
    }
  }

  SubgraphResult result;
  auto& st = result.stats;
  ProcessNetwork net;
  const std::size_t cap = schedule.fifo_capacity;

  auto& loaded = net.make_fifo<PixelGroup>(spec.name + ".load", cap);
  net.spawn("loader", loader(in, begin, count, schedule.ic, loaded));
  Fifo<PixelGroup>* stream = &loaded;

  TiledWeights tiled;
  ConvCounters counters;
  const std::int64_t pixels = static_cast<std::int64_t>(in.height()) * in.width();
  if (spec.weights != nullptr) {
    const auto& w = *spec.weights;
    tiled = prefetch(w.out_channels(), w.in_channels(), schedule,
                     [&](int o, int i) { return w.effective(o, i); });
    auto& accs = net.make_fifo<AccGroup>(spec.name + ".acc", cap);
    auto& codes = net.make_fifo<PixelGroup>(spec.name + ".act", cap);
    net.spawn("conv", conv_engine(tiled, pixels, *stream, accs, counters));
    net.spawn("conversion", conversion(*spec.table, pixels * blocks, accs, codes));
    stream = &codes;
    st.weight_bytes = static_cast<std::int64_t>(packed_size(w.codes().size()));
    st.macs = pixels * w.out_channels() * w.in_channels();
  }
  if (spec.pool) {
    auto& pooled = net.make_fifo<PixelGroup>(spec.name + ".pool", cap);
    net.spawn("pool", pool_unit(in.height(), in.width(), blocks, *stream, pooled, st));
    stream = &pooled;
  }
  if (spec.shift) {
    auto& shifted = net.make_fifo<PixelGroup>(spec.name + ".shift", cap);
    net.spawn("shift", shift_unit(out_h, out_w, blocks, lane_width, *stream, shifted, st));
    stream = &shifted;
  }

  std::vector<Code> plain;
  WritebackTarget target{channels, lane_width, nullptr, out_w, nullptr, {}};
  if (spec.shuffle) {
    target.placed = placed;
    target.shuffle = *spec.shuffle;
  } else {
    plain.assign(static_cast<std::size_t>(out_h) * out_w * channels, 0);
    target.plain = &plain;
  }
  net.spawn("writeback",
            writeback(target, static_cast<std::int64_t>(out_h) * out_w * blocks, *stream));

  net.run(scheduler);

  st.conv_iterations = counters.iterations;
  st.max_abs_acc = counters.max_abs;
  st.dram_read_bytes = static_cast<std::int64_t>(packed_size(static_cast<std::size_t>(pixels) * count));
  st.dram_write_bytes =
      static_cast<std::int64_t>(packed_size(static_cast<std::size_t>(out_h) * out_w * channels));
  st.fifo_high_water = high_water(net);
  if (!spec.shuffle) result.output = FeatureMap(out_h, out_w, channels, plain);
  return result;
}

FcResult run_fc_bit_serial(std::span<const Code> in, const WeightMatrix& w,
                           const TileSchedule& schedule, SchedulerKind scheduler) {
  schedule.validate();
  if (in.size() != static_cast<std::size_t>(w.in_channels())) {
    throw ConfigError("fc: input length " + std::to_string(in.size()) + " != weight columns " +
                      std::to_string(w.in_channels()));
  }
  const FeatureMap vec(1, 1, w.in_channels(), in);
  const int oc_total = w.out_channels();
  FcResult r;
  r.acc.assign(static_cast<std::size_t>(oc_total), 0);
  for (int bit = 0; bit < 4; ++bit) {
    const auto plane = prefetch(oc_total, w.in_channels(), schedule,
                                [&](int o, int i) { return (w.code(o, i) >> bit) & 1; });
    ProcessNetwork net;
    ConvCounters counters;
    std::vector<Accumulator> partial(static_cast<std::size_t>(oc_total), 0);
    auto& loaded = net.make_fifo<PixelGroup>("fc.load", schedule.fifo_capacity);
    auto& accs = net.make_fifo<AccGroup>("fc.acc", schedule.fifo_capacity);
    net.spawn("loader", loader(vec, 0, w.in_channels(), schedule.ic, loaded));
    net.spawn("conv", conv_engine(plane, 1, loaded, accs, counters));
    net.spawn("sink", acc_sink(plane.oc_blocks, schedule.oc, oc_total, accs, partial));
    net.run(scheduler);
    for (std::size_t o = 0; o < partial.size(); ++o) r.acc[o] += partial[o] << bit;
    r.stats.conv_iterations += counters.iterations;
    r.stats.max_abs_acc = std::max(r.stats.max_abs_acc, counters.max_abs);
    r.stats.fifo_high_water = std::max(r.stats.fifo_high_water, high_water(net));
    r.stats.dram_read_bytes += static_cast<std::int64_t>(packed_size(in.size()));
  }
  Accumulator input_sum = 0;
  for (auto a : in) input_sum += a;
  for (auto& a : r.acc) a = 2 * a - 15 * input_sum;  // host side: 2*code - 15
  r.stats.weight_bytes = static_cast<std::int64_t>(packed_size(w.codes().size()));
  r.stats.macs = static_cast<std::int64_t>(oc_total) * w.in_channels();
  r.stats.dram_write_bytes = static_cast<std::int64_t>(oc_total) * 4;
  return r;
}

}  // namespace synetgy::accel
