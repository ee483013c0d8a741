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

// Acceptance suite: one line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "support.hpp"
#include "synetgy/accel/cost.hpp"
#include "synetgy/accel/engine.hpp"
#include "synetgy/accel/subgraph.hpp"
#include "synetgy/accel/units.hpp"
#include "synetgy/net.hpp"
#include "synetgy/ops.hpp"
#include "synetgy/quant.hpp"

using namespace synetgy;

namespace {

// Collects failed checks for one criterion.
struct Check {
  std::vector<std::string> failures;
  std::ostringstream note;

  void expect(bool ok, const std::string& what) {
    if (!ok && failures.size() < 5) failures.push_back(what);
    if (!ok && failures.size() == 5) failures.emplace_back("...");
  }
};

bool run_criterion(int id, const char* title, double limit_s, const std::function<void(Check&)>& body) {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.failures.push_back(std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > limit_s) {
    std::ostringstream o;
    o << "runtime " << secs << " s over the " << limit_s << " s limit";
    c.failures.push_back(o.str());
  }
  const bool ok = c.failures.empty();
  std::printf("criterion %d %s  %-36s %8.3f s (limit %g s)  %s\n", id, ok ? "PASS" : "FAIL", title, secs,
              limit_s, c.note.str().c_str());
  for (const auto& f : c.failures) std::printf("    - %s\n", f.c_str());
  std::fflush(stdout);
  return ok;
}

quant::ThresholdTable random_table(Rng& rng, int ic) {
  const quant::NetworkQuantParams net{rng.uniform(0.5, 3.0), 4, 4};
  const double ws = 1.0 / 15.0;
  const double f = ws * net.s / 15.0;
  // alpha spans between 15 and ~ic*100 accumulator steps
  const double lo = std::log(16.0 * f), hi = std::log(std::max(32.0, 100.0 * ic) * f);
  return quant::build_threshold_table({std::exp(rng.uniform(lo, hi)), ws}, net);
}

// ---------------------------------------------------------------------------

void structure_counts(Check& c) {
  const auto spec = net::build_diracdeltanet();
  net::check_shape_chain(spec);
  const auto counts = net::count_params_macs(spec);
  const auto stem = counts.subtotal("stem");
  c.expect(stem.params == 2144, "stem params " + std::to_string(stem.params) + " != 2144");
  c.expect(std::abs(stem.macs - 30.5e6) <= 0.1e6, "stem MACs " + std::to_string(stem.macs));
  c.expect(std::abs(counts.params - 3.3e6) <= 0.02 * 3.3e6, "params " + std::to_string(counts.params));
  c.expect(std::abs(counts.macs - 330e6) <= 0.02 * 330e6, "MACs " + std::to_string(counts.macs));
  c.note.precision(4);
  c.note << "stem " << stem.params << " params / " << stem.macs / 1e6 << "M MACs; total "
         << counts.params / 1e6 << "M params / " << counts.macs / 1e6 << "M MACs";
}

void roofline_arithmetic(Check& c) {
  const accel::CostModelParams d;
  const auto r = accel::roofline(512, d);
  c.expect(r.compute_gmacs == 256.0 && 2 * r.compute_gmacs == 512.0, "compute roof");
  c.expect(r.memory_gmacs == 6144.0 && 2 * r.memory_gmacs == 12288.0, "memory roof at OC_TOTAL=512");
  c.expect(r.attainable_gmacs == 256.0, "attainable = min");
  const auto s = accel::roofline(16, d);
  c.expect(s.memory_gmacs == 192.0 && s.bound == accel::Bound::memory, "OC_TOTAL=16 memory bound");
  c.note << "compute " << r.compute_gmacs << " GMAC/s (" << 2 * r.compute_gmacs << " GOP/s), memory@512 "
         << r.memory_gmacs << " GMAC/s (" << 2 * r.memory_gmacs << " GOP/s)";
}

void accumulator_limit(Check& c) {
  const quant::ThresholdTable t;
  const FeatureMap all_max(1, 1, 512, std::vector<Code>(512, 15));
  Accumulator worst = 0;
  for (Code wc : {Code{0}, Code{15}}) {
    const WeightMatrix w(4, 512, std::vector<Code>(2048, wc));
    accel::SubgraphSpec s;
    s.name = "worst";
    s.weights = &w;
    s.table = &t;
    const auto r = accel::run_subgraph(all_max, s);
    c.expect(r.stats.max_abs_acc == 115200, "all-max layer gave " + std::to_string(r.stats.max_abs_acc));
    worst = std::max(worst, r.stats.max_abs_acc);
  }
  Rng rng(31);
  Accumulator seen = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int h = rng.range(1, 3), w = rng.range(1, 3), ic = rng.range(1, 512), oc = rng.range(1, 40);
    // skew half the trials toward the extreme codes
    const bool skew = trial % 2 == 1;
    std::vector<Code> in(static_cast<std::size_t>(h) * w * ic), wc(static_cast<std::size_t>(oc) * ic);
    for (auto& v : in) v = skew && rng.below(4) != 0 ? Code{15} : rng.nibble();
    const bool positive = rng.below(2) == 0;
    for (auto& v : wc) v = skew && rng.below(4) != 0 ? (positive ? Code{15} : Code{0}) : rng.nibble();
    const FeatureMap fm(h, w, ic, in);
    const WeightMatrix wm(oc, ic, wc);
    const auto table = random_table(rng, ic);
    accel::SubgraphSpec s;
    s.name = "random";
    s.weights = &wm;
    s.table = &table;
    const auto r = accel::run_subgraph(fm, s);
    Accumulator ref = 0;
    for (auto a : ops::conv1x1_ref(fm, wm).values) ref = std::max(ref, a < 0 ? -a : a);
    c.expect(r.stats.max_abs_acc == ref, "simulator max |acc| disagrees with the reference");
    c.expect(r.stats.max_abs_acc <= 115200, "random layer exceeded 115200");
    seen = std::max(seen, r.stats.max_abs_acc);
  }
  c.note << "worst case " << worst << ", largest of 1000 random layers " << seen;
}

// One distinct accelerator call shape in the full network.
struct CallShape {
  int h, w, in_c, begin, count, oc;
  bool conv, pool, shift;
  int total, offset;  // shuffle target, total 0 when absent
  std::string example;

  auto key() const { return std::tie(h, w, in_c, begin, count, oc, conv, pool, shift, total, offset); }
  bool operator<(const CallShape& o) const { return key() < o.key(); }
};

std::vector<CallShape> distinct_shapes(const net::NetworkSpec& spec) {
  std::map<CallShape, int> seen;
  std::vector<CallShape> out;
  for (const auto& call : accel::plan_network(spec)) {
    if (call.fc) continue;
    const auto& seg = call.segment;
    CallShape s{seg.in_height, seg.in_width, call.in_channel_begin + seg.in_channels,
                call.in_channel_begin, seg.in_channels, seg.out_channels,
                seg.conv != nullptr, seg.pool, seg.shift,
                call.shuffle ? call.shuffle->total_channels : 0,
                call.shuffle ? call.shuffle->branch_offset : 0, seg.name()};
    if (seen.emplace(s, 0).second) out.push_back(s);
  }
  return out;
}

bool run_shape_trial(const CallShape& s, Rng& rng) {
  const auto in = random_feature_map(rng, s.h, s.w, s.in_c);
  WeightMatrix w;
  quant::ThresholdTable t;
  accel::SubgraphSpec spec;
  spec.name = s.example;
  spec.in_channel_begin = s.begin;
  spec.in_channel_count = s.count;
  spec.pool = s.pool;
  spec.shift = s.shift;
  auto ref = ops::slice_channels(in, s.begin, s.count);
  if (s.conv) {
    w = random_weights(rng, s.oc, s.count);
    t = random_table(rng, s.count);
    spec.weights = &w;
    spec.table = &t;
    ref = ops::activation_quant(ops::conv1x1_ref(ref, w), t);
  }
  if (s.pool) ref = ops::maxpool2x2(ref);
  if (s.shift) ref = ops::shift(ref);
  if (s.total == 0) return accel::run_subgraph(in, spec).output == ref;

  spec.shuffle = accel::ShuffleTarget{s.total, s.offset};
  accel::PlacedBuffer placed(ref.height(), ref.width(), s.total);
  accel::run_subgraph(in, spec, {}, accel::SchedulerKind::single_thread, &placed);
  const auto other = random_feature_map(rng, ref.height(), ref.width(), s.total - ref.channels());
  accel::shuffle_writeback(placed, other, s.offset == 0 ? ref.channels() : 0);
  const auto want = s.offset == 0 ? ops::concat_shuffle(ref, other) : ops::concat_shuffle(other, ref);
  return placed.to_feature_map() == want;
}

void engine_equivalence(Check& c) {
  const auto spec = net::build_diracdeltanet();
  const auto shapes = distinct_shapes(spec);
  Rng rng(41);
  int trials = 0;
  for (const auto& s : shapes) {
    for (int i = 0; i < 100; ++i, ++trials) {
      if (!run_shape_trial(s, rng)) {
        c.expect(false, "call shape of " + s.example + " differs from the reference composition");
        break;
      }
    }
  }
  // the FC call on the conv engine
  for (int i = 0; i < 100; ++i, ++trials) {
    std::vector<Code> pooled(static_cast<std::size_t>(spec.fc.in_channels));
    for (auto& v : pooled) v = rng.nibble();
    const auto w = random_weights(rng, spec.fc.out_channels, spec.fc.in_channels);
    if (accel::run_fc_bit_serial(pooled, w).acc != ops::fc_bit_serial(pooled, w)) {
      c.expect(false, "fc call differs from the bit-serial reference");
      break;
    }
  }
  int identical = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto bundle = net::random_bundle(spec, seed, rng.uniform(0.5, 3.0));
    const auto in = random_feature_map(rng, 224, 224, 3);
    const auto ref = net::forward(bundle, in);
    const auto sim = accel::simulate_forward(bundle, in);
    const bool same = ref.logits == sim.logits && ref.top1 == sim.top1;
    identical += same ? 1 : 0;
    c.expect(same, "end-to-end logits differ for seed " + std::to_string(seed));
  }
  c.note << shapes.size() + 1 << " call shapes x 100 trials (" << trials << "), " << identical
         << "/20 end-to-end identical";
}

std::uint32_t direct_code(std::int64_t acc, double f, double alpha) {
  const double x = static_cast<double>(acc) * f;
  const double y = x < 0.0 ? 0.0 : (x > alpha ? alpha : x);
  return static_cast<std::uint32_t>(std::floor(y / alpha * 15.0 + 0.5));
}

void conversion_exhaustive(Check& c) {
  // conv5 of a random full-size bundle
  const auto bundle = net::random_bundle(net::build_diracdeltanet(), 7, 1.25);
  const auto& p = bundle.conv("conv5");
  const double f = quant::accumulator_scale(p.quant, bundle.net);
  std::int64_t mismatches = 0, checked = 0;
  for (std::int64_t acc = -115200; acc <= 115200; ++acc, ++checked) {
    const auto a = static_cast<Accumulator>(acc);
    const auto want = direct_code(acc, f, p.quant.alpha);
    const bool ok = accel::conversion_unit(a, p.table) == want &&
                    accel::conversion_unit_linear(a, p.table) == want && p.table.lookup_tree(a) == want &&
                    p.table.lookup_linear(a) == want;
    mismatches += ok ? 0 : 1;
  }
  c.expect(mismatches == 0, std::to_string(mismatches) + " accumulator values disagree");
  c.note << checked << " accumulators, tree == linear == direct for conv5 (alpha " << p.quant.alpha << ")";
}

void quantizer_properties(Check& c) {
  Rng rng(51);
  int monotone_fail = 0, clip_fail = 0, weight_fail = 0;
  for (int k : {2, 4, 8}) {
    std::vector<double> xs(20000);
    for (auto& x : xs) x = rng.uniform();
    std::sort(xs.begin(), xs.end());
    for (std::size_t i = 1; i < xs.size(); ++i)
      monotone_fail += quant::quantize_uniform(xs[i], k) < quant::quantize_uniform(xs[i - 1], k) ? 1 : 0;
  }
  for (int i = 0; i < 100000; ++i) {
    const double a = rng.uniform(0.01, 10.0), x = rng.uniform(-20.0, 20.0);
    const double clip = std::min(std::max(x, 0.0), a);
    clip_fail += quant::pact_clip(x, a) == clip ? 0 : 1;
    clip_fail += std::abs(quant::pact_clip_closed_form(x, a) - clip) <= 1e-12 * std::max(1.0, a) ? 0 : 1;
  }
  int weights = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> w(1000);
    const double spread = rng.uniform(0.05, 4.0);
    for (auto& v : w) v = rng.uniform(-spread, spread);
    const auto q = quant::quantize_weights(w, 4);
    for (std::size_t i = 0; i < w.size(); ++i, ++weights) {
      const double deq = quant::dequantize_weight(q.codes[i], 4);
      const double target = std::tanh(w[i]) / q.tanh_max;
      weight_fail += deq >= -1.0 && deq <= 1.0 && std::abs(deq - target) <= 1.0 / 15 + 1e-12 ? 0 : 1;
    }
  }
  c.expect(monotone_fail == 0, "Q_k not monotone");
  c.expect(clip_fail == 0, "pact_clip differs from clip");
  c.expect(weight_fail == 0, "dequantized weight error above half a level");
  c.note << "60000 monotone pairs, 100000 clip points, " << weights << " weights; 0 failures";
}

void operator_oracles(Check& c) {
  int perm_fail = 0;
  for (int ch = 4; ch <= 1024; ch += 4) {
    std::vector<int> hits(static_cast<std::size_t>(ch), 0);
    int to_res = 0, to_skip = 0;
    for (int k = 0; k < ch; ++k) {
      const int d = ops::shuffle_destination(k, ch);
      ++hits[static_cast<std::size_t>(d)];
      to_res += k < ch / 2 && d >= ch / 2 ? 1 : 0;
      to_skip += k >= ch / 2 && d < ch / 2 ? 1 : 0;
      int r = k;
      for (int i = 0; i < 4; ++i) r = ops::shuffle_destination(r, ch);
      perm_fail += r == k ? 0 : 1;
    }
    perm_fail += std::all_of(hits.begin(), hits.end(), [](int n) { return n == 1; }) ? 0 : 1;
    perm_fail += to_res == ch / 4 && to_skip == ch / 4 ? 0 : 1;
  }
  Rng rng(61);
  int map_fail = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int h = 2 * rng.range(1, 8), w = 2 * rng.range(1, 8), ch = rng.range(1, 40);
    const auto fm = random_feature_map(rng, h, w, ch);
    map_fail += ops::maxpool2x2(fm) == testing::oracle_maxpool(fm) ? 0 : 1;
    map_fail += ops::shift(fm) == testing::oracle_shift(fm) ? 0 : 1;
    // four shuffles of a split map return the original
    const int even = 4 * rng.range(1, 10);
    auto x = random_feature_map(rng, rng.range(1, 4), rng.range(1, 4), even);
    auto y = x;
    for (int i = 0; i < 4; ++i) {
      const auto [a, b] = ops::channel_split(y);
      y = ops::concat_shuffle(a, b);
    }
    map_fail += y == x ? 0 : 1;
  }
  c.expect(perm_fail == 0, "concat_shuffle permutation property failed");
  c.expect(map_fail == 0, "shift/maxpool/shuffle oracle mismatch");
  c.note << "C=4..1024 permutations, 1000 random maps each for pool, shift and 4-fold shuffle";
}

void cost_structure(Check& c) {
  const auto r = accel::estimate_cycles(net::build_diracdeltanet(), accel::CostModelParams{}, 16);
  const auto& sw = r.batch_sweep;
  bool monotone = sw.size() == 5;
  for (std::size_t i = 1; i < sw.size(); ++i) monotone = monotone && sw[i].fps >= sw[i - 1].fps;
  c.expect(monotone, "frame rate not monotone over {1,2,4,8,16}");
  const double ratio = sw.back().fps / sw.front().fps;
  c.expect(std::isfinite(ratio) && sw[4].fps - sw[3].fps < sw[1].fps - sw[0].fps, "sweep does not saturate");
  c.expect(r.blocks.size() == 5, "block breakdown rows");
  if (r.blocks.size() == 5) {
    const auto& conv = r.blocks[0];
    const auto& shuf = r.blocks[3];
    const double o1 = shuf.block1_ms - conv.block1_ms, o2 = shuf.block2_ms - conv.block2_ms;
    c.expect(o1 > o2, "shuffle overhead for Block1 not above Block2");
    const double cr = conv.block1_ms / conv.block2_ms;
    c.expect(cr <= 2.0 && cr >= 0.5, "conv-only estimates differ by more than 2x");
    c.note.precision(3);
    c.note << "fps " << sw.front().fps << " -> " << sw.back().fps << "; shuffle overhead " << o1 << " vs "
           << o2 << " ms; conv-only " << conv.block1_ms << " vs " << conv.block2_ms << " ms";
  }
}

void scheduling_determinism(Check& c) {
  Rng rng(71);
  int same = 0;
  for (int n = 0; n < 10; ++n) {
    const auto spec = net::build_network(testing::random_config(rng));
    const auto bundle = net::random_bundle(spec, static_cast<std::uint64_t>(n), rng.uniform(0.5, 3.0));
    const auto in = random_feature_map(rng, spec.config.input_size, spec.config.input_size,
                                       spec.config.input_channels);
    const auto a = accel::simulate_forward(bundle, in, accel::SchedulerKind::single_thread);
    const auto b = accel::simulate_forward(bundle, in, accel::SchedulerKind::concurrent);
    bool ok = a.logits == b.logits && a.top1 == b.top1 && a.calls.size() == b.calls.size() &&
              a.host_memcpy_bytes == b.host_memcpy_bytes;
    for (std::size_t i = 0; ok && i < a.calls.size(); ++i) {
      const auto &x = a.calls[i].stats, &y = b.calls[i].stats;
      ok = x.conv_iterations == y.conv_iterations && x.max_abs_acc == y.max_abs_acc &&
           x.dram_write_bytes == y.dram_write_bytes;
    }
    same += ok ? 1 : 0;
    c.expect(ok, "schedulers disagree on random network " + std::to_string(n));
  }
  // full-size graph at default capacities
  const auto bundle = net::random_bundle(net::build_diracdeltanet(), 3);
  Rng in_rng(72);
  const auto in = random_feature_map(in_rng, 224, 224, 3);
  const auto a = accel::simulate_forward(bundle, in, accel::SchedulerKind::concurrent);
  c.expect(a.logits == net::forward(bundle, in).logits, "concurrent full network differs");
  c.note << same << "/10 random networks identical; full network concurrent run completed";
}

}  // namespace

int main() {
  bool ok = true;
  ok &= run_criterion(1, "structure counts", 1.0, structure_counts);
  ok &= run_criterion(2, "roofline arithmetic", 1.0, roofline_arithmetic);
  ok &= run_criterion(3, "accumulator bound", 10.0, accumulator_limit);
  ok &= run_criterion(4, "bit-exact engine equivalence", 120.0, engine_equivalence);
  ok &= run_criterion(5, "exhaustive conversion unit", 30.0, conversion_exhaustive);
  ok &= run_criterion(6, "quantizer properties", 30.0, quantizer_properties);
  ok &= run_criterion(7, "shuffle/shift/pool oracles", 30.0, operator_oracles);
  ok &= run_criterion(8, "cost-model structure", 10.0, cost_structure);
  ok &= run_criterion(9, "determinism under scheduling", 60.0, scheduling_determinism);
  std::printf("%s\n", ok ? "all criteria passed" : "some criteria FAILED");
  return ok ? 0 : 1;
}
