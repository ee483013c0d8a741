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

#include "synetgy/ops.hpp"

#include <algorithm>
#include <string>

#include "synetgy/errors.hpp"

namespace synetgy::ops {

std::vector<Shift> default_shift_assignment(int channels) {
  std::vector<Shift> a(static_cast<std::size_t>(channels));
  for (int c = 0; c < channels; ++c) a[c] = shift_for_channel(c);
  return a;
}

AccumulatorMap conv1x1_ref(const FeatureMap& in, const WeightMatrix& w) {
  if (in.channels() != w.in_channels()) {
    throw ShapeError("conv1x1: input has " + std::to_string(in.channels()) +
                     " channels, weights expect " + std::to_string(w.in_channels()));
  }
  const int ic_total = w.in_channels();
  const int oc_total = w.out_channels();
  std::vector<std::int16_t> wt(w.codes().size());
  for (std::size_t i = 0; i < wt.size(); ++i) {
    wt[i] = static_cast<std::int16_t>(effective_weight(w.codes()[i]));
  }
  const auto a = in.codes();
  AccumulatorMap out{in.height(), in.width(), oc_total, {}};
  const std::size_t pixels = static_cast<std::size_t>(in.height()) * in.width();
  out.values.resize(pixels * oc_total);
  for (std::size_t p = 0; p < pixels; ++p) {
    const Code* px = a.data() + p * ic_total;
    Accumulator* dst = out.values.data() + p * oc_total;
    for (int oc = 0; oc < oc_total; ++oc) {
      const std::int16_t* row = wt.data() + static_cast<std::size_t>(oc) * ic_total;
      Accumulator sum = 0;
      for (int ic = 0; ic < ic_total; ++ic) sum += row[ic] * px[ic];
      dst[oc] = sum;
    }
  }
  return out;
}

FeatureMap activation_quant(const AccumulatorMap& acc, const quant::ThresholdTable& table) {
  std::vector<Code> codes(acc.values.size());
  for (std::size_t i = 0; i < codes.size(); ++i) codes[i] = table.lookup_linear(acc.values[i]);
  return FeatureMap(acc.height, acc.width, acc.channels, codes);
}

FeatureMap maxpool2x2(const FeatureMap& in) {
  const int oh = in.height() / 2, ow = in.width() / 2, c = in.channels();
  const auto src = in.codes();
  std::vector<Code> out(static_cast<std::size_t>(oh) * ow * c);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        Code m = std::max({src[in.index(2 * y, 2 * x, ch)], src[in.index(2 * y, 2 * x + 1, ch)],
                           src[in.index(2 * y + 1, 2 * x, ch)],
                           src[in.index(2 * y + 1, 2 * x + 1, ch)]});
        out[(static_cast<std::size_t>(y) * ow + x) * c + ch] = m;
      }
    }
  }
  return FeatureMap(oh, ow, c, out);
}

FeatureMap shift(const FeatureMap& in, std::span<const Shift> assignment) {
  if (assignment.size() != static_cast<std::size_t>(in.channels())) {
    throw ShapeError("shift: assignment covers " + std::to_string(assignment.size()) +
                     " channels, map has " + std::to_string(in.channels()));
  }
  const int h = in.height(), w = in.width(), c = in.channels();
  const auto src = in.codes();
  std::vector<Code> out(src.size(), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        auto d = direction_of(assignment[ch]);
        int sy = y + d.dy, sx = x + d.dx;
        if (sy >= 0 && sy < h && sx >= 0 && sx < w) out[in.index(y, x, ch)] = src[in.index(sy, sx, ch)];
      }
    }
  }
  return FeatureMap(h, w, c, out);
}

FeatureMap slice_channels(const FeatureMap& in, int begin, int count) {
  if (begin < 0 || count < 0 || begin + count > in.channels()) {
    throw ShapeError("slice_channels: range [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") outside " +
                     std::to_string(in.channels()) + " channels");
  }
  const auto src = in.codes();
  std::vector<Code> out(static_cast<std::size_t>(in.height()) * in.width() * count);
  std::size_t k = 0;
  for (int y = 0; y < in.height(); ++y) {
    for (int x = 0; x < in.width(); ++x) {
      for (int c = 0; c < count; ++c) out[k++] = src[in.index(y, x, begin + c)];
    }
  }
  return FeatureMap(in.height(), in.width(), count, out);
}

std::pair<FeatureMap, FeatureMap> channel_split(const FeatureMap& in) {
  if (in.channels() % 2 != 0) {
    throw ShapeError("channel_split: odd channel count " + std::to_string(in.channels()));
  }
  int half = in.channels() / 2;
  return {slice_channels(in, 0, half), slice_channels(in, half, half)};
}

FeatureMap concat_channels(const FeatureMap& a, const FeatureMap& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw ShapeError("concat: spatial dims differ");
  }
  const auto sa = a.codes(), sb = b.codes();
  const int c = a.channels() + b.channels();
  std::vector<Code> out(static_cast<std::size_t>(a.height()) * a.width() * c);
  std::size_t k = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      for (int ch = 0; ch < a.channels(); ++ch) out[k++] = sa[a.index(y, x, ch)];
      for (int ch = 0; ch < b.channels(); ++ch) out[k++] = sb[b.index(y, x, ch)];
    }
  }
  return FeatureMap(a.height(), a.width(), c, out);
}

FeatureMap concat_shuffle(const FeatureMap& skip, const FeatureMap& residual) {
  if (!skip.same_shape(residual)) {
    throw ShapeError("concat_shuffle: branches differ in shape (" +
                     std::to_string(skip.channels()) + " vs " +
                     std::to_string(residual.channels()) + " channels or spatial dims)");
  }
  const auto cat = concat_channels(skip, residual);
  const int c = cat.channels();
  const auto src = cat.codes();
  std::vector<Code> out(src.size());
  for (int y = 0; y < cat.height(); ++y) {
    for (int x = 0; x < cat.width(); ++x) {
      for (int k = 0; k < c; ++k) out[cat.index(y, x, shuffle_destination(k, c))] = src[cat.index(y, x, k)];
    }
  }
  return FeatureMap(cat.height(), cat.width(), c, out);
}

std::vector<std::int32_t> channel_sums(const FeatureMap& in) {
  std::vector<std::int32_t> sums(static_cast<std::size_t>(in.channels()), 0);
  const auto src = in.codes();
  for (std::size_t i = 0; i < src.size(); ++i) sums[i % in.channels()] += src[i];
  return sums;
}

std::vector<double> global_avgpool(const FeatureMap& in, const quant::NetworkQuantParams& net) {
  if (in.height() != 7 || in.width() != 7) {
    throw ShapeError("global_avgpool: expects a 7x7 map, got " + std::to_string(in.height()) +
                     "x" + std::to_string(in.width()));
  }
  const double levels = static_cast<double>(quant::level_count(net.k_a));
  std::vector<double> out;
  for (auto sum : channel_sums(in)) out.push_back(static_cast<double>(sum) * net.s / (49.0 * levels));
  return out;
}

std::vector<Accumulator> fc_bit_serial(std::span<const Code> in, const WeightMatrix& w) {
  if (in.size() != static_cast<std::size_t>(w.in_channels())) {
    throw ShapeError("fc: input length " + std::to_string(in.size()) + " != weight columns " +
                     std::to_string(w.in_channels()));
  }
  Accumulator input_sum = 0;
  for (auto a : in) input_sum += a;
  std::vector<Accumulator> out(static_cast<std::size_t>(w.out_channels()));
  for (int oc = 0; oc < w.out_channels(); ++oc) {
    Accumulator weighted = 0;
    for (int bit = 0; bit < 4; ++bit) {
      Accumulator d = 0;
      for (int ic = 0; ic < w.in_channels(); ++ic) d += ((w.code(oc, ic) >> bit) & 1) * in[ic];
      weighted += d << bit;
    }
    out[oc] = 2 * weighted - 15 * input_sum;
  }
  return out;
}

}  // namespace synetgy::ops
