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
#include "synetgy/errors.hpp"
#include "synetgy/ops.hpp"

using namespace synetgy;
using namespace synetgy::ops;

namespace {

FeatureMap labelled(int c) {
  std::vector<Code> codes(static_cast<std::size_t>(c));
  for (int i = 0; i < c; ++i) codes[i] = static_cast<Code>(i % 16);
  return FeatureMap(1, 1, c, codes);
}

AccumulatorMap oracle_conv(const FeatureMap& in, const WeightMatrix& w) {
  AccumulatorMap out{in.height(), in.width(), w.out_channels(), {}};
  for (int y = 0; y < in.height(); ++y)
    for (int x = 0; x < in.width(); ++x)
      for (int o = 0; o < w.out_channels(); ++o) {
        std::int64_t s = 0;
        for (int i = 0; i < w.in_channels(); ++i) s += (2 * w.code(o, i) - 15) * in.at(y, x, i);
        out.values.push_back(static_cast<Accumulator>(s));
      }
  return out;
}

}  // namespace

TEST_CASE("shift directions are cardinal") {
  for (int s = 0; s < kShiftKinds; ++s) {
    const auto d = direction_of(static_cast<Shift>(s));
    CHECK(std::abs(d.dy) + std::abs(d.dx) <= 1);
  }
  CHECK(shift_for_channel(0) == Shift::identity);
  CHECK(shift_for_channel(1) == Shift::up);
  CHECK(shift_for_channel(4) == Shift::right);
  CHECK(shift_for_channel(7) == Shift::down);
}

TEST_CASE("conv1x1_ref single MAC and zero input") {
  const FeatureMap one(1, 1, 1, std::vector<Code>{3});
  const WeightMatrix w(1, 1, {15});
  CHECK(conv1x1_ref(one, w).values == std::vector<Accumulator>{45});
  Rng rng(1);
  const FeatureMap zero(3, 4, 20);
  for (auto v : conv1x1_ref(zero, random_weights(rng, 9, 20)).values) CHECK(v == 0);
  CHECK_THROWS_AS(conv1x1_ref(zero, random_weights(rng, 9, 21)), ShapeError);
}

TEST_CASE("conv1x1_ref worst case is 115200") {
  const FeatureMap in(2, 2, 512, std::vector<Code>(2048, 15));
  const WeightMatrix w(3, 512, std::vector<Code>(1536, 15));
  for (auto v : conv1x1_ref(in, w).values) CHECK(v == 115200);
}

TEST_CASE("conv1x1_ref matches the nested-loop oracle") {
  Rng rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const auto in = random_feature_map(rng, rng.range(1, 6), rng.range(1, 6), rng.range(1, 70));
    const auto w = random_weights(rng, rng.range(1, 40), in.channels());
    REQUIRE(conv1x1_ref(in, w) == oracle_conv(in, w));
  }
}

TEST_CASE("conv1x1_ref is linear in activations") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int h = rng.range(1, 4), w = rng.range(1, 4), c = rng.range(1, 30);
    std::vector<Code> a1(static_cast<std::size_t>(h) * w * c), a2(a1.size()), sum(a1.size());
    for (std::size_t i = 0; i < a1.size(); ++i) {
      a1[i] = static_cast<Code>(rng.range(0, 7));
      a2[i] = static_cast<Code>(rng.range(0, 8));
      sum[i] = static_cast<Code>(a1[i] + a2[i]);
    }
    const auto wm = random_weights(rng, rng.range(1, 10), c);
    const auto r1 = conv1x1_ref(FeatureMap(h, w, c, a1), wm);
    const auto r2 = conv1x1_ref(FeatureMap(h, w, c, a2), wm);
    const auto rs = conv1x1_ref(FeatureMap(h, w, c, sum), wm);
    for (std::size_t i = 0; i < rs.values.size(); ++i) REQUIRE(r1.values[i] + r2.values[i] == rs.values[i]);
  }
}

TEST_CASE("maxpool2x2 examples") {
  const FeatureMap win(2, 2, 1, std::vector<Code>{1, 5, 3, 2});
  CHECK(maxpool2x2(win).codes() == std::vector<Code>{5});
  const FeatureMap constant(6, 4, 3, std::vector<Code>(72, 11));
  const auto p = maxpool2x2(constant);
  CHECK(p.height() == 3);
  CHECK(p.width() == 2);
  for (auto c : p.codes()) CHECK(c == 11);
  // odd sizes drop the trailing row and column
  Rng rng(4);
  const auto odd = random_feature_map(rng, 5, 7, 2);
  CHECK(maxpool2x2(odd) == testing::oracle_maxpool(odd));
  CHECK(maxpool2x2(odd).height() == 2);
}

TEST_CASE("maxpool2x2 matches the oracle and dominates its window") {
  Rng rng(5);
  const auto big = random_feature_map(rng, 56, 56, 64);
  CHECK(maxpool2x2(big) == testing::oracle_maxpool(big));
  for (int trial = 0; trial < 200; ++trial) {
    const auto in = random_feature_map(rng, 2 * rng.range(1, 6), 2 * rng.range(1, 6), rng.range(1, 9));
    const auto out = maxpool2x2(in);
    for (int y = 0; y < out.height(); ++y)
      for (int x = 0; x < out.width(); ++x)
        for (int c = 0; c < out.channels(); ++c) {
          const Code m = out.at(y, x, c);
          bool hit = false;
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
              REQUIRE(m >= in.at(2 * y + dy, 2 * x + dx, c));
              hit |= m == in.at(2 * y + dy, 2 * x + dx, c);
            }
          REQUIRE(hit);
        }
  }
}

TEST_CASE("shift: identity, single pixel moving up") {
  Rng rng(6);
  const auto in = random_feature_map(rng, 5, 5, 4);
  CHECK(shift(in, std::vector<Shift>(4, Shift::identity)) == in);

  std::vector<Code> codes(25, 0);
  codes[2 * 5 + 3] = 9;
  const FeatureMap dot(5, 5, 1, codes);
  const auto up = shift(dot, std::vector<Shift>{Shift::up});
  CHECK(up.at(1, 3, 0) == 9);
  int nonzero = 0;
  for (auto c : up.codes()) nonzero += c != 0;
  CHECK(nonzero == 1);

  // content on the top row leaves the map
  std::vector<Code> top(25, 0);
  top[4] = 7;
  CHECK(shift(FeatureMap(5, 5, 1, top), std::vector<Shift>{Shift::up}).codes() ==
        std::vector<Code>(25, 0));
  // the bottom row of an up-shift is zero padding
  const FeatureMap full(5, 5, 1, std::vector<Code>(25, 6));
  const auto shifted = shift(full, std::vector<Shift>{Shift::up});
  for (int x = 0; x < 5; ++x) CHECK(shifted.at(4, x, 0) == 0);
}

TEST_CASE("shift matches the copy-with-pad oracle") {
  Rng rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto in = random_feature_map(rng, rng.range(1, 9), rng.range(1, 9), rng.range(1, 12));
    REQUIRE(shift(in) == testing::oracle_shift(in));
  }
}

TEST_CASE("opposite shifts cancel on the interior") {
  Rng rng(8);
  const std::pair<Shift, Shift> pairs[] = {{Shift::up, Shift::down}, {Shift::left, Shift::right}};
  for (int trial = 0; trial < 50; ++trial) {
    const auto in = random_feature_map(rng, rng.range(3, 9), rng.range(3, 9), 1);
    for (auto [a, b] : pairs) {
      const auto back = shift(shift(in, std::vector<Shift>{a}), std::vector<Shift>{b});
      const auto d = direction_of(a);
      for (int y = 0; y < in.height(); ++y)
        for (int x = 0; x < in.width(); ++x) {
          const bool edge = (d.dy != 0 && (y == 0 || y == in.height() - 1)) ||
                            (d.dx != 0 && (x == 0 || x == in.width() - 1));
          const int ey = y - d.dy, ex = x - d.dx;  // pixel lost by the first shift
          const bool lost = ey < 0 || ey >= in.height() || ex < 0 || ex >= in.width();
          if (!edge) REQUIRE(back.at(y, x, 0) == in.at(y, x, 0));
          if (lost) REQUIRE(back.at(y, x, 0) == 0);
        }
    }
  }
}

TEST_CASE("concat_shuffle rotates by C/4") {
  const auto skip = labelled(4);
  std::vector<Code> r{4, 5, 6, 7};
  const FeatureMap res(1, 1, 4, r);
  CHECK(concat_shuffle(skip, res).codes() == std::vector<Code>{2, 3, 4, 5, 6, 7, 0, 1});
  CHECK_THROWS_AS(concat_shuffle(labelled(4), labelled(6)), ShapeError);
}

TEST_CASE("concat_shuffle is a permutation exchanging C/4 channels each way") {
  for (int c = 4; c <= 1024; c += 4) {
    int skip_to_res = 0, res_to_skip = 0;
    std::vector<int> seen(static_cast<std::size_t>(c), 0);
    for (int k = 0; k < c; ++k) {
      const int d = shuffle_destination(k, c);
      ++seen[static_cast<std::size_t>(d)];
      if (k < c / 2 && d >= c / 2) ++skip_to_res;
      if (k >= c / 2 && d < c / 2) ++res_to_skip;
      int r = k;
      for (int i = 0; i < 4; ++i) r = shuffle_destination(r, c);
      REQUIRE(r == k);
    }
    REQUIRE(std::all_of(seen.begin(), seen.end(), [](int n) { return n == 1; }));
    REQUIRE(skip_to_res == c / 4);
    REQUIRE(res_to_skip == c / 4);
  }
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const int h = rng.range(1, 5), w = rng.range(1, 5), half = 2 * rng.range(1, 20);
    const auto a = random_feature_map(rng, h, w, half);
    const auto b = random_feature_map(rng, h, w, half);
    const auto out = concat_shuffle(a, b);
    const auto cat = concat_channels(a, b);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int j = 0; j < 2 * half; ++j)
          REQUIRE(out.at(y, x, j) == cat.at(y, x, (j + half / 2) % (2 * half)));
    auto s1 = out.codes(), s2 = cat.codes();
    std::sort(s1.begin(), s1.end());
    std::sort(s2.begin(), s2.end());
    REQUIRE(s1 == s2);
  }
}

TEST_CASE("channel_split halves and round-trips") {
  const auto [a, b] = channel_split(labelled(4));
  CHECK(a.codes() == std::vector<Code>{0, 1});
  CHECK(b.codes() == std::vector<Code>{2, 3});
  CHECK_THROWS_AS(channel_split(labelled(5)), ShapeError);
  Rng rng(10);
  for (int trial = 0; trial < 50; ++trial) {
    const auto in = random_feature_map(rng, rng.range(1, 7), rng.range(1, 7), 2 * rng.range(1, 20));
    const auto [s, r] = channel_split(in);
    REQUIRE(concat_channels(s, r) == in);
    const int half = in.channels() / 2;
    for (int y = 0; y < in.height(); ++y)
      for (int x = 0; x < in.width(); ++x)
        for (int c = 0; c < half; ++c) {
          REQUIRE(s.at(y, x, c) == in.at(y, x, c));
          REQUIRE(r.at(y, x, c) == in.at(y, x, half + c));
        }
  }
}

TEST_CASE("global_avgpool") {
  const quant::NetworkQuantParams net{2.5, 4, 4};
  const FeatureMap full(7, 7, 3, std::vector<Code>(147, 15));
  for (double v : global_avgpool(full, net)) CHECK(v == doctest::Approx(2.5).epsilon(1e-15));
  for (double v : global_avgpool(FeatureMap(7, 7, 3), net)) CHECK(v == 0.0);
  Rng rng(11);
  const auto in = random_feature_map(rng, 7, 7, 40);
  const auto got = global_avgpool(in, net);
  for (int c = 0; c < 40; ++c) {
    long sum = 0;
    for (int y = 0; y < 7; ++y)
      for (int x = 0; x < 7; ++x) sum += in.at(y, x, c);
    const double want = static_cast<double>(sum) * net.s / (49.0 * 15.0);
    CHECK(std::abs(got[c] - want) <= std::abs(want) * 2.3e-16);
  }
  CHECK_THROWS_AS(global_avgpool(FeatureMap(6, 7, 2), net), ShapeError);
}

TEST_CASE("fc_bit_serial examples and equivalence") {
  CHECK(fc_bit_serial(std::vector<Code>{3}, WeightMatrix(1, 1, {5})) == std::vector<Accumulator>{-15});
  CHECK(fc_bit_serial(std::vector<Code>(512, 15), WeightMatrix(2, 512, std::vector<Code>(1024, 15))) ==
        std::vector<Accumulator>{115200, 115200});
  CHECK_THROWS_AS(fc_bit_serial(std::vector<Code>(3, 1), WeightMatrix(2, 4, std::vector<Code>(8, 1))),
                  ShapeError);
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const int ic = rng.range(1, 600);
    const auto in = random_feature_map(rng, 1, 1, ic);
    const auto w = random_weights(rng, rng.range(1, 50), ic);
    REQUIRE(fc_bit_serial(in.codes(), w) == conv1x1_ref(in, w).values);
  }
}

TEST_CASE("activation_quant applies the table per element") {
  Rng rng(13);
  const auto in = random_feature_map(rng, 4, 4, 16);
  const auto w = random_weights(rng, 8, 16);
  const auto acc = conv1x1_ref(in, w);
  const quant::ThresholdTable t({-600, -400, -250, -100, -20, 0, 30, 60, 100, 150, 220, 300, 410, 520, 700});
  const auto out = activation_quant(acc, t);
  for (std::size_t i = 0; i < acc.values.size(); ++i) {
    int n = 0;
    for (auto th : t.thresholds()) n += acc.values[i] >= th;
    REQUIRE(out.codes()[i] == n);
  }
}
