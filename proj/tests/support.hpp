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

#include <algorithm>
#include <vector>

#include "synetgy/net.hpp"
#include "synetgy/ops.hpp"
#include "synetgy/random.hpp"

namespace synetgy::testing {

// 56x56 input, one stage; the last map is 7x7 like the full network.
inline net::NetworkConfig tiny_config() {
  net::NetworkConfig c;
  c.input_size = 56;
  c.input_channels = 3;
  c.stem1_channels = 8;
  c.stem2_channels = 16;
  c.stages = {{32, 1}};
  c.conv5_channels = 64;
  c.num_classes = 10;
  return c;
}

// Small random graph: one or two stages, random widths and repeats.
inline net::NetworkConfig random_config(Rng& rng) {
  net::NetworkConfig c;
  const int stages = rng.range(1, 2);
  c.input_size = stages == 1 ? 8 * rng.range(4, 7) : 16 * rng.range(3, 5);
  c.input_channels = rng.range(1, 4);
  c.stem1_channels = 4 * rng.range(1, 4);
  c.stem2_channels = 4 * rng.range(1, 6);
  int ch = c.stem2_channels;
  c.stages.clear();
  for (int s = 0; s < stages; ++s) {
    ch *= 2;
    c.stages.push_back({ch, rng.range(0, 2)});
  }
  c.conv5_channels = 4 * rng.range(4, 20);
  c.num_classes = rng.range(2, 40);
  return c;
}

// Straight nested-loop oracles, independent of the library's operators.
inline FeatureMap oracle_maxpool(const FeatureMap& in) {
  const int h = in.height() / 2, w = in.width() / 2, c = in.channels();
  std::vector<Code> out;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int k = 0; k < c; ++k) {
        Code m = 0;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) m = std::max(m, in.at(2 * y + dy, 2 * x + dx, k));
        out.push_back(m);
      }
  return FeatureMap(h, w, c, out);
}

// Channel k copies its neighbour: identity, below, above, right, left, in
// turn, with zeros past the border.
inline FeatureMap oracle_shift(const FeatureMap& in) {
  static constexpr int kDy[5] = {0, 1, -1, 0, 0};
  static constexpr int kDx[5] = {0, 0, 0, 1, -1};
  std::vector<Code> out;
  for (int y = 0; y < in.height(); ++y)
    for (int x = 0; x < in.width(); ++x)
      for (int k = 0; k < in.channels(); ++k) {
        const int sy = y + kDy[k % 5], sx = x + kDx[k % 5];
        const bool inside = sy >= 0 && sy < in.height() && sx >= 0 && sx < in.width();
        out.push_back(inside ? in.at(sy, sx, k) : 0);
      }
  return FeatureMap(in.height(), in.width(), in.channels(), out);
}

}  // namespace synetgy::testing
