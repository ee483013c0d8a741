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
#include <random>

#include "synetgy/tensor.hpp"

namespace synetgy {

// Seeded generator with distribution helpers that do not depend on the
// standard library's (implementation-defined) distributions, so a seed
// produces the same bytes everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next() { return eng_(); }
  Code nibble() { return static_cast<Code>(eng_() >> 60); }
  // Uniform in [0, n).
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : eng_() % n; }
  int range(int lo, int hi) { return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1))); }
  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 eng_;
};

inline FeatureMap random_feature_map(Rng& rng, int h, int w, int c) {
  std::vector<Code> codes(static_cast<std::size_t>(h) * w * c);
  for (auto& v : codes) v = rng.nibble();
  return FeatureMap(h, w, c, codes);
}

inline WeightMatrix random_weights(Rng& rng, int oc, int ic) {
  std::vector<Code> codes(static_cast<std::size_t>(oc) * ic);
  for (auto& v : codes) v = rng.nibble();
  return WeightMatrix(oc, ic, std::move(codes));
}

}  // namespace synetgy
