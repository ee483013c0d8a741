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

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "synetgy/tensor.hpp"

namespace synetgy::quant {

// Per-layer quantization constants.
//   alpha        - clip bound of the activation (already |alpha|).
//   weight_scale - real value of one unit of effective integer weight, so a
//                  code c stands for (2c - 15) * weight_scale.
struct LayerQuantParams {
  double alpha = 1.0;
  double weight_scale = 1.0 / 15.0;

  void validate() const;
};

// Network-wide constants: the shared activation coefficient s and bit widths.
struct NetworkQuantParams {
  double s = 1.0;
  int k_w = 4;
  int k_a = 4;

  void validate() const;
};

// Number of non-zero levels, 2^k - 1.
std::uint64_t level_count(int k);

// Nearest of the 2^k levels i / (2^k - 1) to x; halves round up.
std::uint32_t quantize_uniform(double x, int k);

struct QuantizedWeights {
  std::vector<std::uint32_t> codes;
  // Real value of one unit of (2c - (2^k - 1)); 1 / (2^k - 1).
  double weight_scale = 0.0;
  // max |tanh(w)| over the tensor, the normalizer that maps it into [0, 1].
  double tanh_max = 0.0;
  int bits = 0;
};

// DoReFa-style weight quantization: code = Q_k(tanh(w) / (2 max|tanh w|) + 0.5).
// Throws DomainError for an empty tensor and DegenerateScale (a DomainError)
// when every tanh(w) is zero.
QuantizedWeights quantize_weights(std::span<const double> w, int k);

// (2c - (2^k - 1)) / (2^k - 1), in [-1, 1].
double dequantize_weight(std::uint32_t code, int k);

// clip(x, 0, alpha).
double pact_clip(double x, double alpha);
// (|x| - |x - alpha| + alpha) / 2; same function, written the PACT way.
double pact_clip_closed_form(double x, double alpha);

struct ActivationQuant {
  std::uint32_t code = 0;
  double value = 0.0;
};

// code = Q_ka(clip(x, 0, alpha) / alpha); value = code / (2^ka - 1) * s.
ActivationQuant quantize_activation(double x, const LayerQuantParams& layer,
                                    const NetworkQuantParams& net);

// Real pre-activation represented by one accumulator unit:
// weight_scale * s / (2^ka - 1).
double accumulator_scale(const LayerQuantParams& layer, const NetworkQuantParams& net);

// 15 strictly increasing accumulator thresholds splitting the accumulator
// line into 16 intervals. lookup(acc) = #{i : acc >= t_i}.
class ThresholdTable {
 public:
  static constexpr int kSize = 15;

  ThresholdTable() = default;
  explicit ThresholdTable(const std::array<std::int32_t, kSize>& t);

  const std::array<std::int32_t, kSize>& thresholds() const { return t_; }

  Code lookup_linear(Accumulator acc) const {
    Code n = 0;
    for (auto t : t_) n += acc >= t ? 1 : 0;
    return n;
  }

  // Depth-4 comparison tree; same answer as lookup_linear.
  Code lookup_tree(Accumulator acc) const {
    int lo = 0;
    if (acc >= t_[lo + 7]) lo += 8;
    if (acc >= t_[lo + 3]) lo += 4;
    if (acc >= t_[lo + 1]) lo += 2;
    if (acc >= t_[lo]) lo += 1;
    return static_cast<Code>(lo);
  }

  bool operator==(const ThresholdTable&) const = default;

 private:
  std::array<std::int32_t, kSize> t_{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15};
};

// Folds alpha, s and weight_scale into integer thresholds such that
// table.lookup(acc) == quantize_activation(acc * accumulator_scale()).code
// for every acc. Requires k_a == 4. Throws ConfigError when two levels land
// on the same integer accumulator.
ThresholdTable build_threshold_table(const LayerQuantParams& layer,
                                     const NetworkQuantParams& net);

// A point C_{w,a} of the quantization grid.
struct QuantConfig {
  int w_bits = 32;
  int a_bits = 32;
  bool operator==(const QuantConfig&) const = default;
};

struct PathViolation {
  std::size_t step = 0;  // index into the path of the offending config
  std::string reason;
};

// A path must start at (32, 32) and never increase either bit width.
// Throws DomainError on an empty path.
std::optional<PathViolation> validate_quant_path(std::span<const QuantConfig> path);

}  // namespace synetgy::quant
