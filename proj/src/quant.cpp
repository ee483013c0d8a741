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

#include "synetgy/quant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "synetgy/errors.hpp"

namespace synetgy::quant {

namespace {

void check_bits(int k, const char* what) {
  if (k < 1 || k > 32) {
    throw DomainError(std::string(what) + " bit width " + std::to_string(k) +
                      " outside [1, 32]");
  }
}

}  // namespace

void LayerQuantParams::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("alpha must be positive");
  if (!(weight_scale > 0.0) || !std::isfinite(weight_scale)) {
    throw DomainError("weight_scale must be positive");
  }
}

void NetworkQuantParams::validate() const {
  if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("s must be positive");
  check_bits(k_w, "weight");
  check_bits(k_a, "activation");
}

std::uint64_t level_count(int k) {
  check_bits(k, "quantizer");
  return (std::uint64_t{1} << k) - 1;
}

std::uint32_t quantize_uniform(double x, int k) {
  auto levels = level_count(k);
  if (!(x >= 0.0 && x <= 1.0)) {
    std::ostringstream msg;
    msg << "quantize_uniform: " << x << " is outside [0, 1]";
    throw DomainError(msg.str());
  }
  auto code = static_cast<std::uint64_t>(std::floor(x * static_cast<double>(levels) + 0.5));
  return static_cast<std::uint32_t>(std::min(code, levels));
}

QuantizedWeights quantize_weights(std::span<const double> w, int k) {
  check_bits(k, "weight");
  if (w.empty()) throw DomainError("quantize_weights: empty tensor");
  double tmax = 0.0;
  for (double v : w) tmax = std::max(tmax, std::abs(std::tanh(v)));
  if (tmax == 0.0) {
    throw DomainError("quantize_weights: degenerate scale, every weight is zero");
  }
  QuantizedWeights q;
  q.bits = k;
  q.tanh_max = tmax;
  q.weight_scale = 1.0 / static_cast<double>(level_count(k));
  q.codes.reserve(w.size());
  for (double v : w) {
    double u = std::tanh(v) / (2.0 * tmax) + 0.5;
    q.codes.push_back(quantize_uniform(std::clamp(u, 0.0, 1.0), k));
  }
  return q;
}

double dequantize_weight(std::uint32_t code, int k) {
  auto l = static_cast<double>(level_count(k));
  return (2.0 * code - l) / l;
}

double pact_clip(double x, double alpha) { return std::clamp(x, 0.0, alpha); }

double pact_clip_closed_form(double x, double alpha) {
  double a = std::abs(alpha);
  return (std::abs(x) - std::abs(x - a) + a) / 2.0;
}

ActivationQuant quantize_activation(double x, const LayerQuantParams& layer,
                                    const NetworkQuantParams& net) {
  double y = pact_clip(x, layer.alpha) / layer.alpha;
  ActivationQuant q;
  q.code = quantize_uniform(std::min(y, 1.0), net.k_a);
  q.value = static_cast<double>(q.code) / static_cast<double>(level_count(net.k_a)) * net.s;
  return q;
}

double accumulator_scale(const LayerQuantParams& layer, const NetworkQuantParams& net) {
  return layer.weight_scale * net.s / static_cast<double>(level_count(net.k_a));
}

ThresholdTable::ThresholdTable(const std::array<std::int32_t, kSize>& t) : t_(t) {
  for (int i = 1; i < kSize; ++i) {
    if (t_[i] <= t_[i - 1]) {
      throw ConfigError("threshold table not strictly increasing at index " +
                        std::to_string(i));
    }
  }
}

ThresholdTable build_threshold_table(const LayerQuantParams& layer,
                                     const NetworkQuantParams& net) {
  layer.validate();
  net.validate();
  if (net.k_a != 4) {
    throw ConfigError("threshold tables encode 4-bit activations, k_a is " +
                      std::to_string(net.k_a));
  }
  const double f = accumulator_scale(layer, net);
  auto code_of = [&](std::int64_t acc) {
    return quantize_activation(static_cast<double>(acc) * f, layer, net).code;
  };

  // code_of is monotone in acc (every step is a monotone float op), so each
  // threshold is the first accumulator reaching its level.
  constexpr std::int64_t lo = -(std::int64_t{1} << 30);
  constexpr std::int64_t hi = std::int64_t{1} << 30;
  std::array<std::int32_t, ThresholdTable::kSize> t{};
  for (int level = 1; level <= ThresholdTable::kSize; ++level) {
    if (code_of(hi) < static_cast<std::uint32_t>(level)) {
      throw ConfigError("accumulator scale too small: level " + std::to_string(level) +
                        " is unreachable");
    }
    std::int64_t a = lo, b = hi;  // code_of(a) < level <= code_of(b)
    while (b - a > 1) {
      std::int64_t m = a + (b - a) / 2;
      if (code_of(m) >= static_cast<std::uint32_t>(level)) b = m; else a = m;
    }
    t[level - 1] = static_cast<std::int32_t>(b);
  }
  for (int i = 1; i < ThresholdTable::kSize; ++i) {
    if (t[i] <= t[i - 1]) {
      throw ConfigError("derived thresholds are not monotone: levels " + std::to_string(i) +
                        " and " + std::to_string(i + 1) + " share accumulator " +
                        std::to_string(t[i]));
    }
  }
  return ThresholdTable(t);
}

std::optional<PathViolation> validate_quant_path(std::span<const QuantConfig> path) {
  if (path.empty()) throw DomainError("validate_quant_path: empty path");
  if (path.front() != QuantConfig{32, 32}) {
    return PathViolation{0, "path must start at the full precision point (32, 32)"};
  }
  for (std::size_t i = 0; i < path.size(); ++i) {
    const auto& c = path[i];
    if (c.w_bits < 1 || c.w_bits > 32 || c.a_bits < 1 || c.a_bits > 32) {
      return PathViolation{i, "bit width outside [1, 32]"};
    }
    if (i == 0) continue;
    const auto& p = path[i - 1];
    if (c.w_bits > p.w_bits) {
      return PathViolation{i, "weight bits increase from " + std::to_string(p.w_bits) +
                                  " to " + std::to_string(c.w_bits)};
    }
    if (c.a_bits > p.a_bits) {
      return PathViolation{i, "activation bits increase from " + std::to_string(p.a_bits) +
                                  " to " + std::to_string(c.a_bits)};
    }
  }
  return std::nullopt;
}

}  // namespace synetgy::quant
