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
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "synetgy/quant.hpp"
#include "synetgy/tensor.hpp"

namespace synetgy::net {

enum class LayerKind { conv1x1, maxpool, shift, global_pool, fc };

const char* to_string(LayerKind kind);
LayerKind layer_kind_from_string(std::string_view s);

struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::conv1x1;
  int in_channels = 0;
  int out_channels = 0;
  int in_height = 0;
  int in_width = 0;
  int out_height = 0;
  int out_width = 0;
  int stride = 1;

  bool operator==(const LayerSpec&) const = default;
};

enum class BlockKind { basic, downsample };

// A two-branch block. Basic blocks feed the second half of the input
// channels to the residual branch and pass the first half through. Downsample
// blocks feed the whole input to both branches.
struct BlockSpec {
  std::string name;
  BlockKind kind = BlockKind::basic;
  int in_channels = 0;
  int out_channels = 0;
  int spatial = 0;  // input height == width
  std::vector<LayerSpec> skip;      // empty for basic blocks
  std::vector<LayerSpec> residual;
};

struct StageConfig {
  int out_channels = 0;
  int basic_blocks = 0;  // after the leading downsample block

  bool operator==(const StageConfig&) const = default;
};

// Knobs of the macro structure. Defaults give DiracDeltaNet.
struct NetworkConfig {
  int input_size = 224;
  int input_channels = 3;
  int stem1_channels = 32;
  int stem2_channels = 64;
  std::vector<StageConfig> stages{{128, 3}, {256, 7}, {512, 3}};
  int conv5_channels = 1024;
  int num_classes = 1000;

  bool operator==(const NetworkConfig&) const = default;
};

struct NetworkSpec {
  NetworkConfig config;
  std::vector<LayerSpec> stem;
  std::vector<BlockSpec> blocks;
  LayerSpec conv5;
  LayerSpec global_pool;
  LayerSpec fc;

  // Every 1x1 conv in execution order: stem, then per block skip before
  // residual, then conv5. The FC layer is not included.
  std::vector<const LayerSpec*> conv_layers() const;
  // Every layer in execution order, FC last.
  std::vector<const LayerSpec*> all_layers() const;
};

// Builds the graph and checks shape chaining. Throws GraphError for configs
// that cannot chain (odd sizes, channel counts not divisible by 4, ...).
NetworkSpec build_network(const NetworkConfig& config);
NetworkSpec build_diracdeltanet();

// Throws GraphError naming the first layer whose input does not match its
// producer.
void check_shape_chain(const NetworkSpec& spec);

struct LayerCount {
  std::string name;
  std::string group;  // "stem", "stage2", ..., "conv5", "fc"
  std::int64_t params = 0;
  std::int64_t macs = 0;
};

struct Counts {
  std::int64_t params = 0;
  std::int64_t macs = 0;
  std::vector<LayerCount> layers;

  Counts subtotal(std::string_view group) const;
};

// 1x1 conv and FC: params = IC * OC (no bias), MACs = H_out * W_out * IC * OC.
// Pool, shift and shuffle are free.
Counts count_params_macs(const NetworkSpec& spec);

struct ConvLayerParams {
  std::string name;
  WeightMatrix weights;
  quant::LayerQuantParams quant;
  quant::ThresholdTable table;
};

struct ModelBundle {
  NetworkSpec spec;
  quant::NetworkQuantParams net;
  quant::QuantConfig config{4, 4};
  std::vector<ConvLayerParams> convs;  // parallel to spec.conv_layers()
  WeightMatrix fc;
  double fc_weight_scale = 1.0 / 15.0;

  const ConvLayerParams& conv(std::string_view name) const;
  // Throws GraphError when weights or tables do not match the graph.
  void validate() const;
};

// Uniform random weight codes; alpha drawn so activations spread over the
// 16 levels instead of saturating.
ModelBundle random_bundle(const NetworkSpec& spec, std::uint64_t seed, double s = 1.0);

// Manifest (manifest.json) plus one sealed blob per weight matrix and table.
nlohmann::json network_config_json(const NetworkConfig& cfg);
NetworkConfig network_config_from_json(const nlohmann::json& j, const std::string& where);

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& dir);
ModelBundle load_bundle(const std::filesystem::path& dir);

// Host-side tail shared by both engines: global average pool, requantize to
// 4-bit codes, FC accumulators to logits.
std::vector<Code> pooled_codes(const FeatureMap& last, const quant::NetworkQuantParams& net);
std::vector<double> logits_from_accumulators(std::span<const Accumulator> acc,
                                             const ModelBundle& bundle);

// Lowest index wins ties.
int argmax(std::span<const double> v);

struct InferenceResult {
  std::vector<double> logits;
  int top1 = 0;
};

// Reference forward pass over the integer ops.
InferenceResult forward(const ModelBundle& bundle, const FeatureMap& input);

// Activations of the full precision path.
struct RealMap {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> values;

  double at(int y, int x, int c) const {
    return values[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

// Real weights per layer name ("fc" included), OC x IC row major.
using FloatWeights = std::map<std::string, std::vector<double>, std::less<>>;

FloatWeights dequantized_weights(const ModelBundle& bundle);

// code * s / (2^ka - 1) for every element.
RealMap dequantize(const FeatureMap& fm, const quant::NetworkQuantParams& net);

// Real 1x1 conv followed by the unquantized activation clip(x, 0, alpha) / alpha * s.
RealMap float_conv_act(const RealMap& in, std::span<const double> weights, int out_channels,
                       const quant::LayerQuantParams& layer,
                       const quant::NetworkQuantParams& net);

// Same graph as forward() with real arithmetic. Uses the bundle only for the
// graph, alpha and s.
std::vector<double> float_forward(const ModelBundle& bundle, const FloatWeights& weights,
                                  const FeatureMap& input);

}  // namespace synetgy::net
