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

#include "synetgy/net.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <unordered_map>

#include "json.hpp"

#include "synetgy/errors.hpp"
#include "synetgy/io.hpp"
#include "synetgy/ops.hpp"
#include "synetgy/random.hpp"

namespace synetgy::net {

namespace {

using nlohmann::json;

LayerSpec conv(std::string name, int ic, int oc, int size) {
  return {std::move(name), LayerKind::conv1x1, ic, oc, size, size, size, size, 1};
}

LayerSpec pool(std::string name, int c, int size) {
  return {std::move(name), LayerKind::maxpool, c, c, size, size, size / 2, size / 2, 2};
}

LayerSpec shift_layer(std::string name, int c, int size) {
  return {std::move(name), LayerKind::shift, c, c, size, size, size, size, 1};
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw GraphError(msg);
}

void check_layer_link(const LayerSpec& layer, int c, int h, int w) {
  if (layer.in_channels != c || layer.in_height != h || layer.in_width != w) {
    throw GraphError("layer " + layer.name + " expects " + std::to_string(layer.in_height) +
                     "x" + std::to_string(layer.in_width) + "x" +
                     std::to_string(layer.in_channels) + " input, producer gives " +
                     std::to_string(h) + "x" + std::to_string(w) + "x" + std::to_string(c));
  }
  if (layer.kind == LayerKind::maxpool) {
    require(layer.out_height == h / 2 && layer.out_width == w / 2 &&
                layer.out_channels == c,
            "layer " + layer.name + ": pool output dims inconsistent");
  } else if (layer.kind != LayerKind::global_pool && layer.kind != LayerKind::fc) {
    require(layer.out_height == h && layer.out_width == w,
            "layer " + layer.name + ": spatial dims must be preserved");
  }
  if (layer.kind != LayerKind::conv1x1 && layer.kind != LayerKind::fc) {
    require(layer.out_channels == c, "layer " + layer.name + ": channel count must be preserved");
  }
}

// Walks a layer chain and returns its output (c, h, w).
std::array<int, 3> check_chain(const std::vector<LayerSpec>& layers, int c, int h, int w) {
  for (const auto& l : layers) {
    check_layer_link(l, c, h, w);
    c = l.out_channels;
    h = l.out_height;
    w = l.out_width;
  }
  return {c, h, w};
}

}  // namespace

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv1x1: return "conv1x1";
    case LayerKind::maxpool: return "maxpool";
    case LayerKind::shift: return "shift";
    case LayerKind::global_pool: return "global_pool";
    case LayerKind::fc: return "fc";
  }
  return "?";
}

LayerKind layer_kind_from_string(std::string_view s) {
  for (auto k : {LayerKind::conv1x1, LayerKind::maxpool, LayerKind::shift,
                 LayerKind::global_pool, LayerKind::fc}) {
    if (s == to_string(k)) return k;
  }
  throw ValidationError("unknown layer kind '" + std::string(s) + "'");
}

std::vector<const LayerSpec*> NetworkSpec::conv_layers() const {
  std::vector<const LayerSpec*> out;
  for (const auto* l : all_layers()) {
    if (l->kind == LayerKind::conv1x1) out.push_back(l);
  }
  return out;
}

std::vector<const LayerSpec*> NetworkSpec::all_layers() const {
  std::vector<const LayerSpec*> out;
  for (const auto& l : stem) out.push_back(&l);
  for (const auto& b : blocks) {
    for (const auto& l : b.skip) out.push_back(&l);
    for (const auto& l : b.residual) out.push_back(&l);
  }
  out.push_back(&conv5);
  out.push_back(&global_pool);
  out.push_back(&fc);
  return out;
}

NetworkSpec build_network(const NetworkConfig& cfg) {
  require(cfg.input_channels > 0 && cfg.stem1_channels > 0 && cfg.stem2_channels > 0 &&
              cfg.conv5_channels > 0 && cfg.num_classes > 0,
          "network config: channel counts must be positive");
  const int reduction = 4 << cfg.stages.size();
  require(cfg.input_size > 0 && cfg.input_size % reduction == 0,
          "network config: input size " + std::to_string(cfg.input_size) +
              " must be a multiple of " + std::to_string(reduction));

  NetworkSpec spec;
  spec.config = cfg;
  int size = cfg.input_size;
  spec.stem.push_back(conv("conv1", cfg.input_channels, cfg.stem1_channels, size));
  spec.stem.push_back(pool("pool1", cfg.stem1_channels, size));
  size /= 2;
  spec.stem.push_back(shift_layer("shift1", cfg.stem1_channels, size));
  spec.stem.push_back(conv("conv2", cfg.stem1_channels, cfg.stem2_channels, size));
  spec.stem.push_back(pool("pool2", cfg.stem2_channels, size));
  size /= 2;
  spec.stem.push_back(shift_layer("shift2", cfg.stem2_channels, size));

  int c = cfg.stem2_channels;
  for (std::size_t si = 0; si < cfg.stages.size(); ++si) {
    const auto& st = cfg.stages[si];
    const std::string stage = "stage" + std::to_string(si + 2);
    require(st.out_channels == 2 * c,
            stage + ": output channels must double the input (" + std::to_string(c) + " -> " +
                std::to_string(st.out_channels) + ")");
    require(st.out_channels % 4 == 0, stage + ": channel count must be divisible by 4");
    require(st.basic_blocks >= 0, stage + ": negative repeat count");

    BlockSpec ds;
    ds.name = stage + ".block0";
    ds.kind = BlockKind::downsample;
    ds.in_channels = c;
    ds.out_channels = st.out_channels;
    ds.spatial = size;
    const int half_out = st.out_channels / 2;
    ds.skip = {pool(ds.name + ".skip.pool", c, size),
               shift_layer(ds.name + ".skip.shift", c, size / 2),
               conv(ds.name + ".skip.conv", c, half_out, size / 2)};
    ds.residual = {conv(ds.name + ".res.conv1", c, st.out_channels, size),
                   pool(ds.name + ".res.pool", st.out_channels, size),
                   shift_layer(ds.name + ".res.shift", st.out_channels, size / 2),
                   conv(ds.name + ".res.conv2", st.out_channels, half_out, size / 2)};
    spec.blocks.push_back(std::move(ds));
    size /= 2;
    c = st.out_channels;

    for (int r = 0; r < st.basic_blocks; ++r) {
      BlockSpec b;
      b.name = stage + ".block" + std::to_string(r + 1);
      b.kind = BlockKind::basic;
      b.in_channels = c;
      b.out_channels = c;
      b.spatial = size;
      b.residual = {conv(b.name + ".res.conv1", c / 2, c, size),
                    shift_layer(b.name + ".res.shift", c, size),
                    conv(b.name + ".res.conv2", c, c / 2, size)};
      spec.blocks.push_back(std::move(b));
    }
  }

  spec.conv5 = conv("conv5", c, cfg.conv5_channels, size);
  spec.global_pool = {"global_pool", LayerKind::global_pool, cfg.conv5_channels,
                      cfg.conv5_channels, size, size, 1, 1, size};
  spec.fc = {"fc", LayerKind::fc, cfg.conv5_channels, cfg.num_classes, 1, 1, 1, 1, 1};
  check_shape_chain(spec);
  return spec;
}

NetworkSpec build_diracdeltanet() { return build_network(NetworkConfig{}); }

void check_shape_chain(const NetworkSpec& spec) {
  const auto& cfg = spec.config;
  auto [c, h, w] = check_chain(spec.stem, cfg.input_channels, cfg.input_size, cfg.input_size);
  for (const auto& b : spec.blocks) {
    require(b.in_channels == c && b.spatial == h && b.spatial == w,
            "block " + b.name + " input does not match its producer");
    require(b.out_channels % 2 == 0, "block " + b.name + ": odd output channel count");
    const int half = b.out_channels / 2;
    if (b.kind == BlockKind::basic) {
      require(b.skip.empty(), "block " + b.name + ": basic blocks have no skip layers");
      require(b.in_channels == b.out_channels, "block " + b.name + ": basic block changes width");
      auto r = check_chain(b.residual, c / 2, h, w);
      require(r == std::array<int, 3>{half, h, w},
              "block " + b.name + ": residual output does not match the skip half");
    } else {
      require(b.out_channels == 2 * b.in_channels,
              "block " + b.name + ": downsample must double the channels");
      auto s = check_chain(b.skip, c, h, w);
      auto r = check_chain(b.residual, c, h, w);
      require(s == std::array<int, 3>{half, h / 2, w / 2} && r == s,
              "block " + b.name + ": branch outputs do not line up");
      h /= 2;
      w /= 2;
    }
    c = b.out_channels;
  }
  check_layer_link(spec.conv5, c, h, w);
  c = spec.conv5.out_channels;
  require(spec.global_pool.in_channels == c && spec.global_pool.in_height == h &&
              spec.global_pool.in_width == w,
          "layer global_pool does not match conv5");
  require(spec.fc.in_channels == spec.global_pool.out_channels,
          "layer fc expects " + std::to_string(spec.fc.in_channels) + " inputs, pool gives " +
              std::to_string(spec.global_pool.out_channels));
}

Counts Counts::subtotal(std::string_view group) const {
  Counts out;
  for (const auto& l : layers) {
    if (l.group != group) continue;
    out.params += l.params;
    out.macs += l.macs;
    out.layers.push_back(l);
  }
  return out;
}

Counts count_params_macs(const NetworkSpec& spec) {
  Counts total;
  auto add = [&](const LayerSpec& l, const std::string& group) {
    LayerCount lc{l.name, group, 0, 0};
    if (l.kind == LayerKind::conv1x1 || l.kind == LayerKind::fc) {
      lc.params = static_cast<std::int64_t>(l.in_channels) * l.out_channels;
      lc.macs = static_cast<std::int64_t>(l.out_height) * l.out_width * lc.params;
    }
    total.params += lc.params;
    total.macs += lc.macs;
    total.layers.push_back(std::move(lc));
  };
  for (const auto& l : spec.stem) add(l, "stem");
  for (const auto& b : spec.blocks) {
    const auto group = b.name.substr(0, b.name.find('.'));
    for (const auto& l : b.skip) add(l, group);
    for (const auto& l : b.residual) add(l, group);
  }
  add(spec.conv5, "conv5");
  add(spec.global_pool, "global_pool");
  add(spec.fc, "fc");
  return total;
}

const ConvLayerParams& ModelBundle::conv(std::string_view name) const {
  for (const auto& c : convs) {
    if (c.name == name) return c;
  }
  throw GraphError("bundle has no conv layer named '" + std::string(name) + "'");
}

void ModelBundle::validate() const {
  check_shape_chain(spec);
  net.validate();
  if (net.k_w != 4 || net.k_a != 4) {
    throw ConfigError("bundles hold 4-bit weights and activations only");
  }
  const auto layers = spec.conv_layers();
  if (layers.size() != convs.size()) {
    throw GraphError("bundle has " + std::to_string(convs.size()) + " conv layers, graph has " +
                     std::to_string(layers.size()));
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = *layers[i];
    const auto& p = convs[i];
    if (p.name != l.name) throw GraphError("conv layer " + std::to_string(i) + " is '" + p.name + "', graph expects '" + l.name + "'");
    if (p.weights.out_channels() != l.out_channels || p.weights.in_channels() != l.in_channels) {
      throw GraphError("layer " + l.name + ": weights are " +
                       std::to_string(p.weights.out_channels()) + "x" +
                       std::to_string(p.weights.in_channels()) + ", graph expects " +
                       std::to_string(l.out_channels) + "x" + std::to_string(l.in_channels));
    }
    p.quant.validate();
  }
  if (fc.out_channels() != spec.fc.out_channels || fc.in_channels() != spec.fc.in_channels) {
    throw GraphError("layer fc: weight shape does not match the graph");
  }
  if (!(fc_weight_scale > 0.0)) throw DomainError("fc weight scale must be positive");
}

ModelBundle random_bundle(const NetworkSpec& spec, std::uint64_t seed, double s) {
  Rng rng(seed);
  ModelBundle b;
  b.spec = spec;
  b.net = {s, 4, 4};
  for (const auto* l : spec.conv_layers()) {
    ConvLayerParams p;
    p.name = l->name;
    p.weights = random_weights(rng, l->out_channels, l->in_channels);
    p.quant.weight_scale = 1.0 / 15.0;
    // E[(2c-15)^2] = 85 for uniform codes; typical activations have
    // E[a^2] around 40.
    const double sigma = std::sqrt(85.0 * 40.0 * l->in_channels);
    p.quant.alpha = quant::accumulator_scale(p.quant, b.net) * sigma * rng.uniform(0.5, 2.0);
    p.table = quant::build_threshold_table(p.quant, b.net);
    b.convs.push_back(std::move(p));
  }
  b.fc = random_weights(rng, spec.fc.out_channels, spec.fc.in_channels);
  b.fc_weight_scale = 1.0 / 15.0;
  b.validate();
  return b;
}

// ---------------------------------------------------------------------------
// Bundle serialization

namespace {

std::vector<std::uint8_t> encode_weights(const WeightMatrix& w) {
  io::ByteWriter out;
  out.u32(static_cast<std::uint32_t>(w.out_channels()));
  out.u32(static_cast<std::uint32_t>(w.in_channels()));
  out.bytes(pack(w.codes()));
  out.seal();
  return out.take();
}

WeightMatrix decode_weights(std::span<const std::uint8_t> blob, const std::string& what) {
  auto body = io::verify_sealed(blob, what);
  io::ByteReader r(body, what);
  auto oc = r.u32("out_channels");
  auto ic = r.u32("in_channels");
  if (oc == 0 || ic == 0 || oc > (1u << 16) || ic > (1u << 16)) {
    throw ValidationError(what + ": bad weight dims " + std::to_string(oc) + "x" + std::to_string(ic));
  }
  std::size_t n = static_cast<std::size_t>(oc) * ic;
  auto payload = r.bytes(packed_size(n), "payload");
  if (r.remaining() != 0) throw LengthError(what + ": trailing bytes after payload");
  return WeightMatrix(static_cast<int>(oc), static_cast<int>(ic), unpack(payload, n));
}

std::vector<std::uint8_t> encode_table(const quant::ThresholdTable& t) {
  io::ByteWriter out;
  for (auto v : t.thresholds()) out.i32(v);
  out.seal();
  return out.take();
}

quant::ThresholdTable decode_table(std::span<const std::uint8_t> blob, const std::string& what) {
  auto body = io::verify_sealed(blob, what);
  io::ByteReader r(body, what);
  std::array<std::int32_t, quant::ThresholdTable::kSize> t{};
  for (auto& v : t) v = r.i32("threshold");
  if (r.remaining() != 0) throw LengthError(what + ": trailing bytes after thresholds");
  return quant::ThresholdTable(t);
}

json layer_json(const LayerSpec& l) {
  return {{"name", l.name},          {"kind", to_string(l.kind)}, {"ic", l.in_channels},
          {"oc", l.out_channels},    {"h", l.in_height},          {"w", l.in_width},
          {"stride", l.stride}};
}

template <class T>
T field(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(where + ": missing or malformed field '" + key + "'");
  }
}

std::string blob_name(const std::string& dir, const std::string& layer) {
  return dir + "/" + layer + ".bin";
}

}  // namespace

json network_config_json(const NetworkConfig& cfg) {
  json stages = json::array();
  for (const auto& s : cfg.stages) {
    stages.push_back({{"out_channels", s.out_channels}, {"basic_blocks", s.basic_blocks}});
  }
  return {{"input_size", cfg.input_size},
          {"input_channels", cfg.input_channels},
          {"stem_channels", {cfg.stem1_channels, cfg.stem2_channels}},
          {"stages", stages},
          {"conv5_channels", cfg.conv5_channels},
          {"num_classes", cfg.num_classes}};
}

NetworkConfig network_config_from_json(const json& jn, const std::string& where) {
  NetworkConfig cfg;
  cfg.input_size = field<int>(jn, "input_size", where);
  cfg.input_channels = field<int>(jn, "input_channels", where);
  auto stem = field<std::vector<int>>(jn, "stem_channels", where);
  if (stem.size() != 2) throw ValidationError(where + ": field 'stem_channels' needs 2 entries");
  cfg.stem1_channels = stem[0];
  cfg.stem2_channels = stem[1];
  if (!jn.contains("stages") || !jn["stages"].is_array()) {
    throw ValidationError(where + ": field 'stages' missing or not an array");
  }
  cfg.stages.clear();
  for (const auto& s : jn["stages"]) {
    cfg.stages.push_back({field<int>(s, "out_channels", where + ".stages"),
                          field<int>(s, "basic_blocks", where + ".stages")});
  }
  cfg.conv5_channels = field<int>(jn, "conv5_channels", where);
  cfg.num_classes = field<int>(jn, "num_classes", where);
  return cfg;
}

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& dir) {
  bundle.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir / "weights", ec);
  std::filesystem::create_directories(dir / "thresholds", ec);
  if (ec) throw IoError("cannot create bundle directory " + dir.string() + ": " + ec.message());

  json manifest;
  manifest["format"] = "synetgy.bundle";
  manifest["version"] = 1;
  manifest["network"] = network_config_json(bundle.spec.config);
  manifest["quant"] = {{"s", bundle.net.s},
                       {"k_w", bundle.net.k_w},
                       {"k_a", bundle.net.k_a},
                       {"config",
                        "C_{" + std::to_string(bundle.config.w_bits) + "," +
                            std::to_string(bundle.config.a_bits) + "}"}};

  json layers = json::array();
  std::size_t conv_index = 0;
  for (const auto* l : bundle.spec.all_layers()) {
    json j = layer_json(*l);
    if (l->kind == LayerKind::conv1x1) {
      const auto& p = bundle.convs[conv_index++];
      j["alpha"] = p.quant.alpha;
      j["weight_scale"] = p.quant.weight_scale;
      j["weights"] = blob_name("weights", l->name);
      j["thresholds"] = blob_name("thresholds", l->name);
      io::write_file(dir / j["weights"].get<std::string>(), encode_weights(p.weights));
      io::write_file(dir / j["thresholds"].get<std::string>(), encode_table(p.table));
    } else if (l->kind == LayerKind::fc) {
      j["weight_scale"] = bundle.fc_weight_scale;
      j["weights"] = blob_name("weights", l->name);
      io::write_file(dir / j["weights"].get<std::string>(), encode_weights(bundle.fc));
    }
    layers.push_back(std::move(j));
  }
  manifest["layers"] = std::move(layers);
  io::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

ModelBundle load_bundle(const std::filesystem::path& dir) {
  const auto text = io::read_text(dir / "manifest.json");
  json m;
  try {
    m = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("manifest.json: not valid JSON: ") + e.what());
  }
  if (field<std::string>(m, "format", "manifest") != "synetgy.bundle") {
    throw ValidationError("manifest: field 'format' is not synetgy.bundle");
  }
  if (field<int>(m, "version", "manifest") != 1) {
    throw ValidationError("manifest: unsupported field 'version'");
  }

  const json& jn = m.contains("network") ? m["network"] : json();
  const auto cfg = network_config_from_json(jn, "manifest.network");

  ModelBundle b;
  b.spec = build_network(cfg);
  const json& jq = m.contains("quant") ? m["quant"] : json();
  b.net.s = field<double>(jq, "s", "manifest.quant");
  b.net.k_w = field<int>(jq, "k_w", "manifest.quant");
  b.net.k_a = field<int>(jq, "k_a", "manifest.quant");
  b.config = {b.net.k_w, b.net.k_a};

  const json& jl = m.contains("layers") ? m["layers"] : json();
  const auto layers = b.spec.all_layers();
  if (!jl.is_array() || jl.size() != layers.size()) {
    throw GraphError("manifest: layer list does not match the graph built from 'network'");
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = *layers[i];
    const auto& j = jl[i];
    const std::string where = "manifest layer " + std::to_string(i);
    auto name = field<std::string>(j, "name", where);
    if (name != l.name) throw GraphError(where + ": name '" + name + "', graph expects '" + l.name + "'");
    if (layer_kind_from_string(field<std::string>(j, "kind", where)) != l.kind ||
        field<int>(j, "ic", where) != l.in_channels || field<int>(j, "oc", where) != l.out_channels ||
        field<int>(j, "h", where) != l.in_height || field<int>(j, "w", where) != l.in_width ||
        field<int>(j, "stride", where) != l.stride) {
      throw GraphError("layer " + l.name + ": manifest shape does not match the graph");
    }
    if (l.kind == LayerKind::conv1x1) {
      ConvLayerParams p;
      p.name = l.name;
      p.quant.alpha = field<double>(j, "alpha", where);
      p.quant.weight_scale = field<double>(j, "weight_scale", where);
      auto wpath = field<std::string>(j, "weights", where);
      auto tpath = field<std::string>(j, "thresholds", where);
      p.weights = decode_weights(io::read_file(dir / wpath), wpath);
      p.table = decode_table(io::read_file(dir / tpath), tpath);
      b.convs.push_back(std::move(p));
    } else if (l.kind == LayerKind::fc) {
      b.fc_weight_scale = field<double>(j, "weight_scale", where);
      auto wpath = field<std::string>(j, "weights", where);
      b.fc = decode_weights(io::read_file(dir / wpath), wpath);
    }
  }
  b.validate();
  return b;
}

// ---------------------------------------------------------------------------
// Inference

std::vector<Code> pooled_codes(const FeatureMap& last, const quant::NetworkQuantParams& net) {
  const double count = static_cast<double>(last.height()) * last.width();
  const double levels = static_cast<double>(quant::level_count(net.k_a));
  std::vector<Code> out;
  for (auto sum : ops::channel_sums(last)) {
    // mean dequantized value / s, always in [0, 1]
    out.push_back(static_cast<Code>(quant::quantize_uniform(sum / (count * levels), net.k_a)));
  }
  return out;
}

std::vector<double> logits_from_accumulators(std::span<const Accumulator> acc,
                                             const ModelBundle& bundle) {
  const double scale = bundle.fc_weight_scale * bundle.net.s /
                       static_cast<double>(quant::level_count(bundle.net.k_a));
  std::vector<double> out;
  out.reserve(acc.size());
  for (auto a : acc) out.push_back(static_cast<double>(a) * scale);
  return out;
}

int argmax(std::span<const double> v) {
  int best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = static_cast<int>(i);
  }
  return best;
}

namespace {

FeatureMap run_chain(const std::vector<LayerSpec>& layers, FeatureMap x,
                     const std::unordered_map<std::string, const ConvLayerParams*>& params) {
  for (const auto& l : layers) {
    switch (l.kind) {
      case LayerKind::conv1x1: {
        const auto* p = params.at(l.name);
        x = ops::activation_quant(ops::conv1x1_ref(x, p->weights), p->table);
        break;
      }
      case LayerKind::maxpool: x = ops::maxpool2x2(x); break;
      case LayerKind::shift: x = ops::shift(x); break;
      default: throw GraphError("layer " + l.name + " cannot appear inside a chain");
    }
  }
  return x;
}

}  // namespace

InferenceResult forward(const ModelBundle& bundle, const FeatureMap& input) {
  const auto& cfg = bundle.spec.config;
  if (input.height() != cfg.input_size || input.width() != cfg.input_size ||
      input.channels() != cfg.input_channels) {
    throw ShapeError("input is " + std::to_string(input.height()) + "x" +
                     std::to_string(input.width()) + "x" + std::to_string(input.channels()) +
                     ", network expects " + std::to_string(cfg.input_size) + "x" +
                     std::to_string(cfg.input_size) + "x" + std::to_string(cfg.input_channels));
  }
  std::unordered_map<std::string, const ConvLayerParams*> params;
  for (const auto& c : bundle.convs) params[c.name] = &c;

  FeatureMap x = run_chain(bundle.spec.stem, input, params);
  for (const auto& b : bundle.spec.blocks) {
    if (b.kind == BlockKind::basic) {
      auto [skip, res_in] = ops::channel_split(x);
      x = ops::concat_shuffle(skip, run_chain(b.residual, res_in, params));
    } else {
      auto skip = run_chain(b.skip, x, params);
      auto res = run_chain(b.residual, x, params);
      x = ops::concat_shuffle(skip, res);
    }
  }
  x = run_chain({bundle.spec.conv5}, x, params);
  auto acc = ops::fc_bit_serial(pooled_codes(x, bundle.net), bundle.fc);
  InferenceResult r;
  r.logits = logits_from_accumulators(acc, bundle);
  r.top1 = argmax(r.logits);
  return r;
}

// ---------------------------------------------------------------------------
// Full precision path

FloatWeights dequantized_weights(const ModelBundle& bundle) {
  FloatWeights out;
  for (const auto& c : bundle.convs) {
    std::vector<double> w;
    w.reserve(c.weights.codes().size());
    for (auto code : c.weights.codes()) w.push_back(effective_weight(code) * c.quant.weight_scale);
    out[c.name] = std::move(w);
  }
  std::vector<double> fc;
  for (auto code : bundle.fc.codes()) fc.push_back(effective_weight(code) * bundle.fc_weight_scale);
  out["fc"] = std::move(fc);
  return out;
}

RealMap dequantize(const FeatureMap& fm, const quant::NetworkQuantParams& net) {
  const double step = net.s / static_cast<double>(quant::level_count(net.k_a));
  RealMap out{fm.height(), fm.width(), fm.channels(), {}};
  for (auto c : fm.codes()) out.values.push_back(c * step);
  return out;
}

RealMap float_conv_act(const RealMap& in, std::span<const double> weights, int out_channels,
                       const quant::LayerQuantParams& layer,
                       const quant::NetworkQuantParams& net) {
  const int ic_total = in.channels;
  if (weights.size() != static_cast<std::size_t>(out_channels) * ic_total) {
    throw ShapeError("float conv: weight count does not match " + std::to_string(out_channels) +
                     "x" + std::to_string(ic_total));
  }
  RealMap out{in.height, in.width, out_channels, {}};
  const std::size_t pixels = static_cast<std::size_t>(in.height) * in.width;
  out.values.resize(pixels * out_channels);
  for (std::size_t p = 0; p < pixels; ++p) {
    const double* a = in.values.data() + p * ic_total;
    for (int oc = 0; oc < out_channels; ++oc) {
      const double* w = weights.data() + static_cast<std::size_t>(oc) * ic_total;
      double x = 0.0;
      for (int ic = 0; ic < ic_total; ++ic) x += w[ic] * a[ic];
      out.values[p * out_channels + oc] = quant::pact_clip(x, layer.alpha) / layer.alpha * net.s;
    }
  }
  return out;
}

namespace {

RealMap float_pool(const RealMap& in) {
  RealMap out{in.height / 2, in.width / 2, in.channels, {}};
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      for (int c = 0; c < in.channels; ++c)
        out.values.push_back(std::max({in.at(2 * y, 2 * x, c), in.at(2 * y, 2 * x + 1, c),
                                       in.at(2 * y + 1, 2 * x, c), in.at(2 * y + 1, 2 * x + 1, c)}));
  return out;
}

RealMap float_shift(const RealMap& in) {
  RealMap out{in.height, in.width, in.channels, {}};
  for (int y = 0; y < in.height; ++y)
    for (int x = 0; x < in.width; ++x)
      for (int c = 0; c < in.channels; ++c) {
        auto d = ops::direction_of(ops::shift_for_channel(c));
        int sy = y + d.dy, sx = x + d.dx;
        bool inside = sy >= 0 && sy < in.height && sx >= 0 && sx < in.width;
        out.values.push_back(inside ? in.at(sy, sx, c) : 0.0);
      }
  return out;
}

RealMap float_slice(const RealMap& in, int begin, int count) {
  RealMap out{in.height, in.width, count, {}};
  for (int y = 0; y < in.height; ++y)
    for (int x = 0; x < in.width; ++x)
      for (int c = 0; c < count; ++c) out.values.push_back(in.at(y, x, begin + c));
  return out;
}

RealMap float_concat_shuffle(const RealMap& skip, const RealMap& res) {
  const int c = skip.channels + res.channels;
  RealMap out{skip.height, skip.width, c, {}};
  out.values.resize(static_cast<std::size_t>(skip.height) * skip.width * c);
  for (int y = 0; y < skip.height; ++y)
    for (int x = 0; x < skip.width; ++x)
      for (int k = 0; k < c; ++k) {
        double v = k < skip.channels ? skip.at(y, x, k) : res.at(y, x, k - skip.channels);
        out.values[(static_cast<std::size_t>(y) * skip.width + x) * c + ops::shuffle_destination(k, c)] = v;
      }
  return out;
}

RealMap float_chain(const std::vector<LayerSpec>& layers, RealMap x, const ModelBundle& bundle,
                    const FloatWeights& weights) {
  for (const auto& l : layers) {
    switch (l.kind) {
      case LayerKind::conv1x1: {
        auto it = weights.find(l.name);
        if (it == weights.end()) throw GraphError("no float weights for layer " + l.name);
        x = float_conv_act(x, it->second, l.out_channels, bundle.conv(l.name).quant, bundle.net);
        break;
      }
      case LayerKind::maxpool: x = float_pool(x); break;
      case LayerKind::shift: x = float_shift(x); break;
      default: throw GraphError("layer " + l.name + " cannot appear inside a chain");
    }
  }
  return x;
}

}  // namespace

std::vector<double> float_forward(const ModelBundle& bundle, const FloatWeights& weights,
                                  const FeatureMap& input) {
  const auto& spec = bundle.spec;
  if (input.height() != spec.config.input_size || input.width() != spec.config.input_size ||
      input.channels() != spec.config.input_channels) {
    throw ShapeError("float_forward: input shape does not match the network");
  }
  RealMap x = float_chain(spec.stem, dequantize(input, bundle.net), bundle, weights);
  for (const auto& b : spec.blocks) {
    if (b.kind == BlockKind::basic) {
      const int half = x.channels / 2;
      auto res = float_chain(b.residual, float_slice(x, half, half), bundle, weights);
      x = float_concat_shuffle(float_slice(x, 0, half), res);
    } else {
      auto skip = float_chain(b.skip, x, bundle, weights);
      auto res = float_chain(b.residual, x, bundle, weights);
      x = float_concat_shuffle(skip, res);
    }
  }
  x = float_chain({spec.conv5}, x, bundle, weights);

  std::vector<double> avg(static_cast<std::size_t>(x.channels), 0.0);
  for (std::size_t i = 0; i < x.values.size(); ++i) avg[i % x.channels] += x.values[i];
  for (auto& v : avg) v /= static_cast<double>(x.height) * x.width;

  auto it = weights.find("fc");
  if (it == weights.end()) throw GraphError("no float weights for layer fc");
  const int classes = spec.fc.out_channels;
  if (it->second.size() != static_cast<std::size_t>(classes) * x.channels) {
    throw ShapeError("float fc weights have the wrong size");
  }
  std::vector<double> logits(static_cast<std::size_t>(classes), 0.0);
  for (int oc = 0; oc < classes; ++oc)
    for (int ic = 0; ic < x.channels; ++ic)
      logits[oc] += it->second[static_cast<std::size_t>(oc) * x.channels + ic] * avg[ic];
  return logits;
}

}  // namespace synetgy::net
