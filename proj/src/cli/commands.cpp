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

#include "synetgy/cli/commands.hpp"

#include <bit>
#include <cstring>
#include <iomanip>
#include <ostream>
#include <system_error>

#include "CLI11.hpp"
#include "json.hpp"
#include "synetgy/accel/cost.hpp"
#include "synetgy/accel/engine.hpp"
#include "synetgy/errors.hpp"
#include "synetgy/io.hpp"
#include "synetgy/random.hpp"

namespace synetgy::cli {

using nlohmann::json;

Engine engine_from_string(const std::string& s) {
  if (s == "reference") return Engine::reference;
  if (s == "simulator") return Engine::simulator;
  throw ConfigError("unknown engine '" + s + "' (expected reference or simulator)");
}

namespace {

void require_path(const std::filesystem::path& p, const char* flag) {
  if (p.empty()) throw ConfigError(std::string(flag) + " is required");
  std::error_code ec;
  if (!std::filesystem::exists(p, ec)) throw IoError(std::string(flag) + ": " + p.string() + " does not exist");
}

void require_out(const RunConfig& rc) {
  if (rc.out.empty()) throw ConfigError("--out is required");
}

FeatureMap read_input(const RunConfig& rc, const net::NetworkConfig& cfg) {
  const auto fm = decode_tensor_blob(io::read_file(rc.input));
  if (fm.height() != cfg.input_size || fm.width() != cfg.input_size ||
      fm.channels() != cfg.input_channels) {
    throw ShapeError("input tensor is " + std::to_string(fm.height()) + "x" +
                     std::to_string(fm.width()) + "x" + std::to_string(fm.channels()) +
                     ", bundle expects " + std::to_string(cfg.input_size) + "x" +
                     std::to_string(cfg.input_size) + "x" + std::to_string(cfg.input_channels));
  }
  return fm;
}

void print_counts(const net::NetworkSpec& spec, std::ostream& out) {
  const auto counts = net::count_params_macs(spec);
  const auto stem = counts.subtotal("stem");
  out << "stem: " << stem.params << " params, " << std::fixed << std::setprecision(3)
      << stem.macs / 1e6 << " M MACs\n";
  out << "total: " << counts.params << " params, " << counts.macs / 1e6 << " M MACs\n";
}

}  // namespace

void RunConfig::validate() const {
  if (batch < 1) throw ConfigError("--batch must be >= 1, got " + std::to_string(batch));
  const bool reads_bundle = command == "infer" || command == "simulate" || command == "validate";
  if (reads_bundle) require_path(bundle, "--bundle");
  if (command == "infer" || command == "simulate") require_path(input, "--input");
  if (command == "quantize") require_path(weights, "--weights");
  if (command == "report") {
    if (!bundle.empty()) require_path(bundle, "--bundle");
    if (!cost_config.empty()) require_path(cost_config, "--cost-config");
  }
  if (command == "make-input" && !bundle.empty()) require_path(bundle, "--bundle");
}

void cmd_build(const RunConfig& rc, std::ostream& out) {
  require_out(rc);
  const auto bundle = net::random_bundle(net::build_diracdeltanet(), rc.seed, rc.s);
  net::save_bundle(bundle, rc.out);
  out << "wrote bundle " << rc.out.string() << " (seed " << rc.seed << ")\n";
  print_counts(bundle.spec, out);
}

void write_logits(const std::filesystem::path& path, std::span<const double> logits) {
  io::ByteWriter w;
  for (double v : logits) w.f64(v);
  io::write_file(path, w.data());
}

std::vector<double> read_logits(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  if (bytes.size() % 8 != 0) throw LengthError("logits file: size is not a multiple of 8");
  io::ByteReader r(bytes, "logits");
  std::vector<double> v;
  while (r.remaining() > 0) v.push_back(r.f64("logit"));
  return v;
}

void save_float_weights(const std::filesystem::path& dir, const net::NetworkConfig& config,
                        const net::FloatWeights& weights) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  io::write_text(dir / "network.json", net::network_config_json(config).dump(2) + "\n");
  const auto spec = net::build_network(config);
  auto layers = spec.conv_layers();
  layers.push_back(&spec.fc);
  for (const auto* l : layers) {
    const auto it = weights.find(l->name);
    if (it == weights.end()) throw GraphError("float weights: no entry for layer " + l->name);
    io::ByteWriter w;
    w.u32(static_cast<std::uint32_t>(l->out_channels));
    w.u32(static_cast<std::uint32_t>(l->in_channels));
    for (double v : it->second) w.f32(static_cast<float>(v));
    io::write_file(dir / (l->name + ".f32"), w.data());
  }
}

namespace {

std::vector<double> read_float_layer(const std::filesystem::path& dir, const net::LayerSpec& l) {
  const auto file = l.name + ".f32";
  const auto bytes = io::read_file(dir / file);
  io::ByteReader r(bytes, file);
  const auto oc = r.u32("out_channels");
  const auto ic = r.u32("in_channels");
  if (oc != static_cast<std::uint32_t>(l.out_channels) ||
      ic != static_cast<std::uint32_t>(l.in_channels)) {
    throw ShapeError(file + ": shape " + std::to_string(oc) + "x" + std::to_string(ic) +
                     ", graph expects " + std::to_string(l.out_channels) + "x" +
                     std::to_string(l.in_channels));
  }
  std::vector<double> w(static_cast<std::size_t>(oc) * ic);
  for (auto& v : w) v = r.f32("weights");
  if (r.remaining() != 0) throw LengthError(file + ": trailing bytes after weights");
  return w;
}

WeightMatrix quantize_layer(const std::vector<double>& w, const net::LayerSpec& l, int k_w,
                            double& weight_scale) {
  quant::QuantizedWeights q;
  try {
    q = quant::quantize_weights(w, k_w);
  } catch (const DomainError& e) {
    throw DomainError("layer " + l.name + ": " + e.what());
  }
  weight_scale = q.weight_scale;
  std::vector<Code> codes(q.codes.begin(), q.codes.end());
  return WeightMatrix(l.out_channels, l.in_channels, std::move(codes));
}

}  // namespace

net::ModelBundle quantize_float_weights(const std::filesystem::path& dir, int k_w, int k_a,
                                        double s) {
  if (k_w != 4 || k_a != 4) {
    throw ConfigError("unsupported bit width k_w=" + std::to_string(k_w) + " k_a=" +
                      std::to_string(k_a) + ": bundles store 4-bit codes only");
  }
  net::NetworkConfig cfg;
  if (std::filesystem::exists(dir / "network.json")) {
    json j;
    try {
      j = json::parse(io::read_text(dir / "network.json"));
    } catch (const json::parse_error& e) {
      throw ValidationError(std::string("network.json: not valid JSON: ") + e.what());
    }
    cfg = net::network_config_from_json(j, "network.json");
  }
  json alphas = json::object();
  if (std::filesystem::exists(dir / "alphas.json")) {
    try {
      alphas = json::parse(io::read_text(dir / "alphas.json"));
    } catch (const json::parse_error& e) {
      throw ValidationError(std::string("alphas.json: not valid JSON: ") + e.what());
    }
  }
  auto alpha_for = [&](const std::string& name) {
    const auto& a = alphas.contains(name) ? alphas[name] : alphas.value("default", json(1.0));
    if (!a.is_number()) throw ValidationError("alphas.json: alpha for " + name + " is not a number");
    return a.get<double>();
  };

  net::ModelBundle b;
  b.spec = net::build_network(cfg);
  b.net = {s, k_w, k_a};
  b.net.validate();
  b.config = {k_w, k_a};
  for (const auto* l : b.spec.conv_layers()) {
    net::ConvLayerParams p;
    p.name = l->name;
    p.weights = quantize_layer(read_float_layer(dir, *l), *l, k_w, p.quant.weight_scale);
    p.quant.alpha = alpha_for(l->name);
    p.quant.validate();
    p.table = quant::build_threshold_table(p.quant, b.net);
    b.convs.push_back(std::move(p));
  }
  b.fc = quantize_layer(read_float_layer(dir, b.spec.fc), b.spec.fc, k_w, b.fc_weight_scale);
  b.validate();
  return b;
}

void cmd_quantize(const RunConfig& rc, std::ostream& out) {
  require_out(rc);
  const auto b = quantize_float_weights(rc.weights, rc.k_w, rc.k_a, rc.s);
  net::save_bundle(b, rc.out);
  out << "wrote bundle " << rc.out.string() << " C_{" << b.config.w_bits << "," << b.config.a_bits
      << "}\n";
}

void cmd_infer(const RunConfig& rc, std::ostream& out) {
  const auto b = net::load_bundle(rc.bundle);
  const auto in = read_input(rc, b.spec.config);
  std::vector<double> logits;
  int top1 = 0;
  if (rc.engine == Engine::reference) {
    auto r = net::forward(b, in);
    logits = std::move(r.logits);
    top1 = r.top1;
  } else {
    auto r = accel::simulate_forward(b, in, rc.scheduler);
    logits = std::move(r.logits);
    top1 = r.top1;
  }
  if (!rc.out.empty()) write_logits(rc.out, logits);
  out << "top1 " << top1 << "\n";
}

void cmd_simulate(const RunConfig& rc, std::ostream& out) {
  const auto b = net::load_bundle(rc.bundle);
  const auto in = read_input(rc, b.spec.config);
  const auto sim = accel::simulate_forward(b, in, rc.scheduler);
  const auto ref = net::forward(b, in);
  const bool match = sim.logits == ref.logits;

  json calls = json::array();
  for (const auto& c : sim.calls) {
    const auto& s = c.stats;
    calls.push_back({{"name", c.name},
                     {"group", c.group},
                     {"conv_iterations", s.conv_iterations},
                     {"macs", s.macs},
                     {"max_abs_acc", s.max_abs_acc},
                     {"pool_max_occupancy", s.pool_max_occupancy},
                     {"shift_max_occupancy", s.shift_max_occupancy},
                     {"dram_read_bytes", s.dram_read_bytes},
                     {"dram_write_bytes", s.dram_write_bytes},
                     {"weight_bytes", s.weight_bytes},
                     {"fifo_high_water", s.fifo_high_water}});
  }
  json j{{"scheduler", accel::to_string(rc.scheduler)},
         {"top1", sim.top1},
         {"matches_reference", match},
         {"max_abs_acc", sim.max_abs_acc},
         {"host_memcpy_bytes", sim.host_memcpy_bytes},
         {"subgraphs", std::move(calls)},
         {"logits", sim.logits}};
  if (!rc.out.empty()) io::write_text(rc.out, j.dump(2) + "\n");
  out << "top1 " << sim.top1 << "\n"
      << sim.calls.size() << " accelerator calls, max |acc| " << sim.max_abs_acc
      << ", host memcpy " << sim.host_memcpy_bytes << " bytes\n"
      << "reference logits " << (match ? "match" : "DIFFER") << "\n";
  if (!match) throw ValidationError("simulator logits differ from the reference engine");
}

void cmd_report(const RunConfig& rc, std::ostream& out) {
  const auto spec = rc.bundle.empty() ? net::build_diracdeltanet() : net::load_bundle(rc.bundle).spec;
  const auto params = rc.cost_config.empty() ? accel::CostModelParams{}
                                             : accel::load_cost_config(rc.cost_config);
  const auto report = accel::estimate_cycles(spec, params, rc.batch);
  const auto text = accel::to_text(report);
  if (!rc.out.empty()) {
    auto base = rc.out;
    io::write_text(base.replace_extension(".json"), accel::to_json(report).dump(2) + "\n");
    io::write_text(base.replace_extension(".txt"), text);
  }
  out << text;
}

void cmd_validate(const RunConfig& rc, std::ostream& out) {
  const auto b = net::load_bundle(rc.bundle);
  net::check_shape_chain(b.spec);
  out << "bundle " << rc.bundle.string() << " OK: " << b.convs.size() << " conv layers, C_{"
      << b.config.w_bits << "," << b.config.a_bits << "}\n";
  print_counts(b.spec, out);
}

void cmd_make_input(const RunConfig& rc, std::ostream& out) {
  require_out(rc);
  const auto cfg = rc.bundle.empty() ? net::NetworkConfig{} : net::load_bundle(rc.bundle).spec.config;
  Rng rng(rc.seed);
  const auto fm = random_feature_map(rng, cfg.input_size, cfg.input_size, cfg.input_channels);
  io::write_file(rc.out, encode_tensor_blob(fm));
  out << "wrote " << cfg.input_size << "x" << cfg.input_size << "x" << cfg.input_channels
      << " input " << rc.out.string() << "\n";
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"4-bit DiracDeltaNet inference engine and accelerator simulator"};
  app.require_subcommand(1);
  RunConfig rc;
  std::string engine = "reference";
  std::string scheduler = "single-thread";

  auto add_bundle = [&](CLI::App* c, const char* help) { c->add_option("--bundle", rc.bundle, help); };
  auto add_scheduler = [&](CLI::App* c) {
    c->add_option("--scheduler", scheduler, "single-thread or concurrent");
  };

  auto* build = app.add_subcommand("build", "write a randomly initialised bundle");
  build->add_option("--out", rc.out, "bundle directory");
  build->add_option("--seed", rc.seed, "random seed");

  auto* quantize = app.add_subcommand("quantize", "quantize float weights into a bundle");
  quantize->add_option("--weights", rc.weights, "float weights directory");
  quantize->add_option("--out", rc.out, "bundle directory");
  quantize->add_option("--k-w", rc.k_w, "weight bits");
  quantize->add_option("--k-a", rc.k_a, "activation bits");
  quantize->add_option("--s", rc.s, "shared activation scale");

  auto* infer = app.add_subcommand("infer", "classify one input tensor");
  add_bundle(infer, "bundle directory");
  infer->add_option("--input", rc.input, "input tensor blob");
  infer->add_option("--engine", engine, "reference or simulator");
  infer->add_option("--out", rc.out, "logits file (f64 little endian)");
  add_scheduler(infer);

  auto* simulate = app.add_subcommand("simulate", "run the accelerator simulator and check it");
  add_bundle(simulate, "bundle directory");
  simulate->add_option("--input", rc.input, "input tensor blob");
  simulate->add_option("--out", rc.out, "JSON statistics file");
  add_scheduler(simulate);

  auto* report = app.add_subcommand("report", "cost model and roofline report");
  add_bundle(report, "bundle directory (default: full network)");
  report->add_option("--cost-config", rc.cost_config, "key = value cost parameters");
  report->add_option("--batch", rc.batch, "batch size");
  report->add_option("--out", rc.out, "output prefix for .json and .txt");

  auto* validate = app.add_subcommand("validate", "check a bundle");
  add_bundle(validate, "bundle directory");

  auto* make_input = app.add_subcommand("make-input", "write a random input tensor blob");
  add_bundle(make_input, "bundle whose input shape to use");
  make_input->add_option("--out", rc.out, "tensor blob path");
  make_input->add_option("--seed", rc.seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 1;
  }

  try {
    rc.command = app.get_subcommands().front()->get_name();
    rc.engine = engine_from_string(engine);
    rc.scheduler = accel::scheduler_from_string(scheduler);
    rc.validate();
    if (rc.command == "build") cmd_build(rc, out);
    else if (rc.command == "quantize") cmd_quantize(rc, out);
    else if (rc.command == "infer") cmd_infer(rc, out);
    else if (rc.command == "simulate") cmd_simulate(rc, out);
    else if (rc.command == "report") cmd_report(rc, out);
    else if (rc.command == "validate") cmd_validate(rc, out);
    else if (rc.command == "make-input") cmd_make_input(rc, out);
    return 0;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "io error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace synetgy::cli
