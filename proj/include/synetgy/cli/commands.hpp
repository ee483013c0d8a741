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
#include <iosfwd>
#include <string>

#include "synetgy/accel/process.hpp"
#include "synetgy/net.hpp"

namespace synetgy::cli {

enum class Engine { reference, simulator };
Engine engine_from_string(const std::string& s);

struct RunConfig {
  std::string command;
  std::filesystem::path bundle;
  std::filesystem::path input;
  std::filesystem::path weights;  // quantize: directory of float blobs
  std::filesystem::path cost_config;
  std::filesystem::path out;
  int batch = 16;
  Engine engine = Engine::reference;
  std::uint64_t seed = 0;
  accel::SchedulerKind scheduler = accel::SchedulerKind::single_thread;
  int k_w = 4;
  int k_a = 4;
  double s = 1.0;

  // batch >= 1 (ConfigError); read paths must exist (IoError).
  void validate() const;
};

void cmd_build(const RunConfig& rc, std::ostream& out);
void cmd_quantize(const RunConfig& rc, std::ostream& out);
void cmd_infer(const RunConfig& rc, std::ostream& out);
void cmd_simulate(const RunConfig& rc, std::ostream& out);
void cmd_report(const RunConfig& rc, std::ostream& out);
void cmd_validate(const RunConfig& rc, std::ostream& out);
void cmd_make_input(const RunConfig& rc, std::ostream& out);

// Float weights directory: optional network.json (bundle manifest "network"
// layout, default DiracDeltaNet), optional alphas.json ({"layer": alpha,
// "default": alpha}), and <layer>.f32 per conv plus fc.f32, each u32 OC,
// u32 IC, then OC*IC little-endian f32 rows.
void save_float_weights(const std::filesystem::path& dir, const net::NetworkConfig& config,
                        const net::FloatWeights& weights);
net::ModelBundle quantize_float_weights(const std::filesystem::path& dir, int k_w, int k_a,
                                        double s);

// Logits file: little-endian f64 per class.
void write_logits(const std::filesystem::path& path, std::span<const double> logits);
std::vector<double> read_logits(const std::filesystem::path& path);

// Parses argv and runs one command. Returns 0 on success, 1 on a validation
// error, 2 on an I/O error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace synetgy::cli
