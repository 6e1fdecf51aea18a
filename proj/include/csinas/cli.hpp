// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "csinas/channel.hpp"
#include "csinas/evalnet.hpp"
#include "csinas/supernet.hpp"

namespace csinas {

// Resolved pipeline configuration. One global seed drives everything: the
// scene, codec, split, search, and evaluation streams are derived from it, so
// a config file plus this binary pins every artifact byte.
struct RunConfig {
  std::string out_dir = "run";
  int jobs = 1;
  uint64_t seed = 1;
  uint64_t count = 2000;  // dataset sample count
  double cr = 0.25;
  int bits = 8;
  ScenarioConfig scenario;
  SearchConfig search;
  ArchitectureConfig eval;  // genotype field unused; filled per candidate
};

// Parse a config file: either a plain RunConfig JSON object or a manifest
// written by a previous run (its "config" object is used).
RunConfig load_run_config(const std::string& path);
std::string run_config_to_json(const RunConfig& cfg);

// Entry point behind the binary; returns the process exit code.
// args excludes the program name.
int cli_run(const std::vector<std::string>& args);

}  // namespace csinas
