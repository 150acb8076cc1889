#pragma once

#include <string>

#include "trajnet/preprocess.hpp"
#include "trajnet/sampler.hpp"
#include "trajnet/simulate.hpp"

namespace trajnet {

/// Everything a run reads from its INI file. Sections: [data], [model],
/// [mcmc], [output] and, for `simulate`, [simulate]. Unknown sections and
/// keys are rejected.
struct RunConfig {
  DataPaths data;
  PreprocessOptions preprocess;
  SamplerConfig sampler;
  SimulationConfig simulation;
  std::string out_dir = "trajnet_out";
};

/// Parses INI text. Relative data and output paths are resolved against `base_dir`.
RunConfig parse_config(const std::string& text, const std::string& source, const std::string& base_dir = "");

RunConfig load_config(const std::string& path);

/// INI text for `config` (every key written explicitly).
std::string render_config(const RunConfig& config);

}  // namespace trajnet
