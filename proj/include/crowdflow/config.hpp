#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "crowdflow/density.hpp"
#include "crowdflow/frameio.hpp"
#include "crowdflow/optflow.hpp"
#include "crowdflow/sampler.hpp"
#include "crowdflow/synth.hpp"

namespace crowdflow {

struct PipelineConfig {
  std::string input;  // frame directory or .y4m file
  std::filesystem::path output_dir = "out";
  Preprocess frame;
  SamplerConfig sampler;
  FlowParams flow;
  KernelSpec kernel;
  /// Blob threshold as a fraction of the single-kernel peak.
  double blob_tau_relative = 0.25;
  FusionConfig fusion;
  std::size_t eval_slack = 3;
  CorpusSpec synth;
  std::size_t workers = 1;

  PipelineConfig();

  /// Throws ValidationError naming the dotted key at fault.
  void validate() const;
  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

/// Flat "dotted.key = value" text. '#' starts a comment line. Unknown keys,
/// duplicate keys and malformed values are ValidationErrors; keys left out
/// keep their defaults.
PipelineConfig parse_config(std::string_view text);
PipelineConfig load_config(const std::filesystem::path& path);

/// Every key, in a fixed order, with values that parse back exactly.
std::string serialize_config(const PipelineConfig& config);

std::vector<std::string> config_keys();

}  // namespace crowdflow
