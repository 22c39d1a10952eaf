#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "drivepred/pipeline/config.hpp"

namespace drivepred::pipeline {

// Pipeline order.
extern const std::vector<std::string> kStageNames;

struct StageOutcome {
  std::string stage;
  bool skipped = false;               // inputs, config and outputs unchanged
  std::vector<std::string> outputs;   // relative to the artifact dir
};

// Runs one stage inside cfg.artifact_dir, holding the directory lock.
// Throws DependencyError naming the earliest upstream stage whose outputs
// are missing, ConfigError for an unknown stage name.
StageOutcome run_stage(const std::string& stage, const PipelineConfig& cfg, std::ostream& log);

// Every stage in order; gen-synth is left out when tracks_csv is set.
std::vector<StageOutcome> run_all(const PipelineConfig& cfg, std::ostream& log);

}  // namespace drivepred::pipeline
