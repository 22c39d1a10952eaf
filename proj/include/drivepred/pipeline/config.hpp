#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "drivepred/pipeline/preference_stage.hpp"
#include "drivepred/seqmodel/config.hpp"
#include "drivepred/train_eval/trainer.hpp"
#include "drivepred/trajdata/synth.hpp"

namespace drivepred::pipeline {

struct PipelineConfig {
  std::uint64_t seed = 1;  // every stage seed derives from this
  std::string artifact_dir = "artifacts";
  std::string tracks_csv;  // external ingest input; empty means the gen-synth output

  trajdata::SynthConfig synth;
  int window_stride = 10;
  PreferenceSettings preference;
  seqmodel::ModelConfig model;  // behavior_dim and preference_count come from the cluster stage
  train_eval::TrainConfig train;
  std::vector<std::string> variants = {"LSTM-det", "LSTMMD", "LSTMMD-DP", "LSTMMD-DBV"};
  int traces = 500;
  int predict_window = 0;  // index into the validation windows
  int explain_instances = 20;
  int explain_background = 200;
  int explain_permutations = 200;

  nlohmann::json to_json() const;
};

// Full tree of defaults; every accepted key appears here.
nlohmann::json default_config_json();

// Merges j over the defaults. Unknown keys and type mismatches raise
// ConfigError naming the key path.
PipelineConfig config_from_json(const nlohmann::json& j);

// "a.b.c=value"; value is parsed as JSON when it parses, else taken as a string.
void apply_override(nlohmann::json& j, const std::string& assignment);

// Reads the file (empty path gives the defaults), applies overrides in order.
PipelineConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

}  // namespace drivepred::pipeline
