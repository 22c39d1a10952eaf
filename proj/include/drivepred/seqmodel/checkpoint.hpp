#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <iosfwd>

#include "json.hpp"
#include "drivepred/seqmodel/config.hpp"
#include "drivepred/seqmodel/params.hpp"

namespace drivepred::seqmodel {

// z-score statistics from the training split.
struct Normalization {
  Eigen::VectorXd input_mean;
  Eigen::VectorXd input_sd;
  Eigen::VectorXd context_mean;  // empty without context
  Eigen::VectorXd context_sd;
};

struct Checkpoint {
  ModelConfig config;
  Normalization norm;
  nlohmann::json extra = nlohmann::json::object();  // quantizer references, training metadata
  Params params;
};

inline constexpr int kCheckpointVersion = 1;

nlohmann::json config_to_json(const ModelConfig& c);
// Unknown keys are rejected with ConfigError.
ModelConfig config_from_json(const nlohmann::json& j);

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace drivepred::seqmodel
