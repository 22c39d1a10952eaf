#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "drivepred/seqmodel/checkpoint.hpp"
#include "drivepred/seqmodel/network.hpp"
#include "drivepred/trajdata/track.hpp"

namespace drivepred::train_eval {

// One model sample cut from a SceneWindow.
struct Sample {
  std::int64_t track_id = 0;
  std::int64_t start_frame = 0;
  Eigen::MatrixXd observation;  // observation frames x 14 channels, raw units
  double anchor = 0.0;          // last observed TV velocity
  double last_position = 0.0;   // last observed TV position
  Eigen::VectorXd behavior;     // quantized key indicators, may be empty
  int preference = -1;          // preference label, -1 if unknown
  std::vector<double> future;   // future velocity
};

Sample sample_from_window(const trajdata::SceneWindow& w);

// Channel statistics over every observation frame of the given samples, and
// behavior statistics for DBV. Zero spreads are stored as 1.
seqmodel::Normalization compute_normalization(const std::vector<Sample>& samples,
                                              const std::vector<std::size_t>& indices,
                                              const seqmodel::ModelConfig& config);

// Normalized batch for the listed samples. DP gets a one-hot preference label.
seqmodel::Batch assemble(const std::vector<Sample>& samples, const std::vector<std::size_t>& indices,
                         const seqmodel::Normalization& norm, const seqmodel::ModelConfig& config,
                         bool with_target = true);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

// Track-level split: every window of a track lands on one side. Validation
// gets round(tracks * val / (train + val)) tracks, at least one.
Split split(const std::vector<Sample>& samples, int train_ratio, int val_ratio, std::uint64_t seed);

}  // namespace drivepred::train_eval
