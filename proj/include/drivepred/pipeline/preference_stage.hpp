#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "drivepred/features/indicators.hpp"
#include "drivepred/preference/forest.hpp"
#include "drivepred/preference/kmedoids.hpp"
#include "drivepred/preference/quantize.hpp"
#include "drivepred/preference/tsne.hpp"

namespace drivepred::pipeline {

struct PreferenceSettings {
  int k_min = 2;
  int k_max = 8;
  preference::TsneOptions tsne;
  preference::KMedoidsOptions kmedoids;
  preference::ForestOptions forest;
  preference::SelectOptions select{0.9, 0.05, 7};
  int quantizer_k_min = 2;
  int quantizer_k_max = 5;
  // Exact t-SNE is quadratic; larger window sets are clustered on a seeded
  // subsample and the rest labeled by the forest.
  int cluster_max = 1000;
  std::uint64_t seed = 1;
};

struct PreferenceArtifacts {
  std::vector<std::size_t> clustered;  // window indices fed to t-SNE
  Eigen::MatrixXd embedding;           // clustered.size() x 2
  double kl = 0.0;
  preference::PreferenceModel model;   // labels align with clustered
  preference::ImportanceRanking ranking;
  std::vector<std::string> selected;   // key indicators before quantization
  std::vector<std::string> dropped;    // selected but degenerate, not quantized
  preference::QuantizerSet quantizers;
  std::vector<int> labels;                   // preference label of every window
  std::vector<std::vector<double>> vectors;  // behavior vector of every window

  nlohmann::json to_json() const;
  static PreferenceArtifacts from_json(const nlohmann::json& j);
};

inline constexpr int kPreferenceArtifactVersion = 1;

// Imputed indicator matrix, one row per window.
Eigen::MatrixXd indicator_matrix(const std::vector<features::IndicatorSet>& rows);

PreferenceArtifacts identify_preferences(const std::vector<features::IndicatorSet>& rows,
                                         const PreferenceSettings& settings);

}  // namespace drivepred::pipeline
