#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "drivepred/features/indicators.hpp"
#include "drivepred/preference/forest.hpp"

namespace drivepred::preference {

struct SelectOptions {
  double cumulative_threshold = 0.9;
  double spread_floor = 0.05;  // relative to the median absolute value
  int max_count = 0;           // 0 keeps every survivor
};

// Columns taken in descending importance until the cumulative importance
// reaches the threshold, minus columns whose p95 - p5 range does not exceed
// spread_floor * median |value|. x supplies the column values.
std::vector<int> select_key_indicators(const ImportanceRanking& ranking, const Eigen::MatrixXd& x,
                                       const SelectOptions& options = {});

// Linear-interpolated percentile, q in [0, 1].
double percentile(std::vector<double> values, double q);

// 1-D k-medoids over K in [k_min, k_max] with silhouette selection. Returns
// ascending centroids. Throws DegenerateError on fewer than 4 distinct values.
std::vector<double> quantize_indicator(std::span<const double> values, int k_min = 2, int k_max = 5,
                                       std::uint64_t seed = 1);

// Nearest centroid; an exact tie goes to the lower centroid.
double nearest_centroid(double value, std::span<const double> centroids);

struct QuantizerSet {
  std::vector<std::string> names;              // selected indicators in vector order
  std::vector<std::vector<double>> centroids;  // ascending, per name
};

// Replaces absent (NaN) indicators with their caps: no lead means an
// unbounded headway, no closing event an unbounded time-to-collision.
inline constexpr double kHeadwayCap = 10.0;
inline constexpr double kTtcCap = 30.0;
features::IndicatorSet impute_absent(const features::IndicatorSet& s);
Eigen::RowVectorXd indicator_row(const features::IndicatorSet& s);

// Quantized key-indicator vector for one window. Throws SchemaError when a
// quantizer name is not an indicator.
std::vector<double> behavior_vector(const features::IndicatorSet& indicators, const QuantizerSet& quantizers);
// Same, applied to a vector already laid out in quantizer order.
std::vector<double> requantize(std::span<const double> values, const QuantizerSet& quantizers);

}  // namespace drivepred::preference
