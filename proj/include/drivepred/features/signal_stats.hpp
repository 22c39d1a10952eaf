#pragma once

#include <optional>
#include <span>

namespace drivepred::features {

struct TimeStats {
  double max = 0.0;
  double min = 0.0;
  double mean = 0.0;
  double variance = 0.0;  // population (divide by n)
};

TimeStats time_stats(std::span<const double> x);

// Mean absolute deviation around the mean.
double mad(std::span<const double> x);

inline constexpr double kTsvEpsilon = 0.1;  // m/s

// Sample standard deviation of 100*ln(x_i/x_{i-1}) over consecutive pairs with
// both values above kTsvEpsilon. Empty when fewer than two ratios survive.
std::optional<double> tsv(std::span<const double> x, double epsilon = kTsvEpsilon);

}  // namespace drivepred::features
