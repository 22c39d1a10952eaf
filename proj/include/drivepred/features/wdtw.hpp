#pragma once

#include <span>

namespace drivepred::features {

struct WdtwOptions {
  double steepness = 0.05;  // g
  double weight_cap = 1.0;  // w_max
};

// Logistic phase-difference weight w(d) = w_max / (1 + exp(-g (d - m/2))).
double wdtw_weight(double phase_gap, double half_length, const WdtwOptions& options);

// Weighted dynamic time warping: minimum over monotone alignments of
// sum w(|i-j|) (a_i - b_j)^2, with m = max(|a|, |b|). Throws SizeError on an
// empty input.
double wdtw(std::span<const double> a, std::span<const double> b, const WdtwOptions& options = {});

}  // namespace drivepred::features
