#pragma once

#include <span>
#include <vector>

namespace drivepred::features {

inline constexpr int kWaveletLevels = 3;

// Periodized multi-level Daubechies-4 (four-tap) decomposition. Returns the
// bands ordered finest detail first: {cD1, cD2, ..., cDL, cAL}. Odd-length
// intermediate signals are extended by repeating their last sample.
std::vector<std::vector<double>> dwt_d4(std::span<const double> x, int levels = kWaveletLevels);

struct WaveletFeatures {
  double wee = 0.0;  // wavelet energy entropy
  double wse = 0.0;  // wavelet singular entropy
};

WaveletFeatures dwt_features(std::span<const double> x, int levels = kWaveletLevels);

// Shannon entropy (natural log) of a non-negative weight vector after
// normalization; zero for an all-zero vector.
double normalized_entropy(std::span<const double> weights);

}  // namespace drivepred::features
