#pragma once

#include <span>
#include <vector>

namespace drivepred::features {

struct Spectrum {
  std::vector<double> frequency;  // Hz, bins k = 1..n/2
  std::vector<double> power;      // one-sided; sums to the mean-removed signal power
};

// One-sided power spectrum of the mean-removed signal, DC excluded. Power is
// scaled so that sum(power) == (1/n) * sum((x - mean)^2).
Spectrum power_spectrum(std::span<const double> x, double rate_hz);

struct SpectralFeatures {
  double gcf = 0.0;   // gravity center of frequency
  double rmsf = 0.0;  // root mean square frequency
  double msf = 0.0;   // mean square frequency
  double stdf = 0.0;  // standard deviation of frequency
};

SpectralFeatures dft_features(std::span<const double> x, double rate_hz);

}  // namespace drivepred::features
