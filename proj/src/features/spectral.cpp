#include "drivepred/features/spectral.hpp"

#include <cmath>
#include <numbers>

#include "drivepred/common/errors.hpp"

namespace drivepred::features {

Spectrum power_spectrum(std::span<const double> x, double rate_hz) {
  const std::size_t n = x.size();
  if (n < 2) throw SizeError("power_spectrum needs at least 2 samples");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);

  Spectrum s;
  const std::size_t half = n / 2;
  s.frequency.reserve(half);
  s.power.reserve(half);
  const double nn = static_cast<double>(n);
  std::vector<double> cos_table(n), sin_table(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(j) / nn;
    cos_table[j] = std::cos(angle);
    sin_table[j] = std::sin(angle);
  }
  for (std::size_t k = 1; k <= half; ++k) {
    double re = 0.0, im = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const std::size_t j = (k * t) % n;
      const double v = x[t] - mean;
      re += v * cos_table[j];
      im += v * sin_table[j];
    }
    const double mag2 = re * re + im * im;
    const bool nyquist = (n % 2 == 0) && k == half;
    s.frequency.push_back(static_cast<double>(k) * rate_hz / nn);
    s.power.push_back((nyquist ? 1.0 : 2.0) * mag2 / (nn * nn));
  }
  return s;
}

SpectralFeatures dft_features(std::span<const double> x, double rate_hz) {
  if (x.size() < 4) throw SizeError("dft_features needs at least 4 samples");
  const Spectrum s = power_spectrum(x, rate_hz);
  double total = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t k = 0; k < s.power.size(); ++k) {
    total += s.power[k];
    m1 += s.frequency[k] * s.power[k];
    m2 += s.frequency[k] * s.frequency[k] * s.power[k];
  }
  SpectralFeatures f;
  // Treat numerically flat spectra (mean-removed constants) as empty.
  double energy = 0.0;
  for (double v : x) energy += v * v;
  if (total <= 1e-24 * std::max(1.0, energy)) return f;
  f.gcf = m1 / total;
  f.msf = m2 / total;
  f.rmsf = std::sqrt(f.msf);
  double spread = 0.0;
  for (std::size_t k = 0; k < s.power.size(); ++k) {
    const double d = s.frequency[k] - f.gcf;
    spread += d * d * s.power[k];
  }
  f.stdf = std::sqrt(spread / total);
  return f;
}

}  // namespace drivepred::features
