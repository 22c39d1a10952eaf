#include "drivepred/features/wavelet.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "drivepred/common/errors.hpp"

namespace drivepred::features {

namespace {

struct D4 {
  double h[4];
  double g[4];
  D4() {
    const double s3 = std::sqrt(3.0);
    const double norm = 4.0 * std::sqrt(2.0);
    h[0] = (1 + s3) / norm;
    h[1] = (3 + s3) / norm;
    h[2] = (3 - s3) / norm;
    h[3] = (1 - s3) / norm;
    for (int k = 0; k < 4; ++k) g[k] = ((k % 2) ? -1.0 : 1.0) * h[3 - k];
  }
};

const D4& d4() {
  static const D4 filters;
  return filters;
}

}  // namespace

std::vector<std::vector<double>> dwt_d4(std::span<const double> x, int levels) {
  if (levels < 1) throw SizeError("dwt needs at least one level");
  std::vector<double> approx(x.begin(), x.end());
  std::vector<std::vector<double>> bands;
  const auto& f = d4();
  for (int level = 0; level < levels; ++level) {
    if (approx.size() < 2) throw SizeError("signal too short for requested wavelet levels");
    if (approx.size() % 2) approx.push_back(approx.back());
    const std::size_t n = approx.size();
    std::vector<double> a(n / 2), d(n / 2);
    for (std::size_t i = 0; i < n / 2; ++i) {
      double sa = 0.0, sd = 0.0;
      for (int k = 0; k < 4; ++k) {
        const double v = approx[(2 * i + k) % n];
        sa += f.h[k] * v;
        sd += f.g[k] * v;
      }
      a[i] = sa;
      d[i] = sd;
    }
    bands.push_back(std::move(d));
    approx = std::move(a);
  }
  bands.push_back(std::move(approx));
  return bands;
}

double normalized_entropy(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) return 0.0;
  double h = 0.0;
  for (double w : weights) {
    if (w <= 0.0) continue;
    const double p = w / total;
    h -= p * std::log(p);
  }
  return std::max(0.0, h);
}

WaveletFeatures dwt_features(std::span<const double> x, int levels) {
  if (x.size() < 16) throw SizeError("dwt_features needs at least 16 samples");
  const auto bands = dwt_d4(x, levels);

  std::vector<double> energy;
  std::size_t width = 0;
  double max_abs = 0.0;
  for (const auto& b : bands) {
    double e = 0.0;
    for (double v : b) {
      e += v * v;
      max_abs = std::max(max_abs, std::abs(v));
    }
    energy.push_back(e);
    width = std::max(width, b.size());
  }
  WaveletFeatures out;
  if (max_abs == 0.0) return out;
  // Coefficients at rounding level relative to the largest one carry no
  // energy; this keeps constants (pure approximation band) at exactly zero.
  const double floor = 1e-24 * max_abs * max_abs;
  for (auto& e : energy) {
    if (e <= floor * static_cast<double>(width)) e = 0.0;
  }
  out.wee = normalized_entropy(energy);

  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(bands.size()), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < bands.size(); ++r) {
    if (energy[r] == 0.0) continue;
    for (std::size_t c = 0; c < bands[r].size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = bands[r][c];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const Eigen::VectorXd sv = svd.singularValues();
  std::vector<double> s(sv.data(), sv.data() + sv.size());
  const double smax = s.empty() ? 0.0 : s.front();
  for (auto& v : s) {
    if (v <= 1e-12 * smax) v = 0.0;
  }
  out.wse = normalized_entropy(s);
  return out;
}

}  // namespace drivepred::features
