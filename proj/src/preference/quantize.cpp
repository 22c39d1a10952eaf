#include "drivepred/preference/quantize.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "drivepred/common/errors.hpp"
#include "drivepred/preference/kmedoids.hpp"

namespace drivepred::preference {

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw SizeError("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<int> select_key_indicators(const ImportanceRanking& ranking, const Eigen::MatrixXd& x,
                                       const SelectOptions& options) {
  std::vector<int> picked;
  double cumulative = 0.0;
  for (int c : ranking.order) {
    if (cumulative >= options.cumulative_threshold - 1e-12) break;
    picked.push_back(c);
    cumulative += ranking.importance[c];
  }
  std::vector<int> out;
  for (int c : picked) {
    if (c >= x.cols()) throw ShapeError("ranking refers to a column outside the matrix");
    std::vector<double> col(x.rows()), mag(x.rows());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      col[r] = x(r, c);
      mag[r] = std::abs(x(r, c));
    }
    const double spread = percentile(col, 0.95) - percentile(col, 0.05);
    if (spread <= options.spread_floor * percentile(mag, 0.5)) continue;
    out.push_back(c);
    if (options.max_count > 0 && static_cast<int>(out.size()) == options.max_count) break;
  }
  return out;
}

std::vector<double> quantize_indicator(std::span<const double> values, int k_min, int k_max, std::uint64_t seed) {
  const std::set<double> distinct(values.begin(), values.end());
  if (distinct.size() < 4) {
    throw DegenerateError("quantizer needs at least 4 distinct values, got " + std::to_string(distinct.size()));
  }
  const int n = static_cast<int>(values.size());
  k_max = std::min(k_max, n - 1);
  Eigen::MatrixXd dist(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) dist(i, j) = std::abs(values[i] - values[j]);
  }
  KMedoidsOptions opt;
  opt.seed = seed;
  const auto model = cluster_kmedoids_dist(dist, k_min, k_max, opt);
  std::vector<double> centroids;
  for (int m : model.medoids) centroids.push_back(values[m]);
  std::sort(centroids.begin(), centroids.end());
  centroids.erase(std::unique(centroids.begin(), centroids.end()), centroids.end());
  return centroids;
}

double nearest_centroid(double value, std::span<const double> centroids) {
  if (centroids.empty()) throw SizeError("no centroids");
  double best = centroids[0];
  double best_d = std::abs(value - best);
  for (std::size_t i = 1; i < centroids.size(); ++i) {
    const double d = std::abs(value - centroids[i]);
    if (d < best_d || (d == best_d && centroids[i] < best)) {
      best = centroids[i];
      best_d = d;
    }
  }
  return best;
}

features::IndicatorSet impute_absent(const features::IndicatorSet& s) {
  using features::Indicator;
  features::IndicatorSet out = s;
  for (int i = 0; i < features::kIndicatorCount; ++i) {
    if (!std::isnan(out.values[i])) continue;
    const auto ind = static_cast<Indicator>(i);
    out.values[i] = ind == Indicator::kMinThw ? kHeadwayCap : ind == Indicator::kMinTtc ? kTtcCap : 0.0;
  }
  out[Indicator::kMinThw] = std::min(out[Indicator::kMinThw], kHeadwayCap);
  out[Indicator::kMinTtc] = std::min(out[Indicator::kMinTtc], kTtcCap);
  return out;
}

Eigen::RowVectorXd indicator_row(const features::IndicatorSet& s) {
  const auto filled = impute_absent(s);
  Eigen::RowVectorXd row(features::kIndicatorCount);
  for (int i = 0; i < features::kIndicatorCount; ++i) row(i) = filled.values[i];
  return row;
}

std::vector<double> behavior_vector(const features::IndicatorSet& indicators, const QuantizerSet& quantizers) {
  if (quantizers.names.size() != quantizers.centroids.size()) throw SchemaError("quantizer set is inconsistent");
  const auto filled = impute_absent(indicators);
  std::vector<double> out;
  out.reserve(quantizers.names.size());
  for (std::size_t k = 0; k < quantizers.names.size(); ++k) {
    const auto idx = features::indicator_index(quantizers.names[k]);
    if (!idx) throw SchemaError("no quantizer source for indicator " + quantizers.names[k]);
    out.push_back(nearest_centroid(filled.values[*idx], quantizers.centroids[k]));
  }
  return out;
}

std::vector<double> requantize(std::span<const double> values, const QuantizerSet& quantizers) {
  if (values.size() != quantizers.centroids.size()) throw SchemaError("vector length does not match quantizers");
  std::vector<double> out(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) out[k] = nearest_centroid(values[k], quantizers.centroids[k]);
  return out;
}

}  // namespace drivepred::preference
