#include "drivepred/features/signal_stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "drivepred/common/errors.hpp"

namespace drivepred::features {

TimeStats time_stats(std::span<const double> x) {
  if (x.empty()) throw SizeError("time_stats on empty sequence");
  TimeStats s;
  s.max = *std::max_element(x.begin(), x.end());
  s.min = *std::min_element(x.begin(), x.end());
  double sum = 0.0;
  for (double v : x) sum += v;
  s.mean = sum / static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - s.mean) * (v - s.mean);
  s.variance = ss / static_cast<double>(x.size());
  return s;
}

double mad(std::span<const double> x) {
  if (x.empty()) throw SizeError("mad on empty sequence");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double acc = 0.0;
  for (double v : x) acc += std::abs(v - mean);
  return acc / static_cast<double>(x.size());
}

std::optional<double> tsv(std::span<const double> x, double epsilon) {
  std::vector<double> r;
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (x[i] > epsilon && x[i - 1] > epsilon) r.push_back(std::log(x[i] / x[i - 1]) * 100.0);
  }
  if (r.size() < 2) return std::nullopt;
  double mean = 0.0;
  for (double v : r) mean += v;
  mean /= static_cast<double>(r.size());
  double ss = 0.0;
  for (double v : r) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(r.size() - 1));
}

}  // namespace drivepred::features
