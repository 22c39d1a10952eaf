#include "drivepred/features/wdtw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "drivepred/common/errors.hpp"

namespace drivepred::features {

double wdtw_weight(double phase_gap, double half_length, const WdtwOptions& options) {
  return options.weight_cap / (1.0 + std::exp(-options.steepness * (phase_gap - half_length)));
}

double wdtw(std::span<const double> a, std::span<const double> b, const WdtwOptions& options) {
  if (a.empty() || b.empty()) throw SizeError("wdtw needs nonempty sequences");
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  const double half = static_cast<double>(std::max(n, m)) / 2.0;

  std::vector<double> weight(std::max(n, m));
  for (std::size_t d = 0; d < weight.size(); ++d) weight[d] = wdtw_weight(static_cast<double>(d), half, options);

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(m, kInf), cur(m, kInf);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double diff = a[i] - b[j];
      const double cost = weight[i > j ? i - j : j - i] * diff * diff;
      double best;
      if (i == 0 && j == 0) {
        best = 0.0;
      } else {
        best = kInf;
        if (i > 0) best = std::min(best, prev[j]);
        if (j > 0) best = std::min(best, cur[j - 1]);
        if (i > 0 && j > 0) best = std::min(best, prev[j - 1]);
      }
      cur[j] = cost + best;
    }
    std::swap(prev, cur);
  }
  return prev[m - 1];
}

}  // namespace drivepred::features
