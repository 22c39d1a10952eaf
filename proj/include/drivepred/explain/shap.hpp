#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace drivepred::explain {

// Coalition value function: element k of the result is the model output with
// exactly the groups flagged in coalitions[k] switched on. Batched so a model
// can score many coalitions in one pass.
using Coalition = std::vector<bool>;
using ValueFn = std::function<std::vector<double>(const std::vector<Coalition>&)>;

struct Attribution {
  double base = 0.0;          // value with every group off
  double output = 0.0;        // value with every group on
  std::vector<double> phi;    // one per group
  std::vector<std::string> groups;
  std::vector<double> values; // instance feature value per group, for plots
};

inline constexpr int kMaxExactGroups = 12;

// Full enumeration over 2^m coalitions. Throws SizeError when m > 12.
Attribution shap_exact(const ValueFn& value, int m);

// Permutation sampling; walks each permutation adding one group at a time.
// Any residual against output - base is spread over groups in proportion to
// |phi|, equally when every phi is zero.
Attribution shap_sampled(const ValueFn& value, int m, int permutations, std::uint64_t seed);

struct Summary {
  std::vector<std::pair<std::string, double>> ranking;  // mean |phi|, descending, ties by name
  // Per group, in ranking order: (feature value, phi) for every attribution.
  std::vector<std::vector<std::pair<double, double>>> scatter;
};

// Attributions must share one group list. Throws SizeError when empty.
Summary summarize(const std::vector<Attribution>& attributions);

void write_attribution_csv(std::ostream& out, const std::vector<Attribution>& attributions);
void write_summary_csv(std::ostream& out, const Summary& summary);

}  // namespace drivepred::explain
