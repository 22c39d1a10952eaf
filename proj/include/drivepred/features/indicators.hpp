#pragma once

#include <array>
#include <cmath>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "drivepred/features/wdtw.hpp"
#include "drivepred/trajdata/track.hpp"

namespace drivepred::features {

enum class Indicator : int {
  kMaxV, kMinV, kMeanV, kVarV, kMadV, kTsvV, kGcfV, kRmsfV, kMsfV, kStdfV, kWeeV, kWseV, kWdtwV,
  kMaxA, kMinA, kMaxD, kMinD, kMeanA, kMeanD, kVarA, kMadA, kGcfA, kRmsfA, kMsfA, kStdfA, kWeeA, kWseA,
  kMinThw, kMinTtc,
};

inline constexpr int kIndicatorCount = 29;

inline constexpr std::array<std::string_view, kIndicatorCount> kIndicatorNames = {
    "MAX_v", "MIN_v", "MEAN_v", "VAR_v",  "MAD_v",  "TSV_v",  "GCF_v",  "RMSF_v",  "MSF_v",  "STDF_v",
    "WEE_v", "WSE_v", "WDTW_v", "MAX_a",  "MIN_a",  "MAX_d",  "MIN_d",  "MEAN_a",  "MEAN_d", "VAR_a",
    "MAD_a", "GCF_a", "RMSF_a", "MSF_a",  "STDF_a", "WEE_a",  "WSE_a",  "MIN_thw", "MIN_ttc",
};

// Absent values (no lead for THW, no closing event for TTC, undefined TSV)
// are stored as NaN.
struct IndicatorSet {
  std::array<double, kIndicatorCount> values;

  IndicatorSet() { values.fill(0.0); }
  double& operator[](Indicator i) { return values[static_cast<int>(i)]; }
  double operator[](Indicator i) const { return values[static_cast<int>(i)]; }
  static bool absent(double v) { return std::isnan(v); }
  static constexpr double kAbsent = std::numeric_limits<double>::quiet_NaN();
};

std::optional<int> indicator_index(std::string_view name);

struct ExtractOptions {
  WdtwOptions wdtw;
  double rate_hz = 10.0;
};

IndicatorSet extract_all(const trajdata::SceneWindow& window, const ExtractOptions& options = {});

// One row per window, one column per indicator in kIndicatorNames order,
// preceded by track_id,start_frame. Absent values are written as NA.
void write_indicator_csv(std::ostream& out, const std::vector<trajdata::SceneWindow>& windows,
                         const std::vector<IndicatorSet>& indicators);
struct IndicatorTable {
  std::vector<std::int64_t> track_id;
  std::vector<std::int64_t> start_frame;
  std::vector<IndicatorSet> rows;
};
IndicatorTable read_indicator_csv(std::istream& in);

}  // namespace drivepred::features
