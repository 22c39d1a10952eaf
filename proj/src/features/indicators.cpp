#include "drivepred/features/indicators.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "drivepred/common/errors.hpp"
#include "drivepred/common/text.hpp"
#include "drivepred/features/safety.hpp"
#include "drivepred/features/signal_stats.hpp"
#include "drivepred/features/spectral.hpp"
#include "drivepred/features/wavelet.hpp"

namespace drivepred::features {

std::optional<int> indicator_index(std::string_view name) {
  for (int i = 0; i < kIndicatorCount; ++i) {
    if (kIndicatorNames[i] == name) return i;
  }
  return std::nullopt;
}

namespace {

struct SubsetStats {
  double max = 0.0, min = 0.0, mean = 0.0;
};

SubsetStats subset_stats(const std::vector<double>& v) {
  if (v.empty()) return {};
  const auto s = time_stats(v);
  return {s.max, s.min, s.mean};
}

}  // namespace

IndicatorSet extract_all(const trajdata::SceneWindow& window, const ExtractOptions& options) {
  using I = Indicator;
  const auto& frames = window.behavior;
  if (frames.size() < 16) throw SizeError("behavior segment too short for indicator extraction");

  std::vector<double> v, a, pos, neg, lead_tv, lead_v;
  v.reserve(frames.size());
  a.reserve(frames.size());
  const int lv = static_cast<int>(trajdata::Slot::kLV);
  for (const auto& f : frames) {
    v.push_back(f.v);
    a.push_back(f.a);
    if (f.a > 0.0) pos.push_back(f.a);
    if (f.a < 0.0) neg.push_back(-f.a);
    if (f.slots[lv].present) {
      lead_tv.push_back(f.v);
      lead_v.push_back(f.v + f.slots[lv].dv);
    }
  }

  IndicatorSet out;
  const auto vs = time_stats(v);
  out[I::kMaxV] = vs.max;
  out[I::kMinV] = vs.min;
  out[I::kMeanV] = vs.mean;
  out[I::kVarV] = vs.variance;
  out[I::kMadV] = mad(v);
  out[I::kTsvV] = tsv(v).value_or(IndicatorSet::kAbsent);
  const auto vf = dft_features(v, options.rate_hz);
  out[I::kGcfV] = vf.gcf;
  out[I::kRmsfV] = vf.rmsf;
  out[I::kMsfV] = vf.msf;
  out[I::kStdfV] = vf.stdf;
  const auto vw = dwt_features(v);
  out[I::kWeeV] = vw.wee;
  out[I::kWseV] = vw.wse;
  out[I::kWdtwV] = lead_v.size() >= 2 ? wdtw(lead_tv, lead_v, options.wdtw) : 0.0;

  const auto ps = subset_stats(pos);
  const auto ns = subset_stats(neg);
  out[I::kMaxA] = ps.max;
  out[I::kMinA] = ps.min;
  out[I::kMeanA] = ps.mean;
  out[I::kMaxD] = ns.max;
  out[I::kMinD] = ns.min;
  out[I::kMeanD] = ns.mean;
  const auto as = time_stats(a);
  out[I::kVarA] = as.variance;
  out[I::kMadA] = mad(a);
  const auto af = dft_features(a, options.rate_hz);
  out[I::kGcfA] = af.gcf;
  out[I::kRmsfA] = af.rmsf;
  out[I::kMsfA] = af.msf;
  out[I::kStdfA] = af.stdf;
  const auto aw = dwt_features(a);
  out[I::kWeeA] = aw.wee;
  out[I::kWseA] = aw.wse;

  const auto safety = safety_indicators(frames);
  out[I::kMinThw] = safety.min_thw.value_or(IndicatorSet::kAbsent);
  out[I::kMinTtc] = safety.min_ttc.value_or(IndicatorSet::kAbsent);
  return out;
}

void write_indicator_csv(std::ostream& out, const std::vector<trajdata::SceneWindow>& windows,
                         const std::vector<IndicatorSet>& indicators) {
  if (windows.size() != indicators.size()) throw SizeError("windows/indicators length mismatch");
  out << "track_id,start_frame";
  for (auto name : kIndicatorNames) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < windows.size(); ++i) {
    out << windows[i].track_id << ',' << windows[i].start_frame;
    for (double v : indicators[i].values) out << ',' << format_double(v, 17);
    out << '\n';
  }
}

IndicatorTable read_indicator_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("indicator table is empty");
  const auto header = split_csv_line(line);
  if (header.size() != kIndicatorCount + 2 || header[0] != "track_id" || header[1] != "start_frame") {
    throw SchemaError("unexpected indicator table header");
  }
  for (int i = 0; i < kIndicatorCount; ++i) {
    if (header[i + 2] != kIndicatorNames[i]) throw SchemaError("indicator column " + header[i + 2] + " out of order");
  }
  IndicatorTable table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) throw ParseError(line_no, "wrong field count");
    long long tid = 0, start = 0;
    if (!parse_int(f[0], tid) || !parse_int(f[1], start)) throw ParseError(line_no, "invalid window key");
    IndicatorSet s;
    for (int i = 0; i < kIndicatorCount; ++i) {
      if (trim(f[i + 2]) == "NA") {
        s.values[i] = IndicatorSet::kAbsent;
      } else if (!parse_double(f[i + 2], s.values[i])) {
        throw ParseError(line_no, "invalid value for " + std::string(kIndicatorNames[i]));
      }
    }
    table.track_id.push_back(tid);
    table.start_frame.push_back(start);
    table.rows.push_back(s);
  }
  return table;
}

}  // namespace drivepred::features
