#include "drivepred/features/safety.hpp"

#include <algorithm>

#include "drivepred/common/errors.hpp"

namespace drivepred::features {

SafetyIndicators safety_indicators(std::span<const trajdata::SceneFrame> frames) {
  if (frames.empty()) throw SizeError("safety_indicators needs at least one frame");
  SafetyIndicators out;
  const int lv = static_cast<int>(trajdata::Slot::kLV);
  for (const auto& f : frames) {
    const auto& lead = f.slots[lv];
    if (!lead.present) continue;
    if (f.v > kMinMovingSpeed) {
      const double thw = lead.dx / f.v;
      out.min_thw = out.min_thw ? std::min(*out.min_thw, thw) : thw;
    }
    if (lead.dv < 0.0) {
      const double ttc = lead.dx / -lead.dv;
      out.min_ttc = out.min_ttc ? std::min(*out.min_ttc, ttc) : ttc;
    }
  }
  return out;
}

}  // namespace drivepred::features
