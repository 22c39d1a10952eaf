#pragma once

#include <optional>
#include <span>

#include "drivepred/trajdata/track.hpp"

namespace drivepred::features {

struct SafetyIndicators {
  std::optional<double> min_thw;  // s; empty when no frame has a lead and v > eps
  std::optional<double> min_ttc;  // s; empty when the TV never closes on the lead
};

inline constexpr double kMinMovingSpeed = 0.1;  // m/s

// Time headway dx_LV / v and time-to-collision dx_LV / (v_tv - v_LV), the
// latter only on closing frames. Minimum over the frames.
SafetyIndicators safety_indicators(std::span<const trajdata::SceneFrame> frames);

}  // namespace drivepred::features
