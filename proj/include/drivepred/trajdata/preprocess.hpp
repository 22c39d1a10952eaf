#pragma once

#include <vector>

#include "drivepred/trajdata/track.hpp"

namespace drivepred::trajdata {

struct PreprocessOptions {
  double smoothing_window = 0.5;  // s, centered moving average
};

// Snaps a track onto the 0.1 s grid, linearly interpolates missing frames,
// smooths velocity with a centered moving average (window shrinks
// symmetrically at the ends, so affine profiles are fixed points) and fills
// ax with the central difference of the smoothed velocity.
// Throws TooShortError for fewer than two records.
std::vector<TrackRecord> preprocess(const std::vector<TrackRecord>& track, const PreprocessOptions& options = {});

Track preprocess(const Track& track, const PreprocessOptions& options = {});

}  // namespace drivepred::trajdata
