#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "drivepred/trajdata/track.hpp"

namespace drivepred::trajdata {

// Frame-indexed lookup over a set of preprocessed tracks. Holds references
// into the track vector, which must outlive the index.
class SceneIndex {
 public:
  explicit SceneIndex(const std::vector<Track>& tracks);

  // Fills the six surrounding-vehicle slots for track tv_id at time t.
  // Throws LookupError when the TV has no record at t.
  SceneFrame assemble(std::int64_t tv_id, double t) const;
  SceneFrame assemble_at(const TrackRecord& tv, std::int64_t frame) const;

  const std::vector<Track>& tracks() const { return tracks_; }

 private:
  struct Ref {
    std::uint32_t track;
    std::uint32_t record;
  };
  const std::vector<Track>& tracks_;
  std::unordered_map<std::int64_t, std::vector<Ref>> by_frame_;
  std::unordered_map<std::int64_t, std::size_t> track_pos_;
};

SceneFrame assemble_scene(const std::vector<Track>& tracks, std::int64_t tv_id, double t);

struct WindowOptions {
  int stride = 10;  // frames
  // Only tracks carrying an archetype label become target vehicles. Used for
  // synthetic data, where lead and adjacent-lane vehicles are scenery.
  bool labeled_targets_only = false;
};

// Start offsets (relative to the first frame) of every full window that fits
// in a contiguous track of n_frames.
std::vector<int> window_offsets(int n_frames, int stride);
int expected_window_count(int n_frames, int stride);

std::vector<SceneWindow> window_samples(const SceneIndex& index, const WindowOptions& options = {});

// Rebuilds one window from its (track_id, start_frame) key.
SceneWindow make_window(const SceneIndex& index, std::int64_t track_id, std::int64_t start_frame);

}  // namespace drivepred::trajdata
