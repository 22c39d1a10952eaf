#include "drivepred/trajdata/scene.hpp"

#include <cmath>
#include <limits>

#include "drivepred/common/errors.hpp"

namespace drivepred::trajdata {

std::array<double, kInputChannels> to_channels(const SceneFrame& frame) {
  std::array<double, kInputChannels> c{};
  for (int s = 0; s < kSlotCount; ++s) {
    c[s] = frame.slots[s].dv;
    c[kSlotCount + s] = frame.slots[s].dx;
  }
  c[kChannelV] = frame.v;
  c[kChannelA] = frame.a;
  return c;
}

std::vector<std::string> channel_names() {
  std::vector<std::string> names;
  for (const char* s : kSlotNames) names.push_back(std::string("dv_") + s);
  for (const char* s : kSlotNames) names.push_back(std::string("dx_") + s);
  names.emplace_back("v_TV");
  names.emplace_back("a_TV");
  return names;
}

SceneIndex::SceneIndex(const std::vector<Track>& tracks) : tracks_(tracks) {
  for (std::size_t t = 0; t < tracks.size(); ++t) {
    track_pos_[tracks[t].id] = t;
    const auto& recs = tracks[t].records;
    for (std::size_t r = 0; r < recs.size(); ++r) {
      by_frame_[frame_of(recs[r].timestamp)].push_back({static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(r)});
    }
  }
}

SceneFrame SceneIndex::assemble_at(const TrackRecord& tv, std::int64_t frame) const {
  SceneFrame out;
  out.v = tv.vx;
  out.a = tv.ax;
  out.x = tv.x;
  std::array<double, kSlotCount> best;
  best.fill(std::numeric_limits<double>::infinity());

  const auto it = by_frame_.find(frame);
  if (it == by_frame_.end()) return out;
  for (const Ref& ref : it->second) {
    const TrackRecord& sv = tracks_[ref.track].records[ref.record];
    if (sv.track_id == tv.track_id) continue;
    const double rel = sv.x - tv.x;
    const double dist = std::abs(rel);
    if (dist > kSensorRange) continue;
    const bool ahead = rel > 0.0;
    Slot slot;
    if (sv.lane_id == tv.lane_id) {
      slot = ahead ? Slot::kLV : Slot::kFV;
    } else if (sv.lane_id == tv.lane_id - 1) {
      slot = ahead ? Slot::kLLV : Slot::kLFV;
    } else if (sv.lane_id == tv.lane_id + 1) {
      slot = ahead ? Slot::kRLV : Slot::kRFV;
    } else {
      continue;
    }
    const int s = static_cast<int>(slot);
    if (dist < best[s]) {
      best[s] = dist;
      out.slots[s] = SlotState{sv.vx - tv.vx, dist, true};
    }
  }
  return out;
}

SceneFrame SceneIndex::assemble(std::int64_t tv_id, double t) const {
  const auto pos = track_pos_.find(tv_id);
  if (pos == track_pos_.end()) throw LookupError("unknown track " + std::to_string(tv_id));
  const std::int64_t frame = frame_of(t);
  const auto& recs = tracks_[pos->second].records;
  if (recs.empty()) throw LookupError("track " + std::to_string(tv_id) + " has no records");
  const std::int64_t first = frame_of(recs.front().timestamp);
  const std::int64_t idx = frame - first;
  if (idx < 0 || idx >= static_cast<std::int64_t>(recs.size()) || frame_of(recs[idx].timestamp) != frame) {
    // Fall back to a scan for tracks that are not on a contiguous grid.
    for (const auto& r : recs) {
      if (frame_of(r.timestamp) == frame) return assemble_at(r, frame);
    }
    throw LookupError("track " + std::to_string(tv_id) + " has no record at t=" + std::to_string(t));
  }
  return assemble_at(recs[idx], frame);
}

SceneFrame assemble_scene(const std::vector<Track>& tracks, std::int64_t tv_id, double t) {
  return SceneIndex(tracks).assemble(tv_id, t);
}

int expected_window_count(int n_frames, int stride) {
  if (n_frames < kWindowFrames) return 0;
  return (n_frames - kWindowFrames) / stride + 1;
}

std::vector<int> window_offsets(int n_frames, int stride) {
  if (stride <= 0) throw ConfigError("window stride must be positive");
  std::vector<int> out;
  for (int s = 0; s + kWindowFrames <= n_frames; s += stride) out.push_back(s);
  return out;
}

SceneWindow make_window(const SceneIndex& index, std::int64_t track_id, std::int64_t start_frame) {
  SceneWindow w;
  w.track_id = track_id;
  w.start_frame = start_frame;
  const Track* track = nullptr;
  for (const auto& t : index.tracks()) {
    if (t.id == track_id) {
      track = &t;
      break;
    }
  }
  if (!track || track->records.empty()) throw LookupError("unknown track " + std::to_string(track_id));
  w.archetype = track->archetype;
  const std::int64_t offset = start_frame - frame_of(track->records.front().timestamp);
  if (offset < 0 || offset + kWindowFrames > static_cast<std::int64_t>(track->records.size())) {
    throw LookupError("window at frame " + std::to_string(start_frame) + " exceeds track " + std::to_string(track_id));
  }
  w.behavior.reserve(kBehaviorFrames);
  w.observation.reserve(kObservationFrames);
  for (int k = 0; k < kBehaviorFrames + kObservationFrames; ++k) {
    const auto& rec = track->records[offset + k];
    auto frame = index.assemble_at(rec, start_frame + k);
    (k < kBehaviorFrames ? w.behavior : w.observation).push_back(frame);
  }
  for (int k = kBehaviorFrames + kObservationFrames; k < kWindowFrames; ++k) {
    const auto& rec = track->records[offset + k];
    w.future_velocity.push_back(rec.vx);
    w.future_position.push_back(rec.x);
  }
  return w;
}

std::vector<SceneWindow> window_samples(const SceneIndex& index, const WindowOptions& options) {
  std::vector<SceneWindow> out;
  for (const auto& track : index.tracks()) {
    if (options.labeled_targets_only && !track.archetype) continue;
    const auto& recs = track.records;
    for (int off : window_offsets(static_cast<int>(recs.size()), options.stride)) {
      const std::int64_t f0 = frame_of(recs[off].timestamp);
      if (frame_of(recs[off + kWindowFrames - 1].timestamp) - f0 != kWindowFrames - 1) continue;
      out.push_back(make_window(index, track.id, f0));
    }
  }
  return out;
}

}  // namespace drivepred::trajdata
