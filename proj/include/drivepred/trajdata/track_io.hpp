#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "drivepred/trajdata/track.hpp"

namespace drivepred::trajdata {

inline constexpr std::size_t kMinTrackRecords = 100;

// Reads the ingest CSV (header: track_id,timestamp,lane_id,x,y,vx,vehicle_type
// with an optional trailing archetype column). Records are grouped by track,
// sorted by time, duplicate (track_id, timestamp) rows collapsed to the first
// occurrence, and tracks with fewer than kMinTrackRecords records dropped.
// Throws ParseError (with line number) or SchemaError.
std::vector<Track> load_tracks(const std::string& csv_path);
std::vector<Track> read_tracks(std::istream& in, std::size_t min_records = kMinTrackRecords);

// Writes the same schema; the archetype column is emitted when any track has
// one. When with_acceleration is set an extra ax column is appended.
void write_tracks(std::ostream& out, const std::vector<Track>& tracks, bool with_acceleration = false);

}  // namespace drivepred::trajdata
