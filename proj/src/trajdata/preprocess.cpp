#include "drivepred/trajdata/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "drivepred/common/errors.hpp"

namespace drivepred::trajdata {

namespace {

std::vector<double> centered_moving_average(const std::vector<double>& v, int half_width) {
  const int n = static_cast<int>(v.size());
  std::vector<double> out(v.size());
  for (int i = 0; i < n; ++i) {
    const int h = std::min({half_width, i, n - 1 - i});
    double sum = 0.0;
    for (int j = i - h; j <= i + h; ++j) sum += v[j];
    out[i] = sum / (2 * h + 1);
  }
  return out;
}

}  // namespace

std::vector<TrackRecord> preprocess(const std::vector<TrackRecord>& track, const PreprocessOptions& options) {
  if (track.size() < 2) throw TooShortError("track needs at least 2 records, got " + std::to_string(track.size()));

  // Snap to grid, keeping the first record of any frame.
  std::vector<TrackRecord> snapped;
  snapped.reserve(track.size());
  for (const auto& r : track) {
    if (!snapped.empty() && frame_of(r.timestamp) <= frame_of(snapped.back().timestamp)) continue;
    snapped.push_back(r);
  }
  if (snapped.size() < 2) throw TooShortError("track collapses to a single frame");

  const std::int64_t first = frame_of(snapped.front().timestamp);
  const std::int64_t last = frame_of(snapped.back().timestamp);
  std::vector<TrackRecord> grid;
  grid.reserve(static_cast<std::size_t>(last - first + 1));
  for (std::size_t k = 0; k + 1 < snapped.size(); ++k) {
    const auto& a = snapped[k];
    const auto& b = snapped[k + 1];
    const std::int64_t fa = frame_of(a.timestamp);
    const std::int64_t fb = frame_of(b.timestamp);
    for (std::int64_t f = fa; f < fb; ++f) {
      const double w = static_cast<double>(f - fa) / static_cast<double>(fb - fa);
      TrackRecord r = a;
      r.timestamp = time_of(f);
      r.x = a.x + w * (b.x - a.x);
      r.y = a.y + w * (b.y - a.y);
      r.vx = a.vx + w * (b.vx - a.vx);
      grid.push_back(r);
    }
  }
  TrackRecord tail = snapped.back();
  tail.timestamp = time_of(last);
  grid.push_back(tail);

  std::vector<double> v(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) v[i] = grid[i].vx;
  const int half = static_cast<int>(std::lround(options.smoothing_window / kFrameDt)) / 2;
  const auto smooth = centered_moving_average(v, half);

  const std::size_t n = grid.size();
  for (std::size_t i = 0; i < n; ++i) {
    grid[i].vx = std::max(0.0, smooth[i]);
    double a = 0.0;
    if (i == 0) {
      a = (smooth[1] - smooth[0]) / kFrameDt;
    } else if (i + 1 == n) {
      a = (smooth[n - 1] - smooth[n - 2]) / kFrameDt;
    } else {
      a = (smooth[i + 1] - smooth[i - 1]) / (2 * kFrameDt);
    }
    grid[i].ax = a;
  }
  return grid;
}

Track preprocess(const Track& track, const PreprocessOptions& options) {
  Track out;
  out.id = track.id;
  out.archetype = track.archetype;
  out.records = preprocess(track.records, options);
  return out;
}

}  // namespace drivepred::trajdata
