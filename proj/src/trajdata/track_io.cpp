#include "drivepred/trajdata/track_io.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "drivepred/common/errors.hpp"
#include "drivepred/common/text.hpp"

namespace drivepred::trajdata {

namespace {

constexpr std::array<const char*, 7> kColumns = {"track_id", "timestamp", "lane_id", "x", "y", "vx", "vehicle_type"};

struct ColumnMap {
  std::array<std::size_t, kColumns.size()> index{};
  std::optional<std::size_t> archetype;
  std::optional<std::size_t> ax;
  std::size_t width = 0;
};

ColumnMap parse_header(const std::string& line) {
  const auto names = split_csv_line(line);
  ColumnMap map;
  map.width = names.size();
  for (std::size_t c = 0; c < kColumns.size(); ++c) {
    const auto it = std::find_if(names.begin(), names.end(),
                                 [&](const std::string& n) { return trim(n) == kColumns[c]; });
    if (it == names.end()) throw SchemaError(std::string("missing column '") + kColumns[c] + "'");
    map.index[c] = static_cast<std::size_t>(it - names.begin());
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (trim(names[i]) == "archetype") map.archetype = i;
    if (trim(names[i]) == "ax") map.ax = i;
  }
  return map;
}

VehicleType parse_vehicle_type(std::string_view field, std::size_t line_no) {
  long long code = 0;
  if (parse_int(field, code)) {
    if (code < 0 || code > 4) throw ParseError(line_no, "vehicle_type code out of range");
    return static_cast<VehicleType>(code);
  }
  const auto f = trim(field);
  if (f == "car") return VehicleType::kCar;
  if (f == "truck") return VehicleType::kTruck;
  if (f == "bus") return VehicleType::kBus;
  if (f == "motorcycle") return VehicleType::kMotorcycle;
  if (f == "unknown") return VehicleType::kUnknown;
  throw ParseError(line_no, "invalid vehicle_type '" + std::string(f) + "'");
}

}  // namespace

std::vector<Track> read_tracks(std::istream& in, std::size_t min_records) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty file: header row required");
  const ColumnMap cols = parse_header(line);

  std::map<std::int64_t, Track> by_id;
  std::set<std::pair<std::int64_t, double>> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != cols.width) {
      throw ParseError(line_no, "expected " + std::to_string(cols.width) + " fields, got " +
                                    std::to_string(fields.size()));
    }
    auto get_double = [&](std::size_t c, const char* name) {
      double v = 0;
      if (!parse_double(fields[c], v)) throw ParseError(line_no, std::string("invalid ") + name + " '" + fields[c] + "'");
      return v;
    };
    auto get_int = [&](std::size_t c, const char* name) {
      long long v = 0;
      if (!parse_int(fields[c], v)) throw ParseError(line_no, std::string("invalid ") + name + " '" + fields[c] + "'");
      return v;
    };

    TrackRecord rec;
    rec.track_id = get_int(cols.index[0], "track_id");
    rec.timestamp = get_double(cols.index[1], "timestamp");
    rec.lane_id = static_cast<int>(get_int(cols.index[2], "lane_id"));
    rec.x = get_double(cols.index[3], "x");
    rec.y = get_double(cols.index[4], "y");
    rec.vx = get_double(cols.index[5], "vx");
    rec.vehicle_type = parse_vehicle_type(fields[cols.index[6]], line_no);
    if (cols.ax) rec.ax = get_double(*cols.ax, "ax");

    Track& track = by_id[rec.track_id];
    track.id = rec.track_id;
    if (cols.archetype && !trim(fields[*cols.archetype]).empty()) {
      const long long a = get_int(*cols.archetype, "archetype");
      if (a >= 0) track.archetype = static_cast<int>(a);
    }
    if (!seen.emplace(rec.track_id, rec.timestamp).second) continue;
    track.records.push_back(rec);
  }

  std::vector<Track> out;
  for (auto& [id, track] : by_id) {
    if (track.records.size() < min_records) continue;
    std::stable_sort(track.records.begin(), track.records.end(),
                     [](const TrackRecord& a, const TrackRecord& b) { return a.timestamp < b.timestamp; });
    out.push_back(std::move(track));
  }
  return out;
}

std::vector<Track> load_tracks(const std::string& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw SchemaError("cannot open " + csv_path);
  return read_tracks(in);
}

void write_tracks(std::ostream& out, const std::vector<Track>& tracks, bool with_acceleration) {
  const bool with_archetype =
      std::any_of(tracks.begin(), tracks.end(), [](const Track& t) { return t.archetype.has_value(); });
  out << "track_id,timestamp,lane_id,x,y,vx,vehicle_type";
  if (with_archetype) out << ",archetype";
  if (with_acceleration) out << ",ax";
  out << '\n';
  char buf[256];
  for (const auto& track : tracks) {
    for (const auto& r : track.records) {
      std::snprintf(buf, sizeof(buf), "%lld,%.1f,%d,%.4f,%.4f,%.4f,%d", static_cast<long long>(r.track_id),
                    r.timestamp, r.lane_id, r.x, r.y, r.vx, static_cast<int>(r.vehicle_type));
      out << buf;
      if (with_archetype) out << ',' << (track.archetype ? *track.archetype : -1);
      if (with_acceleration) {
        std::snprintf(buf, sizeof(buf), ",%.6f", r.ax);
        out << buf;
      }
      out << '\n';
    }
  }
}

}  // namespace drivepred::trajdata
