#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace drivepred::trajdata {

inline constexpr double kFrameDt = 0.1;  // 10 Hz grid
inline constexpr double kSensorRange = 150.0;

enum class VehicleType : int { kUnknown = 0, kCar = 1, kTruck = 2, kBus = 3, kMotorcycle = 4 };

struct TrackRecord {
  std::int64_t track_id = 0;
  double timestamp = 0.0;  // s
  int lane_id = 0;
  double x = 0.0;          // longitudinal position, m
  double y = 0.0;          // lateral offset, m
  double vx = 0.0;         // longitudinal velocity, m/s
  VehicleType vehicle_type = VehicleType::kCar;
  double ax = 0.0;         // filled in by preprocess()
};

struct Track {
  std::int64_t id = 0;
  std::optional<int> archetype;  // synthetic ground truth, absent for real data
  std::vector<TrackRecord> records;
};

// Integer frame index on the 0.1 s grid.
inline std::int64_t frame_of(double timestamp) {
  return static_cast<std::int64_t>(timestamp >= 0 ? timestamp / kFrameDt + 0.5 : timestamp / kFrameDt - 0.5);
}

inline double time_of(std::int64_t frame) { return static_cast<double>(frame) * kFrameDt; }

// Six surrounding-vehicle slots, in model-input order.
enum class Slot : int { kLV = 0, kFV = 1, kLLV = 2, kLFV = 3, kRLV = 4, kRFV = 5 };
inline constexpr int kSlotCount = 6;
inline constexpr std::array<const char*, kSlotCount> kSlotNames = {"LV", "FV", "LLV", "LFV", "RLV", "RFV"};

struct SlotState {
  double dv = 0.0;              // v_sv - v_tv, m/s
  double dx = kSensorRange;     // longitudinal distance |x_sv - x_tv|, m
  bool present = false;
};

struct SceneFrame {
  double v = 0.0;  // TV velocity
  double a = 0.0;  // TV acceleration
  std::array<SlotState, kSlotCount> slots{};
  double x = 0.0;  // TV absolute position (not a model input)
};

// Model input channel layout: six dv, six dx, v, a.
inline constexpr int kInputChannels = 2 * kSlotCount + 2;
inline constexpr int kChannelV = 2 * kSlotCount;
inline constexpr int kChannelA = 2 * kSlotCount + 1;

std::array<double, kInputChannels> to_channels(const SceneFrame& frame);
std::vector<std::string> channel_names();

inline constexpr int kBehaviorFrames = 200;
inline constexpr int kObservationFrames = 50;
inline constexpr int kFutureFrames = 40;
inline constexpr int kWindowFrames = kBehaviorFrames + kObservationFrames + kFutureFrames;

struct SceneWindow {
  std::int64_t track_id = 0;
  std::int64_t start_frame = 0;  // first frame of the behavior segment
  std::vector<SceneFrame> behavior;     // 200 frames
  std::vector<SceneFrame> observation;  // 50 frames
  std::vector<double> future_velocity;  // 40 values
  std::vector<double> future_position;  // 40 values
  std::optional<int> archetype;
};

}  // namespace drivepred::trajdata
