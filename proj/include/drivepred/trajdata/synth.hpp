#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drivepred/trajdata/track.hpp"

namespace drivepred::trajdata {

struct ParamDist {
  double mean = 0.0;
  double sd = 0.0;
};

// Car-following parameters of the intelligent driver model.
struct IdmParams {
  double desired_speed = 30.0;   // m/s
  double max_accel = 1.5;        // m/s^2
  double comfort_decel = 2.0;    // m/s^2
  double time_headway = 1.3;     // s
  double jam_distance = 2.0;     // m
};

struct ArchetypeSpec {
  std::string name;
  ParamDist desired_speed;
  ParamDist max_accel;
  ParamDist comfort_decel;
  ParamDist time_headway;
  ParamDist jam_distance;
  // Driver-specific acceleration wander: Ornstein-Uhlenbeck process with
  // stationary std-dev accel_noise (m/s^2) and correlation time noise_time (s).
  ParamDist accel_noise;
  double noise_time = 1.0;
};

// Piecewise lead-vehicle speed schedule: cruise at an initial speed, then
// alternate hold periods with ramps toward a new target speed.
struct LeadSchedule {
  // Calm traffic by default, so driver style rather than the lead dominates.
  double initial_speed_min = 25.0;
  double initial_speed_max = 26.0;
  double hold_min = 10.0;  // s between episodes
  double hold_max = 20.0;
  double target_min = 25.0;
  double target_max = 26.0;
  double rate_min = 0.2;  // m/s^2 during a ramp
  double rate_max = 0.3;
};

struct SynthConfig {
  std::vector<ArchetypeSpec> archetypes = default_archetypes();
  LeadSchedule lead;
  int trajectory_count = 400;
  double duration = 35.0;      // s per scenario
  double noise_std = 0.03;     // observation noise on x (m) and vx (m/s)
  int neighbors_per_side = 1;  // free-flowing vehicles in each adjacent lane
  double vehicle_length = 5.0;
  std::uint64_t seed = 1;

  static std::vector<ArchetypeSpec> default_archetypes();
  // Throws ConfigError on non-positive physical parameters.
  void validate() const;
};

// IDM acceleration for speed v, bumper gap s and approach rate dv = v - v_lead.
double idm_acceleration(const IdmParams& p, double v, double gap, double dv);
double idm_equilibrium_gap(const IdmParams& p, double v);

// Target (follower) tracks carry their archetype; lead and adjacent-lane
// tracks have none. Scenarios are separated in time so they never interact.
// The output is a pure function of the config.
std::vector<Track> gen_synthetic(const SynthConfig& config);

// Per-scenario helper, exposed for tests: simulates one follower behind a
// lead and returns {lead, follower} without noise or neighbors.
struct FollowingRun {
  std::vector<double> lead_x, lead_v, follower_x, follower_v, follower_a;
};
// accel_perturbation (empty for none) is added to the IDM acceleration; its
// positive part fades out as the gap closes below the desired gap.
FollowingRun simulate_following(const IdmParams& follower, const std::vector<double>& lead_speed, double initial_gap,
                                double initial_speed, double vehicle_length = 5.0,
                                const std::vector<double>& accel_perturbation = {});

}  // namespace drivepred::trajdata
