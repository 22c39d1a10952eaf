#include "drivepred/trajdata/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "drivepred/common/errors.hpp"

namespace drivepred::trajdata {

namespace {

constexpr int kTargetLane = 2;
constexpr double kLaneWidth = 3.75;
constexpr double kScenarioGap = 20.0;  // s of empty road between scenarios

std::mt19937_64 scenario_rng(std::uint64_t seed, int scenario) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(scenario), 0x5eedu};
  return std::mt19937_64(seq);
}

double draw_positive(std::mt19937_64& rng, const ParamDist& d) {
  std::normal_distribution<double> n(d.mean, d.sd);
  for (int i = 0; i < 64; ++i) {
    const double v = n(rng);
    if (v > 0.2 * d.mean) return v;
  }
  return d.mean;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::vector<double> lead_speed_profile(std::mt19937_64& rng, const LeadSchedule& s, int steps) {
  std::vector<double> v(steps);
  double speed = uniform(rng, s.initial_speed_min, s.initial_speed_max);
  double target = speed;
  double rate = 0.0;
  double hold_left = uniform(rng, s.hold_min, s.hold_max);
  for (int k = 0; k < steps; ++k) {
    v[k] = speed;
    if (speed == target) {
      hold_left -= kFrameDt;
      if (hold_left <= 0.0) {
        target = uniform(rng, s.target_min, s.target_max);
        rate = uniform(rng, s.rate_min, s.rate_max);
        hold_left = uniform(rng, s.hold_min, s.hold_max);
      }
    } else {
      const double step = rate * kFrameDt;
      speed = std::abs(target - speed) <= step ? target : speed + (target > speed ? step : -step);
    }
  }
  return v;
}

void check_positive(double v, const std::string& what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(what + " must be positive");
}

}  // namespace

std::vector<ArchetypeSpec> SynthConfig::default_archetypes() {
  return {
      {"aggressive", {33.0, 0.8}, {2.2, 0.13}, {3.0, 0.21}, {0.8, 0.04}, {1.5, 0.15}, {0.45, 0.045}, 0.3},
      {"moderate", {31.0, 0.8}, {1.8, 0.11}, {2.5, 0.18}, {1.0, 0.05}, {2.0, 0.15}, {0.15, 0.015}, 0.3},
      {"cautious", {25.0, 0.8}, {1.0, 0.06}, {1.4, 0.1}, {2.4, 0.12}, {2.5, 0.15}, {0.15, 0.015}, 3.0},
      {"unsteady", {27.0, 0.8}, {1.2, 0.07}, {1.8, 0.13}, {2.1, 0.1}, {2.5, 0.15}, {0.45, 0.045}, 3.0},
  };
}

void SynthConfig::validate() const {
  if (archetypes.empty()) throw ConfigError("synth.archetypes must not be empty");
  for (const auto& a : archetypes) {
    for (const auto* d : {&a.desired_speed, &a.max_accel, &a.comfort_decel, &a.time_headway, &a.jam_distance}) {
      check_positive(d->mean, "archetype '" + a.name + "' parameter mean");
      if (d->sd < 0.0) throw ConfigError("archetype '" + a.name + "' parameter sd must be non-negative");
    }
    if (a.accel_noise.mean < 0.0 || a.accel_noise.sd < 0.0) {
      throw ConfigError("archetype '" + a.name + "' accel_noise must be non-negative");
    }
    check_positive(a.noise_time, "archetype '" + a.name + "' noise_time");
  }
  check_positive(lead.initial_speed_min, "lead.initial_speed_min");
  check_positive(lead.initial_speed_max, "lead.initial_speed_max");
  check_positive(lead.hold_min, "lead.hold_min");
  check_positive(lead.hold_max, "lead.hold_max");
  check_positive(lead.target_min, "lead.target_min");
  check_positive(lead.target_max, "lead.target_max");
  check_positive(lead.rate_min, "lead.rate_min");
  check_positive(lead.rate_max, "lead.rate_max");
  if (lead.initial_speed_max < lead.initial_speed_min || lead.hold_max < lead.hold_min ||
      lead.target_max < lead.target_min || lead.rate_max < lead.rate_min) {
    throw ConfigError("lead schedule ranges must satisfy min <= max");
  }
  if (trajectory_count <= 0) throw ConfigError("trajectory_count must be positive");
  check_positive(duration, "duration");
  check_positive(vehicle_length, "vehicle_length");
  if (noise_std < 0.0) throw ConfigError("noise_std must be non-negative");
  if (neighbors_per_side < 0) throw ConfigError("neighbors_per_side must be non-negative");
}

double idm_acceleration(const IdmParams& p, double v, double gap, double dv) {
  const double s_star = p.jam_distance + std::max(0.0, v * p.time_headway + v * dv / (2.0 * std::sqrt(p.max_accel * p.comfort_decel)));
  const double free = std::pow(v / p.desired_speed, 4);
  const double interaction = (s_star / std::max(gap, 1e-3)) * (s_star / std::max(gap, 1e-3));
  return p.max_accel * (1.0 - free - interaction);
}

double idm_equilibrium_gap(const IdmParams& p, double v) {
  const double r = v / p.desired_speed;
  return (p.jam_distance + v * p.time_headway) / std::sqrt(1.0 - r * r * r * r);
}

FollowingRun simulate_following(const IdmParams& follower, const std::vector<double>& lead_speed, double initial_gap,
                                double initial_speed, double vehicle_length,
                                const std::vector<double>& accel_perturbation) {
  const std::size_t n = lead_speed.size();
  FollowingRun run;
  run.lead_x.resize(n);
  run.lead_v = lead_speed;
  run.follower_x.resize(n);
  run.follower_v.resize(n);
  run.follower_a.resize(n);
  double xl = initial_gap + vehicle_length;
  double xf = 0.0;
  double vf = initial_speed;
  for (std::size_t k = 0; k < n; ++k) {
    run.lead_x[k] = xl;
    run.follower_x[k] = xf;
    run.follower_v[k] = vf;
    const double gap = xl - xf - vehicle_length;
    double a = idm_acceleration(follower, vf, gap, vf - lead_speed[k]);
    if (k < accel_perturbation.size()) {
      const double xi = accel_perturbation[k];
      if (xi > 0.0) {
        const double dv = vf - lead_speed[k];
        const double s_star = follower.jam_distance +
                              std::max(0.0, vf * follower.time_headway +
                                                vf * dv / (2.0 * std::sqrt(follower.max_accel * follower.comfort_decel)));
        const double room = 1.0 - std::min(1.0, (s_star / std::max(gap, 1e-3)) * (s_star / std::max(gap, 1e-3)));
        a += xi * room;
      } else {
        a += xi;
      }
    }
    run.follower_a[k] = a;
    if (k + 1 == n) break;
    // Ballistic update, stopping at zero speed.
    const double v_next = vf + a * kFrameDt;
    if (v_next < 0.0) {
      xf += -0.5 * vf * vf / a;
      vf = 0.0;
    } else {
      xf += vf * kFrameDt + 0.5 * a * kFrameDt * kFrameDt;
      vf = v_next;
    }
    xl += 0.5 * (lead_speed[k] + lead_speed[k + 1]) * kFrameDt;
  }
  return run;
}

std::vector<Track> gen_synthetic(const SynthConfig& config) {
  config.validate();
  const int steps = static_cast<int>(std::lround(config.duration / kFrameDt));
  const int archetype_count = static_cast<int>(config.archetypes.size());
  std::vector<Track> tracks;
  tracks.reserve(static_cast<std::size_t>(config.trajectory_count) * (2 + 2 * config.neighbors_per_side));

  for (int k = 0; k < config.trajectory_count; ++k) {
    auto rng = scenario_rng(config.seed, k);
    const int archetype = k % archetype_count;
    const auto& spec = config.archetypes[archetype];
    IdmParams p;
    p.desired_speed = draw_positive(rng, spec.desired_speed);
    p.max_accel = draw_positive(rng, spec.max_accel);
    p.comfort_decel = draw_positive(rng, spec.comfort_decel);
    p.time_headway = draw_positive(rng, spec.time_headway);
    p.jam_distance = draw_positive(rng, spec.jam_distance);

    const double wander_sd = spec.accel_noise.mean > 0.0 ? draw_positive(rng, spec.accel_noise) : 0.0;

    const auto lead_v = lead_speed_profile(rng, config.lead, steps);
    std::vector<double> wander;
    if (wander_sd > 0.0) {
      std::normal_distribution<double> unit(0.0, 1.0);
      const double rho = std::exp(-kFrameDt / spec.noise_time);
      const double innovation = wander_sd * std::sqrt(1.0 - rho * rho);
      wander.resize(steps);
      double xi = wander_sd * unit(rng);
      for (int i = 0; i < steps; ++i) {
        wander[i] = xi;
        xi = rho * xi + innovation * unit(rng);
      }
    }
    const double v0 = std::min(lead_v.front(), 0.95 * p.desired_speed);
    const auto run = simulate_following(p, lead_v, idm_equilibrium_gap(p, v0), v0, config.vehicle_length, wander);

    std::normal_distribution<double> noise(0.0, 1.0);
    const double sigma = config.noise_std;
    const std::int64_t frame0 =
        static_cast<std::int64_t>(k) * static_cast<std::int64_t>(std::lround((config.duration + kScenarioGap) / kFrameDt));
    auto make_track = [&](std::int64_t id, int lane, const std::vector<double>& xs, const std::vector<double>& vs,
                          std::optional<int> label) {
      Track t;
      t.id = id;
      t.archetype = label;
      t.records.reserve(xs.size());
      for (std::size_t i = 0; i < xs.size(); ++i) {
        TrackRecord r;
        r.track_id = id;
        r.timestamp = time_of(frame0 + static_cast<std::int64_t>(i));
        r.lane_id = lane;
        r.x = xs[i] + (sigma > 0 ? sigma * noise(rng) : 0.0);
        r.y = lane * kLaneWidth;
        r.vx = std::max(0.0, vs[i] + (sigma > 0 ? sigma * noise(rng) : 0.0));
        r.vehicle_type = VehicleType::kCar;
        t.records.push_back(r);
      }
      return t;
    };

    const std::int64_t base_id = static_cast<std::int64_t>(k) * 10;
    tracks.push_back(make_track(base_id + 1, kTargetLane, run.follower_x, run.follower_v, archetype));
    tracks.push_back(make_track(base_id, kTargetLane, run.lead_x, run.lead_v, std::nullopt));

    int next = 2;
    for (int lane : {kTargetLane - 1, kTargetLane + 1}) {
      for (int j = 0; j < config.neighbors_per_side; ++j) {
        const double speed = uniform(rng, config.lead.initial_speed_min, config.lead.initial_speed_max);
        const double x0 = uniform(rng, -120.0, 120.0);
        std::vector<double> xs(steps), vs(steps, speed);
        for (int i = 0; i < steps; ++i) xs[i] = x0 + speed * i * kFrameDt;
        tracks.push_back(make_track(base_id + next++, lane, xs, vs, std::nullopt));
      }
    }
  }
  return tracks;
}

}  // namespace drivepred::trajdata
