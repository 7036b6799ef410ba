#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "coevo/neuro.hpp"

namespace coevo {

inline constexpr double kControlDt = 0.1;      // 10 Hz control loop
inline constexpr int kWheelHistoryLen = 200;   // 20 s fatigue window
inline constexpr int kSensorCount = 25;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

struct CylinderConfig {
  bool enabled = false;
  double diameter = 0.1;
  bool occludes_vision = true;
};

// Square arena centered on the origin, black walls, radial white-to-black
// ground gradient.
struct ArenaConfig {
  double side = 3.0;
  CylinderConfig cylinder;
};

enum class Role : std::uint8_t { predator = 0, prey = 1 };

struct RobotSpec {
  double body_radius = 0.085;
  double wheel_radius = 0.029;
  double axle_track = 0.104;
  double max_speed = 10.0;     // rad/s; 8.5 for predators in the base setup
  double ir_range = 0.12;      // proximity sensor range from body surface
  double ground_offset = 0.06; // radius of the four ground-sensor mounts
};

struct RobotPose {
  Vec2 position;
  double heading = 0.0;  // radians
};

// Normalized mean wheel speeds of the last kWheelHistoryLen steps; entries
// before the episode start count as zero.
class WheelHistory {
 public:
  void push(double rs) {
    buf_[head_] = rs;
    head_ = (head_ + 1) % kWheelHistoryLen;
    if (count_ < kWheelHistoryLen) ++count_;
  }
  int count() const { return count_; }

  // fixed slot-order sum; entries never leave the window's value range
  double sum() const {
    double s = 0.0;
    for (int i = 0; i < count_; ++i) s += buf_[static_cast<std::size_t>(i)];
    return s;
  }

 private:
  std::array<double, kWheelHistoryLen> buf_{};
  int head_ = 0;
  int count_ = 0;
};

struct StepRecord {
  double x, y, heading;
  double tv, rv;       // raw motor outputs (tm, rm)
  double rsl, rsr;     // commanded wheel speeds, rad/s
  double tiredness;
  int contact;
};

struct TrajectoryLog {
  std::vector<StepRecord> predator;
  std::vector<StepRecord> prey;
};

struct EpisodeConfig {
  ArenaConfig arena;
  RobotSpec predator{.max_speed = 8.5};
  RobotSpec prey{.max_speed = 10.0};
  ControllerTopology topology;
  int max_steps = 1000;
  double sensor_noise = 0.0;     // uniform amplitude added to sensors, 0 = off
  bool allow_backward = false;   // map rm through 2*rm-1 into [-1,1]
  std::uint64_t noise_seed = 0;  // only consumed when sensor_noise > 0
  bool record_trajectory = false;
};

struct EpisodeOutcome {
  std::optional<int> capture_step;  // 1-based step index
  int steps = 0;                    // configured episode length
  double predator_fitness = 0.0;
  double prey_fitness = 0.0;
  std::optional<TrajectoryLog> trajectory;
};

// --- sensors and actuation ---------------------------------------------------

// 1 at the center, 0 at the walls; clamps to 0 outside.
double ground_brightness(Vec2 position, const ArenaConfig& arena);

// 24 raw ray activations at 15 deg spacing in the body frame (ray 0 along the
// heading); activation = max(0, 1 - d/range) with d measured from the body
// surface.
std::array<double, 24> ir_ray_activations(const RobotPose& self, const RobotSpec& spec,
                                          const RobotPose& opponent, const RobotSpec& opponent_spec,
                                          const ArenaConfig& arena);

// 8 grouped values, group k = mean of rays 3k..3k+2.
std::array<double, 8> read_infrared(const RobotPose& self, const RobotSpec& spec,
                                    const RobotPose& opponent, const RobotSpec& opponent_spec,
                                    const ArenaConfig& arena);

// 8 sector coverages (45 deg sectors fixed to the heading, sector 0 centered
// on it) plus total coverage over 360 deg; occlusion by the central cylinder
// is exact angular-interval clipping.
std::array<double, 9> read_camera(const RobotPose& self, const RobotPose& opponent,
                                  double opponent_radius, const ArenaConfig& arena);

// tir = (sum of history entries / kWheelHistoryLen)^2
double tiredness(const WheelHistory& history);

// ms_t = ms * (1 - tir)
double effective_max_speed(double max_speed, double tir);

// Wheel speed mapping; f(x) = -8(x-0.5)^2 + 1. With allow_backward, rm is
// remapped through 2*rm-1 first.
std::pair<double, double> motor_to_wheel_speeds(double tm, double rm, double ms_t,
                                                bool allow_backward = false);

// Exact arc integration of differential-drive kinematics over dt.
RobotPose integrate_motion(const RobotPose& pose, double rsl, double rsr,
                           const RobotSpec& spec, double dt);

// Pushes the body disk out of walls and the cylinder along the minimal
// translation vector; returns (corrected pose, contact flag).
std::pair<RobotPose, bool> resolve_collisions(const RobotPose& pose, double body_radius,
                                              const ArenaConfig& arena);

// Full 25-value sensor snapshot in the documented order:
// 8 IR groups, 8 camera sectors, camera total, 4 ground (front/right/back/left
// at ground_offset), ground mean, collision flag, clock, fatigue.
std::array<double, kSensorCount> assemble_sensors(
    const RobotPose& self, const RobotSpec& spec, const RobotPose& opponent,
    const RobotSpec& opponent_spec, const ArenaConfig& arena, int step, int max_steps,
    double tir, bool contact);

// --- episode -----------------------------------------------------------------

// elapsed fraction e = capture_step/steps (1.0 when no capture);
// prey_fitness = e, predator_fitness = 1 - e.
std::pair<double, double> episode_fitness(std::optional<int> capture_step, int steps);

// Deterministic episode: predator starts at (-side/4, 0) heading +x, prey at
// (+side/4, 0) heading -x. Capture when center distance <= sum of body radii.
EpisodeOutcome run_episode(const EpisodeConfig& config, const Genotype& predator,
                           const Genotype& prey);

}  // namespace coevo
