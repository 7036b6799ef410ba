#include "coevo/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace coevo {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  return a;  // [0, 2pi)
}

double wrap_signed(double a) {
  a = std::fmod(a + std::numbers::pi, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  return a - std::numbers::pi;  // (-pi, pi]
}

// length of the intersection of two arcs (start, len), len <= 2pi
double arc_overlap(double a_start, double a_len, double b_start, double b_len) {
  double d0 = wrap_angle(b_start - a_start);
  auto linear = [](double as, double ae, double bs, double be) {
    return std::max(0.0, std::min(ae, be) - std::max(as, bs));
  };
  return linear(0.0, a_len, d0, d0 + b_len) +
         linear(0.0, a_len, d0 - kTwoPi, d0 - kTwoPi + b_len);
}

struct Arc {
  double start;  // [0, 2pi)
  double len;
};

// subtract one arc from another; result has up to two pieces
std::vector<Arc> arc_subtract(const Arc& a, const Arc& b) {
  double d0 = wrap_angle(b.start - a.start);
  // blocked segments in a-local coordinates [0, a.len]
  std::vector<std::pair<double, double>> kept{{0.0, a.len}};
  for (double off : {d0 - kTwoPi, d0}) {
    std::vector<std::pair<double, double>> next;
    for (auto [s, e] : kept) {
      double bs = std::max(s, off);
      double be = std::min(e, off + b.len);
      if (bs >= be) {
        next.emplace_back(s, e);
        continue;
      }
      if (s < bs) next.emplace_back(s, bs);
      if (be < e) next.emplace_back(be, e);
    }
    kept = std::move(next);
  }
  std::vector<Arc> out;
  for (auto [s, e] : kept)
    if (e - s > 0.0) out.push_back({wrap_angle(a.start + s), e - s});
  return out;
}

// smallest positive ray-circle intersection distance, or +inf
double ray_circle(Vec2 origin, double ux, double uy, Vec2 center, double radius) {
  double cx = center.x - origin.x, cy = center.y - origin.y;
  double proj = cx * ux + cy * uy;
  double disc = proj * proj - (cx * cx + cy * cy - radius * radius);
  if (disc < 0.0) return std::numeric_limits<double>::infinity();
  double root = std::sqrt(disc);
  double t = proj - root;
  if (t > 0.0) return t;
  t = proj + root;
  if (t > 0.0) return t;
  return std::numeric_limits<double>::infinity();
}

}  // namespace

double ground_brightness(Vec2 position, const ArenaConfig& arena) {
  double dist = std::hypot(position.x, position.y);
  double frac = dist / (arena.side / 2.0);
  return 1.0 - std::min(1.0, frac);
}

std::array<double, 24> ir_ray_activations(const RobotPose& self, const RobotSpec& spec,
                                          const RobotPose& opponent, const RobotSpec& opponent_spec,
                                          const ArenaConfig& arena) {
  std::array<double, 24> out{};
  const double half = arena.side / 2.0;
  for (int i = 0; i < 24; ++i) {
    double theta = self.heading + i * (std::numbers::pi / 12.0);
    double ux = std::cos(theta), uy = std::sin(theta);
    double t = std::numeric_limits<double>::infinity();
    if (ux > 0.0) t = std::min(t, (half - self.position.x) / ux);
    if (ux < 0.0) t = std::min(t, (-half - self.position.x) / ux);
    if (uy > 0.0) t = std::min(t, (half - self.position.y) / uy);
    if (uy < 0.0) t = std::min(t, (-half - self.position.y) / uy);
    if (arena.cylinder.enabled)
      t = std::min(t, ray_circle(self.position, ux, uy, Vec2{0.0, 0.0},
                                 arena.cylinder.diameter / 2.0));
    t = std::min(t, ray_circle(self.position, ux, uy, opponent.position,
                               opponent_spec.body_radius));
    double d = std::max(0.0, t - spec.body_radius);
    out[static_cast<std::size_t>(i)] = std::max(0.0, 1.0 - d / spec.ir_range);
  }
  return out;
}

std::array<double, 8> read_infrared(const RobotPose& self, const RobotSpec& spec,
                                    const RobotPose& opponent, const RobotSpec& opponent_spec,
                                    const ArenaConfig& arena) {
  auto rays = ir_ray_activations(self, spec, opponent, opponent_spec, arena);
  std::array<double, 8> out{};
  for (int k = 0; k < 8; ++k)
    out[static_cast<std::size_t>(k)] =
        (rays[static_cast<std::size_t>(3 * k)] + rays[static_cast<std::size_t>(3 * k + 1)] +
         rays[static_cast<std::size_t>(3 * k + 2)]) / 3.0;
  return out;
}

std::array<double, 9> read_camera(const RobotPose& self, const RobotPose& opponent,
                                  double opponent_radius, const ArenaConfig& arena) {
  std::array<double, 9> out{};
  double dx = opponent.position.x - self.position.x;
  double dy = opponent.position.y - self.position.y;
  double d = std::hypot(dx, dy);
  if (d <= 0.0) return out;  // pre: robots do not coincide

  double bearing = wrap_angle(std::atan2(dy, dx) - self.heading);
  double half = std::asin(std::min(1.0, opponent_radius / d));
  Arc opp{wrap_angle(bearing - half), 2.0 * half};

  std::vector<Arc> visible{opp};
  const auto& cyl = arena.cylinder;
  if (cyl.enabled && cyl.occludes_vision) {
    double cx = -self.position.x, cy = -self.position.y;  // cylinder at origin
    double dc = std::hypot(cx, cy);
    if (dc > 0.0 && dc < d) {
      double cb = wrap_angle(std::atan2(cy, cx) - self.heading);
      double ch = std::asin(std::min(1.0, (cyl.diameter / 2.0) / dc));
      Arc blocked{wrap_angle(cb - ch), 2.0 * ch};
      std::vector<Arc> next;
      for (const Arc& a : visible)
        for (const Arc& piece : arc_subtract(a, blocked)) next.push_back(piece);
      visible = std::move(next);
    }
  }

  const double sector = std::numbers::pi / 4.0;
  double total = 0.0;
  for (const Arc& a : visible) {
    total += a.len;
    for (int k = 0; k < 8; ++k) {
      double s_start = wrap_angle(k * sector - sector / 2.0);
      out[static_cast<std::size_t>(k)] += arc_overlap(s_start, sector, a.start, a.len) / sector;
    }
  }
  out[8] = total / kTwoPi;
  return out;
}

double tiredness(const WheelHistory& history) {
  double mean = history.sum() / kWheelHistoryLen;
  return mean * mean;
}

double effective_max_speed(double max_speed, double tir) {
  return max_speed * (1.0 - tir);
}

std::pair<double, double> motor_to_wheel_speeds(double tm, double rm, double ms_t,
                                                bool allow_backward) {
  if (allow_backward) rm = 2.0 * rm - 1.0;
  double f = -8.0 * (tm - 0.5) * (tm - 0.5) + 1.0;
  double full = ms_t * rm;
  if (tm < 0.5) return {full * f, full};
  if (tm > 0.5) return {full, full * f};
  return {full, full};
}

RobotPose integrate_motion(const RobotPose& pose, double rsl, double rsr,
                           const RobotSpec& spec, double dt) {
  double v = spec.wheel_radius * (rsl + rsr) / 2.0;
  double omega = spec.wheel_radius * (rsr - rsl) / spec.axle_track;
  RobotPose out = pose;
  if (std::abs(omega) < 1e-9) {
    out.position.x += v * dt * std::cos(pose.heading);
    out.position.y += v * dt * std::sin(pose.heading);
  } else {
    double radius = v / omega;
    double h1 = pose.heading + omega * dt;
    out.position.x += radius * (std::sin(h1) - std::sin(pose.heading));
    out.position.y += radius * (-std::cos(h1) + std::cos(pose.heading));
    out.heading = wrap_signed(h1);
  }
  return out;
}

std::pair<RobotPose, bool> resolve_collisions(const RobotPose& pose, double body_radius,
                                              const ArenaConfig& arena) {
  RobotPose out = pose;
  bool contact = false;
  const double lim = arena.side / 2.0 - body_radius;
  if (out.position.x > lim) { out.position.x = lim; contact = true; }
  if (out.position.x < -lim) { out.position.x = -lim; contact = true; }
  if (out.position.y > lim) { out.position.y = lim; contact = true; }
  if (out.position.y < -lim) { out.position.y = -lim; contact = true; }
  if (arena.cylinder.enabled) {
    double rc = arena.cylinder.diameter / 2.0 + body_radius;
    double d = std::hypot(out.position.x, out.position.y);
    if (d < rc) {
      contact = true;
      if (d > 0.0) {
        out.position.x *= rc / d;
        out.position.y *= rc / d;
      } else {
        out.position.x = rc;
      }
    }
  }
  return {out, contact};
}

std::array<double, kSensorCount> assemble_sensors(
    const RobotPose& self, const RobotSpec& spec, const RobotPose& opponent,
    const RobotSpec& opponent_spec, const ArenaConfig& arena, int step, int max_steps,
    double tir, bool contact) {
  std::array<double, kSensorCount> s{};
  auto ir = read_infrared(self, spec, opponent, opponent_spec, arena);
  auto cam = read_camera(self, opponent, opponent_spec.body_radius, arena);
  for (int i = 0; i < 8; ++i) s[static_cast<std::size_t>(i)] = ir[static_cast<std::size_t>(i)];
  for (int i = 0; i < 9; ++i) s[static_cast<std::size_t>(8 + i)] = cam[static_cast<std::size_t>(i)];

  // ground sensors front/right/back/left at ground_offset in the body frame
  double c = std::cos(self.heading), sn = std::sin(self.heading);
  const double r = spec.ground_offset;
  Vec2 offsets[4] = {{r * c, r * sn}, {r * sn, -r * c}, {-r * c, -r * sn}, {-r * sn, r * c}};
  double mean = 0.0;
  for (int i = 0; i < 4; ++i) {
    Vec2 p{self.position.x + offsets[i].x, self.position.y + offsets[i].y};
    double g = ground_brightness(p, arena);
    s[static_cast<std::size_t>(17 + i)] = g;
    mean += g;
  }
  s[21] = mean / 4.0;
  s[22] = contact ? 1.0 : 0.0;
  s[23] = static_cast<double>(step) / static_cast<double>(max_steps);
  s[24] = tir;
  return s;
}

std::pair<double, double> episode_fitness(std::optional<int> capture_step, int steps) {
  double e = 1.0;
  if (capture_step.has_value()) {
    if (*capture_step < 1 || *capture_step > steps)
      throw std::invalid_argument("episode_fitness: capture_step out of range");
    e = static_cast<double>(*capture_step) / static_cast<double>(steps);
  }
  return {1.0 - e, e};  // (predator, prey); sums to 1 exactly
}

namespace {

struct RobotRun {
  RobotPose pose;
  ControllerState net;
  WheelHistory history;
  bool contact = false;
};

}  // namespace

EpisodeOutcome run_episode(const EpisodeConfig& config, const Genotype& predator,
                           const Genotype& prey) {
  const ControllerTopology& topo = config.topology;
  if (static_cast<int>(predator.genes.size()) != topo.gene_count() ||
      static_cast<int>(prey.genes.size()) != topo.gene_count())
    throw std::invalid_argument("run_episode: genotype length does not match topology");

  const double quarter = config.arena.side / 4.0;
  RobotRun pred{RobotPose{{-quarter, 0.0}, 0.0}, ControllerState::zero(topo), {}, false};
  RobotRun pr{RobotPose{{quarter, 0.0}, std::numbers::pi}, ControllerState::zero(topo), {}, false};

  EpisodeOutcome out;
  out.steps = config.max_steps;
  if (config.record_trajectory) out.trajectory.emplace();

  Rng noise(config.noise_seed);
  const bool noisy = config.sensor_noise > 0.0;

  const double capture_dist = config.predator.body_radius + config.prey.body_radius;

  for (int step = 0; step < config.max_steps; ++step) {
    struct Cmd {
      MotorCommand motors;
      double rsl, rsr, tir;
    };
    Cmd cmds[2];
    const Genotype* genos[2] = {&predator, &prey};
    RobotRun* runs[2] = {&pred, &pr};
    const RobotSpec* specs[2] = {&config.predator, &config.prey};

    // commands from the pre-step world snapshot, predator first
    for (int r = 0; r < 2; ++r) {
      RobotRun& self = *runs[r];
      RobotRun& opp = *runs[1 - r];
      double tir = tiredness(self.history);
      auto sensors = assemble_sensors(self.pose, *specs[r], opp.pose, *specs[1 - r],
                                      config.arena, step, config.max_steps, tir, self.contact);
      if (noisy)
        for (double& v : sensors)
          v = std::clamp(v + noise.uniform(-config.sensor_noise, config.sensor_noise), 0.0, 1.0);
      MotorCommand m = network_step(topo, *genos[r], self.net, sensors);
      double ms_t = effective_max_speed(specs[r]->max_speed, tir);
      auto [rsl, rsr] = motor_to_wheel_speeds(m.tm, m.rm, ms_t, config.allow_backward);
      cmds[r] = Cmd{m, rsl, rsr, tir};
      double rs = (std::abs(rsl) + std::abs(rsr)) / (2.0 * specs[r]->max_speed);
      self.history.push(std::clamp(rs, 0.0, 1.0));
    }

    for (int r = 0; r < 2; ++r) {
      RobotRun& self = *runs[r];
      self.pose = integrate_motion(self.pose, cmds[r].rsl, cmds[r].rsr, *specs[r], kControlDt);
      auto [fixed, contact] = resolve_collisions(self.pose, specs[r]->body_radius, config.arena);
      self.pose = fixed;
      self.contact = contact;
    }

    double gap = std::hypot(pr.pose.position.x - pred.pose.position.x,
                            pr.pose.position.y - pred.pose.position.y);
    bool captured = gap <= capture_dist;
    if (captured) {
      out.capture_step = step + 1;
      pred.contact = true;
      pr.contact = true;
    }

    if (out.trajectory) {
      for (int r = 0; r < 2; ++r) {
        RobotRun& self = *runs[r];
        StepRecord rec{self.pose.position.x, self.pose.position.y, self.pose.heading,
                       cmds[r].motors.tm,   cmds[r].motors.rm,    cmds[r].rsl,
                       cmds[r].rsr,         cmds[r].tir,          self.contact ? 1 : 0};
        (r == 0 ? out.trajectory->predator : out.trajectory->prey).push_back(rec);
      }
    }
    if (captured) break;
  }

  auto [pf, qf] = episode_fitness(out.capture_step, out.steps);
  out.predator_fitness = pf;
  out.prey_fitness = qf;
  return out;
}

}  // namespace coevo
