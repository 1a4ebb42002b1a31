// Copyright 2026 The tokplan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Synthetic data: scenario suites for the reward layer and smooth trajectory
// corpora for codebook construction.
//
// Ground-truth plans are compositions of constant speed / constant yaw-rate
// arcs on an integer m/s by 0.1 rad/s lattice, so any codebook clustered
// from them (with a disk radius below the lattice spacing) expresses them
// exactly. Each scenario is redrawn until its ground truth scores a perfect
// PDMS.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tokplan/errors.hpp"
#include "tokplan/geometry.hpp"
#include "tokplan/metrics.hpp"
#include "tokplan/rng.hpp"
#include "tokplan/scenario.hpp"

namespace tokplan {

inline constexpr std::size_t kPlanHorizon = 10;

/// Constant speed, constant yaw-rate arc over one step.
inline MotionDelta arc_delta(double speed, double yaw_rate, double dt = kStepSeconds) {
  const double dtheta = yaw_rate * dt;
  if (std::abs(yaw_rate) < 1e-12) return {speed * dt, 0.0, 0.0};
  const double radius = speed / yaw_rate;
  return {radius * std::sin(dtheta), radius * (1.0 - std::cos(dtheta)), dtheta};
}

/// Lattice primitive: integer speed in m/s, yaw rate in tenths of rad/s.
inline MotionDelta lattice_delta(int speed, int yaw_tenths) {
  if (speed == 0) return {};
  return arc_delta(static_cast<double>(speed), 0.1 * yaw_tenths);
}

inline Trajectory compose_trajectory(const Pose2D& start, std::span<const MotionDelta> deltas) {
  Trajectory t;
  t.poses.reserve(deltas.size() + 1);
  t.poses.push_back(start);
  for (const auto& d : deltas) t.poses.push_back(se2_compose(t.poses.back(), d));
  return t;
}

/// Corridor of half-width `half_width` around a polyline, with mitred joints.
inline Polygon corridor_polygon(const Polyline& route, double half_width) {
  const auto& p = route.points();
  const std::size_t n = p.size();
  std::vector<Point2> seg_normal(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const Point2 d = p[i + 1] - p[i];
    const double len = norm(d);
    seg_normal[i] = {-d.y / len, d.x / len};
  }
  std::vector<Point2> left(n);
  std::vector<Point2> right(n);
  for (std::size_t i = 0; i < n; ++i) {
    Point2 nrm;
    double scale = 1.0;
    if (i == 0) {
      nrm = seg_normal.front();
    } else if (i == n - 1) {
      nrm = seg_normal.back();
    } else {
      const Point2 sum = seg_normal[i - 1] + seg_normal[i];
      nrm = (1.0 / norm(sum)) * sum;
      scale = 1.0 / std::max(dot(nrm, seg_normal[i]), 0.2);
    }
    left[i] = p[i] + (half_width * scale) * nrm;
    right[i] = p[i] - (half_width * scale) * nrm;
  }
  Polygon poly;
  poly.vertices = left;
  poly.vertices.insert(poly.vertices.end(), right.rbegin(), right.rend());
  return poly;
}

struct SuiteConfig {
  double simple_half_width = 2.75;
  double complex_half_width = 1.75;
  double route_behind = 10.0;
  double route_ahead = 80.0;
  int max_attempts = 200;
};

namespace detail {

struct Profile {
  std::vector<int> speed;
  std::vector<int> yaw;
  Instruction instruction = Instruction::GoStraight;
};

enum class ComplexKind { TurnLeft, TurnRight, Stop, Follow };

inline Profile simple_profile(Rng& rng) {
  Profile p;
  const int v0 = rng.integer(3, 12);
  constexpr int kYawChoices[] = {0, 0, 0, -1, 1};
  const int yaw = kYawChoices[rng.index(5)];
  const bool change = rng.bernoulli(0.4);
  const int at = rng.integer(1, 8);
  const int dv = rng.bernoulli(0.5) ? 1 : -1;
  for (std::size_t i = 0; i < kPlanHorizon; ++i) {
    int v = v0;
    if (change && static_cast<int>(i) >= at) v = std::max(2, v0 + dv);
    p.speed.push_back(v);
    p.yaw.push_back(yaw);
  }
  return p;
}

inline Profile complex_profile(Rng& rng, ComplexKind kind) {
  Profile p;
  switch (kind) {
    case ComplexKind::TurnLeft:
    case ComplexKind::TurnRight: {
      const int sign = kind == ComplexKind::TurnLeft ? 1 : -1;
      const int v0 = rng.integer(5, 9);
      const int decel = rng.integer(1, 2);
      const int peak = rng.integer(4, 5);
      const int hold = rng.integer(2, 4);
      const int start = rng.integer(decel, 10 - 2 - hold);
      for (int i = 0; i < static_cast<int>(kPlanHorizon); ++i) {
        p.speed.push_back(v0 - std::min(i + 1, decel));
        int w = 0;
        if (i == start || i == start + hold + 1) {
          w = 2;
        } else if (i > start && i <= start + hold) {
          w = peak;
        }
        p.yaw.push_back(sign * w);
      }
      p.instruction = sign > 0 ? Instruction::TurnLeft : Instruction::TurnRight;
      break;
    }
    case ComplexKind::Stop: {
      const int v0 = rng.integer(4, 8);
      const int cruise = rng.integer(0, 10 - v0);
      constexpr int kYawChoices[] = {0, 0, -1, 1};
      const int yaw = kYawChoices[rng.index(4)];
      for (int i = 0; i < static_cast<int>(kPlanHorizon); ++i) {
        const int v = std::max(0, v0 - std::max(0, i - cruise + 1));
        p.speed.push_back(v);
        p.yaw.push_back(v == 0 ? 0 : yaw);
      }
      p.instruction = Instruction::Stop;
      break;
    }
    case ComplexKind::Follow: {
      const int v0 = rng.integer(5, 11);
      constexpr int kYawChoices[] = {0, -1, 1};
      const int yaw = kYawChoices[rng.index(3)];
      for (std::size_t i = 0; i < kPlanHorizon; ++i) {
        p.speed.push_back(v0);
        p.yaw.push_back(yaw);
      }
      p.instruction = Instruction::GoStraight;
      break;
    }
  }
  return p;
}

inline Polyline build_route(const Trajectory& gt, const SuiteConfig& cfg) {
  const Pose2D& s = gt.poses.front();
  std::vector<Point2> pts;
  pts.push_back({s.x - cfg.route_behind * std::cos(s.theta),
                 s.y - cfg.route_behind * std::sin(s.theta)});
  for (const auto& pose : gt.poses) {
    if (distance(pts.back(), pose.position()) > 1e-6) pts.push_back(pose.position());
  }
  const Pose2D& e = gt.poses.back();
  pts.push_back(
      {e.x + cfg.route_ahead * std::cos(e.theta), e.y + cfg.route_ahead * std::sin(e.theta)});
  return Polyline(std::move(pts));
}

/// Vehicle moving along the route at signed speed `speed` with lateral offset.
inline Obstacle route_follower(const Polyline& route, double s_start, double speed,
                               double offset) {
  Obstacle o;
  for (std::size_t i = 0; i <= kPlanHorizon; ++i) {
    Pose2D pose = route.pose_at(s_start + speed * kStepSeconds * static_cast<double>(i), offset);
    if (speed < 0.0) pose.theta = wrap_angle(pose.theta + kPi);
    o.poses.poses.push_back(pose);
  }
  return o;
}

/// Vehicle crossing the route perpendicularly at arc length `s_cross`.
/// `lead` is the signed distance from the crossing point at t = 0 (negative
/// values approach it).
inline Obstacle crossing_vehicle(const Polyline& route, double s_cross, double lead, double speed,
                                 int side) {
  const Pose2D c = route.pose_at(s_cross);
  const Point2 n{-std::sin(c.theta) * side, std::cos(c.theta) * side};
  const double heading = std::atan2(n.y, n.x);
  Obstacle o;
  for (std::size_t i = 0; i <= kPlanHorizon; ++i) {
    const double along = lead + speed * kStepSeconds * static_cast<double>(i);
    o.poses.poses.push_back({c.x + n.x * along, c.y + n.y * along, heading});
  }
  return o;
}

inline std::vector<Obstacle> simple_obstacles(Rng& rng, const Polyline& route, double s0,
                                              double v0) {
  std::vector<Obstacle> out;
  if (rng.bernoulli(0.5)) return out;
  switch (rng.index(3)) {
    case 0:
      out.push_back(route_follower(route, s0 + rng.uniform(40.0, 60.0),
                                   v0 + static_cast<double>(rng.integer(0, 2)), 0.0));
      break;
    case 1:
      out.push_back(route_follower(route, s0 + rng.uniform(30.0, 70.0), -rng.uniform(5.0, 10.0),
                                   4.5));
      break;
    default:
      out.push_back(route_follower(route, s0 + rng.uniform(15.0, 50.0), 0.0,
                                   rng.bernoulli(0.5) ? 5.0 : -5.0));
      break;
  }
  return out;
}

inline std::vector<Obstacle> complex_obstacles(Rng& rng, ComplexKind kind, const Polyline& route,
                                               double s0, double v0, double gt_progress) {
  std::vector<Obstacle> out;
  switch (kind) {
    case ComplexKind::TurnLeft:
    case ComplexKind::TurnRight: {
      const double s_cross = s0 + rng.uniform(0.45, 0.8) * gt_progress;
      if (rng.bernoulli(0.5)) {
        // Passes the crossing point well before the ego gets there.
        out.push_back(crossing_vehicle(route, s_cross, rng.uniform(-8.0, -4.0),
                                       rng.uniform(6.0, 9.0), rng.bernoulli(0.5) ? 1 : -1));
      } else {
        // Waits beside the corridor for the ego to clear the crossing.
        out.push_back(crossing_vehicle(route, s_cross, -rng.uniform(4.5, 6.0), 0.0,
                                       rng.bernoulli(0.5) ? 1 : -1));
      }
      if (rng.bernoulli(0.7)) {
        out.push_back(route_follower(route, s0 + rng.uniform(20.0, 45.0), -rng.uniform(4.0, 8.0),
                                     3.8));
      }
      if (rng.bernoulli(0.4)) {
        out.push_back(route_follower(route, s0 + rng.uniform(14.0, 20.0), v0, 0.0));
      }
      break;
    }
    case ComplexKind::Stop: {
      out.push_back(route_follower(route, s0 + gt_progress + rng.uniform(6.5, 8.0), 0.0, 0.0));
      if (rng.bernoulli(0.5)) {
        out.push_back(route_follower(route, s0 + rng.uniform(20.0, 45.0), -rng.uniform(4.0, 8.0),
                                     3.8));
      }
      break;
    }
    case ComplexKind::Follow: {
      out.push_back(route_follower(route, s0 + rng.uniform(11.0, 16.0), v0, 0.0));
      out.push_back(route_follower(route, s0 + rng.uniform(20.0, 45.0), -rng.uniform(4.0, 8.0),
                                   3.8));
      break;
    }
  }
  return out;
}

inline Trajectory lateral_drift(const Trajectory& gt, double per_step) {
  Trajectory t = gt;
  for (std::size_t i = 0; i < t.poses.size(); ++i) {
    auto& p = t.poses[i];
    const double off = per_step * static_cast<double>(i);
    p.x -= std::sin(p.theta) * off;
    p.y += std::cos(p.theta) * off;
  }
  return t;
}

inline Trajectory longitudinal_lag(const Trajectory& gt, double per_step) {
  Trajectory t = gt;
  for (std::size_t i = 0; i < t.poses.size(); ++i) {
    auto& p = t.poses[i];
    const double off = per_step * static_cast<double>(i);
    p.x -= std::cos(p.theta) * off;
    p.y -= std::sin(p.theta) * off;
  }
  return t;
}

inline bool ground_truth_is_perfect(const Scenario& sc) {
  if (!is_simple(sc.drivable)) return false;
  if (first_collision(sc.gt_traj, sc)) return false;
  const RewardBreakdown b = pdms(sc.gt_traj, sc, RewardConfig{});
  return b.pdms == 1.0;
}

inline Scenario draw_scenario(Rng& rng, Complexity complexity, const SuiteConfig& cfg) {
  const ComplexKind kind = static_cast<ComplexKind>(rng.index(4));
  const Profile prof =
      complexity == Complexity::Simple ? simple_profile(rng) : complex_profile(rng, kind);

  std::vector<MotionDelta> deltas;
  for (std::size_t i = 0; i < kPlanHorizon; ++i) {
    deltas.push_back(lattice_delta(prof.speed[i], prof.yaw[i]));
  }

  Scenario sc;
  sc.complexity = complexity;
  sc.instruction = prof.instruction;
  sc.gt_traj = compose_trajectory(Pose2D{}, deltas);
  sc.ego.pose = sc.gt_traj.poses.front();
  const auto v = finite_difference_velocity(sc.gt_traj);
  sc.ego.speed = norm(v[0]);
  sc.ego.accel = (norm(v[1]) - norm(v[0])) / kStepSeconds;
  sc.route = build_route(sc.gt_traj, cfg);
  sc.drivable = corridor_polygon(
      sc.route, complexity == Complexity::Simple ? cfg.simple_half_width : cfg.complex_half_width);

  const double s0 = sc.route.project(sc.ego.pose.position());
  const double progress = progress_along(sc.route, sc.gt_traj);
  sc.obstacles = complexity == Complexity::Simple
                     ? simple_obstacles(rng, sc.route, s0, sc.ego.speed)
                     : complex_obstacles(rng, kind, sc.route, s0, sc.ego.speed, progress);

  sc.raters = {{sc.gt_traj, 10.0},
               {lateral_drift(sc.gt_traj, 0.12), 8.0},
               {longitudinal_lag(sc.gt_traj, 0.25), 6.0}};
  return sc;
}

}  // namespace detail

/// Deterministic suite of n scenarios, round(mix * n) of them Complex.
inline std::vector<Scenario> generate_suite(std::uint64_t seed, std::size_t n, double mix,
                                            const SuiteConfig& cfg = {}) {
  if (!(mix >= 0.0 && mix <= 1.0)) throw DataError("complex mix must lie in [0, 1]");
  const auto n_complex = static_cast<std::size_t>(std::llround(mix * static_cast<double>(n)));
  std::vector<Complexity> labels(n, Complexity::Simple);
  std::fill_n(labels.begin(), n_complex, Complexity::Complex);
  Rng order_rng(mix_seed(seed, 0x5ce7a210ULL));
  order_rng.shuffle(std::span<Complexity>(labels));

  std::vector<Scenario> suite;
  suite.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(mix_seed(seed, i));
    Scenario sc;
    bool ok = false;
    for (int attempt = 0; attempt < cfg.max_attempts && !ok; ++attempt) {
      sc = detail::draw_scenario(rng, labels[i], cfg);
      ok = detail::ground_truth_is_perfect(sc);
    }
    if (!ok) throw InvariantError("could not draw a feasible scenario " + std::to_string(i));
    sc.id = "s" + std::to_string(seed) + "-" + std::to_string(i);
    suite.push_back(std::move(sc));
  }
  return suite;
}

struct CorpusConfig {
  double max_speed = 10.0;      // m/s
  double max_accel = 2.0;       // m/s^2
  double max_yaw_rate = 0.3;    // rad/s
  double yaw_rate_step = 0.08;  // rad/s change per step, uniform in +-
  std::size_t horizon = kPlanHorizon;
  int substeps = 10;
};

/// Smooth unicycle trajectories with piecewise-constant acceleration and a
/// random-walk yaw rate, integrated with fine substeps.
inline std::vector<Trajectory> generate_corpus(std::uint64_t seed, std::size_t n,
                                               const CorpusConfig& cfg = {}) {
  std::vector<Trajectory> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    Rng rng(mix_seed(seed, 0xc0de0000ULL + k));
    double speed = rng.uniform(0.0, cfg.max_speed);
    double yaw_rate = rng.uniform(-cfg.max_yaw_rate, cfg.max_yaw_rate);
    Pose2D pose;
    Trajectory t;
    t.poses.push_back(pose);
    for (std::size_t i = 0; i < cfg.horizon; ++i) {
      const double accel = rng.uniform(-cfg.max_accel, cfg.max_accel);
      yaw_rate = std::clamp(yaw_rate + rng.uniform(-cfg.yaw_rate_step, cfg.yaw_rate_step),
                            -cfg.max_yaw_rate, cfg.max_yaw_rate);
      const double h = kStepSeconds / cfg.substeps;
      for (int s = 0; s < cfg.substeps; ++s) {
        const double next_speed = std::clamp(speed + accel * h, 0.0, cfg.max_speed);
        const double mean_speed = 0.5 * (speed + next_speed);
        // No rotation without motion.
        const double w = mean_speed > 0.0 ? yaw_rate : 0.0;
        pose = se2_compose(pose, arc_delta(mean_speed, w, h));
        speed = next_speed;
      }
      t.poses.push_back(pose);
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace tokplan
