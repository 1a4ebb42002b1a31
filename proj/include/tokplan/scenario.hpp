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

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tokplan/errors.hpp"
#include "tokplan/geometry.hpp"

namespace tokplan {

enum class Instruction { GoStraight, TurnLeft, TurnRight, Stop };
enum class Complexity { Simple, Complex };

inline constexpr std::array<std::string_view, 4> kInstructionNames{"GoStraight", "TurnLeft",
                                                                   "TurnRight", "Stop"};
inline constexpr std::array<std::string_view, 2> kComplexityNames{"Simple", "Complex"};

inline std::string_view to_string(Instruction i) { return kInstructionNames[static_cast<int>(i)]; }
inline std::string_view to_string(Complexity c) { return kComplexityNames[static_cast<int>(c)]; }

inline Instruction parse_instruction(std::string_view s) {
  for (std::size_t i = 0; i < kInstructionNames.size(); ++i) {
    if (kInstructionNames[i] == s) return static_cast<Instruction>(i);
  }
  throw DataError("unknown instruction '" + std::string(s) + "'");
}

inline Complexity parse_complexity(std::string_view s) {
  for (std::size_t i = 0; i < kComplexityNames.size(); ++i) {
    if (kComplexityNames[i] == s) return static_cast<Complexity>(i);
  }
  throw DataError("unknown complexity '" + std::string(s) + "'");
}

struct EgoState {
  Pose2D pose;
  double speed = 0.0;  // m/s
  double accel = 0.0;  // m/s^2
};

struct Obstacle {
  BoxSpec spec;
  Trajectory poses;  // 2 Hz, at least planning horizon + 1 entries
};

struct RaterTrajectory {
  Trajectory traj;
  double score = 0.0;  // [0, 10]
};

struct Scenario {
  std::string id;
  EgoState ego;
  BoxSpec ego_box;
  Instruction instruction = Instruction::GoStraight;
  Polygon drivable;
  Polyline route;
  std::vector<Obstacle> obstacles;
  Trajectory gt_traj;
  std::vector<RaterTrajectory> raters;
  Complexity complexity = Complexity::Simple;

  std::size_t horizon() const { return gt_traj.horizon(); }
};

/// Finite-difference velocity at each pose (forward difference, backward at
/// the final pose), in world coordinates.
inline std::vector<Point2> finite_difference_velocity(const Trajectory& traj) {
  const auto& p = traj.poses;
  std::vector<Point2> v(p.size());
  if (p.size() < 2) return v;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    v[i] = (1.0 / kStepSeconds) * (p[i + 1].position() - p[i].position());
  }
  v.back() = v[p.size() - 2];
  return v;
}

namespace detail {

inline void require_aligned(const Trajectory& plan, const Scenario& scenario) {
  if (plan.poses.size() < 2) throw DataError("plan needs at least two poses");
  for (std::size_t k = 0; k < scenario.obstacles.size(); ++k) {
    if (scenario.obstacles[k].poses.poses.size() < plan.poses.size()) {
      throw DataError("obstacle " + std::to_string(k) + " horizon is shorter than the plan");
    }
  }
}

}  // namespace detail

struct TtcSettings {
  double step = 0.1;     // projection step [s]
  double horizon = 5.0;  // projection horizon [s]
};

/// Time until two boxes moving at constant velocity first overlap, probed on
/// the settings' step grid; +inf when they stay apart over the horizon.
/// Probing stops early once tau reaches `stop_at`.
inline double projected_ttc(const Pose2D& ego, Point2 ego_v, const BoxSpec& ego_box,
                            const Pose2D& other, Point2 other_v, const BoxSpec& other_box,
                            TtcSettings cfg = {},
                            double stop_at = std::numeric_limits<double>::infinity()) {
  const int n_steps = static_cast<int>(std::lround(cfg.horizon / cfg.step));
  const double reach = ego_box.circumradius() + other_box.circumradius();
  const Point2 rel_p = other.position() - ego.position();
  const Point2 rel_v = other_v - ego_v;
  for (int k = 0; k <= n_steps; ++k) {
    const double tau = k * cfg.step;
    if (tau >= stop_at) break;
    if (norm(rel_p + tau * rel_v) > reach) continue;
    const Pose2D ep{ego.x + ego_v.x * tau, ego.y + ego_v.y * tau, ego.theta};
    const Pose2D op{other.x + other_v.x * tau, other.y + other_v.y * tau, other.theta};
    if (obb_overlap(ep, ego_box, op, other_box)) return tau;
  }
  return std::numeric_limits<double>::infinity();
}

/// Minimum over plan timesteps of the constant-velocity time until the ego
/// box overlaps any obstacle box; +inf when no projection collides.
inline double min_ttc(const Trajectory& plan, const Scenario& scenario, TtcSettings cfg = {}) {
  detail::require_aligned(plan, scenario);
  const auto ego_v = finite_difference_velocity(plan);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& obs : scenario.obstacles) {
    const auto obs_v = finite_difference_velocity(obs.poses);
    for (std::size_t t = 0; t < plan.poses.size(); ++t) {
      best = std::min(best, projected_ttc(plan.poses[t], ego_v[t], scenario.ego_box,
                                          obs.poses.poses[t], obs_v[t], obs.spec, cfg, best));
    }
  }
  return best;
}

/// Earliest plan index at which the ego box overlaps an obstacle box.
inline std::optional<std::size_t> first_collision(const Trajectory& plan,
                                                  const Scenario& scenario) {
  detail::require_aligned(plan, scenario);
  for (std::size_t t = 0; t < plan.poses.size(); ++t) {
    for (const auto& obs : scenario.obstacles) {
      if (obb_overlap(plan.poses[t], scenario.ego_box, obs.poses.poses[t], obs.spec)) return t;
    }
  }
  return std::nullopt;
}

}  // namespace tokplan
