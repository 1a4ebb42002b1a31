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

// Plan scoring: PDMS and its sub-scores, displacement metrics, the ADE
// driving reward, the reasoning-length penalty and the rater feedback score.
//
// The PDMS sub-scores are desk-scale surrogates: binary collision and
// drivable-area gates, a tiered constant-velocity TTC, thresholded
// finite-difference comfort, and progress relative to the ground truth.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string_view>

#include "tokplan/errors.hpp"
#include "tokplan/geometry.hpp"
#include "tokplan/scenario.hpp"

namespace tokplan {

enum class RewardMode { Pdms, Ade };

inline std::string_view to_string(RewardMode m) { return m == RewardMode::Pdms ? "pdms" : "ade"; }

inline RewardMode parse_reward_mode(std::string_view s) {
  if (s == "pdms" || s == "PDMS") return RewardMode::Pdms;
  if (s == "ade" || s == "ADE") return RewardMode::Ade;
  throw DataError("unknown reward mode '" + std::string(s) + "'");
}

struct RewardConfig {
  double lambda_r = 0.3;
  double delta_ade = 2.0;
  double kappa = 10.0;
  double gamma_cot = 2e-3;
  double l_tol = 400.0;
  double max_accel = 3.0;     // m/s^2
  double max_jerk = 6.0;      // m/s^3
  double max_yaw_rate = 0.6;  // rad/s
  double ttc_threshold = 0.95;
  double progress_eps = 1e-6;

  /// Penalty shape rescaled to reasoning-token counts of the toy vocabulary.
  static RewardConfig toy() {
    RewardConfig cfg;
    cfg.gamma_cot = 0.4;
    cfg.l_tol = 12.0;
    return cfg;
  }
};

struct RewardBreakdown {
  double nc = 0.0;
  double dac = 0.0;
  double ttc = 0.0;
  double comfort = 0.0;
  double ep = 0.0;
  double pdms = 0.0;
  double ade = std::numeric_limits<double>::quiet_NaN();
  double r_driving = 0.0;
  double r_cot = 0.0;
  double r_total = 0.0;
  bool failed = false;
};

inline double combine_pdms(double nc, double dac, double ttc, double comfort, double ep) {
  return nc * dac * (5.0 * ttc + 2.0 * comfort + 5.0 * ep) / 12.0;
}

namespace detail {

inline void require_same_horizon(const Trajectory& a, const Trajectory& b) {
  if (a.poses.size() != b.poses.size()) {
    throw DataError("trajectory length mismatch: " + std::to_string(a.poses.size()) + " vs " +
                    std::to_string(b.poses.size()) + " poses");
  }
  if (a.poses.size() < 2) throw DataError("trajectories need at least two poses");
}

}  // namespace detail

inline bool comfortable(const Trajectory& plan, const RewardConfig& cfg) {
  constexpr double kTol = 1e-9;
  const auto& p = plan.poses;
  std::vector<double> speed;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    speed.push_back(distance(p[i].position(), p[i + 1].position()) / kStepSeconds);
    const double yaw_rate = wrap_angle(p[i + 1].theta - p[i].theta) / kStepSeconds;
    if (std::abs(yaw_rate) > cfg.max_yaw_rate + kTol) return false;
  }
  std::vector<double> accel;
  for (std::size_t i = 0; i + 1 < speed.size(); ++i) {
    accel.push_back((speed[i + 1] - speed[i]) / kStepSeconds);
    if (std::abs(accel.back()) > cfg.max_accel + kTol) return false;
  }
  for (std::size_t i = 0; i + 1 < accel.size(); ++i) {
    if (std::abs((accel[i + 1] - accel[i]) / kStepSeconds) > cfg.max_jerk + kTol) return false;
  }
  return true;
}

inline bool within_drivable(const Trajectory& plan, const Scenario& scenario) {
  for (const auto& pose : plan.poses) {
    if (!point_in_polygon(pose.position(), scenario.drivable)) return false;
  }
  return true;
}

/// PDMS and its sub-scores against the scenario's ground truth progress.
inline RewardBreakdown pdms(const Trajectory& plan, const Scenario& scenario,
                            const RewardConfig& cfg) {
  detail::require_same_horizon(plan, scenario.gt_traj);
  RewardBreakdown b;
  b.nc = first_collision(plan, scenario) ? 0.0 : 1.0;
  b.dac = within_drivable(plan, scenario) ? 1.0 : 0.0;
  const double ttc = min_ttc(plan, scenario);
  b.ttc = ttc >= cfg.ttc_threshold ? 1.0 : (ttc >= 0.5 * cfg.ttc_threshold ? 0.5 : 0.0);
  b.comfort = comfortable(plan, cfg) ? 1.0 : 0.0;
  const double gt_progress = progress_along(scenario.route, scenario.gt_traj);
  b.ep = std::clamp(progress_along(scenario.route, plan) / std::max(gt_progress, cfg.progress_eps),
                    0.0, 1.0);
  b.pdms = combine_pdms(b.nc, b.dac, b.ttc, b.comfort, b.ep);
  return b;
}

/// Mean position error over the poses after the shared initial one.
inline double ade(const Trajectory& plan, const Trajectory& ref) {
  detail::require_same_horizon(plan, ref);
  double sum = 0.0;
  for (std::size_t i = 1; i < plan.poses.size(); ++i) {
    sum += distance(plan.poses[i].position(), ref.poses[i].position());
  }
  return sum / static_cast<double>(plan.poses.size() - 1);
}

inline double ade_reward(double ade_value, const RewardConfig& cfg) {
  return (cfg.delta_ade - ade_value) / cfg.kappa;
}

inline double cot_penalty(double reasoning_len, const RewardConfig& cfg) {
  return 1.0 / (1.0 + std::exp(-(reasoning_len - cfg.l_tol) * cfg.gamma_cot));
}

inline double combine_reward(double r_driving, double r_cot, const RewardConfig& cfg) {
  return r_driving - cfg.lambda_r * r_cot;
}

/// Full reward for one plan. An absent plan (decode failure) or a plan of the
/// wrong length scores zero driving reward; the reasoning penalty still applies.
inline RewardBreakdown total_reward(const std::optional<Trajectory>& plan,
                                    const Scenario& scenario, std::size_t reasoning_len,
                                    RewardMode mode, const RewardConfig& cfg) {
  RewardBreakdown b;
  if (plan && plan->poses.size() == scenario.gt_traj.poses.size()) {
    b = pdms(*plan, scenario, cfg);
    b.ade = ade(*plan, scenario.gt_traj);
    b.r_driving = mode == RewardMode::Pdms ? b.pdms : ade_reward(b.ade, cfg);
  } else {
    b.failed = true;
    b.r_driving = 0.0;
  }
  b.r_cot = cot_penalty(static_cast<double>(reasoning_len), cfg);
  b.r_total = combine_reward(b.r_driving, b.r_cot, cfg);
  return b;
}

struct RfsConfig {
  double checkpoint_short = 3.0;  // s
  double checkpoint_long = 5.0;   // s
  double lat_short = 1.0;
  double lon_short = 2.5;
  double lat_long = 1.8;
  double lon_long = 4.5;
  double speed_ref = 5.0;  // f(v0) = clamp(v0 / speed_ref, scale_min, scale_max)
  double scale_min = 1.0;
  double scale_max = 2.0;
};

inline double rfs_speed_scale(double v0, const RfsConfig& cfg) {
  return std::clamp(v0 / cfg.speed_ref, cfg.scale_min, cfg.scale_max);
}

struct RfsResult {
  double score = 0.0;
  std::size_t matched = 0;
  double exceedance = 0.0;
};

/// Rater feedback score: the plan inherits the score of its closest rater
/// (by ADE) inside the speed-scaled trust region and decays exponentially
/// with the largest normalized exceedance outside it.
inline RfsResult rfs_detail(const Trajectory& plan, const Scenario& scenario,
                            const RfsConfig& cfg = {}) {
  if (scenario.raters.empty()) throw DataError("scenario " + scenario.id + " has no raters");
  const auto idx_short = static_cast<std::size_t>(std::lround(cfg.checkpoint_short / kStepSeconds));
  const auto idx_long = static_cast<std::size_t>(std::lround(cfg.checkpoint_long / kStepSeconds));
  if (plan.poses.size() <= idx_long) throw DataError("plan shorter than the RFS checkpoints");

  RfsResult r;
  double best_ade = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < scenario.raters.size(); ++k) {
    const double e = ade(plan, scenario.raters[k].traj);
    if (e < best_ade) {
      best_ade = e;
      r.matched = k;
    }
  }
  const auto& rater = scenario.raters[r.matched];
  const auto& rp = rater.traj.poses;
  const double v0 = distance(rp[0].position(), rp[1].position()) / kStepSeconds;
  const double f = rfs_speed_scale(v0, cfg);

  const std::array<std::array<double, 3>, 2> checks{
      {{static_cast<double>(idx_short), cfg.lat_short, cfg.lon_short},
       {static_cast<double>(idx_long), cfg.lat_long, cfg.lon_long}}};
  for (const auto& [idx_d, lat_thr, lon_thr] : checks) {
    const auto idx = static_cast<std::size_t>(idx_d);
    const MotionDelta dev = se2_relative(rp[idx], plan.poses[idx]);
    r.exceedance = std::max({r.exceedance, std::abs(dev.dx) / (lon_thr * f) - 1.0,
                             std::abs(dev.dy) / (lat_thr * f) - 1.0});
  }
  r.score = r.exceedance > 0.0 ? rater.score * std::exp(-r.exceedance) : rater.score;
  return r;
}

inline double rfs(const Trajectory& plan, const Scenario& scenario, const RfsConfig& cfg = {}) {
  return rfs_detail(plan, scenario, cfg).score;
}

/// Pointwise displacement at 1 s, 2 s and 3 s.
inline std::array<double, 3> l2_at(const Trajectory& plan, const Trajectory& ref) {
  std::array<double, 3> out{};
  for (std::size_t h = 0; h < 3; ++h) {
    const std::size_t idx = 2 * (h + 1);
    if (idx >= plan.poses.size() || idx >= ref.poses.size()) {
      throw DataError("L2 horizon of " + std::to_string(h + 1) + " s exceeds the plan");
    }
    out[h] = distance(plan.poses[idx].position(), ref.poses[idx].position());
  }
  return out;
}

}  // namespace tokplan
