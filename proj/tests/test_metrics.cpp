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

#include <cmath>
#include <optional>
#include <vector>

#include <gtest/gtest.h>

#include "tokplan/generator.hpp"
#include "tokplan/metrics.hpp"
#include "tokplan/rng.hpp"

namespace tokplan {
namespace {

constexpr double kTol = 1e-9;

Trajectory straight(double speed, double y = 0.0) {
  Trajectory t;
  for (int i = 0; i <= 10; ++i) t.poses.push_back({speed * kStepSeconds * i, y, 0});
  return t;
}

Trajectory offset(const Trajectory& t, double per_step) {
  Trajectory out = t;
  for (std::size_t i = 0; i < out.poses.size(); ++i) out.poses[i].y += per_step * i;
  return out;
}

Scenario open_road(const Trajectory& gt) {
  Scenario sc;
  sc.id = "hand";
  sc.ego_box = {4, 2};
  sc.gt_traj = gt;
  sc.ego.pose = gt.poses.front();
  sc.route = Polyline({{-50, 0}, {300, 0}});
  sc.drivable = {{{-50, -10}, {300, -10}, {300, 10}, {-50, 10}}};
  sc.raters = {{gt, 10.0}};
  return sc;
}

TEST(Pdms, FormulaCases) {
  EXPECT_EQ(combine_pdms(1, 1, 1, 1, 1), 1.0);
  EXPECT_EQ(combine_pdms(0, 1, 1, 1, 1), 0.0);
  EXPECT_EQ(combine_pdms(1, 0, 1, 1, 1), 0.0);
  EXPECT_NEAR(combine_pdms(1, 1, 0.5, 1, 0.8), (2.5 + 2 + 4) / 12.0, kTol);
  EXPECT_NEAR(combine_pdms(1, 1, 0.5, 1, 0.8), 0.70833, 1e-5);
}

TEST(Pdms, GroundTruthIsPerfect) {
  const Trajectory gt = straight(10);
  const auto b = pdms(gt, open_road(gt), RewardConfig{});
  EXPECT_EQ(b.nc, 1.0);
  EXPECT_EQ(b.dac, 1.0);
  EXPECT_EQ(b.ttc, 1.0);
  EXPECT_EQ(b.comfort, 1.0);
  EXPECT_EQ(b.ep, 1.0);
  EXPECT_EQ(b.pdms, 1.0);
}

TEST(Pdms, MixedSubScoresFromGeometry) {
  Scenario sc = open_road(straight(10));
  // Slower lead vehicle: the gap to the 8 m/s plan shrinks to 2.8 m by the
  // last pose, i.e. a 0.7 s time to collision.
  Obstacle lead;
  lead.spec = {4, 2};
  lead.poses = straight(4);
  for (auto& p : lead.poses.poses) p.x += 26.8;
  sc.obstacles = {lead};
  const auto b = pdms(straight(8), sc, RewardConfig{});
  EXPECT_EQ(b.nc, 1.0);
  EXPECT_EQ(b.dac, 1.0);
  EXPECT_EQ(b.ttc, 0.5);
  EXPECT_EQ(b.comfort, 1.0);
  EXPECT_NEAR(b.ep, 0.8, kTol);
  EXPECT_NEAR(b.pdms, 0.70833, 1e-5);
}

TEST(Pdms, GatesZeroTheScore) {
  Scenario sc = open_road(straight(10));
  Obstacle parked;
  parked.spec = {4, 2};
  parked.poses = straight(0);
  for (auto& p : parked.poses.poses) p.x = 30;
  sc.obstacles = {parked};
  const auto crash = pdms(straight(10), sc, RewardConfig{});
  EXPECT_EQ(crash.nc, 0.0);
  EXPECT_EQ(crash.pdms, 0.0);

  const auto off_road = pdms(offset(straight(10), 1.5), open_road(straight(10)), RewardConfig{});
  EXPECT_EQ(off_road.dac, 0.0);
  EXPECT_EQ(off_road.pdms, 0.0);
}

TEST(Pdms, ComfortThresholds) {
  const Trajectory gt = straight(10);
  Trajectory harsh;
  double x = 0.0;
  harsh.poses.push_back({0, 0, 0});
  for (int i = 1; i <= 10; ++i) {
    x += (i % 2 == 0) ? 5.0 : 3.0;  // speed alternates 6 and 10 m/s
    harsh.poses.push_back({x, 0, 0});
  }
  EXPECT_EQ(pdms(harsh, open_road(gt), RewardConfig{}).comfort, 0.0);
  Trajectory swerve = straight(10);
  for (std::size_t i = 1; i < swerve.poses.size(); ++i) swerve.poses[i].theta = 0.4 * (i % 2);
  EXPECT_FALSE(comfortable(swerve, RewardConfig{}));
}

TEST(Pdms, RangeOnRandomPlans) {
  const auto suite = generate_suite(4, 30, 0.5);
  Rng rng(4);
  for (const auto& sc : suite) {
    for (int k = 0; k < 20; ++k) {
      Trajectory plan = sc.gt_traj;
      for (std::size_t i = 1; i < plan.poses.size(); ++i) {
        plan.poses[i].x += rng.uniform(-3, 3);
        plan.poses[i].y += rng.uniform(-3, 3);
      }
      const auto b = pdms(plan, sc, RewardConfig{});
      EXPECT_GE(b.pdms, 0.0);
      EXPECT_LE(b.pdms, 1.0);
      EXPECT_NEAR(b.pdms, combine_pdms(b.nc, b.dac, b.ttc, b.comfort, b.ep), 0.0);
      if (b.nc == 0.0 || b.dac == 0.0) EXPECT_EQ(b.pdms, 0.0);
    }
  }
}

TEST(Pdms, HorizonMismatchIsAnError) {
  Trajectory short_plan = straight(10);
  short_plan.poses.pop_back();
  EXPECT_THROW(pdms(short_plan, open_road(straight(10)), RewardConfig{}), DataError);
}

TEST(Ade, Examples) {
  const Trajectory ref = straight(10);
  EXPECT_EQ(ade(ref, ref), 0.0);
  Trajectory lateral = ref;
  for (auto& p : lateral.poses) p.y += 1.0;
  EXPECT_NEAR(ade(lateral, ref), 1.0, kTol);
  EXPECT_NEAR(ade(offset(ref, 0.1), ref), 0.55, kTol);
  EXPECT_EQ(ade(offset(ref, 0.3), ref), ade(ref, offset(ref, 0.3)));
  Trajectory shorter = ref;
  shorter.poses.pop_back();
  EXPECT_THROW(ade(shorter, ref), DataError);
}

TEST(AdeReward, Anchors) {
  const RewardConfig cfg;
  EXPECT_NEAR(ade_reward(2.0, cfg), 0.0, kTol);
  EXPECT_NEAR(ade_reward(0.0, cfg), 0.2, kTol);
  EXPECT_NEAR(ade_reward(3.0, cfg), -0.1, kTol);
  EXPECT_NEAR(ade_reward(1.3, cfg) - ade_reward(0.3, cfg), -1.0 / cfg.kappa, kTol);
}

TEST(CotPenalty, Shape) {
  const RewardConfig cfg;
  EXPECT_EQ(cot_penalty(cfg.l_tol, cfg), 0.5);
  EXPECT_NEAR(cot_penalty(0, cfg), 1.0 / (1.0 + std::exp(0.8)), kTol);
  EXPECT_NEAR(cot_penalty(0, cfg), 0.3100, 1e-4);
  const RewardConfig toy = RewardConfig::toy();
  EXPECT_EQ(cot_penalty(12, toy), 0.5);
  double prev = cot_penalty(0, toy);
  for (int l = 1; l <= 64; ++l) {
    const double v = cot_penalty(l, toy);
    EXPECT_GT(v, prev);
    EXPECT_LT(v, 1.0);
    prev = v;
  }
  EXPECT_NEAR(cot_penalty(1e6, cfg), 1.0, 1e-12);
}

TEST(TotalReward, Compositions) {
  const Trajectory gt = straight(10);
  const Scenario sc = open_road(gt);
  const RewardConfig cfg;
  const auto b = total_reward(gt, sc, 0, RewardMode::Pdms, cfg);
  EXPECT_EQ(b.pdms, 1.0);
  EXPECT_NEAR(b.r_total, 1.0 - 0.3 / (1.0 + std::exp(0.8)), kTol);
  EXPECT_NEAR(b.r_total, 0.9070, 1e-4);
  EXPECT_NEAR(b.r_total, b.r_driving - cfg.lambda_r * b.r_cot, 0.0);

  const auto failed = total_reward(std::nullopt, sc, 0, RewardMode::Pdms, cfg);
  EXPECT_TRUE(failed.failed);
  EXPECT_EQ(failed.r_driving, 0.0);
  EXPECT_NEAR(failed.r_total, -0.3 * cot_penalty(0, cfg), kTol);
  Trajectory shorter = gt;
  shorter.poses.pop_back();
  EXPECT_TRUE(total_reward(shorter, sc, 0, RewardMode::Pdms, cfg).failed);

  Trajectory lateral = gt;
  for (auto& p : lateral.poses) p.y += 1.0;
  const auto a = total_reward(lateral, sc, 400, RewardMode::Ade, cfg);
  EXPECT_NEAR(a.r_driving, 0.1, kTol);
  EXPECT_NEAR(a.r_total, -0.05, kTol);
}

TEST(TotalReward, DecreasesWithReasoningLength) {
  const Trajectory gt = straight(10);
  const Scenario sc = open_road(gt);
  const RewardConfig cfg = RewardConfig::toy();
  double prev = total_reward(gt, sc, 0, RewardMode::Pdms, cfg).r_total;
  for (std::size_t l = 1; l <= 32; ++l) {
    const double v = total_reward(gt, sc, l, RewardMode::Pdms, cfg).r_total;
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(Rfs, InheritAndDecay) {
  const Trajectory gt = straight(10);
  Scenario sc = open_road(gt);
  const Trajectory drifted = offset(gt, 0.12);
  sc.raters = {{gt, 10.0}, {drifted, 8.0}, {offset(gt, -0.3), 6.0}};
  EXPECT_EQ(rfs(gt, sc), 10.0);

  const Trajectory near8 = offset(gt, 0.11);
  const auto r8 = rfs_detail(near8, sc);
  EXPECT_EQ(r8.matched, 1u);
  EXPECT_EQ(r8.score, 8.0);

  // 10 m/s initial speed doubles the thresholds: 1.8 m lateral at 5 s
  // becomes 3.6 m. Twice that is a normalized exceedance of exactly 1.
  Scenario single = open_road(gt);
  Trajectory wide = gt;
  wide.poses[10].y += 7.2;
  EXPECT_NEAR(rfs(wide, single), 10.0 * std::exp(-1.0), kTol);
  EXPECT_NEAR(rfs(wide, single), 3.679, 1e-3);

  Scenario no_raters = open_road(gt);
  no_raters.raters.clear();
  EXPECT_THROW(rfs(gt, no_raters), DataError);
}

TEST(Rfs, MonotoneOutsideTrustRegion) {
  const Trajectory gt = straight(4);  // f = 1 below 5 m/s
  const Scenario sc = open_road(gt);
  double prev = 10.0;
  for (int k = 1; k <= 40; ++k) {
    Trajectory plan = gt;
    plan.poses[6].y += 0.1 * k;
    const double v = rfs(plan, sc);
    EXPECT_LE(v, 10.0);
    if (0.1 * k <= 1.0 + 1e-12) {
      EXPECT_EQ(v, 10.0);
    } else {
      EXPECT_LT(v, prev);
    }
    prev = v;
  }
}

TEST(L2At, Examples) {
  const Trajectory ref = straight(10);
  const auto zero = l2_at(ref, ref);
  EXPECT_EQ(zero[0] + zero[1] + zero[2], 0.0);
  Trajectory half = ref;
  for (auto& p : half.poses) p.y += 0.5;
  for (const double v : l2_at(half, ref)) EXPECT_NEAR(v, 0.5, kTol);
  const auto growing = l2_at(offset(ref, 0.2), ref);
  EXPECT_NEAR(growing[0], 0.4, kTol);
  EXPECT_NEAR(growing[1], 0.8, kTol);
  EXPECT_NEAR(growing[2], 1.2, kTol);
  Trajectory tiny;
  tiny.poses.assign(4, Pose2D{});
  EXPECT_THROW(l2_at(tiny, tiny), DataError);
}

}  // namespace
}  // namespace tokplan
