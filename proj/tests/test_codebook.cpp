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
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "tokplan/codebook.hpp"
#include "tokplan/generator.hpp"
#include "tokplan/rng.hpp"

namespace tokplan {
namespace {

std::vector<SegmentSample> as_samples(const std::vector<MotionDelta>& deltas) {
  std::vector<SegmentSample> out;
  for (const auto& d : deltas) out.push_back({d, 1});
  return out;
}

std::size_t brute_nearest(const Codebook& cb, const MotionDelta& q) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cb.size(); ++i) {
    const double d = contour_distance(cb.tokens[i].delta, q, cb.box);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

TEST(ExtractSegments, ElevenPosesGiveTenSegments) {
  Rng rng(1);
  Trajectory t;
  Pose2D p;
  t.poses.push_back(p);
  for (int i = 0; i < 10; ++i) {
    p = se2_compose(p, {rng.uniform(0, 5), rng.uniform(-0.3, 0.3), rng.uniform(-0.2, 0.2)});
    t.poses.push_back(p);
  }
  const auto segs = extract_segments(std::vector<Trajectory>{t});
  ASSERT_EQ(segs.size(), 10u);
  for (const auto& s : segs) EXPECT_EQ(s.weight, 1u);
}

TEST(ExtractSegments, StationaryAndConstantSpeedMerge) {
  Trajectory still;
  still.poses.assign(11, Pose2D{4, -2, 0.7});
  const auto a = extract_segments(std::vector<Trajectory>{still});
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].weight, 10u);
  EXPECT_EQ(a[0].delta, (MotionDelta{0, 0, 0}));

  Trajectory straight;
  for (int i = 0; i <= 10; ++i) straight.poses.push_back({1.0 * i, 0, 0});  // 2 m/s at 2 Hz
  const auto b = extract_segments(std::vector<Trajectory>{straight});
  ASSERT_EQ(b.size(), 1u);
  EXPECT_EQ(b[0].weight, 10u);
  EXPECT_NEAR(b[0].delta.dx, 1.0, 1e-12);
  EXPECT_NEAR(b[0].delta.dy, 0.0, 1e-12);
}

TEST(ExtractSegments, Rejections) {
  Trajectory single;
  single.poses = {Pose2D{}};
  EXPECT_THROW(extract_segments(std::vector<Trajectory>{single}), DataError);
  Trajectory jump;
  jump.poses = {Pose2D{}, Pose2D{30, 0, 0}};
  EXPECT_THROW(extract_segments(std::vector<Trajectory>{jump}), DataError);
}

TEST(KdiskCluster, IdenticalSamplesGiveOneToken) {
  const std::vector<MotionDelta> d(20, MotionDelta{2, 0.1, 0.05});
  const auto r = kdisk_cluster(as_samples(d), 0.05, 2048, 7);
  EXPECT_EQ(r.codebook.size(), 1u);
  EXPECT_TRUE(r.underfilled);
}

TEST(KdiskCluster, PairInsideDiskKeepsOne) {
  const std::vector<MotionDelta> d{{2, 0, 0}, {2.04, 0, 0}};
  ASSERT_NEAR(contour_distance(d[0], d[1], BoxSpec{}), 0.04, 1e-12);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    EXPECT_EQ(kdisk_cluster(as_samples(d), 0.05, 2048, seed).codebook.size(), 1u);
  }
}

TEST(KdiskCluster, SparseGridFullyAdmitted) {
  std::vector<MotionDelta> grid;
  for (int i = 0; i < 12; ++i) {
    for (int j = 0; j < 12; ++j) grid.push_back({0.2 * i, 0.2 * j - 1.0, 0.0});
  }
  const auto r = kdisk_cluster(as_samples(grid), 0.05, 2048, 3);
  EXPECT_EQ(r.codebook.size(), grid.size());
  EXPECT_GT(min_pairwise_distance(r.codebook), 0.05);

  const auto capped = kdisk_cluster(as_samples(grid), 0.05, 16, 3);
  EXPECT_EQ(capped.codebook.size(), 16u);
  EXPECT_FALSE(capped.underfilled);
}

TEST(KdiskCluster, Errors) {
  EXPECT_THROW(kdisk_cluster({}, 0.05, 10, 0), DataError);
  const auto s = as_samples({{1, 0, 0}});
  EXPECT_THROW(kdisk_cluster(s, 0.0, 10, 0), DataError);
  EXPECT_THROW(kdisk_cluster(s, 0.05, 0, 0), DataError);
}

TEST(KdiskCluster, SeparationCoverageAndDeterminism) {
  const auto corpus = generate_corpus(4, 150);
  const auto samples = extract_segments(corpus);
  const auto a = kdisk_cluster(samples, 0.05, 2048, 9);
  const auto b = kdisk_cluster(samples, 0.05, 2048, 9);
  EXPECT_EQ(a.codebook, b.codebook);
  EXPECT_NO_THROW(validate_codebook(a.codebook));
  EXPECT_GT(min_pairwise_distance(a.codebook), 0.05);
  ASSERT_TRUE(a.underfilled);
  for (const auto& s : samples) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& t : a.codebook.tokens) {
      best = std::min(best, contour_distance(t.delta, s.delta, a.codebook.box));
    }
    EXPECT_LE(best, 0.05);
  }
  // Another visiting order still yields a valid codebook.
  const auto c = kdisk_cluster(samples, 0.05, 2048, 10);
  EXPECT_NO_THROW(validate_codebook(c.codebook));
}

TEST(NearestToken, ExactAndTieRules) {
  std::vector<MotionDelta> d;
  for (int i = 0; i < 12; ++i) d.push_back({0.5 * i, 0, 0});
  const Codebook cb = make_codebook(d, 0.05);
  EXPECT_EQ(nearest_token(cb, d[7]).id, 7u);

  // Token 3 and token 9 placed symmetrically about the query.
  std::vector<MotionDelta> sym(12, MotionDelta{});
  for (int i = 0; i < 12; ++i) sym[i] = {0.0, 3.0 + 0.5 * i, 0.0};
  sym[3] = {1.0, 0.0, 0.0};
  sym[9] = {-1.0, 0.0, 0.0};
  const Codebook tie = make_codebook(sym, 0.05);
  ASSERT_EQ(contour_distance(sym[3], {}, tie.box), contour_distance(sym[9], {}, tie.box));
  EXPECT_EQ(nearest_token(tie, {}).id, 3u);
  EXPECT_EQ(TokenIndex(tie).nearest({}).id, 3u);
}

TEST(NearestToken, MatchesBruteForce) {
  const auto samples = extract_segments(generate_corpus(8, 100));
  const Codebook cb = kdisk_cluster(samples, 0.05, 300, 1).codebook;
  const TokenIndex index(cb);
  Rng rng(99);
  for (int i = 0; i < 1000; ++i) {
    const MotionDelta q{rng.uniform(-1, 6), rng.uniform(-1, 1), rng.uniform(-0.3, 0.3)};
    const std::size_t want = brute_nearest(cb, q);
    EXPECT_EQ(nearest_token(cb, q).id, want);
    EXPECT_EQ(index.nearest(q).id, want);
  }
}

TEST(ValidateCodebook, RejectsCloseOrMisnumberedTokens) {
  Codebook close = make_codebook(std::vector<MotionDelta>{{1, 0, 0}, {1.03, 0, 0}}, 0.05);
  EXPECT_THROW(validate_codebook(close), InvariantError);
  Codebook dup = make_codebook(std::vector<MotionDelta>{{1, 0, 0}, {2, 0, 0}}, 0.05);
  dup.tokens[1].id = 0;
  EXPECT_THROW(validate_codebook(dup), InvariantError);
  Codebook fine = make_codebook(std::vector<MotionDelta>{{1, 0, 0}, {2, 0, 0}}, 0.05);
  EXPECT_NO_THROW(validate_codebook(fine));
  EXPECT_THROW(fine.delta(2), DataError);
}

}  // namespace
}  // namespace tokplan
