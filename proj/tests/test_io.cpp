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

#include <filesystem>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "tokplan/codebook.hpp"
#include "tokplan/generator.hpp"
#include "tokplan/io.hpp"
#include "tokplan/rng.hpp"

namespace tokplan {
namespace {

namespace fs = std::filesystem;

class IoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("tokplan_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

TEST_F(IoTest, CodebookRoundtripIsBitExact) {
  const auto samples = extract_segments(generate_corpus(3, 50));
  const Codebook cb = kdisk_cluster(samples, 0.05, 2048, 4, BoxSpec{4.7, 1.9}, "synthetic").codebook;
  io::write_codebook(dir_ / "cb.json", cb);
  const Codebook back = io::read_codebook(dir_ / "cb.json");
  EXPECT_EQ(back, cb);
}

TEST_F(IoTest, CodebookLoadRejectsCloseOrRepeatedTokens) {
  Codebook close = make_codebook(std::vector<MotionDelta>{{1, 0, 0}, {1.03, 0, 0}}, 0.05);
  io::write_codebook(dir_ / "close.json", close);
  EXPECT_THROW(io::read_codebook(dir_ / "close.json"), InvariantError);
  Codebook repeated = make_codebook(std::vector<MotionDelta>{{1, 0, 0}, {1, 0, 0}}, 0.05);
  io::write_codebook(dir_ / "repeated.json", repeated);
  EXPECT_THROW(io::read_codebook(dir_ / "repeated.json"), InvariantError);
  io::write_text(dir_ / "broken.json", "{\"version\": 1, \"tokens\": [[1, 0]]}");
  EXPECT_THROW(io::read_codebook(dir_ / "broken.json"), DataError);
  EXPECT_THROW(io::read_codebook(dir_ / "missing.json"), DataError);
}

TEST_F(IoTest, TrajectoryAndTokenFiles) {
  Rng rng(5);
  std::vector<io::NamedTrajectory> trajs;
  for (int i = 0; i < 5; ++i) {
    Trajectory t;
    for (int k = 0; k <= 10; ++k) {
      t.poses.push_back({rng.uniform(-1e3, 1e3), rng.uniform(-1e3, 1e3), rng.uniform(-kPi, kPi)});
    }
    trajs.push_back({"t" + std::to_string(i), t});
  }
  io::write_trajectories(dir_ / "t.jsonl", trajs);
  const auto back = io::read_trajectories(dir_ / "t.jsonl");
  ASSERT_EQ(back.size(), trajs.size());
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    EXPECT_EQ(back[i].id, trajs[i].id);
    EXPECT_EQ(back[i].traj, trajs[i].traj);
  }

  const std::vector<io::TokenRecord> recs{{"a", {1, 2, 3}, {1.5, -2.25, 0.125}}, {"b", {0}, {}}};
  io::write_tokens(dir_ / "ids.jsonl", recs);
  const auto got = io::read_tokens(dir_ / "ids.jsonl");
  ASSERT_EQ(got.size(), 2u);
  EXPECT_EQ(got[0].ids, recs[0].ids);
  EXPECT_EQ(got[0].initial, recs[0].initial);
}

TEST_F(IoTest, MalformedLineIsReportedByNumber) {
  io::write_text(dir_ / "bad.jsonl",
                 "{\"id\": \"a\", \"poses\": [[0,0,0],[1,0,0]]}\n\n{\"id\": \"b\", \"poses\": [[0,0\n");
  try {
    io::read_trajectories(dir_ / "bad.jsonl");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.jsonl:3:"), std::string::npos) << e.what();
  }
  io::write_text(dir_ / "short.jsonl", "{\"id\": \"a\", \"poses\": [[0,0]]}\n");
  EXPECT_THROW(io::read_trajectories(dir_ / "short.jsonl"), DataError);
}

TEST_F(IoTest, ScenarioRoundtrip) {
  const auto suite = generate_suite(9, 12, 0.5);
  io::write_scenarios(dir_ / "s.jsonl", suite);
  const auto back = io::read_scenarios(dir_ / "s.jsonl");
  ASSERT_EQ(back.size(), suite.size());
  for (std::size_t i = 0; i < suite.size(); ++i) {
    const Scenario& a = suite[i];
    const Scenario& b = back[i];
    EXPECT_EQ(a.id, b.id);
    EXPECT_EQ(a.complexity, b.complexity);
    EXPECT_EQ(a.instruction, b.instruction);
    EXPECT_EQ(a.ego.pose, b.ego.pose);
    EXPECT_EQ(a.ego.speed, b.ego.speed);
    EXPECT_EQ(a.ego_box, b.ego_box);
    EXPECT_EQ(a.drivable.vertices, b.drivable.vertices);
    EXPECT_EQ(a.route.points(), b.route.points());
    EXPECT_EQ(a.gt_traj, b.gt_traj);
    ASSERT_EQ(a.obstacles.size(), b.obstacles.size());
    for (std::size_t k = 0; k < a.obstacles.size(); ++k) {
      EXPECT_EQ(a.obstacles[k].spec, b.obstacles[k].spec);
      EXPECT_EQ(a.obstacles[k].poses, b.obstacles[k].poses);
    }
    ASSERT_EQ(a.raters.size(), b.raters.size());
    for (std::size_t k = 0; k < a.raters.size(); ++k) {
      EXPECT_EQ(a.raters[k].score, b.raters[k].score);
      EXPECT_EQ(a.raters[k].traj, b.raters[k].traj);
    }
    EXPECT_EQ(pdms(b.gt_traj, b, RewardConfig{}).pdms, 1.0);
  }
}

TEST_F(IoTest, CheckpointRoundtripAndValidation) {
  PolicyShape s;
  s.num_actions = 7;
  PolicyParams p{s, {}};
  Rng rng(6);
  for (int i = 0; i < 30; ++i) {
    auto& row = p.row({static_cast<std::uint32_t>(rng.index(320)),
                       static_cast<TokenId>(rng.index(s.vocab_size())),
                       static_cast<std::uint32_t>(rng.index(11))});
    for (double& v : row) v = rng.uniform(-5, 5);
  }
  p.row({1, 1, 1});  // all zeros; dropped on write
  io::write_checkpoint(dir_ / "ck.json", p);
  const PolicyParams back = io::read_checkpoint(dir_ / "ck.json");
  EXPECT_EQ(back.shape, p.shape);
  EXPECT_EQ(back.rows.size(), p.rows.size() - 1);
  for (const auto& [key, row] : back.rows) EXPECT_EQ(row, p.rows.at(key));

  auto j = io::checkpoint_json(p);
  j["rows"][0]["logits"].erase(0);
  EXPECT_THROW(io::checkpoint_from(j), DataError);
  j = io::checkpoint_json(p);
  j["rows"].push_back(j["rows"][0]);
  EXPECT_THROW(io::checkpoint_from(j), DataError);
  j = io::checkpoint_json(p);
  j["rows"][0]["bucket"] = 11;
  EXPECT_THROW(io::checkpoint_from(j), DataError);
}

}  // namespace
}  // namespace tokplan
