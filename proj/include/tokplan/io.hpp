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

// JSON and JSON-lines formats for trajectories, token sequences, codebooks,
// scenarios and policy checkpoints. Doubles are written in shortest
// round-trip form, so a write/read cycle reproduces values bit for bit.

#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tokplan/codebook.hpp"
#include "tokplan/errors.hpp"
#include "tokplan/geometry.hpp"
#include "tokplan/policy.hpp"
#include "tokplan/scenario.hpp"

namespace tokplan::io {

using nlohmann::json;

inline constexpr int kCodebookVersion = 1;
inline constexpr int kCheckpointVersion = 1;

struct NamedTrajectory {
  std::string id;
  Trajectory traj;
};

struct TokenRecord {
  std::string id;
  TokenSequence ids;
  Pose2D initial;
};

// ---------------------------------------------------------------------------
// Files

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

inline json read_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

/// Calls fn(record, line_number) for every non-blank line. Malformed
/// records are reported with their 1-based line number.
inline void for_each_line(const std::filesystem::path& path,
                          const std::function<void(const json&, std::size_t)>& fn) {
  std::istringstream in(read_text(path));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      fn(json::parse(line), n);
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(n) + ": malformed record: " + e.what());
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
}

inline std::string to_lines(const std::vector<json>& records) {
  std::string out;
  for (const auto& r : records) out += r.dump() + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Value conversions

inline json pose_json(const Pose2D& p) { return json::array({p.x, p.y, p.theta}); }

inline Pose2D pose_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw DataError("pose must be [x, y, theta]");
  Pose2D p{j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
  if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.theta)) {
    throw DataError("pose has non-finite components");
  }
  return p;
}

inline json point_json(const Point2& p) { return json::array({p.x, p.y}); }

inline Point2 point_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw DataError("point must be [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline json trajectory_json(const Trajectory& t) {
  json arr = json::array();
  for (const auto& p : t.poses) arr.push_back(pose_json(p));
  return arr;
}

inline Trajectory trajectory_from(const json& j) {
  if (!j.is_array()) throw DataError("poses must be an array");
  Trajectory t;
  for (const auto& p : j) t.poses.push_back(pose_from(p));
  return t;
}

inline json box_json(const BoxSpec& b) { return {{"length", b.length}, {"width", b.width}}; }

inline BoxSpec box_from(const json& j) {
  BoxSpec b{j.at("length").get<double>(), j.at("width").get<double>()};
  require_valid(b);
  return b;
}

// ---------------------------------------------------------------------------
// Trajectories and tokens

inline json trajectory_record(const NamedTrajectory& t) {
  return {{"id", t.id}, {"poses", trajectory_json(t.traj)}};
}

inline std::vector<NamedTrajectory> read_trajectories(const std::filesystem::path& path) {
  std::vector<NamedTrajectory> out;
  for_each_line(path, [&](const json& j, std::size_t line) {
    NamedTrajectory t;
    t.id = j.contains("id") ? j.at("id").get<std::string>() : "line" + std::to_string(line);
    t.traj = trajectory_from(j.at("poses"));
    if (t.traj.poses.size() < 2) throw DataError("trajectory needs at least two poses");
    out.push_back(std::move(t));
  });
  return out;
}

inline void write_trajectories(const std::filesystem::path& path,
                               const std::vector<NamedTrajectory>& trajs) {
  std::vector<json> lines;
  for (const auto& t : trajs) lines.push_back(trajectory_record(t));
  write_text(path, to_lines(lines));
}

inline std::vector<TokenRecord> read_tokens(const std::filesystem::path& path) {
  std::vector<TokenRecord> out;
  for_each_line(path, [&](const json& j, std::size_t line) {
    TokenRecord r;
    r.id = j.contains("id") ? j.at("id").get<std::string>() : "line" + std::to_string(line);
    r.ids = j.at("ids").get<TokenSequence>();
    r.initial = j.contains("initial") ? pose_from(j.at("initial")) : Pose2D{};
    out.push_back(std::move(r));
  });
  return out;
}

inline void write_tokens(const std::filesystem::path& path, const std::vector<TokenRecord>& recs) {
  std::vector<json> lines;
  for (const auto& r : recs) {
    lines.push_back({{"id", r.id}, {"ids", r.ids}, {"initial", pose_json(r.initial)}});
  }
  write_text(path, to_lines(lines));
}

// ---------------------------------------------------------------------------
// Codebook

inline json codebook_json(const Codebook& cb) {
  json tokens = json::array();
  for (const auto& t : cb.tokens) tokens.push_back({t.delta.dx, t.delta.dy, t.delta.dtheta});
  return {{"version", kCodebookVersion}, {"delta_disk", cb.disk_radius},
          {"box", box_json(cb.box)},     {"source_tag", cb.source_tag},
          {"tokens", tokens}};
}

inline Codebook codebook_from(const json& j) {
  if (j.at("version").get<int>() != kCodebookVersion) throw DataError("unsupported codebook version");
  std::vector<MotionDelta> deltas;
  for (const auto& t : j.at("tokens")) {
    if (!t.is_array() || t.size() != 3) throw DataError("codebook token must be [dx, dy, dtheta]");
    deltas.push_back({t[0].get<double>(), t[1].get<double>(), t[2].get<double>()});
  }
  return make_codebook(deltas, j.at("delta_disk").get<double>(), box_from(j.at("box")),
                       j.value("source_tag", std::string{}));
}

/// Reads and validates a codebook, including the separation invariant.
inline Codebook read_codebook(const std::filesystem::path& path) {
  try {
    Codebook cb = codebook_from(read_json(path));
    validate_codebook(cb);
    return cb;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": malformed codebook: " + e.what());
  }
}

inline void write_codebook(const std::filesystem::path& path, const Codebook& cb) {
  write_json(path, codebook_json(cb));
}

// ---------------------------------------------------------------------------
// Scenarios

inline json scenario_json(const Scenario& sc) {
  json drivable = json::array();
  for (const auto& v : sc.drivable.vertices) drivable.push_back(point_json(v));
  json route = json::array();
  for (const auto& v : sc.route.points()) route.push_back(point_json(v));
  json obstacles = json::array();
  for (const auto& o : sc.obstacles) {
    obstacles.push_back({{"box", box_json(o.spec)}, {"poses", trajectory_json(o.poses)}});
  }
  json raters = json::array();
  for (const auto& r : sc.raters) {
    raters.push_back({{"score", r.score}, {"poses", trajectory_json(r.traj)}});
  }
  return {{"id", sc.id},
          {"complexity", std::string(to_string(sc.complexity))},
          {"instruction", std::string(to_string(sc.instruction))},
          {"ego",
           {{"pose", pose_json(sc.ego.pose)}, {"speed", sc.ego.speed}, {"accel", sc.ego.accel}}},
          {"ego_box", box_json(sc.ego_box)},
          {"drivable", drivable},
          {"route", route},
          {"obstacles", obstacles},
          {"gt", trajectory_json(sc.gt_traj)},
          {"raters", raters}};
}

inline Scenario scenario_from(const json& j) {
  Scenario sc;
  sc.id = j.at("id").get<std::string>();
  sc.complexity = parse_complexity(j.at("complexity").get<std::string>());
  sc.instruction = parse_instruction(j.at("instruction").get<std::string>());
  const auto& ego = j.at("ego");
  sc.ego.pose = pose_from(ego.at("pose"));
  sc.ego.speed = ego.at("speed").get<double>();
  sc.ego.accel = ego.at("accel").get<double>();
  sc.ego_box = box_from(j.at("ego_box"));
  for (const auto& v : j.at("drivable")) sc.drivable.vertices.push_back(point_from(v));
  if (sc.drivable.vertices.size() < 3) throw DataError("drivable polygon needs three vertices");
  std::vector<Point2> route;
  for (const auto& v : j.at("route")) route.push_back(point_from(v));
  sc.route = Polyline(std::move(route));
  for (const auto& o : j.at("obstacles")) {
    sc.obstacles.push_back({box_from(o.at("box")), trajectory_from(o.at("poses"))});
  }
  sc.gt_traj = trajectory_from(j.at("gt"));
  if (sc.gt_traj.poses.size() < 2) throw DataError("ground truth needs at least two poses");
  for (const auto& o : sc.obstacles) {
    if (o.poses.poses.size() < sc.gt_traj.poses.size()) {
      throw DataError("obstacle horizon shorter than the ground truth");
    }
  }
  for (const auto& r : j.at("raters")) {
    sc.raters.push_back({trajectory_from(r.at("poses")), r.at("score").get<double>()});
  }
  return sc;
}

inline std::vector<Scenario> read_scenarios(const std::filesystem::path& path) {
  std::vector<Scenario> out;
  for_each_line(path, [&](const json& j, std::size_t) { out.push_back(scenario_from(j)); });
  return out;
}

inline void write_scenarios(const std::filesystem::path& path, const std::vector<Scenario>& suite) {
  std::vector<json> lines;
  for (const auto& sc : suite) lines.push_back(scenario_json(sc));
  write_text(path, to_lines(lines));
}

// ---------------------------------------------------------------------------
// Policy checkpoints

inline json shape_json(const PolicyShape& s) {
  return {{"num_actions", s.num_actions},
          {"num_reasoning", s.num_reasoning},
          {"horizon", s.horizon},
          {"max_reasoning", s.max_reasoning}};
}

inline PolicyShape shape_from(const json& j) {
  PolicyShape s;
  s.num_actions = j.at("num_actions").get<std::size_t>();
  s.num_reasoning = j.at("num_reasoning").get<std::size_t>();
  s.horizon = j.at("horizon").get<std::size_t>();
  s.max_reasoning = j.at("max_reasoning").get<std::size_t>();
  if (s.num_actions == 0 || s.horizon == 0) throw DataError("policy shape needs actions and a horizon");
  return s;
}

/// Rows are written in key order; all-zero rows are dropped since absent
/// rows read back as zeros.
inline json checkpoint_json(const PolicyParams& p) {
  json rows = json::array();
  for (const auto& [key, row] : p.rows) {
    bool zero = true;
    for (const double v : row) zero = zero && v == 0.0;
    if (zero) continue;
    rows.push_back({{"context", key.context},
                    {"prev", key.prev},
                    {"bucket", key.bucket},
                    {"logits", row}});
  }
  return {{"version", kCheckpointVersion}, {"shape", shape_json(p.shape)}, {"rows", rows}};
}

inline PolicyParams checkpoint_from(const json& j) {
  if (j.at("version").get<int>() != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version");
  }
  PolicyParams p;
  p.shape = shape_from(j.at("shape"));
  for (const auto& r : j.at("rows")) {
    RowKey key{r.at("context").get<std::uint32_t>(), r.at("prev").get<TokenId>(),
               r.at("bucket").get<std::uint32_t>()};
    if (key.context >= ContextDescriptor::kCount || key.prev >= p.shape.vocab_size() ||
        key.bucket > p.shape.horizon) {
      throw DataError("checkpoint row key out of range");
    }
    if (p.rows.count(key)) throw DataError("checkpoint repeats a row");
    auto logits = r.at("logits").get<std::vector<double>>();
    if (logits.size() != p.shape.vocab_size()) throw DataError("checkpoint row has wrong width");
    for (const double v : logits) {
      if (!std::isfinite(v)) throw InvariantError("checkpoint contains non-finite logits");
    }
    p.rows[key] = std::move(logits);
  }
  return p;
}

inline PolicyParams read_checkpoint(const std::filesystem::path& path) {
  try {
    return checkpoint_from(read_json(path));
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": malformed checkpoint: " + e.what());
  }
}

inline void write_checkpoint(const std::filesystem::path& path, const PolicyParams& p) {
  write_text(path, checkpoint_json(p).dump() + "\n");
}

}  // namespace tokplan::io
