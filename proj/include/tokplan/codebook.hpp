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

// Discrete action codebook: 0.5 s motion primitives selected by greedy
// K-disk clustering under the average contour distance.

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "tokplan/errors.hpp"
#include "tokplan/geometry.hpp"
#include "tokplan/rng.hpp"

namespace tokplan {

inline constexpr double kDefaultDiskRadius = 0.05;
inline constexpr std::size_t kDefaultCodebookSize = 2048;

struct ActionToken {
  std::size_t id = 0;
  MotionDelta delta;
  friend bool operator==(const ActionToken&, const ActionToken&) = default;
};

struct SegmentSample {
  MotionDelta delta;
  std::size_t weight = 1;
};

struct Codebook {
  std::vector<ActionToken> tokens;
  double disk_radius = kDefaultDiskRadius;
  BoxSpec box;
  std::string source_tag;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }

  const MotionDelta& delta(std::size_t id) const {
    if (id >= tokens.size()) {
      throw DataError("action token id " + std::to_string(id) + " outside codebook of size " +
                      std::to_string(tokens.size()));
    }
    return tokens[id].delta;
  }

  friend bool operator==(const Codebook&, const Codebook&) = default;
};

/// Builds a codebook whose token ids are the positions in `deltas`.
inline Codebook make_codebook(std::span<const MotionDelta> deltas, double disk_radius,
                              BoxSpec box = {}, std::string source_tag = {}) {
  Codebook cb;
  cb.disk_radius = disk_radius;
  cb.box = box;
  cb.source_tag = std::move(source_tag);
  cb.tokens.reserve(deltas.size());
  for (std::size_t i = 0; i < deltas.size(); ++i) cb.tokens.push_back({i, deltas[i]});
  return cb;
}

/// Precomputed token footprints. Distances are evaluated with the same
/// corner construction as contour_distance, so results are bit-identical to
/// the direct computation.
class TokenIndex {
 public:
  TokenIndex() = default;
  explicit TokenIndex(const Codebook& codebook) : box_(codebook.box) {
    corners_.reserve(codebook.size());
    for (const auto& t : codebook.tokens) corners_.push_back(delta_corners(t.delta, box_));
  }

  std::size_t size() const { return corners_.size(); }
  const BoxSpec& box() const { return box_; }

  double distance_to(std::size_t id, const std::array<Point2, 4>& query) const {
    return mean_corner_distance(corners_[id], query);
  }

  struct Match {
    std::size_t id;
    double distance;
  };

  /// Exhaustive argmin; ties resolve to the lowest id.
  Match nearest(const MotionDelta& query) const {
    const auto q = delta_corners(query, box_);
    Match best{0, std::numeric_limits<double>::infinity()};
    for (std::size_t i = 0; i < corners_.size(); ++i) {
      const double d = mean_corner_distance(corners_[i], q);
      if (d < best.distance) best = {i, d};
    }
    return best;
  }

 private:
  BoxSpec box_;
  std::vector<std::array<Point2, 4>> corners_;
};

/// Checks ids, bounds and the pairwise separation invariant (exhaustive).
inline void validate_codebook(const Codebook& codebook) {
  if (!(codebook.disk_radius > 0.0)) throw InvariantError("codebook disk radius must be positive");
  if (!codebook.box.valid()) throw InvariantError("codebook box dimensions must be positive");
  for (std::size_t i = 0; i < codebook.size(); ++i) {
    if (codebook.tokens[i].id != i) {
      throw InvariantError("token at position " + std::to_string(i) + " has id " +
                           std::to_string(codebook.tokens[i].id));
    }
    if (!within_cap(codebook.tokens[i].delta)) {
      throw InvariantError("token " + std::to_string(i) + " exceeds the physical motion cap");
    }
  }
  const TokenIndex index(codebook);
  for (std::size_t i = 0; i < codebook.size(); ++i) {
    const auto ci = delta_corners(codebook.tokens[i].delta, codebook.box);
    for (std::size_t j = i + 1; j < codebook.size(); ++j) {
      const double d = index.distance_to(j, ci);
      if (!(d > codebook.disk_radius)) {
        throw InvariantError("tokens " + std::to_string(i) + " and " + std::to_string(j) +
                             " are " + std::to_string(d) + " m apart, within disk radius " +
                             std::to_string(codebook.disk_radius));
      }
    }
  }
}

/// Smallest pairwise contour distance, or +inf for fewer than two tokens.
inline double min_pairwise_distance(const Codebook& codebook) {
  const TokenIndex index(codebook);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < codebook.size(); ++i) {
    const auto ci = delta_corners(codebook.tokens[i].delta, codebook.box);
    for (std::size_t j = i + 1; j < codebook.size(); ++j) {
      best = std::min(best, index.distance_to(j, ci));
    }
  }
  return best;
}

/// One motion delta per consecutive pose pair. Deltas that agree within
/// 1e-6 in every component are merged (first occurrence kept) and their
/// weights summed; output order is first-occurrence order.
inline std::vector<SegmentSample> extract_segments(std::span<const Trajectory> trajectories,
                                                   double cap = kMaxStepDistance) {
  constexpr double kMergeQuantum = 1e-6;
  std::vector<SegmentSample> out;
  std::map<std::tuple<long long, long long, long long>, std::size_t> seen;
  for (std::size_t t = 0; t < trajectories.size(); ++t) {
    const auto& poses = trajectories[t].poses;
    if (poses.size() < 2) {
      throw DataError("trajectory " + std::to_string(t) + " has fewer than two poses");
    }
    for (std::size_t i = 0; i + 1 < poses.size(); ++i) {
      const MotionDelta d = se2_relative(poses[i], poses[i + 1]);
      if (!within_cap(d, cap)) {
        throw DataError("trajectory " + std::to_string(t) + " segment " + std::to_string(i) +
                        " exceeds the physical motion cap");
      }
      const auto key = std::make_tuple(std::llround(d.dx / kMergeQuantum),
                                       std::llround(d.dy / kMergeQuantum),
                                       std::llround(d.dtheta / kMergeQuantum));
      auto [it, inserted] = seen.emplace(key, out.size());
      if (inserted) {
        out.push_back({d, 1});
      } else {
        ++out[it->second].weight;
      }
    }
  }
  return out;
}

struct ClusterResult {
  Codebook codebook;
  /// Set when the samples ran out before k_max tokens were admitted.
  bool underfilled = false;
};

/// Greedy K-disk selection. Samples are visited in a seeded shuffle; a sample
/// is admitted when its contour distance to every admitted token exceeds
/// delta_disk. Stops after k_max admissions or when samples run out.
inline ClusterResult kdisk_cluster(std::span<const SegmentSample> samples, double delta_disk,
                                   std::size_t k_max, std::uint64_t seed, BoxSpec box = {},
                                   std::string source_tag = {}) {
  if (samples.empty()) throw DataError("no motion segments to cluster");
  if (!(delta_disk > 0.0)) throw DataError("disk radius must be positive");
  if (k_max < 1) throw DataError("k_max must be at least 1");
  require_valid(box);

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));

  ClusterResult result;
  Codebook& cb = result.codebook;
  cb.disk_radius = delta_disk;
  cb.box = box;
  cb.source_tag = std::move(source_tag);
  std::vector<std::array<Point2, 4>> admitted;
  admitted.reserve(std::min(k_max, samples.size()));

  for (const std::size_t idx : order) {
    if (cb.tokens.size() >= k_max) break;
    const MotionDelta& d = samples[idx].delta;
    const auto corners = delta_corners(d, box);
    bool separated = true;
    for (const auto& other : admitted) {
      if (!(mean_corner_distance(other, corners) > delta_disk)) {
        separated = false;
        break;
      }
    }
    if (separated) {
      cb.tokens.push_back({cb.tokens.size(), d});
      admitted.push_back(corners);
    }
  }
  result.underfilled = cb.tokens.size() < k_max;
  return result;
}

inline ActionToken nearest_token(const Codebook& codebook, const MotionDelta& query) {
  if (codebook.empty()) throw DataError("nearest_token on an empty codebook");
  const auto q = delta_corners(query, codebook.box);
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& t : codebook.tokens) {
    const double d = mean_corner_distance(delta_corners(t.delta, codebook.box), q);
    if (d < best_d) {
      best_d = d;
      best = t.id;
    }
  }
  return codebook.tokens[best];
}

}  // namespace tokplan
