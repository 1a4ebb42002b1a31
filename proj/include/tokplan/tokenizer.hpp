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

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "tokplan/codebook.hpp"
#include "tokplan/errors.hpp"
#include "tokplan/geometry.hpp"

namespace tokplan {

using TokenSequence = std::vector<std::size_t>;

struct EncodeReport {
  TokenSequence ids;
  /// Segments whose nearest token lies farther than the codebook disk
  /// radius, i.e. motion the codebook does not cover.
  std::size_t out_of_vicinity = 0;
};

// Binds a codebook and its footprint index. Encoding is open-loop: every
// segment is quantized independently from the source poses.
class Tokenizer {
 public:
  explicit Tokenizer(Codebook codebook, double step_cap = kMaxStepDistance)
      : codebook_(std::move(codebook)), index_(codebook_), step_cap_(step_cap) {
    if (codebook_.empty()) throw DataError("tokenizer needs a non-empty codebook");
  }

  const Codebook& codebook() const { return codebook_; }
  std::size_t vocabulary_size() const { return codebook_.size(); }

  EncodeReport encode_with_report(const Trajectory& traj) const {
    if (traj.poses.size() < 2) throw DataError("trajectory needs at least two poses to encode");
    EncodeReport report;
    report.ids.reserve(traj.horizon());
    for (std::size_t i = 0; i + 1 < traj.poses.size(); ++i) {
      const MotionDelta d = se2_relative(traj.poses[i], traj.poses[i + 1]);
      if (!within_cap(d, step_cap_)) {
        throw DataError("segment " + std::to_string(i) + " exceeds the physical motion cap (" +
                        std::to_string(d.planar_norm()) + " m per step)");
      }
      const auto match = index_.nearest(d);
      if (match.distance > codebook_.disk_radius) ++report.out_of_vicinity;
      report.ids.push_back(match.id);
    }
    return report;
  }

  TokenSequence encode(const Trajectory& traj) const { return encode_with_report(traj).ids; }

  Trajectory decode(const TokenSequence& ids, const Pose2D& initial) const {
    if (ids.empty()) throw DataError("cannot decode an empty token sequence");
    Trajectory out;
    out.poses.reserve(ids.size() + 1);
    out.poses.push_back(initial);
    for (const std::size_t id : ids) {
      out.poses.push_back(se2_compose(out.poses.back(), codebook_.delta(id)));
    }
    return out;
  }

  /// Mean position error of decode(encode(traj)) over all poses after the first.
  double reconstruction_error(const Trajectory& traj) const {
    const Trajectory rec = decode(encode(traj), traj.poses.front());
    double sum = 0.0;
    for (std::size_t i = 1; i < traj.poses.size(); ++i) {
      sum += distance(traj.poses[i].position(), rec.poses[i].position());
    }
    return sum / static_cast<double>(traj.poses.size() - 1);
  }

 private:
  Codebook codebook_;
  TokenIndex index_;
  double step_cap_;
};

inline TokenSequence encode(const Trajectory& traj, const Codebook& codebook) {
  return Tokenizer(codebook).encode(traj);
}

inline Trajectory decode(const TokenSequence& ids, const Pose2D& initial,
                         const Codebook& codebook) {
  return Tokenizer(codebook).decode(ids, initial);
}

inline double reconstruction_error(const Trajectory& traj, const Codebook& codebook) {
  return Tokenizer(codebook).reconstruction_error(traj);
}

}  // namespace tokplan
