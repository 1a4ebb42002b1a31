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

// SE(2) pose algebra, vehicle footprints and the planar primitives (routes,
// drivable polygons) shared by the rest of the library.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "tokplan/errors.hpp"

namespace tokplan {

inline constexpr double kPi = std::numbers::pi;

/// Duration of one trajectory step (plans are sampled at 2 Hz).
inline constexpr double kStepSeconds = 0.5;

/// Default physical cap on the planar displacement of a single 0.5 s step.
inline constexpr double kMaxStepDistance = 25.0;

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  double w = std::remainder(a, 2.0 * kPi);
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
  friend bool operator==(const Point2&, const Point2&) = default;
};

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 p) { return std::hypot(p.x, p.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Point2 position() const { return {x, y}; }
  friend bool operator==(const Pose2D&, const Pose2D&) = default;
};

/// Displacement of one step expressed in the frame of the source pose:
/// dx is longitudinal, dy lateral.
struct MotionDelta {
  double dx = 0.0;
  double dy = 0.0;
  double dtheta = 0.0;

  double planar_norm() const { return std::hypot(dx, dy); }
  friend bool operator==(const MotionDelta&, const MotionDelta&) = default;
};

inline bool within_cap(const MotionDelta& d, double cap = kMaxStepDistance) {
  return std::isfinite(d.dx) && std::isfinite(d.dy) && std::isfinite(d.dtheta) &&
         d.planar_norm() <= cap && std::abs(d.dtheta) <= kPi;
}

struct BoxSpec {
  double length = 4.5;
  double width = 2.0;

  bool valid() const { return length > 0.0 && width > 0.0; }
  /// Distance from the box center to any corner.
  double circumradius() const { return 0.5 * std::hypot(length, width); }
  friend bool operator==(const BoxSpec&, const BoxSpec&) = default;
};

inline void require_valid(const BoxSpec& spec) {
  if (!spec.valid()) {
    throw DataError("box dimensions must be strictly positive");
  }
}

/// Poses sampled at 2 Hz; index i corresponds to 0.5 * i seconds.
struct Trajectory {
  std::vector<Pose2D> poses;

  std::size_t horizon() const { return poses.empty() ? 0 : poses.size() - 1; }
  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

inline Pose2D se2_compose(const Pose2D& base, const MotionDelta& delta) {
  const double c = std::cos(base.theta);
  const double s = std::sin(base.theta);
  return {base.x + c * delta.dx - s * delta.dy, base.y + s * delta.dx + c * delta.dy,
          wrap_angle(base.theta + delta.dtheta)};
}

inline MotionDelta se2_relative(const Pose2D& from, const Pose2D& to) {
  const double c = std::cos(from.theta);
  const double s = std::sin(from.theta);
  const double ex = to.x - from.x;
  const double ey = to.y - from.y;
  return {c * ex + s * ey, -s * ex + c * ey, wrap_angle(to.theta - from.theta)};
}

/// Applies the rigid transform `frame` to a pose given in that frame.
inline Pose2D transform_pose(const Pose2D& frame, const Pose2D& local) {
  return se2_compose(frame, MotionDelta{local.x, local.y, local.theta});
}

/// Corners in the order front-left, front-right, rear-right, rear-left.
inline std::array<Point2, 4> box_corners(const Pose2D& pose, const BoxSpec& spec) {
  const double hl = 0.5 * spec.length;
  const double hw = 0.5 * spec.width;
  const double c = std::cos(pose.theta);
  const double s = std::sin(pose.theta);
  constexpr std::array<std::array<double, 2>, 4> kSigns{{{1, 1}, {1, -1}, {-1, -1}, {-1, 1}}};
  std::array<Point2, 4> out;
  for (std::size_t i = 0; i < 4; ++i) {
    const double lx = kSigns[i][0] * hl;
    const double ly = kSigns[i][1] * hw;
    out[i] = {pose.x + c * lx - s * ly, pose.y + s * lx + c * ly};
  }
  return out;
}

/// Footprint corners of the box placed by `delta` from the origin pose.
inline std::array<Point2, 4> delta_corners(const MotionDelta& delta, const BoxSpec& spec) {
  return box_corners(se2_compose(Pose2D{}, delta), spec);
}

inline double mean_corner_distance(const std::array<Point2, 4>& a,
                                   const std::array<Point2, 4>& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < 4; ++i) sum += distance(a[i], b[i]);
  return 0.25 * sum;
}

/// Average distance between corresponding corners of the two final-frame
/// boxes placed by `a` and `b`.
inline double contour_distance(const MotionDelta& a, const MotionDelta& b, const BoxSpec& spec) {
  return mean_corner_distance(delta_corners(a, spec), delta_corners(b, spec));
}

struct Polygon {
  std::vector<Point2> vertices;  // implicitly closed
};

namespace detail {

inline bool on_segment(Point2 p, Point2 a, Point2 b, double tol) {
  const Point2 ab = b - a;
  const double len = norm(ab);
  if (len == 0.0) return distance(p, a) <= tol;
  if (std::abs(cross(ab, p - a)) / len > tol) return false;
  const double t = dot(p - a, ab) / (len * len);
  return t >= -tol / len && t <= 1.0 + tol / len;
}

inline bool segments_intersect(Point2 a, Point2 b, Point2 c, Point2 d) {
  auto orient = [](Point2 p, Point2 q, Point2 r) {
    const double v = cross(q - p, r - p);
    return (v > 0.0) - (v < 0.0);
  };
  const int o1 = orient(a, b, c);
  const int o2 = orient(a, b, d);
  const int o3 = orient(c, d, a);
  const int o4 = orient(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(c, a, b, 0.0)) return true;
  if (o2 == 0 && on_segment(d, a, b, 0.0)) return true;
  if (o3 == 0 && on_segment(a, c, d, 0.0)) return true;
  if (o4 == 0 && on_segment(b, c, d, 0.0)) return true;
  return false;
}

}  // namespace detail

/// Checks vertex count and that no two non-adjacent edges intersect.
inline bool is_simple(const Polygon& poly) {
  const auto& v = poly.vertices;
  const std::size_t n = v.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (detail::segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n])) return false;
    }
  }
  return true;
}

/// Ray-casting containment; points on the boundary count as inside.
inline bool point_in_polygon(Point2 p, const Polygon& poly) {
  constexpr double kBoundaryTol = 1e-9;
  const auto& v = poly.vertices;
  const std::size_t n = v.size();
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    if (detail::on_segment(p, v[j], v[i], kBoundaryTol)) return true;
    if ((v[i].y > p.y) != (v[j].y > p.y)) {
      const double x_cross = v[j].x + (p.y - v[j].y) * (v[i].x - v[j].x) / (v[i].y - v[j].y);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

/// Separating-axis test over the four face normals. Boxes that merely touch
/// are reported as overlapping.
inline bool obb_overlap(const Pose2D& pose_a, const BoxSpec& spec_a, const Pose2D& pose_b,
                        const BoxSpec& spec_b) {
  constexpr double kTouchTol = 1e-9;
  const auto ca = box_corners(pose_a, spec_a);
  const auto cb = box_corners(pose_b, spec_b);
  const std::array<Point2, 4> axes{Point2{std::cos(pose_a.theta), std::sin(pose_a.theta)},
                                   Point2{-std::sin(pose_a.theta), std::cos(pose_a.theta)},
                                   Point2{std::cos(pose_b.theta), std::sin(pose_b.theta)},
                                   Point2{-std::sin(pose_b.theta), std::cos(pose_b.theta)}};
  for (const Point2& axis : axes) {
    double amin = std::numeric_limits<double>::infinity();
    double amax = -amin;
    double bmin = amin;
    double bmax = -amin;
    for (std::size_t i = 0; i < 4; ++i) {
      const double pa = dot(ca[i], axis);
      const double pb = dot(cb[i], axis);
      amin = std::min(amin, pa);
      amax = std::max(amax, pa);
      bmin = std::min(bmin, pb);
      bmax = std::max(bmax, pb);
    }
    if (amax < bmin - kTouchTol || bmax < amin - kTouchTol) return false;
  }
  return true;
}

class Polyline {
 public:
  Polyline() = default;

  explicit Polyline(std::vector<Point2> points) : points_(std::move(points)) {
    if (points_.size() < 2) throw DataError("polyline needs at least two points");
    cumulative_.assign(points_.size(), 0.0);
    for (std::size_t i = 1; i < points_.size(); ++i) {
      const double seg = distance(points_[i - 1], points_[i]);
      if (seg == 0.0) throw DataError("polyline has coincident consecutive points");
      cumulative_[i] = cumulative_[i - 1] + seg;
    }
  }

  const std::vector<Point2>& points() const { return points_; }
  double length() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }

  /// Arc-length coordinate of the closest point on the polyline to `p`.
  /// Ties go to the earliest segment.
  double project(Point2 p) const {
    double best_d = std::numeric_limits<double>::infinity();
    double best_s = 0.0;
    for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
      const Point2 a = points_[i];
      const Point2 ab = points_[i + 1] - a;
      const double len2 = dot(ab, ab);
      const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
      const double d = distance(p, a + t * ab);
      if (d < best_d) {
        best_d = d;
        best_s = cumulative_[i] + t * std::sqrt(len2);
      }
    }
    return best_s;
  }

  /// Pose on the polyline at arc length s (clamped to the ends), heading
  /// along the local segment, shifted laterally by `offset` (left positive).
  Pose2D pose_at(double s, double offset = 0.0) const {
    s = std::clamp(s, 0.0, length());
    std::size_t i = 0;
    while (i + 2 < points_.size() && cumulative_[i + 1] < s) ++i;
    const Point2 a = points_[i];
    const Point2 ab = points_[i + 1] - a;
    const double seg = cumulative_[i + 1] - cumulative_[i];
    const Point2 p = a + ((s - cumulative_[i]) / seg) * ab;
    const double heading = std::atan2(ab.y, ab.x);
    return {p.x - std::sin(heading) * offset, p.y + std::cos(heading) * offset, heading};
  }

 private:
  std::vector<Point2> points_;
  std::vector<double> cumulative_;
};

/// Arc-length progress between the projections of the first and final
/// trajectory positions, clamped at zero.
inline double progress_along(const Polyline& route, const Trajectory& traj) {
  if (traj.poses.size() < 2) return 0.0;
  const double s0 = route.project(traj.poses.front().position());
  const double s1 = route.project(traj.poses.back().position());
  return std::max(0.0, s1 - s0);
}

}  // namespace tokplan
