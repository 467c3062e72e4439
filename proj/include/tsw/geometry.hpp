// Copyright 2026 The tsw Authors
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
#include <limits>
#include <span>
#include <vector>

namespace tsw {

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

/// Wrap an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a <= 0.0) a += 2.0 * kPi;
  return a - kPi;
}

/// Wrap degrees to [0, 360).
inline double wrap_deg360(double d) {
  d = std::fmod(d, 360.0);
  if (d < 0.0) d += 360.0;
  return d;
}

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double k) const { return {x * k, y * k}; }
  Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double cross(Vec2 o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  Vec2 normalized() const {
    double n = norm();
    return n > 0.0 ? Vec2{x / n, y / n} : Vec2{0.0, 0.0};
  }
  /// Right-hand normal when looking along this direction (x east, y north).
  Vec2 right_normal() const { return {y, -x}; }
  double heading() const { return std::atan2(y, x); }
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 operator+(Vec3 o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(Vec3 o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double k) const { return {x * k, y * k, z * k}; }
  double dot(Vec3 o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(Vec3 o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  Vec3 normalized() const {
    double n = norm();
    return n > 0.0 ? Vec3{x / n, y / n, z / n} : Vec3{0.0, 0.0, 0.0};
  }
};

inline double polyline_length(std::span<const Vec2> pts) {
  double len = 0.0;
  for (size_t i = 1; i < pts.size(); ++i) len += (pts[i] - pts[i - 1]).norm();
  return len;
}

/// Point at arc length s along the polyline; clamps to the endpoints.
inline Vec2 polyline_point_at(std::span<const Vec2> pts, double s) {
  if (pts.empty()) return {};
  if (s <= 0.0) return pts.front();
  for (size_t i = 1; i < pts.size(); ++i) {
    double seg = (pts[i] - pts[i - 1]).norm();
    if (s <= seg) {
      double t = seg > 0.0 ? s / seg : 0.0;
      return pts[i - 1] + (pts[i] - pts[i - 1]) * t;
    }
    s -= seg;
  }
  return pts.back();
}

/// Tangent heading (radians, CCW from +x) at arc length s.
inline double polyline_heading_at(std::span<const Vec2> pts, double s) {
  if (pts.size() < 2) return 0.0;
  for (size_t i = 1; i < pts.size(); ++i) {
    double seg = (pts[i] - pts[i - 1]).norm();
    if (s <= seg || i + 1 == pts.size()) return (pts[i] - pts[i - 1]).heading();
    s -= seg;
  }
  return (pts.back() - pts[pts.size() - 2]).heading();
}

inline double point_segment_dist(Vec2 p, Vec2 a, Vec2 b) {
  Vec2 ab = b - a;
  double len2 = ab.dot(ab);
  if (len2 <= 0.0) return (p - a).norm();
  double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + ab * t)).norm();
}

inline double point_polyline_dist(Vec2 p, std::span<const Vec2> pts) {
  if (pts.empty()) return std::numeric_limits<double>::infinity();
  if (pts.size() == 1) return (p - pts[0]).norm();
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 1; i < pts.size(); ++i)
    best = std::min(best, point_segment_dist(p, pts[i - 1], pts[i]));
  return best;
}

/// Arc length of the closest point on the polyline to p.
inline double polyline_project(std::span<const Vec2> pts, Vec2 p) {
  double best = std::numeric_limits<double>::infinity();
  double best_s = 0.0;
  double acc = 0.0;
  for (size_t i = 1; i < pts.size(); ++i) {
    Vec2 ab = pts[i] - pts[i - 1];
    double len = ab.norm();
    double t = 0.0;
    if (len > 0.0) t = std::clamp((p - pts[i - 1]).dot(ab) / (len * len), 0.0, 1.0);
    double d = (p - (pts[i - 1] + ab * t)).norm();
    if (d < best) {
      best = d;
      best_s = acc + t * len;
    }
    acc += len;
  }
  return best_s;
}

/// Parallel offset of an open polyline. Positive offset is to the right of the
/// direction of travel. Vertex normals are averaged and miter-scaled so the
/// lateral separation stays close to |offset|; the miter is clamped to avoid
/// spikes at sharp corners.
inline std::vector<Vec2> offset_polyline(std::span<const Vec2> pts, double offset,
                                         double miter_limit = 2.0) {
  std::vector<Vec2> out;
  out.reserve(pts.size());
  if (pts.size() < 2) {
    for (auto p : pts) out.push_back(p);
    return out;
  }
  for (size_t i = 0; i < pts.size(); ++i) {
    Vec2 n_prev{}, n_next{};
    if (i > 0) n_prev = (pts[i] - pts[i - 1]).normalized().right_normal();
    if (i + 1 < pts.size()) n_next = (pts[i + 1] - pts[i]).normalized().right_normal();
    Vec2 m = (i == 0) ? n_next : (i + 1 == pts.size()) ? n_prev : n_prev + n_next;
    Vec2 u = m.normalized();
    if (u.norm() == 0.0) u = n_prev;  // 180 degree turn
    double scale = 1.0;
    if (i > 0 && i + 1 < pts.size()) {
      double c = u.dot(n_prev);
      scale = (c > 1.0 / miter_limit) ? 1.0 / c : miter_limit;
    }
    out.push_back(pts[i] + u * (offset * scale));
  }
  return out;
}

/// Oriented-rectangle overlap test (separating axis on both footprints).
struct Obb2 {
  Vec2 center;
  double heading = 0.0;  // radians CCW from +x
  double half_len = 0.0;
  double half_wid = 0.0;

  std::array<Vec2, 4> corners() const {
    Vec2 f{std::cos(heading), std::sin(heading)};
    Vec2 r = f.right_normal();
    return {center + f * half_len + r * half_wid, center + f * half_len - r * half_wid,
            center - f * half_len - r * half_wid, center - f * half_len + r * half_wid};
  }
};

inline bool obb_overlap(const Obb2& a, const Obb2& b) {
  auto ca = a.corners();
  auto cb = b.corners();
  auto separated_on = [](const std::array<Vec2, 4>& axis_src, const std::array<Vec2, 4>& p,
                         const std::array<Vec2, 4>& q) {
    for (int i = 0; i < 2; ++i) {
      Vec2 axis = (axis_src[(i + 1) % 4] - axis_src[i]).normalized();
      Vec2 n = axis.right_normal();
      double pmin = 1e300, pmax = -1e300, qmin = 1e300, qmax = -1e300;
      for (auto v : p) {
        double d = v.dot(n);
        pmin = std::min(pmin, d);
        pmax = std::max(pmax, d);
      }
      for (auto v : q) {
        double d = v.dot(n);
        qmin = std::min(qmin, d);
        qmax = std::max(qmax, d);
      }
      if (pmax < qmin || qmax < pmin) return true;
    }
    return false;
  };
  return !separated_on(ca, ca, cb) && !separated_on(cb, ca, cb);
}

}  // namespace tsw
