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

#include <cmath>

#include "tsw/errors.hpp"
#include "tsw/geometry.hpp"

namespace tsw {

/// Spherical earth radius used by every distance in this project, so
/// distance-dependent results are exactly reproducible.
inline constexpr double kEarthRadiusM = 6'371'000.0;

struct GeoPoint {
  double lat = 0.0;  // degrees WGS-84, [-90, 90]
  double lon = 0.0;  // degrees WGS-84, [-180, 180]

  bool valid() const {
    return std::isfinite(lat) && std::isfinite(lon) && lat >= -90.0 && lat <= 90.0 &&
           lon >= -180.0 && lon <= 180.0;
  }
  bool operator==(const GeoPoint& o) const { return lat == o.lat && lon == o.lon; }
};

inline double haversine_m(GeoPoint a, GeoPoint b) {
  double phi1 = deg2rad(a.lat), phi2 = deg2rad(b.lat);
  double dphi = phi2 - phi1;
  double dlam = deg2rad(b.lon - a.lon);
  double h = std::sin(dphi / 2) * std::sin(dphi / 2) +
             std::cos(phi1) * std::cos(phi2) * std::sin(dlam / 2) * std::sin(dlam / 2);
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

/// Equirectangular tangent plane at `origin`. Accurate to well under 0.1%
/// within a few kilometres, which keeps all projected geometry analytic:
///   x = R * dlon_rad * cos(origin.lat),  y = R * dlat_rad.
struct LocalProjection {
  GeoPoint origin;

  /// Points farther than this from the origin are rejected by callers.
  static constexpr double kMaxExtentDeg = 0.5;

  Vec2 to_xy(GeoPoint p) const {
    double x = kEarthRadiusM * deg2rad(p.lon - origin.lon) * std::cos(deg2rad(origin.lat));
    double y = kEarthRadiusM * deg2rad(p.lat - origin.lat);
    return {x, y};
  }

  GeoPoint to_geo(Vec2 v) const {
    double lat = origin.lat + rad2deg(v.y / kEarthRadiusM);
    double lon = origin.lon + rad2deg(v.x / (kEarthRadiusM * std::cos(deg2rad(origin.lat))));
    return {lat, lon};
  }

  void check_in_range(GeoPoint p) const {
    if (std::abs(p.lat - origin.lat) > kMaxExtentDeg ||
        std::abs(p.lon - origin.lon) > kMaxExtentDeg) {
      fail(Errc::out_of_range, "point too far from projection origin");
    }
  }
};

}  // namespace tsw
