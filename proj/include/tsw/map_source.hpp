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

#include <array>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "tsw/errors.hpp"
#include "tsw/osm.hpp"
#include "tsw/strings.hpp"

namespace tsw {

/// Source of raw OSM XML for a retrieval query. The file-backed source serves
/// offline runs and tests; the HTTP source talks to an Overpass-style endpoint.
class MapSource {
 public:
  virtual ~MapSource() = default;
  virtual std::string fetch(const RetrievalQuery& q) = 0;
};

class FileMapSource : public MapSource {
 public:
  explicit FileMapSource(std::string path) : path_(std::move(path)) {}

  std::string fetch(const RetrievalQuery&) override {
    std::ifstream f(path_, std::ios::binary);
    require(f.good(), Errc::io_error, "cannot open OSM file " + path_);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
  }

 private:
  std::string path_;
};

namespace detail {

/// Bounding box (south, west, north, east) that covers the query area, padded
/// so clipping never runs out of data at the rim.
inline std::array<double, 4> query_bbox(const RetrievalQuery& q) {
  auto around = [](GeoPoint c, double m) {
    double dlat = rad2deg(m / kEarthRadiusM);
    double dlon = rad2deg(m / (kEarthRadiusM * std::cos(deg2rad(c.lat))));
    return std::array<double, 4>{c.lat - dlat, c.lon - dlon, c.lat + dlat, c.lon + dlon};
  };
  switch (q.mode) {
    case RetrievalQuery::Mode::radius:
      return around(q.center, q.radius_m * 1.2);
    case RetrievalQuery::Mode::region:
      return {q.bbox_sw.lat, q.bbox_sw.lon, q.bbox_ne.lat, q.bbox_ne.lon};
    case RetrievalQuery::Mode::route: {
      double pad_m = q.corridor_m * 2.0 + 500.0;
      double dlat = rad2deg(pad_m / kEarthRadiusM);
      double dlon = rad2deg(pad_m / (kEarthRadiusM * std::cos(deg2rad(q.route_origin.lat))));
      return {std::min(q.route_origin.lat, q.route_dest.lat) - dlat,
              std::min(q.route_origin.lon, q.route_dest.lon) - dlon,
              std::max(q.route_origin.lat, q.route_dest.lat) + dlat,
              std::max(q.route_origin.lon, q.route_dest.lon) + dlon};
    }
  }
  fail(Errc::config_error, "unknown retrieval mode");
}

}  // namespace detail

/// Overpass-style HTTP source. Requests must be rate-limited by the caller;
/// this class keeps no shared state. Excluded from offline test runs.
class OverpassMapSource : public MapSource {
 public:
  explicit OverpassMapSource(std::string base_url) : base_url_(std::move(base_url)) {}

  std::string build_query(const RetrievalQuery& q) const {
    auto [s, w, n, e] = detail::query_bbox(q);
    std::string bbox = fmt_double(s) + "," + fmt_double(w) + "," + fmt_double(n) + "," +
                       fmt_double(e);
    return "[out:xml][timeout:60];(way[\"highway\"](" + bbox + ");>;);out body;";
  }

  std::string fetch(const RetrievalQuery& q) override;

 private:
  std::string base_url_;
};

}  // namespace tsw

// httplib pulls in system socket headers; kept out of the common include path
// by defining TSW_ENABLE_HTTP only in network-capable builds.
#ifdef TSW_ENABLE_HTTP
#include "httplib.h"

namespace tsw {

inline std::string OverpassMapSource::fetch(const RetrievalQuery& q) {
  httplib::Client cli(base_url_);
  cli.set_read_timeout(90, 0);
  auto res = cli.Post("/api/interpreter", build_query(q), "text/plain");
  require(res && res->status == 200, Errc::client_error,
          "map endpoint error " + (res ? std::to_string(res->status) : std::string("no response")));
  return res->body;
}

}  // namespace tsw
#else
namespace tsw {
inline std::string OverpassMapSource::fetch(const RetrievalQuery&) {
  fail(Errc::client_error, "HTTP map source disabled in this build (define TSW_ENABLE_HTTP)");
}
}  // namespace tsw
#endif
