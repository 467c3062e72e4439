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
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tsw/errors.hpp"
#include "tsw/geo.hpp"
#include "tsw/strings.hpp"
#include "tsw/xml.hpp"

// Road-relevant subset of an OpenStreetMap extract and the operations that
// reduce it: parse, clip, filter by road class, route corridor. All functions
// are pure; the same input bytes give the same graph.

namespace tsw {

using NodeId = int64_t;
using WayId = int64_t;

struct OsmWay {
  std::vector<NodeId> node_refs;
  std::map<std::string, std::string> tags;

  const std::string* tag(std::string_view key) const {
    auto it = tags.find(std::string(key));
    return it == tags.end() ? nullptr : &it->second;
  }
  std::string highway() const {
    const std::string* h = tag("highway");
    return h ? *h : std::string();
  }
  bool is_roundabout() const {
    const std::string* j = tag("junction");
    return j && *j == "roundabout";
  }
  bool operator==(const OsmWay& o) const = default;
};

struct GeoGraph {
  std::map<NodeId, GeoPoint> nodes;
  std::map<WayId, OsmWay> ways;
  std::set<NodeId> signals;  // nodes tagged highway=traffic_signals
  int warnings = 0;          // dangling references dropped during parse

  bool operator==(const GeoGraph& o) const {
    return nodes == o.nodes && ways == o.ways && signals == o.signals;
  }

  /// Drop nodes not referenced by any way (signal set pruned along).
  void prune_nodes() {
    std::set<NodeId> used;
    for (const auto& [id, way] : ways)
      for (NodeId n : way.node_refs) used.insert(n);
    for (auto it = nodes.begin(); it != nodes.end();)
      it = used.count(it->first) ? std::next(it) : nodes.erase(it);
    for (auto it = signals.begin(); it != signals.end();)
      it = used.count(*it) ? std::next(it) : signals.erase(it);
  }
};

/// Parse OSM XML, keeping exactly the highway-tagged ways (which includes
/// footways, cycleways and crossings). References to missing nodes are dropped
/// with a warning count; ways left with fewer than two nodes are removed.
inline GeoGraph parse_osm(std::string_view xml) {
  XmlElement root = xml_parse(xml);
  require(root.name == "osm", Errc::malformed_xml, "root element is <" + root.name + ">, not <osm>");
  GeoGraph g;
  root.for_each("node", [&](const XmlElement& n) {
    const std::string* id = n.attr("id");
    const std::string* lat = n.attr("lat");
    const std::string* lon = n.attr("lon");
    require(id && lat && lon, Errc::malformed_xml, "<node> missing id/lat/lon");
    NodeId nid;
    GeoPoint p;
    require(parse_i64(*id, nid) && parse_double(*lat, p.lat) && parse_double(*lon, p.lon),
            Errc::malformed_xml, "bad <node> attribute values");
    require(p.valid(), Errc::malformed_xml, "node " + *id + " out of WGS-84 range");
    g.nodes[nid] = p;
    n.for_each("tag", [&](const XmlElement& t) {
      if (t.attr_or("k", "") == "highway" && t.attr_or("v", "") == "traffic_signals")
        g.signals.insert(nid);
    });
  });
  root.for_each("way", [&](const XmlElement& w) {
    const std::string* id = w.attr("id");
    require(id != nullptr, Errc::malformed_xml, "<way> missing id");
    WayId wid;
    require(parse_i64(*id, wid), Errc::malformed_xml, "bad <way> id");
    OsmWay way;
    w.for_each("nd", [&](const XmlElement& nd) {
      NodeId ref;
      require(nd.attr("ref") && parse_i64(*nd.attr("ref"), ref), Errc::malformed_xml,
              "<nd> missing ref");
      way.node_refs.push_back(ref);
    });
    w.for_each("tag", [&](const XmlElement& t) {
      way.tags[t.attr_or("k", "")] = t.attr_or("v", "");
    });
    if (way.highway().empty()) return;  // buildings, waterways, ...
    // Drop references to nodes absent from the extract.
    auto kept_end = std::remove_if(way.node_refs.begin(), way.node_refs.end(),
                                   [&](NodeId n) { return g.nodes.count(n) == 0; });
    g.warnings += static_cast<int>(way.node_refs.end() - kept_end);
    way.node_refs.erase(kept_end, way.node_refs.end());
    if (way.node_refs.size() < 2) {
      ++g.warnings;
      return;
    }
    g.ways[wid] = std::move(way);
  });
  require(!g.ways.empty(), Errc::empty_extract, "no highway-tagged ways in extract");
  g.prune_nodes();
  return g;
}

/// Canonical serialization: nodes then ways, each sorted by id, tags sorted by
/// key, coordinates in shortest round-trip decimal form. parse(serialize(g))
/// reproduces g exactly.
inline std::string serialize_osm(const GeoGraph& g) {
  XmlElement root;
  root.name = "osm";
  root.set_attr("version", "0.6");
  root.set_attr("generator", "tsw");
  for (const auto& [id, p] : g.nodes) {
    XmlElement n;
    n.name = "node";
    n.set_attr("id", std::to_string(id));
    n.set_attr("lat", fmt_double(p.lat));
    n.set_attr("lon", fmt_double(p.lon));
    if (g.signals.count(id)) {
      XmlElement t;
      t.name = "tag";
      t.set_attr("k", "highway");
      t.set_attr("v", "traffic_signals");
      n.children.push_back(std::move(t));
    }
    root.children.push_back(std::move(n));
  }
  for (const auto& [id, way] : g.ways) {
    XmlElement w;
    w.name = "way";
    w.set_attr("id", std::to_string(id));
    for (NodeId ref : way.node_refs) {
      XmlElement nd;
      nd.name = "nd";
      nd.set_attr("ref", std::to_string(ref));
      w.children.push_back(std::move(nd));
    }
    for (const auto& [k, v] : way.tags) {
      XmlElement t;
      t.name = "tag";
      t.set_attr("k", k);
      t.set_attr("v", v);
      w.children.push_back(std::move(t));
    }
    root.children.push_back(std::move(w));
  }
  return xml_write(root);
}

namespace detail {

/// Trim a way to the contiguous span of nodes satisfying `inside`, keeping the
/// first node beyond the span on each side as the terminal vertex so the way
/// still reaches the clip boundary. Returns false when no node is inside.
template <typename Pred>
bool trim_way(OsmWay& way, Pred inside) {
  size_t first = way.node_refs.size(), last = 0;
  bool any = false;
  for (size_t i = 0; i < way.node_refs.size(); ++i) {
    if (inside(way.node_refs[i])) {
      if (!any) first = i;
      last = i;
      any = true;
    }
  }
  if (!any) return false;
  size_t lo = first > 0 ? first - 1 : 0;
  size_t hi = std::min(way.node_refs.size() - 1, last + 1);
  way.node_refs = std::vector<NodeId>(way.node_refs.begin() + static_cast<long>(lo),
                                      way.node_refs.begin() + static_cast<long>(hi) + 1);
  return way.node_refs.size() >= 2;
}

}  // namespace detail

/// Keep exactly the ways with at least one node within `radius_m` of `center`,
/// truncated at the first node outside the radius on each side.
inline GeoGraph clip_radius(const GeoGraph& g, GeoPoint center, double radius_m) {
  require(radius_m > 0.0, Errc::domain_error, "radius_m must be > 0");
  GeoGraph out;
  out.nodes = g.nodes;
  out.signals = g.signals;
  for (const auto& [id, way] : g.ways) {
    OsmWay trimmed = way;
    if (detail::trim_way(trimmed, [&](NodeId n) {
          return haversine_m(g.nodes.at(n), center) <= radius_m;
        })) {
      out.ways[id] = std::move(trimmed);
    }
  }
  require(!out.ways.empty(), Errc::empty_extract, "nothing within radius");
  out.prune_nodes();
  return out;
}

/// Bounding-box variant used by region retrieval; same truncation rule.
inline GeoGraph clip_bbox(const GeoGraph& g, GeoPoint sw, GeoPoint ne) {
  require(sw.lat < ne.lat && sw.lon < ne.lon, Errc::domain_error,
          "bbox south-west must be strictly south-west of north-east");
  GeoGraph out;
  out.nodes = g.nodes;
  out.signals = g.signals;
  for (const auto& [id, way] : g.ways) {
    OsmWay trimmed = way;
    if (detail::trim_way(trimmed, [&](NodeId n) {
          const GeoPoint& p = g.nodes.at(n);
          return p.lat >= sw.lat && p.lat <= ne.lat && p.lon >= sw.lon && p.lon <= ne.lon;
        })) {
      out.ways[id] = std::move(trimmed);
    }
  }
  require(!out.ways.empty(), Errc::empty_extract, "nothing within bounding box");
  out.prune_nodes();
  return out;
}

/// Keep ways whose highway class is in `types`; "roundabout" additionally
/// matches ways tagged junction=roundabout.
inline GeoGraph filter_road_types(const GeoGraph& g, const std::set<std::string>& types) {
  require(!types.empty(), Errc::domain_error, "road type set must be non-empty");
  GeoGraph out;
  out.nodes = g.nodes;
  out.signals = g.signals;
  for (const auto& [id, way] : g.ways) {
    bool keep = types.count(way.highway()) > 0 ||
                (way.is_roundabout() && types.count("roundabout") > 0);
    if (keep) out.ways[id] = way;
  }
  require(!out.ways.empty(), Errc::empty_extract, "no ways match requested road types");
  out.prune_nodes();
  return out;
}

/// Nearest graph node to p; NoSnap when farther than `max_snap_m`.
inline NodeId snap_to_node(const GeoGraph& g, GeoPoint p, double max_snap_m = 250.0) {
  NodeId best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& [id, q] : g.nodes) {
    double d = haversine_m(p, q);
    if (d < best_d) {
      best_d = d;
      best = id;
    }
  }
  require(best_d <= max_snap_m, Errc::no_snap,
          "no node within " + fmt_double(max_snap_m) + " m of query point");
  return best;
}

/// Minimum-great-circle-length node path between the snapped endpoints. Among
/// equal-length shortest paths the lexicographically smallest node-id sequence
/// wins, selected by a forward walk over nodes that lie on some shortest path.
inline std::vector<NodeId> find_route(const GeoGraph& g, GeoPoint origin, GeoPoint dest) {
  NodeId o = snap_to_node(g, origin);
  NodeId d = snap_to_node(g, dest);
  if (o == d) return {o};

  std::map<NodeId, std::vector<std::pair<NodeId, double>>> adj;
  for (const auto& [wid, way] : g.ways) {
    for (size_t i = 1; i < way.node_refs.size(); ++i) {
      NodeId a = way.node_refs[i - 1], b = way.node_refs[i];
      if (a == b) continue;
      double len = haversine_m(g.nodes.at(a), g.nodes.at(b));
      adj[a].emplace_back(b, len);
      adj[b].emplace_back(a, len);
    }
  }

  auto dijkstra = [&](NodeId src) {
    std::map<NodeId, double> dist;
    using Item = std::pair<double, NodeId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[src] = 0.0;
    pq.emplace(0.0, src);
    while (!pq.empty()) {
      auto [dd, u] = pq.top();
      pq.pop();
      auto it = dist.find(u);
      if (it != dist.end() && dd > it->second) continue;
      for (auto [v, w] : adj[u]) {
        double nd = dd + w;
        auto vt = dist.find(v);
        if (vt == dist.end() || nd < vt->second) {
          dist[v] = nd;
          pq.emplace(nd, v);
        }
      }
    }
    return dist;
  };

  auto from_o = dijkstra(o);
  auto to_d = dijkstra(d);
  auto it = from_o.find(d);
  require(it != from_o.end(), Errc::unreachable, "no path between snapped endpoints");
  double total = it->second;

  // Greedy forward walk: at each node take the smallest-id neighbor that is
  // still on a shortest path. Tolerance absorbs summation-order noise.
  constexpr double kTol = 1e-6;
  std::vector<NodeId> path{o};
  NodeId cur = o;
  while (cur != d) {
    NodeId next = 0;
    bool found = false;
    for (auto [v, w] : adj[cur]) {
      auto fo = from_o.find(cur);
      auto td = to_d.find(v);
      if (fo == from_o.end() || td == to_d.end()) continue;
      if (std::abs(fo->second + w + td->second - total) <= kTol) {
        if (!found || v < next) {
          next = v;
          found = true;
        }
      }
    }
    require(found, Errc::unreachable, "shortest-path walk stalled");
    path.push_back(next);
    cur = next;
  }
  return path;
}

/// Subgraph of ways having a node within `corridor_m` of the shortest route
/// polyline between origin and dest.
inline GeoGraph shortest_route(const GeoGraph& g, GeoPoint origin, GeoPoint dest,
                               double corridor_m) {
  require(corridor_m > 0.0, Errc::domain_error, "corridor_m must be > 0");
  std::vector<NodeId> path = find_route(g, origin, dest);

  // Point-to-polyline distances in a local tangent frame (sub-millimetre error
  // at corridor scale).
  LocalProjection proj{g.nodes.at(path.front())};
  std::vector<Vec2> poly;
  poly.reserve(path.size());
  for (NodeId n : path) poly.push_back(proj.to_xy(g.nodes.at(n)));

  GeoGraph out;
  out.nodes = g.nodes;
  out.signals = g.signals;
  for (const auto& [id, way] : g.ways) {
    bool keep = false;
    for (NodeId n : way.node_refs) {
      Vec2 p = proj.to_xy(g.nodes.at(n));
      double d = poly.size() == 1 ? (p - poly[0]).norm() : point_polyline_dist(p, poly);
      if (d <= corridor_m) {
        keep = true;
        break;
      }
    }
    if (keep) out.ways[id] = way;
  }
  require(!out.ways.empty(), Errc::empty_extract, "empty route corridor");
  out.prune_nodes();
  return out;
}

/// Retrieval query covering the three supported modes.
struct RetrievalQuery {
  enum class Mode { radius, region, route };
  Mode mode = Mode::radius;

  GeoPoint center;       // radius
  double radius_m = 0.0;  // radius; resource guard at 5 km

  GeoPoint bbox_sw, bbox_ne;          // region
  std::set<std::string> road_types;   // region (empty set = keep all)

  GeoPoint route_origin, route_dest;  // route
  double corridor_m = 0.0;

  void validate() const {
    switch (mode) {
      case Mode::radius:
        require(center.valid(), Errc::config_error, "invalid center coordinate");
        require(radius_m > 0.0 && radius_m <= 5000.0, Errc::config_error,
                "radius must be in (0, 5000] m");
        break;
      case Mode::region:
        require(bbox_sw.valid() && bbox_ne.valid(), Errc::config_error, "invalid bbox");
        require(bbox_sw.lat < bbox_ne.lat && bbox_sw.lon < bbox_ne.lon, Errc::config_error,
                "bbox south-west must be strictly south-west of north-east");
        break;
      case Mode::route:
        require(route_origin.valid() && route_dest.valid(), Errc::config_error,
                "invalid route endpoints");
        require(!(route_origin == route_dest), Errc::config_error,
                "route endpoints must be distinct");
        require(corridor_m > 0.0, Errc::config_error, "corridor must be > 0");
        break;
    }
  }
};

/// Apply a validated retrieval query to a parsed extract.
inline GeoGraph apply_query(const GeoGraph& g, const RetrievalQuery& q) {
  q.validate();
  switch (q.mode) {
    case RetrievalQuery::Mode::radius:
      return clip_radius(g, q.center, q.radius_m);
    case RetrievalQuery::Mode::region: {
      GeoGraph clipped = clip_bbox(g, q.bbox_sw, q.bbox_ne);
      return q.road_types.empty() ? clipped : filter_road_types(clipped, q.road_types);
    }
    case RetrievalQuery::Mode::route:
      return shortest_route(g, q.route_origin, q.route_dest, q.corridor_m);
  }
  fail(Errc::config_error, "unknown retrieval mode");
}

}  // namespace tsw
