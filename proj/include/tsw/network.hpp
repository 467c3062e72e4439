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
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tsw/errors.hpp"
#include "tsw/geo.hpp"
#include "tsw/geometry.hpp"
#include "tsw/osm.hpp"
#include "tsw/strings.hpp"

// Lane-level road network derived from a geographic graph: directed edges
// between junctions, laterally offset lane centerlines, painted boundaries,
// crosswalk polygons, and fixed-time signal programs. The network is immutable
// after build and safe to share across threads.

namespace tsw {

using EdgeId = int64_t;
using LaneId = int64_t;

enum class AgentClass { vehicle, pedestrian, cyclist };

inline const char* agent_class_name(AgentClass c) {
  switch (c) {
    case AgentClass::vehicle: return "vehicle";
    case AgentClass::pedestrian: return "pedestrian";
    case AgentClass::cyclist: return "cyclist";
  }
  return "vehicle";
}

inline AgentClass agent_class_from(std::string_view s) {
  if (s == "vehicle") return AgentClass::vehicle;
  if (s == "pedestrian") return AgentClass::pedestrian;
  if (s == "cyclist") return AgentClass::cyclist;
  fail(Errc::config_error, "unknown agent class '" + std::string(s) + "'");
}

enum class BoundaryKind { lane_line, road_boundary };

struct Lane {
  LaneId id = 0;
  EdgeId edge = 0;
  int index = 0;  // 0 = leftmost in the direction of travel
  std::vector<Vec2> centerline;
  double width = 3.5;
  std::set<AgentClass> allowed;
  double length = 0.0;
};

struct Edge {
  EdgeId id = 0;
  NodeId from = 0;
  NodeId to = 0;
  std::vector<LaneId> lanes;  // leftmost first
  double speed_limit = 13.89;
  int priority = 2;
  std::string road_class;
  std::vector<Vec2> axis;  // reference line in the direction of travel
  double length = 0.0;
  WayId way = 0;
  bool vehicle_capable = true;
};

/// Opposite-direction edge of the same carriageway segment, when present.
inline EdgeId twin_edge_id(EdgeId id) { return id ^ 1; }

struct Boundary {
  BoundaryKind kind = BoundaryKind::lane_line;
  std::vector<Vec2> pts;
};

struct Crosswalk {
  NodeId junction = 0;
  std::array<Vec2, 4> polygon;
};

struct SignalPhase {
  double duration_s = 0.0;
  std::set<EdgeId> green;
};

struct SignalProgram {
  double cycle_s = 0.0;
  std::vector<SignalPhase> phases;

  /// Phase active at simulation time t (cyclic).
  int phase_at(double t) const {
    double m = std::fmod(t, cycle_s);
    if (m < 0.0) m += cycle_s;
    double acc = 0.0;
    for (size_t i = 0; i < phases.size(); ++i) {
      acc += phases[i].duration_s;
      if (m < acc) return static_cast<int>(i);
    }
    return static_cast<int>(phases.size()) - 1;
  }

  bool is_green(EdgeId approach, double t) const {
    if (phases.empty()) return true;
    return phases[static_cast<size_t>(phase_at(t))].green.count(approach) > 0;
  }
};

/// Defaults controlling network derivation; Table-driven per-class values
/// live in the free functions below.
struct NetworkDefaults {
  double lane_width_m = 3.5;
  bool right_hand_traffic = true;
  double crosswalk_depth_m = 3.0;
  double crosswalk_offset_m = 2.5;  // crosswalk center distance from the junction node
  double signal_cycle_s = 60.0;
  double signal_all_red_s = 3.0;
};

inline AgentClass way_agent_class(const std::string& highway) {
  if (highway == "footway" || highway == "path" || highway == "pedestrian" ||
      highway == "steps" || highway == "crossing") {
    return AgentClass::pedestrian;
  }
  if (highway == "cycleway") return AgentClass::cyclist;
  return AgentClass::vehicle;
}

inline int default_lanes_per_direction(const std::string& highway) {
  if (highway == "motorway" || highway == "motorway_link") return 3;
  if (highway == "primary" || highway == "trunk") return 2;
  return 1;
}

inline double default_speed_mps(const std::string& highway) {
  if (highway == "motorway" || highway == "motorway_link") return 33.33;
  if (highway == "trunk") return 27.78;
  if (highway == "primary") return 16.67;
  if (highway == "secondary" || highway == "tertiary" || highway == "residential" ||
      highway == "unclassified") {
    return 13.89;
  }
  if (highway == "service" || highway == "living_street") return 5.56;
  if (highway == "cycleway") return 5.56;
  return 1.4;  // foot traffic
}

inline int road_priority(const std::string& highway, bool roundabout) {
  if (roundabout) return 10;
  if (highway == "motorway" || highway == "motorway_link") return 7;
  if (highway == "trunk") return 6;
  if (highway == "primary") return 5;
  if (highway == "secondary") return 4;
  if (highway == "tertiary") return 3;
  if (highway == "service") return 1;
  if (way_agent_class(highway) != AgentClass::vehicle) return 0;
  return 2;
}

/// "50", "50 km/h", or "30 mph" to m/s; nullopt when unparseable.
inline std::optional<double> parse_maxspeed(const std::string& v) {
  double num = 0.0;
  size_t i = 0;
  while (i < v.size() && (std::isdigit(static_cast<unsigned char>(v[i])) || v[i] == '.')) ++i;
  if (i == 0 || !parse_double(v.substr(0, i), num)) return std::nullopt;
  std::string unit = to_lower(trim(v.substr(i)));
  if (unit == "mph") return num * 0.44704;
  return num / 3.6;  // km/h is the default unit
}

struct ValidationReport {
  int disconnected_components = 0;  // number of components when > 1, else 0
  int zero_length_lanes = 0;
  int duplicate_lane_ids = 0;
  int signals_without_programs = 0;

  bool ok() const {
    return disconnected_components == 0 && zero_length_lanes == 0 && duplicate_lane_ids == 0 &&
           signals_without_programs == 0;
  }
};

struct RoadNetwork {
  GeoPoint origin;
  std::map<NodeId, Vec2> nodes;
  std::map<EdgeId, Edge> edges;
  std::map<LaneId, Lane> lanes;
  std::vector<Boundary> boundaries;
  std::vector<Crosswalk> crosswalks;
  std::map<NodeId, SignalProgram> signals;

  // Derived adjacency; rebuilt after construction or import.
  std::map<NodeId, std::vector<EdgeId>> out_edges;
  std::map<NodeId, std::vector<EdgeId>> in_edges;

  void rebuild_topology() {
    out_edges.clear();
    in_edges.clear();
    for (const auto& [id, e] : edges) {
      out_edges[e.from].push_back(id);
      in_edges[e.to].push_back(id);
    }
  }

  const Edge& edge(EdgeId id) const {
    auto it = edges.find(id);
    require(it != edges.end(), Errc::unknown_edge, "edge " + std::to_string(id));
    return it->second;
  }

  const Lane& lane(LaneId id) const {
    auto it = lanes.find(id);
    require(it != lanes.end(), Errc::unknown_edge, "lane " + std::to_string(id));
    return it->second;
  }

  /// Edges a route may continue on after `id` (same agent capability).
  std::vector<EdgeId> successors(EdgeId id) const {
    const Edge& e = edge(id);
    std::vector<EdgeId> out;
    auto it = out_edges.find(e.to);
    if (it == out_edges.end()) return out;
    for (EdgeId next : it->second) {
      const Edge& n = edge(next);
      if (n.vehicle_capable != e.vehicle_capable) continue;
      if (n.to == e.from && n.from == e.to && n.way == e.way) continue;  // no U-turn onto the twin
      out.push_back(next);
    }
    return out;
  }

  double route_length(const std::vector<EdgeId>& route) const {
    double len = 0.0;
    for (EdgeId id : route) len += edge(id).length;
    return len;
  }

  int total_lane_count() const { return static_cast<int>(lanes.size()); }
};

/// Geographic graph with projected node coordinates.
struct ProjectedGraph {
  const GeoGraph* graph = nullptr;
  LocalProjection projection;
  std::map<NodeId, Vec2> xy;
};

/// Project every node onto the tangent plane at `origin`. The projection of
/// the origin is exactly (0, 0); points beyond 0.5 degrees are rejected.
inline ProjectedGraph to_local_frame(const GeoGraph& g, GeoPoint origin) {
  require(origin.valid(), Errc::domain_error, "invalid projection origin");
  ProjectedGraph pg;
  pg.graph = &g;
  pg.projection = LocalProjection{origin};
  for (const auto& [id, p] : g.nodes) {
    pg.projection.check_in_range(p);
    pg.xy[id] = pg.projection.to_xy(p);
  }
  return pg;
}

namespace detail {

struct WaySegment {
  WayId way = 0;
  int index = 0;
  std::vector<NodeId> nodes;
};

inline std::set<NodeId> junction_nodes(const GeoGraph& g) {
  std::map<NodeId, int> way_count;
  std::set<NodeId> junctions;
  for (const auto& [wid, way] : g.ways) {
    std::set<NodeId> seen;
    for (NodeId n : way.node_refs)
      if (seen.insert(n).second) ++way_count[n];
    junctions.insert(way.node_refs.front());
    junctions.insert(way.node_refs.back());
  }
  for (const auto& [n, c] : way_count)
    if (c >= 2) junctions.insert(n);
  for (NodeId s : g.signals) junctions.insert(s);
  return junctions;
}

inline std::vector<WaySegment> split_ways(const GeoGraph& g, const std::set<NodeId>& junctions) {
  std::vector<WaySegment> segments;
  for (const auto& [wid, way] : g.ways) {
    WaySegment seg{wid, 0, {way.node_refs.front()}};
    for (size_t i = 1; i < way.node_refs.size(); ++i) {
      NodeId n = way.node_refs[i];
      seg.nodes.push_back(n);
      bool is_break = junctions.count(n) > 0 || i + 1 == way.node_refs.size();
      if (is_break) {
        if (seg.nodes.size() >= 2) {
          segments.push_back(seg);
          seg.index++;
        }
        seg.nodes = {n};
      }
    }
  }
  return segments;
}

inline std::vector<Vec2> segment_axis(const ProjectedGraph& pg, const WaySegment& seg) {
  std::vector<Vec2> axis;
  for (NodeId n : seg.nodes) {
    Vec2 p = pg.xy.at(n);
    if (!axis.empty() && (p - axis.back()).norm() < 1e-9) continue;  // collapsed vertex
    axis.push_back(p);
  }
  return axis;
}

}  // namespace detail

/// Stable identifiers derivable from the source data: segments of a way get
/// consecutive even/odd ids for the forward/reverse direction.
inline EdgeId make_edge_id(WayId way, int segment, bool forward) {
  return way * 10000 + segment * 2 + (forward ? 0 : 1);
}
inline LaneId make_lane_id(EdgeId edge, int lane_index) { return edge * 16 + lane_index; }

inline RoadNetwork build_network(const ProjectedGraph& pg, const NetworkDefaults& defaults = {}) {
  const GeoGraph& g = *pg.graph;
  require(!g.ways.empty(), Errc::empty_extract, "projected graph is empty");

  RoadNetwork net;
  net.origin = pg.projection.origin;

  std::set<NodeId> junctions = detail::junction_nodes(g);
  std::vector<detail::WaySegment> segments = detail::split_ways(g, junctions);

  for (NodeId n : junctions)
    if (pg.xy.count(n)) net.nodes[n] = pg.xy.at(n);

  const double w = defaults.lane_width_m;

  for (const auto& seg : segments) {
    const OsmWay& way = g.ways.at(seg.way);
    std::vector<Vec2> axis = detail::segment_axis(pg, seg);
    require(axis.size() >= 2 && polyline_length(axis) > 0.0, Errc::degenerate_geometry,
            "way " + std::to_string(seg.way) + " segment " + std::to_string(seg.index) +
                " has zero projected length");

    const std::string highway = way.highway();
    const AgentClass cls = way_agent_class(highway);
    const bool roundabout = way.is_roundabout();

    // Direction handling. junction=roundabout implies one-way circulation.
    const std::string* oneway_tag = way.tag("oneway");
    std::string oneway = oneway_tag ? *oneway_tag : (roundabout ? "yes" : "no");
    bool reversed_axis = (oneway == "-1");
    bool bidirectional = !(oneway == "yes" || oneway == "true" || oneway == "1" || reversed_axis);
    if (cls != AgentClass::vehicle) bidirectional = true;  // walkable both ways

    int total_lanes = 0;
    if (cls == AgentClass::vehicle) {
      const std::string* lanes_tag = way.tag("lanes");
      int64_t tagged = 0;
      if (lanes_tag && parse_i64(*lanes_tag, tagged) && tagged > 0) {
        total_lanes = static_cast<int>(tagged);
      } else {
        total_lanes = default_lanes_per_direction(highway) * (bidirectional ? 2 : 1);
      }
    } else {
      total_lanes = bidirectional ? 2 : 1;  // one walking "lane" per direction
    }

    double speed = default_speed_mps(highway);
    if (const std::string* ms = way.tag("maxspeed")) {
      if (auto parsed = parse_maxspeed(*ms)) speed = *parsed;
    }
    int priority = road_priority(highway, roundabout);
    double lane_width = cls == AgentClass::vehicle ? w : 2.0;

    std::vector<Vec2> fwd_axis = axis;
    if (reversed_axis) std::reverse(fwd_axis.begin(), fwd_axis.end());

    // Lane k of the whole carriageway sits at (k + 0.5 - n/2) * width to the
    // right of the axis; with right-hand traffic the right half belongs to the
    // forward direction. Left-hand traffic mirrors the assignment.
    int n = total_lanes;
    int fwd_count = bidirectional ? (n + 1) / 2 : n;
    int rev_count = bidirectional ? n - fwd_count : 0;

    auto lane_offset = [&](int k) { return (k + 0.5 - n / 2.0) * lane_width; };
    double side = defaults.right_hand_traffic ? 1.0 : -1.0;

    auto add_edge = [&](bool forward, int count, NodeId from, NodeId to) {
      if (count <= 0) return;
      EdgeId eid = make_edge_id(seg.way, seg.index, forward);
      Edge e;
      e.id = eid;
      e.from = from;
      e.to = to;
      e.speed_limit = speed;
      e.priority = priority;
      e.road_class = highway;
      e.way = seg.way;
      e.vehicle_capable = (cls == AgentClass::vehicle);
      e.axis = forward ? fwd_axis : std::vector<Vec2>(fwd_axis.rbegin(), fwd_axis.rend());
      e.length = polyline_length(e.axis);

      // Global carriageway lane slots for this direction, ordered leftmost
      // first as seen by its own traffic.
      std::vector<int> ks;
      if (forward) {
        for (int k = n - fwd_count; k < n; ++k) ks.push_back(k);
      } else {
        for (int k = rev_count - 1; k >= 0; --k) ks.push_back(k);
      }
      // Mirrored lane offsets swap the left-to-right order.
      if (!defaults.right_hand_traffic) std::reverse(ks.begin(), ks.end());
      for (size_t li = 0; li < ks.size(); ++li) {
        Lane lane;
        lane.id = make_lane_id(eid, static_cast<int>(li));
        lane.edge = eid;
        lane.index = static_cast<int>(li);
        lane.width = lane_width;
        double off = side * lane_offset(ks[li]);
        lane.centerline = offset_polyline(fwd_axis, off);
        if (!forward)
          std::reverse(lane.centerline.begin(), lane.centerline.end());
        lane.length = polyline_length(lane.centerline);
        if (cls == AgentClass::vehicle) {
          lane.allowed = {AgentClass::vehicle, AgentClass::cyclist};
        } else if (cls == AgentClass::cyclist) {
          lane.allowed = {AgentClass::cyclist};
        } else {
          lane.allowed = {AgentClass::pedestrian};
        }
        e.lanes.push_back(lane.id);
        net.lanes[lane.id] = std::move(lane);
      }
      net.edges[eid] = std::move(e);
    };

    NodeId a = reversed_axis ? seg.nodes.back() : seg.nodes.front();
    NodeId b = reversed_axis ? seg.nodes.front() : seg.nodes.back();
    add_edge(true, fwd_count, a, b);
    if (bidirectional) add_edge(false, rev_count, b, a);

    // Painted boundaries over the full carriageway: outermost two are road
    // boundaries, interior separators are lane lines.
    if (cls == AgentClass::vehicle) {
      for (int j = 0; j <= n; ++j) {
        Boundary bd;
        bd.kind = (j == 0 || j == n) ? BoundaryKind::road_boundary : BoundaryKind::lane_line;
        bd.pts = offset_polyline(fwd_axis, side * (j - n / 2.0) * lane_width);
        net.boundaries.push_back(std::move(bd));
      }
    }
  }

  net.rebuild_topology();

  // Crosswalks: a junction where a walkable way meets vehicle edges gets one
  // polygon across each incident vehicle carriageway.
  std::map<NodeId, std::pair<bool, bool>> touch;  // node -> (has ped way, has vehicle way)
  for (const auto& [eid, e] : net.edges) {
    bool veh = e.vehicle_capable;
    for (NodeId nid : {e.from, e.to}) {
      auto& t = touch[nid];
      (veh ? t.second : t.first) = true;
    }
  }
  std::set<std::pair<NodeId, WayId>> done;
  for (const auto& [eid, e] : net.edges) {
    if (!e.vehicle_capable) continue;
    for (bool at_from : {true, false}) {
      NodeId j = at_from ? e.from : e.to;
      auto t = touch.find(j);
      if (t == touch.end() || !t->second.first || !t->second.second) continue;
      if (!done.insert({j, e.way}).second) continue;
      // Walk along this edge's axis away from the junction.
      std::vector<Vec2> axis = e.axis;
      if (!at_from) std::reverse(axis.begin(), axis.end());
      double s = defaults.crosswalk_offset_m + defaults.crosswalk_depth_m / 2.0;
      if (s > polyline_length(axis)) continue;
      Vec2 c = polyline_point_at(axis, s);
      double h = polyline_heading_at(axis, s);
      Vec2 u{std::cos(h), std::sin(h)};
      Vec2 nrm = u.right_normal();
      // Span the full carriageway (both directions of this segment).
      int lane_slots = static_cast<int>(e.lanes.size());
      auto tw = net.edges.find(twin_edge_id(eid));
      if (tw != net.edges.end()) lane_slots += static_cast<int>(tw->second.lanes.size());
      double half_span = lane_slots * defaults.lane_width_m / 2.0 + 0.3;
      double half_depth = defaults.crosswalk_depth_m / 2.0;
      Crosswalk cw;
      cw.junction = j;
      cw.polygon = {c + u * half_depth + nrm * half_span, c + u * half_depth - nrm * half_span,
                    c - u * half_depth - nrm * half_span, c - u * half_depth + nrm * half_span};
      net.crosswalks.push_back(cw);
    }
  }

  // Fixed-time two-phase programs at tagged signal nodes: approaches grouped
  // by bearing (opposite directions share a group), all-red interphases.
  for (NodeId s : g.signals) {
    auto in_it = net.in_edges.find(s);
    if (in_it == net.in_edges.end()) continue;
    std::vector<EdgeId> approaches;
    for (EdgeId eid : in_it->second)
      if (net.edges.at(eid).vehicle_capable) approaches.push_back(eid);
    if (approaches.empty()) continue;
    std::sort(approaches.begin(), approaches.end());

    auto bearing_mod_pi = [&](EdgeId eid) {
      const auto& axis = net.edges.at(eid).axis;
      double h = (axis.back() - axis[axis.size() - 2]).heading();
      double b = std::fmod(h, kPi);
      return b < 0.0 ? b + kPi : b;
    };
    double seed = bearing_mod_pi(approaches.front());
    std::set<EdgeId> group_a, group_b;
    for (EdgeId eid : approaches) {
      double d = std::abs(bearing_mod_pi(eid) - seed);
      d = std::min(d, kPi - d);
      (d <= kPi / 4.0 ? group_a : group_b).insert(eid);
    }

    SignalProgram prog;
    prog.cycle_s = defaults.signal_cycle_s;
    if (group_b.empty()) {
      prog.phases = {{defaults.signal_cycle_s, group_a}};
    } else {
      double green = (defaults.signal_cycle_s - 2.0 * defaults.signal_all_red_s) / 2.0;
      prog.phases = {{green, group_a},
                     {defaults.signal_all_red_s, {}},
                     {green, group_b},
                     {defaults.signal_all_red_s, {}}};
    }
    net.signals[s] = std::move(prog);
  }

  return net;
}

inline ValidationReport validate_network(const RoadNetwork& net) {
  ValidationReport rep;

  for (const auto& [id, lane] : net.lanes)
    if (!(lane.length > 0.0)) ++rep.zero_length_lanes;

  std::map<LaneId, int> referenced;
  for (const auto& [eid, e] : net.edges)
    for (LaneId l : e.lanes) ++referenced[l];
  for (const auto& [l, count] : referenced)
    if (count > 1) ++rep.duplicate_lane_ids;

  for (const auto& [nid, prog] : net.signals) {
    if (prog.phases.empty() || prog.cycle_s <= 0.0 || net.nodes.count(nid) == 0)
      ++rep.signals_without_programs;
  }

  // Union-find over junction nodes through edges.
  std::map<NodeId, NodeId> parent;
  for (const auto& [nid, p] : net.nodes) parent[nid] = nid;
  std::function<NodeId(NodeId)> find = [&](NodeId x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& [eid, e] : net.edges) {
    if (!parent.count(e.from) || !parent.count(e.to)) continue;
    parent[find(e.from)] = find(e.to);
  }
  std::set<NodeId> roots;
  for (const auto& [nid, p] : net.nodes) roots.insert(find(nid));
  if (roots.size() > 1) rep.disconnected_components = static_cast<int>(roots.size());

  return rep;
}

}  // namespace tsw
