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

#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"
#include "tsw/map_formats.hpp"
#include "tsw/network.hpp"
#include "tsw/osm.hpp"

using namespace tsw;
using Catch::Approx;

namespace {

// 100 m of longitude at the equator.
constexpr const char* kLon100m = "0.0008993";

std::string straight_way_xml(const std::string& way_tags) {
  return std::string(R"(<osm version="0.6">
    <node id="1" lat="0.0" lon="0.0"/>
    <node id="2" lat="0.0" lon=")") +
         kLon100m + R"("/>
    <way id="1"><nd ref="1"/><nd ref="2"/>)" + way_tags + R"(</way>
  </osm>)";
}

RoadNetwork build_straight(const std::string& way_tags, NetworkDefaults defaults = {}) {
  GeoGraph g = parse_osm(straight_way_xml(way_tags));
  return build_network(to_local_frame(g, {0.0, 0.0}), defaults);
}

RoadNetwork build_roundabout() {
  GeoGraph g = parse_osm(test::read_fixture("roundabout.osm"));
  return build_network(to_local_frame(g, {42.0, -83.7}));
}

bool networks_close(const RoadNetwork& a, const RoadNetwork& b, double tol) {
  if (a.nodes.size() != b.nodes.size() || a.edges.size() != b.edges.size() ||
      a.lanes.size() != b.lanes.size() || a.boundaries.size() != b.boundaries.size() ||
      a.crosswalks.size() != b.crosswalks.size() || a.signals.size() != b.signals.size()) {
    return false;
  }
  for (const auto& [id, p] : a.nodes) {
    auto it = b.nodes.find(id);
    if (it == b.nodes.end() || (p - it->second).norm() > tol) return false;
  }
  for (const auto& [id, e] : a.edges) {
    auto it = b.edges.find(id);
    if (it == b.edges.end()) return false;
    const Edge& o = it->second;
    if (e.from != o.from || e.to != o.to || e.lanes != o.lanes || e.priority != o.priority ||
        e.road_class != o.road_class || e.vehicle_capable != o.vehicle_capable ||
        std::abs(e.speed_limit - o.speed_limit) > tol || e.axis.size() != o.axis.size()) {
      return false;
    }
    for (size_t i = 0; i < e.axis.size(); ++i)
      if ((e.axis[i] - o.axis[i]).norm() > tol) return false;
  }
  for (const auto& [id, l] : a.lanes) {
    auto it = b.lanes.find(id);
    if (it == b.lanes.end()) return false;
    const Lane& o = it->second;
    if (l.edge != o.edge || l.index != o.index || l.allowed != o.allowed ||
        std::abs(l.width - o.width) > tol || l.centerline.size() != o.centerline.size()) {
      return false;
    }
    for (size_t i = 0; i < l.centerline.size(); ++i)
      if ((l.centerline[i] - o.centerline[i]).norm() > tol) return false;
  }
  for (const auto& [nid, prog] : a.signals) {
    auto it = b.signals.find(nid);
    if (it == b.signals.end() || prog.phases.size() != it->second.phases.size()) return false;
    for (size_t i = 0; i < prog.phases.size(); ++i) {
      if (prog.phases[i].green != it->second.phases[i].green ||
          std::abs(prog.phases[i].duration_s - it->second.phases[i].duration_s) > tol) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace

TEST_CASE("single one-way one-lane way: edge, lane on the axis, two road boundaries") {
  RoadNetwork net = build_straight(R"(<tag k="highway" v="residential"/><tag k="oneway" v="yes"/>)");
  REQUIRE(net.edges.size() == 1);
  const Edge& e = net.edges.begin()->second;
  CHECK(e.id == make_edge_id(1, 0, true));
  CHECK(e.length == Approx(100.0).epsilon(1e-4));
  REQUIRE(e.lanes.size() == 1);

  const Lane& lane = net.lane(e.lanes[0]);
  CHECK(lane.width == Approx(3.5));
  // Single lane sits exactly on the way axis.
  CHECK(std::abs(lane.centerline.front().y) < 1e-9);

  REQUIRE(net.boundaries.size() == 2);
  for (const auto& b : net.boundaries) {
    CHECK(b.kind == BoundaryKind::road_boundary);
    CHECK(std::abs(std::abs(b.pts.front().y) - 1.75) < 1e-9);
  }
  CHECK(net.boundaries[0].pts.front().y * net.boundaries[1].pts.front().y < 0.0);
}

TEST_CASE("bidirectional lanes=4 becomes two edges of two lanes each") {
  RoadNetwork net = build_straight(R"(<tag k="highway" v="residential"/><tag k="lanes" v="4"/>)");
  REQUIRE(net.edges.size() == 2);
  for (const auto& [id, e] : net.edges) CHECK(e.lanes.size() == 2);

  // Right-hand traffic: forward (eastbound) lanes south of the axis (y < 0).
  const Edge& fwd = net.edges.at(make_edge_id(1, 0, true));
  for (LaneId lid : fwd.lanes) CHECK(net.lane(lid).centerline.front().y < 0.0);
  const Edge& rev = net.edges.at(make_edge_id(1, 0, false));
  for (LaneId lid : rev.lanes) CHECK(net.lane(lid).centerline.front().y > 0.0);
  // Leftmost lane first in the direction of travel.
  CHECK(net.lane(fwd.lanes[0]).centerline.front().y >
        net.lane(fwd.lanes[1]).centerline.front().y);

  // 5 painted lines: 2 road boundaries and 3 separators.
  int road = 0, lane_lines = 0;
  for (const auto& b : net.boundaries)
    b.kind == BoundaryKind::road_boundary ? ++road : ++lane_lines;
  CHECK(road == 2);
  CHECK(lane_lines == 3);
}

TEST_CASE("left-hand traffic flips lane offsets") {
  NetworkDefaults lht;
  lht.right_hand_traffic = false;
  RoadNetwork net = build_straight(R"(<tag k="highway" v="residential"/><tag k="lanes" v="2"/>)", lht);
  const Edge& fwd = net.edges.at(make_edge_id(1, 0, true));
  CHECK(net.lane(fwd.lanes[0]).centerline.front().y > 0.0);  // eastbound keeps left (north)
}

TEST_CASE("default lane counts per class") {
  CHECK(build_straight(R"(<tag k="highway" v="residential"/><tag k="oneway" v="yes"/>)")
            .lanes.size() == 1);
  CHECK(build_straight(R"(<tag k="highway" v="primary"/><tag k="oneway" v="yes"/>)")
            .lanes.size() == 2);
  CHECK(build_straight(R"(<tag k="highway" v="motorway"/><tag k="oneway" v="yes"/>)")
            .lanes.size() == 3);
}

TEST_CASE("maxspeed tag parsing") {
  CHECK(parse_maxspeed("50").value() == Approx(50.0 / 3.6));
  CHECK(parse_maxspeed("50 km/h").value() == Approx(50.0 / 3.6));
  CHECK(parse_maxspeed("30 mph").value() == Approx(13.4112));
  CHECK_FALSE(parse_maxspeed("walk").has_value());
  RoadNetwork net =
      build_straight(R"(<tag k="highway" v="residential"/><tag k="maxspeed" v="30 mph"/>)");
  CHECK(net.edges.begin()->second.speed_limit == Approx(13.4112));
}

TEST_CASE("roundabout fixture: circulating edges outrank the approaches") {
  RoadNetwork net = build_roundabout();
  // Circle way 1 splits at the four entry nodes into four one-way edges.
  int circle_edges = 0;
  for (const auto& [id, e] : net.edges) {
    if (e.way == 1) {
      ++circle_edges;
      CHECK(e.priority == 10);
    } else {
      CHECK(e.priority == 2);
    }
  }
  CHECK(circle_edges == 4);
  // Approaches are bidirectional residential: two edges each.
  CHECK(net.edges.size() == 4 + 4 * 2);
  CHECK(validate_network(net).ok());
}

TEST_CASE("degenerate zero-length way is rejected") {
  const char* xml = R"(<osm version="0.6">
    <node id="1" lat="0.0" lon="0.0"/>
    <node id="2" lat="0.0" lon="0.0"/>
    <way id="1"><nd ref="1"/><nd ref="2"/><tag k="highway" v="residential"/></way>
  </osm>)";
  GeoGraph g = parse_osm(xml);
  try {
    build_network(to_local_frame(g, {0.0, 0.0}));
    FAIL("expected DegenerateGeometry");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::degenerate_geometry);
  }
}

TEST_CASE("projection rejects far-away points") {
  GeoGraph g = parse_osm(test::read_fixture("roundabout.osm"));
  CHECK_THROWS_AS(to_local_frame(g, {44.0, -83.7}), Error);
}

TEST_CASE("signal program groups opposite approaches and fills the cycle") {
  // 4-way junction with a signal at the center node.
  const char* xml = R"(<osm version="0.6">
    <node id="1" lat="0.0" lon="-0.0008993"/>
    <node id="2" lat="0.0" lon="0.0008993"/>
    <node id="3" lat="-0.0008993" lon="0.0"/>
    <node id="4" lat="0.0008993" lon="0.0"/>
    <node id="5" lat="0.0" lon="0.0"><tag k="highway" v="traffic_signals"/></node>
    <way id="1"><nd ref="1"/><nd ref="5"/><nd ref="2"/><tag k="highway" v="secondary"/></way>
    <way id="2"><nd ref="3"/><nd ref="5"/><nd ref="4"/><tag k="highway" v="residential"/></way>
  </osm>)";
  GeoGraph g = parse_osm(xml);
  REQUIRE(g.signals.count(5) == 1);
  RoadNetwork net = build_network(to_local_frame(g, {0.0, 0.0}));
  REQUIRE(net.signals.count(5) == 1);
  const SignalProgram& prog = net.signals.at(5);
  CHECK(prog.cycle_s == 60.0);
  REQUIRE(prog.phases.size() == 4);
  double total = 0.0;
  for (const auto& ph : prog.phases) total += ph.duration_s;
  CHECK(total == Approx(60.0));
  CHECK(prog.phases[0].duration_s == Approx(27.0));
  CHECK(prog.phases[1].green.empty());

  // East-west approaches in one group, north-south in the other.
  REQUIRE(prog.phases[0].green.size() == 2);
  REQUIRE(prog.phases[2].green.size() == 2);
  for (EdgeId eid : prog.phases[0].green) CHECK(net.edge(eid).way == 1);
  for (EdgeId eid : prog.phases[2].green) CHECK(net.edge(eid).way == 2);

  // Every approach appears in at least one green phase.
  std::set<EdgeId> covered;
  for (const auto& ph : prog.phases)
    covered.insert(ph.green.begin(), ph.green.end());
  for (const auto& [eid, e] : net.edges)
    if (e.to == 5 && e.vehicle_capable) CHECK(covered.count(eid) == 1);

  // Phase state lookup is cyclic.
  EdgeId ew = *prog.phases[0].green.begin();
  CHECK(prog.is_green(ew, 1.0));
  CHECK_FALSE(prog.is_green(ew, 28.0));   // all-red
  CHECK_FALSE(prog.is_green(ew, 40.0));   // cross traffic green
  CHECK(prog.is_green(ew, 61.0));
}

TEST_CASE("crosswalks appear where footways meet vehicle roads") {
  const char* xml = R"(<osm version="0.6">
    <node id="1" lat="0.0" lon="-0.0008993"/>
    <node id="2" lat="0.0" lon="0.0008993"/>
    <node id="3" lat="-0.0004497" lon="0.0"/>
    <node id="4" lat="0.0004497" lon="0.0"/>
    <node id="5" lat="0.0" lon="0.0"/>
    <way id="1"><nd ref="1"/><nd ref="5"/><nd ref="2"/><tag k="highway" v="residential"/></way>
    <way id="2"><nd ref="3"/><nd ref="5"/><nd ref="4"/><tag k="highway" v="footway"/></way>
  </osm>)";
  GeoGraph g = parse_osm(xml);
  RoadNetwork net = build_network(to_local_frame(g, {0.0, 0.0}));
  REQUIRE(net.crosswalks.size() == 1);
  CHECK(net.crosswalks[0].junction == 5);
  // Polygon spans the two-lane carriageway: roughly 7.6 m wide, 3 m deep.
  Vec2 a = net.crosswalks[0].polygon[0], b = net.crosswalks[0].polygon[1];
  CHECK((a - b).norm() == Approx(2 * 3.5 / 2.0 * 2 + 0.6).margin(0.2));
}

TEST_CASE("validate_network counts defects") {
  RoadNetwork net = build_roundabout();
  SECTION("valid fixture has all counts zero") {
    ValidationReport rep = validate_network(net);
    CHECK(rep.ok());
    CHECK(rep.disconnected_components == 0);
  }
  SECTION("duplicated lane reference is counted") {
    EdgeId first = net.edges.begin()->first;
    LaneId lid = net.edges.begin()->second.lanes[0];
    EdgeId second = std::next(net.edges.begin())->first;
    net.edges.at(second).lanes.push_back(lid);
    CHECK(validate_network(net).duplicate_lane_ids == 1);
  }
  SECTION("two disjoint subgraphs count as two components") {
    const char* xml = R"(<osm version="0.6">
      <node id="1" lat="0.0" lon="0.0"/><node id="2" lat="0.0" lon="0.0008993"/>
      <node id="3" lat="0.002" lon="0.0"/><node id="4" lat="0.002" lon="0.0008993"/>
      <way id="1"><nd ref="1"/><nd ref="2"/><tag k="highway" v="residential"/></way>
      <way id="2"><nd ref="3"/><nd ref="4"/><tag k="highway" v="residential"/></way>
    </osm>)";
    RoadNetwork two = build_network(to_local_frame(parse_osm(xml), {0.0, 0.0}));
    CHECK(validate_network(two).disconnected_components == 2);
  }
  SECTION("signal without a program is counted") {
    net.signals[999] = SignalProgram{};
    CHECK(validate_network(net).signals_without_programs == 1);
  }
}

TEST_CASE("sumo export shape and determinism") {
  RoadNetwork net = build_roundabout();
  auto [nodes_xml, edges_xml] = export_sumo_plain(net);
  CHECK(nodes_xml.find("<nodes>") != std::string::npos);
  CHECK(edges_xml.find("numLanes=\"1\"") != std::string::npos);
  CHECK(edges_xml.find("speed=\"13.89\"") != std::string::npos);

  auto [nodes2, edges2] = export_sumo_plain(net);
  CHECK(nodes_xml == nodes2);
  CHECK(edges_xml == edges2);

  // Two-node, one-edge network maps directly.
  RoadNetwork tiny =
      build_straight(R"(<tag k="highway" v="residential"/><tag k="oneway" v="yes"/>)");
  auto [tn, te] = export_sumo_plain(tiny);
  XmlElement nodes_doc = xml_parse(tn);
  XmlElement edges_doc = xml_parse(te);
  CHECK(nodes_doc.children.size() == 2);
  REQUIRE(edges_doc.children.size() == 1);
  CHECK(*edges_doc.children[0].attr("numLanes") == "1");
}

TEST_CASE("opendrive export: header, line geometries, cumulative s") {
  const char* xml = R"(<osm version="0.6">
    <node id="1" lat="0.0" lon="0.0"/>
    <node id="2" lat="0.0" lon="0.0008993"/>
    <node id="3" lat="0.0004497" lon="0.0017986"/>
    <way id="1"><nd ref="1"/><nd ref="2"/><nd ref="3"/><tag k="highway" v="residential"/>
      <tag k="oneway" v="yes"/></way>
  </osm>)";
  RoadNetwork net = build_network(to_local_frame(parse_osm(xml), {0.0, 0.0}));
  std::string xodr = export_opendrive_subset(net);
  XmlElement root = xml_parse(xodr);
  CHECK(root.name == "OpenDRIVE");
  REQUIRE(root.children.size() >= 2);
  CHECK(*root.children[0].attr("revMajor") == "1");
  CHECK(*root.children[0].attr("revMinor") == "6");

  const XmlElement& road = root.children[1];
  const XmlElement* plan = nullptr;
  for (const auto& c : road.children)
    if (c.name == "planView") plan = &c;
  REQUIRE(plan != nullptr);
  REQUIRE(plan->children.size() == 2);  // 3-vertex polyline -> 2 line records

  double s0 = 0, s1 = 0, len0 = 0, len1 = 0, road_len = 0;
  REQUIRE(parse_double(*road.attr("length"), road_len));
  REQUIRE(parse_double(*plan->children[0].attr("s"), s0));
  REQUIRE(parse_double(*plan->children[0].attr("length"), len0));
  REQUIRE(parse_double(*plan->children[1].attr("s"), s1));
  REQUIRE(parse_double(*plan->children[1].attr("length"), len1));
  CHECK(s0 == 0.0);
  CHECK(s1 == Approx(len0).margin(1e-9));          // s of the second record
  CHECK(len0 + len1 == Approx(road_len).margin(1e-9));  // additivity

  CHECK(export_opendrive_subset(net) == xodr);  // byte-stable
}

TEST_CASE("every export carries the full lane count") {
  RoadNetwork net = build_roundabout();
  int lane_total = net.total_lane_count();

  auto [nodes_xml, edges_xml] = export_sumo_plain(net);
  XmlElement edges_doc = xml_parse(edges_xml);
  int sumo_lanes = 0;
  for (const auto& e : edges_doc.children) {
    int64_t n = 0;
    REQUIRE(parse_i64(*e.attr("numLanes"), n));
    sumo_lanes += static_cast<int>(n);
  }
  CHECK(sumo_lanes == lane_total);

  XmlElement xodr = xml_parse(export_opendrive_subset(net));
  int xodr_lanes = 0;
  for (const auto& road : xodr.children) {
    if (road.name != "road") continue;
    for (const auto& lanes : road.children) {
      if (lanes.name != "lanes") continue;
      for (const auto& sec : lanes.children)
        for (const auto& side : sec.children)
          if (side.name == "right") xodr_lanes += static_cast<int>(side.children.size());
    }
  }
  CHECK(xodr_lanes == lane_total);

  nlohmann::json doc = export_scenario_json(net);
  int json_lanes = 0;
  for (const auto& f : doc.at("map_features"))
    if (f.at("type") == "lane_center") ++json_lanes;
  CHECK(json_lanes == lane_total);
}

TEST_CASE("scenario json round trip is the identity") {
  RoadNetwork net = build_roundabout();
  nlohmann::json doc = export_scenario_json(net);
  CHECK(doc.at("crosswalks").is_array());

  RoadNetwork back = import_scenario_json(doc);
  CHECK(networks_close(net, back, 1e-6));

  // Doubles survive exactly, so a re-export is byte-identical.
  CHECK(export_scenario_json(back).dump(2) == doc.dump(2));
}

TEST_CASE("scenario json of a single-lane network has one lane_center feature") {
  RoadNetwork tiny =
      build_straight(R"(<tag k="highway" v="residential"/><tag k="oneway" v="yes"/>)");
  nlohmann::json doc = export_scenario_json(tiny);
  int lane_centers = 0;
  size_t vertex_count = 0;
  for (const auto& f : doc.at("map_features")) {
    if (f.at("type") == "lane_center") {
      ++lane_centers;
      vertex_count = f.at("points").size();
    }
  }
  CHECK(lane_centers == 1);
  CHECK(vertex_count == 2);
  CHECK(doc.at("crosswalks").empty());
}
