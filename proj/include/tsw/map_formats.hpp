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

#include <string>
#include <utility>

#include "json.hpp"
#include "tsw/network.hpp"
#include "tsw/strings.hpp"
#include "tsw/xml.hpp"

// Simulator map formats: SUMO plain node/edge files, an OpenDRIVE 1.6 subset
// with piecewise-linear plan views, and a JSON scenario map that round-trips
// the full RoadNetwork. All exports are byte-stable for a given network.

namespace tsw {

/// SUMO plain XML: (nodes document, edges document) with deterministic
/// ordering by id and two-decimal canonical number formatting.
inline std::pair<std::string, std::string> export_sumo_plain(const RoadNetwork& net) {
  XmlElement nodes;
  nodes.name = "nodes";
  for (const auto& [id, p] : net.nodes) {
    XmlElement n;
    n.name = "node";
    n.set_attr("id", std::to_string(id));
    n.set_attr("x", fmt_fixed(p.x, 2));
    n.set_attr("y", fmt_fixed(p.y, 2));
    n.set_attr("type", net.signals.count(id) ? "traffic_light" : "priority");
    nodes.children.push_back(std::move(n));
  }
  XmlElement edges;
  edges.name = "edges";
  for (const auto& [id, e] : net.edges) {
    XmlElement x;
    x.name = "edge";
    x.set_attr("id", std::to_string(id));
    x.set_attr("from", std::to_string(e.from));
    x.set_attr("to", std::to_string(e.to));
    x.set_attr("numLanes", std::to_string(e.lanes.size()));
    x.set_attr("speed", fmt_fixed(e.speed_limit, 2));
    if (!e.vehicle_capable) x.set_attr("allow", "pedestrian bicycle");
    edges.children.push_back(std::move(x));
  }
  return {xml_write(nodes), xml_write(edges)};
}

/// OpenDRIVE 1.6 subset: one road per directed edge, plan view made of <line>
/// records with cumulative s-coordinates, lanes on the right of the reference
/// line. Geometry numbers use shortest round-trip formatting so segment
/// lengths re-parse exactly.
inline std::string export_opendrive_subset(const RoadNetwork& net) {
  XmlElement root;
  root.name = "OpenDRIVE";
  XmlElement header;
  header.name = "header";
  header.set_attr("revMajor", "1");
  header.set_attr("revMinor", "6");
  header.set_attr("name", "tsw");
  header.set_attr("version", "1.00");
  root.children.push_back(std::move(header));

  for (const auto& [id, e] : net.edges) {
    XmlElement road;
    road.name = "road";
    road.set_attr("name", e.road_class);
    road.set_attr("length", fmt_double(e.length));
    road.set_attr("id", std::to_string(id));
    road.set_attr("junction", "-1");

    XmlElement plan;
    plan.name = "planView";
    double s = 0.0;
    for (size_t i = 1; i < e.axis.size(); ++i) {
      Vec2 a = e.axis[i - 1], b = e.axis[i];
      double len = (b - a).norm();
      XmlElement geo;
      geo.name = "geometry";
      geo.set_attr("s", fmt_double(s));
      geo.set_attr("x", fmt_double(a.x));
      geo.set_attr("y", fmt_double(a.y));
      geo.set_attr("hdg", fmt_double((b - a).heading()));
      geo.set_attr("length", fmt_double(len));
      XmlElement line;
      line.name = "line";
      geo.children.push_back(std::move(line));
      plan.children.push_back(std::move(geo));
      s += len;
    }
    road.children.push_back(std::move(plan));

    XmlElement lanes;
    lanes.name = "lanes";
    XmlElement section;
    section.name = "laneSection";
    section.set_attr("s", "0");
    XmlElement center;
    center.name = "center";
    XmlElement lane0;
    lane0.name = "lane";
    lane0.set_attr("id", "0");
    lane0.set_attr("type", "none");
    lane0.set_attr("level", "false");
    center.children.push_back(std::move(lane0));
    section.children.push_back(std::move(center));

    XmlElement right;
    right.name = "right";
    int neg = -1;
    for (LaneId lid : e.lanes) {
      const Lane& l = net.lane(lid);
      XmlElement lane;
      lane.name = "lane";
      lane.set_attr("id", std::to_string(neg--));
      const char* type = "driving";
      if (!e.vehicle_capable)
        type = l.allowed.count(AgentClass::cyclist) ? "biking" : "sidewalk";
      lane.set_attr("type", type);
      lane.set_attr("level", "false");
      XmlElement width;
      width.name = "width";
      width.set_attr("sOffset", "0");
      width.set_attr("a", fmt_double(l.width));
      width.set_attr("b", "0");
      width.set_attr("c", "0");
      width.set_attr("d", "0");
      lane.children.push_back(std::move(width));
      right.children.push_back(std::move(lane));
    }
    section.children.push_back(std::move(right));
    lanes.children.push_back(std::move(section));
    road.children.push_back(std::move(lanes));
    root.children.push_back(std::move(road));
  }
  return xml_write(root);
}

namespace detail {

inline nlohmann::json points_json(const std::vector<Vec2>& pts) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : pts) arr.push_back({p.x, p.y});
  return arr;
}

inline std::vector<Vec2> points_from_json(const nlohmann::json& arr) {
  std::vector<Vec2> pts;
  for (const auto& p : arr) pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  return pts;
}

}  // namespace detail

/// Scenario map JSON: lane centers, boundaries, crosswalks and signal programs
/// under "map_features", plus the edge/node tables needed to reconstruct the
/// exact RoadNetwork. Ids are stable across exports.
inline nlohmann::json export_scenario_json(const RoadNetwork& net) {
  nlohmann::json doc;
  doc["format"] = "tsw-map";
  doc["version"] = 1;
  doc["projection_origin"] = {{"lat", net.origin.lat}, {"lon", net.origin.lon}};

  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& [id, p] : net.nodes)
    nodes.push_back({{"id", id}, {"x", p.x}, {"y", p.y}});
  doc["nodes"] = nodes;

  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [id, e] : net.edges) {
    edges.push_back({{"id", id},
                     {"from", e.from},
                     {"to", e.to},
                     {"lanes", e.lanes},
                     {"speed_limit", e.speed_limit},
                     {"priority", e.priority},
                     {"class", e.road_class},
                     {"vehicle", e.vehicle_capable},
                     {"way", e.way},
                     {"axis", detail::points_json(e.axis)}});
  }
  doc["edges"] = edges;

  nlohmann::json features = nlohmann::json::array();
  for (const auto& [id, l] : net.lanes) {
    nlohmann::json allowed = nlohmann::json::array();
    for (AgentClass c : l.allowed) allowed.push_back(agent_class_name(c));
    features.push_back({{"type", "lane_center"},
                        {"id", id},
                        {"edge", l.edge},
                        {"index", l.index},
                        {"width", l.width},
                        {"allowed", allowed},
                        {"points", detail::points_json(l.centerline)}});
  }
  for (const auto& b : net.boundaries) {
    features.push_back({{"type", "boundary"},
                        {"kind", b.kind == BoundaryKind::lane_line ? "lane_line" : "road_boundary"},
                        {"points", detail::points_json(b.pts)}});
  }
  nlohmann::json crosswalks = nlohmann::json::array();
  for (const auto& c : net.crosswalks) {
    nlohmann::json poly = nlohmann::json::array();
    for (const auto& p : c.polygon) poly.push_back({p.x, p.y});
    crosswalks.push_back({{"type", "crosswalk"}, {"junction", c.junction}, {"polygon", poly}});
  }
  doc["crosswalks"] = crosswalks;
  for (const auto& c : crosswalks) features.push_back(c);
  for (const auto& [nid, prog] : net.signals) {
    nlohmann::json phases = nlohmann::json::array();
    for (const auto& ph : prog.phases)
      phases.push_back({{"duration_s", ph.duration_s}, {"green", ph.green}});
    features.push_back(
        {{"type", "signal"}, {"node", nid}, {"cycle_s", prog.cycle_s}, {"phases", phases}});
  }
  doc["map_features"] = features;
  return doc;
}

inline RoadNetwork import_scenario_json(const nlohmann::json& doc) {
  require(doc.value("format", "") == "tsw-map", Errc::config_error, "not a tsw-map document");
  RoadNetwork net;
  net.origin = {doc.at("projection_origin").at("lat").get<double>(),
                doc.at("projection_origin").at("lon").get<double>()};
  for (const auto& n : doc.at("nodes")) {
    net.nodes[n.at("id").get<NodeId>()] = {n.at("x").get<double>(), n.at("y").get<double>()};
  }
  for (const auto& j : doc.at("edges")) {
    Edge e;
    e.id = j.at("id").get<EdgeId>();
    e.from = j.at("from").get<NodeId>();
    e.to = j.at("to").get<NodeId>();
    e.lanes = j.at("lanes").get<std::vector<LaneId>>();
    e.speed_limit = j.at("speed_limit").get<double>();
    e.priority = j.at("priority").get<int>();
    e.road_class = j.at("class").get<std::string>();
    e.vehicle_capable = j.at("vehicle").get<bool>();
    e.way = j.at("way").get<WayId>();
    e.axis = detail::points_from_json(j.at("axis"));
    e.length = polyline_length(e.axis);
    net.edges[e.id] = std::move(e);
  }
  for (const auto& f : doc.at("map_features")) {
    std::string type = f.at("type").get<std::string>();
    if (type == "lane_center") {
      Lane l;
      l.id = f.at("id").get<LaneId>();
      l.edge = f.at("edge").get<EdgeId>();
      l.index = f.at("index").get<int>();
      l.width = f.at("width").get<double>();
      for (const auto& a : f.at("allowed")) l.allowed.insert(agent_class_from(a.get<std::string>()));
      l.centerline = detail::points_from_json(f.at("points"));
      l.length = polyline_length(l.centerline);
      net.lanes[l.id] = std::move(l);
    } else if (type == "boundary") {
      Boundary b;
      b.kind = f.at("kind").get<std::string>() == "lane_line" ? BoundaryKind::lane_line
                                                              : BoundaryKind::road_boundary;
      b.pts = detail::points_from_json(f.at("points"));
      net.boundaries.push_back(std::move(b));
    } else if (type == "crosswalk") {
      Crosswalk c;
      c.junction = f.at("junction").get<NodeId>();
      const auto& poly = f.at("polygon");
      for (size_t i = 0; i < 4; ++i)
        c.polygon[i] = {poly.at(i).at(0).get<double>(), poly.at(i).at(1).get<double>()};
      net.crosswalks.push_back(c);
    } else if (type == "signal") {
      SignalProgram prog;
      prog.cycle_s = f.at("cycle_s").get<double>();
      for (const auto& ph : f.at("phases")) {
        SignalPhase phase;
        phase.duration_s = ph.at("duration_s").get<double>();
        for (const auto& g : ph.at("green")) phase.green.insert(g.get<EdgeId>());
        prog.phases.push_back(std::move(phase));
      }
      net.signals[f.at("node").get<NodeId>()] = std::move(prog);
    }
  }
  net.rebuild_topology();
  return net;
}

}  // namespace tsw
