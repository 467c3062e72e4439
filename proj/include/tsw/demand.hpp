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
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "json.hpp"
#include "tsw/errors.hpp"
#include "tsw/network.hpp"
#include "tsw/rng.hpp"

// Traffic demand: either manually specified per-class levels or derived from
// observed segment speeds through the linear speed-density relation, then
// realized as a Poisson spawn schedule. Everything here is a pure function of
// its inputs (and the seed).

namespace tsw {

struct SegmentSpeed {
  EdgeId edge = 0;
  double v_obs = 0.0;   // m/s
  double v_free = 1.0;  // m/s
};

struct GreenshieldsParams {
  double k_jam_veh_km = 120.0;  // per lane

  void validate() const {
    require(k_jam_veh_km > 0.0 && k_jam_veh_km <= 300.0, Errc::domain_error,
            "jam density must be in (0, 300] veh/km");
  }
};

/// Linear speed-density relation: k = k_jam * (1 - v/v_free)  [veh/km].
inline double greenshields_density(double v_obs, double v_free, double k_jam_veh_km) {
  require(v_free > 0.0, Errc::domain_error, "free-flow speed must be positive");
  require(v_obs >= 0.0 && v_obs <= v_free, Errc::domain_error,
          "observed speed must be in [0, v_free]");
  return k_jam_veh_km * (1.0 - v_obs / v_free);
}

/// Fundamental relation q = k * v with km/h conversion  [veh/hour].
inline double flow_from_density(double k_veh_km, double v_obs) {
  require(k_veh_km >= 0.0, Errc::domain_error, "density must be non-negative");
  return k_veh_km * v_obs * 3.6;
}

struct DemandEntry {
  std::vector<EdgeId> route;  // connected edge sequence
  AgentClass cls = AgentClass::vehicle;
  double flow_per_hour = 0.0;
};

struct DemandTable {
  std::vector<DemandEntry> entries;
  int warnings = 0;  // feed fallbacks and clamps
};

struct SpawnEvent {
  double t = 0.0;
  AgentClass cls = AgentClass::vehicle;
  int route_index = 0;  // into DemandTable::entries
  double speed = 0.0;   // initial speed, m/s
};

struct SpawnEvents {
  std::vector<SpawnEvent> events;  // sorted by (t, route_index)
};

inline double class_default_speed(AgentClass cls) {
  switch (cls) {
    case AgentClass::vehicle: return 13.89;
    case AgentClass::cyclist: return 5.5;
    case AgentClass::pedestrian: return 1.4;
  }
  return 13.89;
}

namespace detail {

inline bool edge_admits(const Edge& e, const RoadNetwork& net, AgentClass cls) {
  for (LaneId lid : e.lanes)
    if (net.lane(lid).allowed.count(cls)) return true;
  return false;
}

/// Entry edges: no incoming edge of the class at the from-node other than the
/// edge's own opposite direction. Exits are symmetric.
inline bool is_entry_edge(const RoadNetwork& net, const Edge& e, AgentClass cls) {
  auto it = net.in_edges.find(e.from);
  if (it == net.in_edges.end()) return true;
  for (EdgeId in : it->second) {
    if (in == twin_edge_id(e.id)) continue;
    if (edge_admits(net.edge(in), net, cls)) return false;
  }
  return true;
}

inline bool is_exit_edge(const RoadNetwork& net, const Edge& e, AgentClass cls) {
  auto it = net.out_edges.find(e.to);
  if (it == net.out_edges.end()) return true;
  for (EdgeId out : it->second) {
    if (out == twin_edge_id(e.id)) continue;
    if (edge_admits(net.edge(out), net, cls)) return false;
  }
  return true;
}

}  // namespace detail

/// Shortest continuation from an entry edge to the nearest exit edge of the
/// class (Dijkstra over edges; ties resolve to smaller edge ids). Returns just
/// the entry edge when it is itself an exit or nothing is reachable.
inline std::vector<EdgeId> entry_route(const RoadNetwork& net, EdgeId entry, AgentClass cls) {
  if (detail::is_exit_edge(net, net.edge(entry), cls)) return {entry};
  std::map<EdgeId, double> cost;
  std::map<EdgeId, EdgeId> prev;
  using Item = std::pair<double, EdgeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  cost[entry] = net.edge(entry).length;
  pq.emplace(cost[entry], entry);
  while (!pq.empty()) {
    auto [c, eid] = pq.top();
    pq.pop();
    if (c > cost.at(eid)) continue;
    const Edge& e = net.edge(eid);
    if (eid != entry && detail::is_exit_edge(net, e, cls)) {
      std::vector<EdgeId> route{eid};
      EdgeId cur = eid;
      while (cur != entry) {
        cur = prev.at(cur);
        route.push_back(cur);
      }
      std::reverse(route.begin(), route.end());
      return route;
    }
    for (EdgeId next : net.successors(eid)) {
      if (!detail::edge_admits(net.edge(next), net, cls)) continue;
      double nc = c + net.edge(next).length;
      auto it = cost.find(next);
      if (it == cost.end() || nc < it->second - 1e-12 ||
          (nc < it->second + 1e-12 && eid < prev[next])) {
        cost[next] = nc;
        prev[next] = eid;
        pq.emplace(nc, next);
      }
    }
  }
  return {entry};
}

/// All entry-rooted routes for a class, ordered by entry edge id.
inline std::vector<std::vector<EdgeId>> entry_routes(const RoadNetwork& net, AgentClass cls) {
  std::vector<std::vector<EdgeId>> routes;
  for (const auto& [eid, e] : net.edges) {
    if (!detail::edge_admits(e, net, cls)) continue;
    if (cls == AgentClass::vehicle && !e.vehicle_capable) continue;
    if (!detail::is_entry_edge(net, e, cls)) continue;
    routes.push_back(entry_route(net, eid, cls));
  }
  return routes;
}

struct DemandOptions {
  double default_flow_veh_h_per_lane = 200.0;  // fallback when the feed misses an edge
  double pedestrian_fraction = 0.10;           // of mean vehicle entry flow
  double cyclist_fraction = 0.05;
};

/// Data-informed demand: per-entry-edge vehicle flow from the speed feed via
/// density and the fundamental relation, scaled by lane count; walking and
/// cycling demand as configured fractions of the mean vehicle flow. Each entry
/// edge roots one route to the nearest exit, carrying the edge's whole inflow
/// (a documented approximation of the od inversion).
inline DemandTable demand_from_speeds(const std::vector<SegmentSpeed>& speeds,
                                      const GreenshieldsParams& params, const RoadNetwork& net,
                                      const DemandOptions& opt = {}) {
  params.validate();
  DemandTable table;
  std::map<EdgeId, SegmentSpeed> feed;
  for (const SegmentSpeed& s : speeds) {
    require(net.edges.count(s.edge) > 0, Errc::unknown_edge,
            "speed feed references unknown edge " + std::to_string(s.edge));
    SegmentSpeed clamped = s;
    if (clamped.v_obs > clamped.v_free) {
      clamped.v_obs = clamped.v_free;
      ++table.warnings;
    }
    feed[s.edge] = clamped;
  }

  double vehicle_flow_sum = 0.0;
  int vehicle_routes = 0;
  for (auto& route : entry_routes(net, AgentClass::vehicle)) {
    const Edge& entry = net.edge(route.front());
    double flow;
    auto it = feed.find(entry.id);
    if (it != feed.end()) {
      double k = greenshields_density(it->second.v_obs, it->second.v_free, params.k_jam_veh_km);
      flow = flow_from_density(k, it->second.v_obs) * static_cast<double>(entry.lanes.size());
    } else {
      flow = opt.default_flow_veh_h_per_lane * static_cast<double>(entry.lanes.size());
      ++table.warnings;
    }
    vehicle_flow_sum += flow;
    ++vehicle_routes;
    table.entries.push_back({std::move(route), AgentClass::vehicle, flow});
  }

  double mean_vehicle = vehicle_routes > 0 ? vehicle_flow_sum / vehicle_routes : 0.0;
  for (auto& route : entry_routes(net, AgentClass::pedestrian))
    table.entries.push_back(
        {std::move(route), AgentClass::pedestrian, mean_vehicle * opt.pedestrian_fraction});
  for (auto& route : entry_routes(net, AgentClass::cyclist))
    table.entries.push_back(
        {std::move(route), AgentClass::cyclist, mean_vehicle * opt.cyclist_fraction});
  return table;
}

/// Manual demand: a per-class flow level applied to every entry route of that
/// class.
inline DemandTable manual_demand(const RoadNetwork& net,
                                 const std::map<AgentClass, double>& flows_per_entry) {
  DemandTable table;
  for (const auto& [cls, flow] : flows_per_entry) {
    require(flow >= 0.0 && std::isfinite(flow), Errc::config_error, "flow must be finite and >= 0");
    for (auto& route : entry_routes(net, cls))
      table.entries.push_back({std::move(route), cls, flow});
  }
  return table;
}

/// Homogeneous Poisson arrivals per route from the seeded stream; events
/// merged and sorted by time with ties broken by route index. Initial speed is
/// the entry speed limit capped at the class default.
inline SpawnEvents spawn_schedule(const DemandTable& d, double horizon_s, uint64_t seed,
                                  const RoadNetwork& net) {
  require(horizon_s > 0.0, Errc::domain_error, "horizon must be positive");
  SpawnEvents out;
  for (size_t i = 0; i < d.entries.size(); ++i) {
    const DemandEntry& entry = d.entries[i];
    if (entry.flow_per_hour <= 0.0) continue;
    double rate = entry.flow_per_hour / 3600.0;
    Rng rng(derive_seed(seed, "spawn", i));
    double speed =
        std::min(net.edge(entry.route.front()).speed_limit, class_default_speed(entry.cls));
    double t = rng.exponential(rate);
    while (t <= horizon_s) {
      out.events.push_back({t, entry.cls, static_cast<int>(i), speed});
      t += rng.exponential(rate);
    }
  }
  std::stable_sort(out.events.begin(), out.events.end(), [](const SpawnEvent& a, const SpawnEvent& b) {
    if (a.t != b.t) return a.t < b.t;
    return a.route_index < b.route_index;
  });
  return out;
}

inline nlohmann::json demand_to_json(const DemandTable& d) {
  nlohmann::json doc;
  doc["format"] = "tsw-demand";
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : d.entries) {
    entries.push_back({{"route", e.route},
                       {"class", agent_class_name(e.cls)},
                       {"flow_per_hour", e.flow_per_hour}});
  }
  doc["entries"] = entries;
  doc["warnings"] = d.warnings;
  return doc;
}

inline DemandTable demand_from_json(const nlohmann::json& doc, const RoadNetwork& net) {
  require(doc.value("format", "") == "tsw-demand", Errc::config_error, "not a tsw-demand document");
  DemandTable d;
  d.warnings = doc.value("warnings", 0);
  for (const auto& j : doc.at("entries")) {
    DemandEntry e;
    e.route = j.at("route").get<std::vector<EdgeId>>();
    require(!e.route.empty(), Errc::config_error, "demand entry with empty route");
    for (EdgeId eid : e.route) net.edge(eid);  // must exist
    for (size_t i = 1; i < e.route.size(); ++i) {
      require(net.edge(e.route[i]).from == net.edge(e.route[i - 1]).to, Errc::config_error,
              "demand route is not a connected edge sequence");
    }
    e.cls = agent_class_from(j.at("class").get<std::string>());
    e.flow_per_hour = j.at("flow_per_hour").get<double>();
    require(std::isfinite(e.flow_per_hour) && e.flow_per_hour >= 0.0, Errc::config_error,
            "demand flow must be finite and >= 0");
    d.entries.push_back(std::move(e));
  }
  return d;
}

/// Source of observed segment speeds. The file form reads the JSON schema
/// shipped with the project; a live HTTP form can be slotted in behind the
/// same interface.
class TrafficSpeedSource {
 public:
  virtual ~TrafficSpeedSource() = default;
  virtual std::vector<SegmentSpeed> fetch() = 0;
};

inline std::vector<SegmentSpeed> speeds_from_json(const nlohmann::json& doc) {
  std::vector<SegmentSpeed> out;
  for (const auto& s : doc.at("segments")) {
    out.push_back({s.at("edge_id").get<EdgeId>(), s.at("currentSpeed").get<double>(),
                   s.at("freeFlowSpeed").get<double>()});
  }
  return out;
}

class FileSpeedSource : public TrafficSpeedSource {
 public:
  explicit FileSpeedSource(std::string path) : path_(std::move(path)) {}

  std::vector<SegmentSpeed> fetch() override {
    std::ifstream f(path_);
    require(f.good(), Errc::io_error, "cannot open speed feed " + path_);
    nlohmann::json doc = nlohmann::json::parse(f);
    return speeds_from_json(doc);
  }

 private:
  std::string path_;
};

}  // namespace tsw
