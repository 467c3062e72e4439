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
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tsw/adversity.hpp"
#include "tsw/geometry.hpp"
#include "tsw/network.hpp"
#include "tsw/strings.hpp"

namespace tsw {

inline constexpr double kSimDt = 0.1;  // 10 Hz step and trajectory sample period

struct AgentDims {
  double length = 4.5;
  double width = 1.8;
  double height = 1.5;
};

inline AgentDims default_dims(AgentClass cls) {
  switch (cls) {
    case AgentClass::vehicle: return {4.5, 1.8, 1.5};
    case AgentClass::cyclist: return {1.8, 0.6, 1.7};
    case AgentClass::pedestrian: return {0.5, 0.5, 1.75};
  }
  return {};
}

struct AgentState {
  int64_t id = 0;
  AgentClass cls = AgentClass::vehicle;
  double x = 0.0, y = 0.0;
  double heading = 0.0;  // radians CCW from +x
  double speed = 0.0;    // m/s, >= 0
  AgentDims dims;
  bool is_ego = false;

  // Lane-frame position: vehicles and cyclists track lane + longitudinal s;
  // pedestrians use s along their (single-lane) walkway edges.
  std::vector<EdgeId> route;
  int route_pos = 0;
  int lane_index = 0;
  double s = 0.0;

  double spawn_t = 0.0;
  double last_lane_change_t = -1e9;
  double lateral_offset = 0.0;   // rendered offset from the lane centerline
  double approach_enter_t = std::numeric_limits<double>::infinity();  // junction FIFO stamp
  bool waiting_at_crossing = false;

  EdgeId edge() const { return route[static_cast<size_t>(route_pos)]; }
  bool on_last_edge() const { return route_pos + 1 >= static_cast<int>(route.size()); }

  Obb2 footprint() const {
    return {{x, y}, heading, dims.length / 2.0, dims.width / 2.0};
  }
};

struct ActiveOverride {
  std::string spec_id;
  BehaviorKind kind;
  int64_t agent = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  bool lane_change_done = false;  // cut_in fires once
};

struct CollisionEvent {
  double t = 0.0;
  int64_t agent_a = 0;
  int64_t agent_b = 0;
};

struct ConstructionZoneState {
  EdgeId edge = 0;
  std::set<int> lane_indices;
  double start_s = 0.0;
  double end_s = 0.0;
  std::vector<Vec2> cones;  // cone cuboid centers, 0.4 x 0.4 x 0.7 m
};

struct WorldState {
  double t = 0.0;
  const RoadNetwork* net = nullptr;
  std::map<int64_t, AgentState> agents;  // deterministic id order
  int64_t ego_id = -1;
  int64_t next_agent_id = 1;

  std::map<int64_t, ActiveOverride> overrides;  // by agent id
  std::vector<ConstructionZoneState> zones;
  std::vector<CollisionEvent> collisions;

  const AgentState* ego() const {
    auto it = agents.find(ego_id);
    return it == agents.end() ? nullptr : &it->second;
  }

  bool has_override(int64_t agent, BehaviorKindType type) const {
    auto it = overrides.find(agent);
    return it != overrides.end() && it->second.kind.type == type;
  }

  /// Signal state for an approach edge: red when a program at the edge's end
  /// node does not list it green in the current phase.
  bool signal_red_for(EdgeId approach) const {
    const Edge& e = net->edge(approach);
    auto it = net->signals.find(e.to);
    if (it == net->signals.end()) return false;
    return !it->second.is_green(approach, t);
  }

  bool lane_closed(EdgeId edge, int lane_index, double s) const {
    for (const auto& z : zones) {
      if (z.edge == edge && z.lane_indices.count(lane_index) && s >= z.start_s && s <= z.end_s)
        return true;
    }
    return false;
  }
};

/// Bearing of an agent as seen from the ego, degrees clockwise from the ego's
/// forward axis, in [0, 360).
inline double relative_bearing_deg(const AgentState& ego, const AgentState& agent) {
  double world = std::atan2(agent.y - ego.y, agent.x - ego.x);
  return wrap_deg360(rad2deg(ego.heading - world));
}

inline std::string bearing_sector_name(double bearing_cw_deg) {
  double b = wrap_deg360(bearing_cw_deg);
  if (b < 22.5 || b >= 337.5) return "front";
  if (b < 67.5) return "front-right";
  if (b < 112.5) return "right";
  if (b < 157.5) return "rear-right";
  if (b < 202.5) return "rear";
  if (b < 247.5) return "rear-left";
  if (b < 292.5) return "left";
  return "front-left";
}

// ---------------------------------------------------------------------------
// Trajectory log: 10 Hz samples per agent from spawn to exit.
// ---------------------------------------------------------------------------

struct TrajectorySample {
  double t = 0.0;
  double x = 0.0, y = 0.0;
  double heading = 0.0;
  double speed = 0.0;
};

struct AgentTrack {
  int64_t id = 0;
  AgentClass cls = AgentClass::vehicle;
  AgentDims dims;
  bool is_ego = false;
  std::vector<TrajectorySample> samples;  // uniform 0.1 s spacing

  double t_begin() const { return samples.empty() ? 0.0 : samples.front().t; }
  double t_end() const { return samples.empty() ? 0.0 : samples.back().t; }
};

struct TrajectorySet {
  std::map<int64_t, AgentTrack> tracks;
  int64_t ego_id = -1;
  double duration_s = 0.0;

  /// Pose linearly interpolated inside a track; headings take the shorter arc.
  static TrajectorySample interpolate(const AgentTrack& track, double t) {
    const auto& ss = track.samples;
    require(!ss.empty() && t >= ss.front().t - 1e-9 && t <= ss.back().t + 1e-9,
            Errc::out_of_window, "time outside track range");
    if (t <= ss.front().t) return ss.front();
    if (t >= ss.back().t) return ss.back();
    size_t hi = static_cast<size_t>((t - ss.front().t) / kSimDt) + 1;
    if (hi >= ss.size()) hi = ss.size() - 1;
    while (ss[hi].t < t) ++hi;
    while (hi > 0 && ss[hi - 1].t > t) --hi;
    const TrajectorySample& a = ss[hi - 1];
    const TrajectorySample& b = ss[hi];
    double u = (t - a.t) / (b.t - a.t);
    TrajectorySample out;
    out.t = t;
    out.x = a.x + (b.x - a.x) * u;
    out.y = a.y + (b.y - a.y) * u;
    out.speed = a.speed + (b.speed - a.speed) * u;
    out.heading = a.heading + wrap_angle(b.heading - a.heading) * u;
    return out;
  }
};

/// One JSON record per (t, agent), ordered by time then agent id.
inline std::string trajectories_to_jsonl(const TrajectorySet& ts) {
  struct Row {
    double t;
    int64_t id;
    const AgentTrack* track;
    const TrajectorySample* sample;
  };
  std::vector<Row> rows;
  for (const auto& [id, track] : ts.tracks)
    for (const auto& s : track.samples) rows.push_back({s.t, id, &track, &s});
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.t != b.t) return a.t < b.t;
    return a.id < b.id;
  });
  std::string out;
  for (const Row& r : rows) {
    nlohmann::json j{{"t", r.t},
                     {"id", r.id},
                     {"class", agent_class_name(r.track->cls)},
                     {"x", r.sample->x},
                     {"y", r.sample->y},
                     {"heading", r.sample->heading},
                     {"speed", r.sample->speed},
                     {"length", r.track->dims.length},
                     {"width", r.track->dims.width},
                     {"height", r.track->dims.height},
                     {"is_ego", r.track->is_ego}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

inline TrajectorySet trajectories_from_jsonl(const std::string& text) {
  TrajectorySet ts;
  size_t start = 0;
  while (start < text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + start, end - start);
    start = end + 1;
    if (trim(line).empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    int64_t id = j.at("id").get<int64_t>();
    AgentTrack& track = ts.tracks[id];
    if (track.samples.empty()) {
      track.id = id;
      track.cls = agent_class_from(j.at("class").get<std::string>());
      track.dims = {j.at("length").get<double>(), j.at("width").get<double>(),
                    j.at("height").get<double>()};
      track.is_ego = j.at("is_ego").get<bool>();
      if (track.is_ego) ts.ego_id = id;
    }
    track.samples.push_back({j.at("t").get<double>(), j.at("x").get<double>(),
                             j.at("y").get<double>(), j.at("heading").get<double>(),
                             j.at("speed").get<double>()});
    ts.duration_s = std::max(ts.duration_s, track.samples.back().t);
  }
  return ts;
}

}  // namespace tsw
