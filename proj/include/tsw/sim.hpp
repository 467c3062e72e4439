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

#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "tsw/behavior.hpp"
#include "tsw/demand.hpp"
#include "tsw/orchestrator.hpp"
#include "tsw/world.hpp"

// Deterministic 10 Hz multi-agent microsimulation. Vehicles and cyclists
// car-follow along lane centerlines with incentive/safety lane changes;
// junction conflicts resolve by priority and first-in-first-out via virtual
// stopped leaders; pedestrians walk their routes and accept gaps at crossings.
// The adversity orchestrator runs once per step and attaches behavior
// overrides. Identical seeds give byte-identical trajectories.

namespace tsw {

struct SimOptions {
  BehaviorParams behavior;
  double ego_min_route_m = 200.0;  // ego = first spawned vehicle at least this long
  int global_adversity_cap = 1;
  double lookahead_m = 80.0;        // leader search horizon
  double conflict_zone_m = 20.0;    // FIFO stamp zone before a junction
  double conflict_window_s = 4.0;   // cross traffic counts when due within this window
  double conflict_margin_m = 3.0;   // virtual leader sits this far before the junction
  double stop_line_margin_m = 1.0;
  double collision_grace_s = 1.0;   // keep stepping this long after first impact
};

struct SimResult {
  TrajectorySet trajectories;
  AdversityLog adversity_log;
  PromptContext prompt_context;
  int spawned = 0;
  int despawned = 0;
  std::vector<CollisionEvent> collisions;
  double end_t = 0.0;
};

class Simulation {
 public:
  Simulation(const RoadNetwork& net, std::vector<AdversitySpec> specs, const SimOptions& opt,
             uint64_t seed)
      : net_(net),
        opt_(opt),
        orchestrator_(std::move(specs), derive_seed(seed, "adversity"), opt.global_adversity_cap),
        spawn_rng_(derive_seed(seed, "spawn-jitter")) {
    world_.net = &net_;
    orchestrator_.apply_statics(net_, world_, log_, prompt_context_);
  }

  /// Queue the realized spawn schedule of a demand table.
  void queue_spawns(const DemandTable& demand, const SpawnEvents& events) {
    for (const SpawnEvent& ev : events.events) {
      PendingSpawn p;
      p.t = ev.t;
      p.cls = ev.cls;
      p.speed = ev.speed;
      p.route = demand.entries[static_cast<size_t>(ev.route_index)].route;
      pending_.push_back(std::move(p));
    }
    std::stable_sort(pending_.begin(), pending_.end(),
                     [](const PendingSpawn& a, const PendingSpawn& b) { return a.t < b.t; });
  }

  /// Place an agent immediately (test and scenario tooling path).
  int64_t add_agent(const std::vector<EdgeId>& route, AgentClass cls, double speed,
                    bool force_ego = false) {
    int64_t id = spawn_agent(route, cls, speed);
    if (id >= 0 && force_ego) {
      world_.agents.at(id).is_ego = true;
      world_.ego_id = id;
    }
    return id;
  }

  WorldState& world() { return world_; }
  const RoadNetwork& network() const { return net_; }
  AdversityLog& log() { return log_; }
  const PromptContext& prompt_context() const { return prompt_context_; }

  /// One 0.1 s step: spawns, orchestration, sampling, decisions, integration,
  /// collision bookkeeping, despawns.
  void step_once() {
    process_spawns();
    expire_overrides();
    orchestrator_.step(world_, log_);
    sample_trajectories();

    // Decisions from an immutable snapshot, in agent-id order.
    std::map<int64_t, double> accel;
    std::map<int64_t, int> lane_change;
    for (const auto& [id, agent] : world_.agents) {
      if (agent.cls == AgentClass::pedestrian) continue;
      accel[id] = longitudinal_accel(agent);
      lane_change[id] = lateral_decision(agent);
    }

    double prev_ego_heading = current_ego_heading();

    for (auto& [id, agent] : world_.agents) {
      if (agent.cls == AgentClass::pedestrian) {
        integrate_pedestrian(agent);
      } else {
        if (auto lc = lane_change.find(id); lc != lane_change.end() && lc->second != 0)
          apply_lane_change(agent, lc->second);
        integrate_vehicle(agent, accel.at(id));
      }
    }

    world_.t += kSimDt;
    track_ego_heading(prev_ego_heading);
    update_fifo_stamps();
    detect_collisions();
    despawn_finished();
  }

  /// Run until the horizon (or one second past the first collision).
  SimResult run(double horizon_s) {
    require(horizon_s >= 10.0, Errc::domain_error, "horizon must be at least 10 s");
    double end = horizon_s;
    while (world_.t < end + kSimDt / 2) {
      step_once();
      if (!world_.collisions.empty())
        end = std::min(end, world_.collisions.front().t + opt_.collision_grace_s);
    }
    require(world_.ego_id >= 0, Errc::no_ego_candidate,
            "no spawned vehicle had a route of at least " + fmt_double(opt_.ego_min_route_m) +
                " m");
    SimResult result;
    result.trajectories = std::move(trajectories_);
    result.trajectories.ego_id = world_.ego_id;
    result.trajectories.duration_s = world_.t - kSimDt;
    result.adversity_log = std::move(log_);
    result.prompt_context = prompt_context_;
    result.spawned = spawned_;
    result.despawned = despawned_;
    result.collisions = world_.collisions;
    result.end_t = world_.t;
    return result;
  }

  int spawned_count() const { return spawned_; }
  int despawned_count() const { return despawned_; }

 private:
  struct PendingSpawn {
    double t = 0.0;
    AgentClass cls = AgentClass::vehicle;
    double speed = 0.0;
    std::vector<EdgeId> route;
  };

  struct Leader {
    double gap = std::numeric_limits<double>::infinity();
    double speed = 0.0;
    bool exists = false;

    void offer(double g, double v) {
      if (g < gap) {
        gap = g;
        speed = v;
        exists = true;
      }
    }
  };

  const Lane& agent_lane(const AgentState& a) const {
    const Edge& e = net_.edge(a.edge());
    return net_.lane(e.lanes.at(static_cast<size_t>(a.lane_index)));
  }

  double lane_len(const AgentState& a) const { return agent_lane(a).length; }

  // -- spawning -------------------------------------------------------------

  void process_spawns() {
    while (!pending_.empty() && pending_.front().t <= world_.t + 1e-9) {
      PendingSpawn p = pending_.front();
      pending_.pop_front();
      int64_t id = spawn_agent(p.route, p.cls, p.speed);
      if (id < 0) {
        // Entry blocked; retry next step.
        p.t = world_.t + kSimDt;
        blocked_.push_back(std::move(p));
        continue;
      }
    }
    for (auto& p : blocked_) pending_.push_front(std::move(p));
    blocked_.clear();
    std::stable_sort(pending_.begin(), pending_.end(),
                     [](const PendingSpawn& a, const PendingSpawn& b) { return a.t < b.t; });
  }

  int64_t spawn_agent(const std::vector<EdgeId>& route, AgentClass cls, double speed) {
    require(!route.empty(), Errc::config_error, "cannot spawn on an empty route");
    const Edge& entry = net_.edge(route.front());
    int lane_index = pick_entry_lane(entry, cls, speed);
    if (lane_index < 0) return -1;

    AgentState a;
    a.id = world_.next_agent_id++;
    a.cls = cls;
    a.route = route;
    a.route_pos = 0;
    a.lane_index = lane_index;
    a.dims = default_dims(cls);
    a.s = a.dims.length / 2.0;
    a.speed = speed;
    a.spawn_t = world_.t;
    const Lane& lane = net_.lane(entry.lanes.at(static_cast<size_t>(lane_index)));
    place_on_lane(a, lane);
    if (world_.ego_id < 0 && cls == AgentClass::vehicle &&
        net_.route_length(route) >= opt_.ego_min_route_m) {
      a.is_ego = true;
      world_.ego_id = a.id;
    }
    ++spawned_;
    world_.agents[a.id] = std::move(a);
    return world_.agents.rbegin()->first;
  }

  int pick_entry_lane(const Edge& entry, AgentClass cls, double speed) {
    const IdmParams& p = cls == AgentClass::cyclist ? opt_.behavior.cyclist : opt_.behavior.idm;
    double need = cls == AgentClass::pedestrian ? 1.0 : p.s0 + speed * p.T;
    int best = -1;
    double best_clear = -1.0;
    for (int li = static_cast<int>(entry.lanes.size()) - 1; li >= 0; --li) {
      const Lane& lane = net_.lane(entry.lanes.at(static_cast<size_t>(li)));
      if (!lane.allowed.count(cls)) continue;
      double clear = lane.length;
      for (const auto& [id, other] : world_.agents) {
        if (other.edge() != entry.id || other.lane_index != li) continue;
        clear = std::min(clear, other.s - other.dims.length / 2.0);
      }
      if (clear > best_clear) {
        best_clear = clear;
        best = li;
      }
      if (cls == AgentClass::cyclist && best >= 0) break;  // cyclists keep right
    }
    if (best < 0 || best_clear < need) return -1;
    return best;
  }

  // -- kinematics -----------------------------------------------------------

  void place_on_lane(AgentState& a, const Lane& lane) {
    Vec2 pos = polyline_point_at(lane.centerline, a.s);
    double heading = polyline_heading_at(lane.centerline, a.s);
    double lateral = a.lateral_offset + zigzag_offset(a);
    Vec2 n = Vec2{std::cos(heading), std::sin(heading)}.right_normal();
    a.x = pos.x + n.x * lateral;
    a.y = pos.y + n.y * lateral;
    a.heading = heading;
  }

  double zigzag_offset(const AgentState& a) const {
    auto it = world_.overrides.find(a.id);
    if (it == world_.overrides.end() || it->second.kind.type != BehaviorKindType::zigzag_drift)
      return 0.0;
    const ActiveOverride& ov = it->second;
    return ov.kind.amplitude_m *
           std::sin(2.0 * kPi * (world_.t - ov.t_start) / ov.kind.period_s);
  }

  // -- leader resolution ----------------------------------------------------

  /// Lane on `next` that best continues from the end of `lane`.
  int transition_lane_index(const Lane& lane, const Edge& next, AgentClass cls) const {
    Vec2 end = lane.centerline.back();
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t li = 0; li < next.lanes.size(); ++li) {
      const Lane& cand = net_.lane(next.lanes[li]);
      if (!cand.allowed.count(cls)) continue;
      double d = (cand.centerline.front() - end).norm();
      if (d < best_d - 1e-9) {
        best_d = d;
        best = static_cast<int>(li);
      }
    }
    return best;
  }

  /// Nearest same-direction traffic ahead within the lookahead, walking the
  /// route across edges. Gap is bumper-to-bumper.
  Leader real_leader(const AgentState& a) const {
    Leader leader;
    double base = 0.0;                 // distance from a.s to the start of the scanned lane
    double scan_s = a.s;               // only agents beyond this s count on the first lane
    int lane_index = a.lane_index;
    const double half_len = a.dims.length / 2.0;

    for (int rp = a.route_pos; rp < static_cast<int>(a.route.size()); ++rp) {
      const Edge& e = net_.edge(a.route[static_cast<size_t>(rp)]);
      if (lane_index < 0 || lane_index >= static_cast<int>(e.lanes.size())) lane_index = static_cast<int>(e.lanes.size()) - 1;
      const Lane& lane = net_.lane(e.lanes.at(static_cast<size_t>(lane_index)));
      for (const auto& [id, other] : world_.agents) {
        if (id == a.id || other.cls == AgentClass::pedestrian) continue;
        if (other.edge() != e.id || other.lane_index != lane_index) continue;
        double other_s = other.s;
        if (rp == a.route_pos && other_s <= scan_s) continue;
        double gap = base + other_s - a.s - (other.dims.length / 2.0 + half_len);
        if (gap > -0.5) leader.offer(std::max(gap, 0.05), other.speed);
      }
      base += lane.length;
      if (base - a.s > opt_.lookahead_m) break;
      if (rp + 1 < static_cast<int>(a.route.size())) {
        const Edge& next = net_.edge(a.route[static_cast<size_t>(rp + 1)]);
        lane_index = transition_lane_index(lane, next, a.cls);
        if (lane_index < 0) break;
      }
    }
    return leader;
  }

  /// Pedestrians physically on the agent's lane ahead act as stopped leaders.
  void offer_pedestrians(const AgentState& a, Leader& leader) const {
    const Lane& lane = agent_lane(a);
    double reach = std::min(lane.length, a.s + opt_.lookahead_m);
    for (const auto& [id, other] : world_.agents) {
      if (other.cls != AgentClass::pedestrian) continue;
      Vec2 p{other.x, other.y};
      double s_on_lane = polyline_project(lane.centerline, p);
      if (s_on_lane <= a.s || s_on_lane > reach) continue;
      double lateral = (p - polyline_point_at(lane.centerline, s_on_lane)).norm();
      if (lateral > (lane.width + other.dims.width) / 2.0) continue;
      double gap = s_on_lane - a.s - (a.dims.length + other.dims.length) / 2.0;
      leader.offer(std::max(gap, 0.05), 0.0);
    }
  }

  /// True when `a` must stage behind its junction: some conflicting approach
  /// holds priority or arrived first.
  bool must_yield_at_junction(const AgentState& a) const {
    if (a.on_last_edge()) return false;
    if (world_.has_override(a.id, BehaviorKindType::fail_to_yield)) return false;
    const Edge& e = net_.edge(a.edge());
    NodeId junction = e.to;
    EdgeId my_next = a.route[static_cast<size_t>(a.route_pos + 1)];

    for (const auto& [id, other] : world_.agents) {
      if (id == a.id || other.cls == AgentClass::pedestrian) continue;
      const Edge& oe = net_.edge(other.edge());
      bool approaching = oe.to == junction && other.edge() != a.edge();
      bool inside = oe.from == junction && other.s < other.dims.length / 2.0 + 6.0 &&
                    other.edge() != my_next;
      if (!approaching && !inside) continue;
      if (approaching) {
        // Merging into the same downstream edge is handled by car-following
        // once the other agent is a route leader; crossing still conflicts.
        double dist = net_.lane(oe.lanes.at(static_cast<size_t>(other.lane_index))).length - other.s;
        double due = dist / std::max(other.speed, 0.5);
        if (due > opt_.conflict_window_s && dist > opt_.conflict_zone_m) continue;
        if (!other_has_right_of_way(a, e, other, oe)) continue;
      }
      return true;
    }
    return false;
  }

  bool other_has_right_of_way(const AgentState& a, const Edge& ae, const AgentState& b,
                              const Edge& be) const {
    if (be.priority != ae.priority) return be.priority > ae.priority;
    if (b.approach_enter_t != a.approach_enter_t) return b.approach_enter_t < a.approach_enter_t;
    return b.id < a.id;
  }

  double longitudinal_accel(const AgentState& a) const {
    const IdmParams& p = a.cls == AgentClass::cyclist ? opt_.behavior.cyclist : opt_.behavior.idm;

    auto ov = world_.overrides.find(a.id);
    if (ov != world_.overrides.end()) {
      const ActiveOverride& o = ov->second;
      if (o.kind.type == BehaviorKindType::hard_brake) return -o.kind.decel;
      if (o.kind.type == BehaviorKindType::cyclist_blind_spot) return blind_spot_accel(a);
      if (o.kind.type == BehaviorKindType::cut_in && !o.lane_change_done)
        return cut_in_accel(a, p);
    }

    Leader leader = real_leader(a);
    offer_pedestrians(a, leader);

    const Lane& lane = agent_lane(a);
    double dist_to_end = lane.length - a.s;

    // Red signal: stopped virtual leader at the stop line.
    if (world_.signal_red_for(a.edge()) &&
        !world_.has_override(a.id, BehaviorKindType::run_red_light)) {
      leader.offer(std::max(dist_to_end - opt_.stop_line_margin_m - a.dims.length / 2.0, 0.05),
                   0.0);
    }

    // Junction conflicts: yield as if a stopped vehicle sat at the entry.
    if (dist_to_end < opt_.lookahead_m && must_yield_at_junction(a)) {
      leader.offer(std::max(dist_to_end - opt_.conflict_margin_m - a.dims.length / 2.0, 0.05),
                   0.0);
    }

    // Closed lane ahead (construction): stop before the zone unless a merge
    // happens first.
    for (const auto& z : world_.zones) {
      if (z.edge != a.edge() || !z.lane_indices.count(a.lane_index)) continue;
      if (a.s < z.start_s)
        leader.offer(std::max(z.start_s - a.s - a.dims.length / 2.0, 0.05), 0.0);
    }

    double gap = leader.exists ? leader.gap : std::numeric_limits<double>::infinity();
    return idm_acceleration(a.speed, leader.speed, std::max(gap, 0.05), p);
  }

  /// Chase acceleration while a cut-in adversary positions itself ahead of the
  /// ego; full IDM once the slot is reached (the change itself happens in the
  /// lateral pass).
  double cut_in_accel(const AgentState& a, const IdmParams& p) const {
    const AgentState* ego = world_.ego();
    if (ego == nullptr) return idm_acceleration(a.speed, 0.0, 1e9, p);
    Leader leader = real_leader(a);
    double gap = leader.exists ? leader.gap : std::numeric_limits<double>::infinity();
    double free = idm_acceleration(a.speed, leader.speed, std::max(gap, 0.05), p);
    return std::min(free + 0.5, static_cast<double>(p.a_max));
  }

  /// Hold station in the ego's right-rear blind spot, then roll straight on.
  double blind_spot_accel(const AgentState& a) const {
    const AgentState* ego = world_.ego();
    if (ego == nullptr) return 0.0;
    if (ego_turning_right_) {
      // Proceed: free cycling acceleration, conflicts ignored.
      return idm_acceleration(a.speed, 0.0, 1e9, opt_.behavior.cyclist);
    }
    double target = std::clamp(ego->speed, 0.0, opt_.behavior.cyclist.v0);
    return std::clamp((target - a.speed) / kSimDt, -opt_.behavior.cyclist.b,
                      opt_.behavior.cyclist.a_max);
  }

  // -- lateral --------------------------------------------------------------

  struct NeighborOnLane {
    bool found = false;
    double s = 0.0;
    double speed = 0.0;
    double length = 0.0;
    int64_t id = 0;
  };

  NeighborOnLane nearest_on_lane(const AgentState& a, int lane_index, bool ahead) const {
    NeighborOnLane best;
    for (const auto& [id, other] : world_.agents) {
      if (id == a.id || other.cls == AgentClass::pedestrian) continue;
      if (other.edge() != a.edge() || other.lane_index != lane_index) continue;
      bool is_ahead = other.s > a.s || (other.s == a.s && id < a.id);
      if (is_ahead != ahead) continue;
      if (!best.found || (ahead ? other.s < best.s : other.s > best.s)) {
        best = {true, other.s, other.speed, other.dims.length, id};
      }
    }
    return best;
  }

  int lateral_decision(const AgentState& a) const {
    if (a.cls != AgentClass::vehicle) return 0;
    const Edge& e = net_.edge(a.edge());
    if (e.lanes.size() < 2) return 0;

    auto ov = world_.overrides.find(a.id);
    if (ov != world_.overrides.end()) {
      if (ov->second.kind.type == BehaviorKindType::cut_in && !ov->second.lane_change_done)
        return cut_in_lateral(a, ov->second);
      return 0;  // other overrides pin the lane
    }

    if (world_.t - a.last_lane_change_t < opt_.behavior.lane_change.cooldown_s) return 0;

    // Mandatory merge out of a closed lane overrides the incentive test.
    for (const auto& z : world_.zones) {
      if (z.edge != a.edge() || !z.lane_indices.count(a.lane_index)) continue;
      if (a.s < z.end_s && z.start_s - a.s < opt_.lookahead_m) {
        for (int dir : {-1, +1}) {
          int target = a.lane_index + dir;
          if (target < 0 || target >= static_cast<int>(e.lanes.size())) continue;
          if (world_.lane_closed(e.id, target, std::max(a.s, z.start_s))) continue;
          if (change_is_safe(a, target)) return dir;
        }
        return 0;
      }
    }

    for (int dir : {-1, +1}) {  // left first
      int target = a.lane_index + dir;
      if (target < 0 || target >= static_cast<int>(e.lanes.size())) continue;
      const Lane& target_lane = net_.lane(e.lanes.at(static_cast<size_t>(target)));
      if (!target_lane.allowed.count(a.cls)) continue;
      if (world_.lane_closed(e.id, target, a.s)) continue;
      if (discretionary_change_accepted(a, target)) return dir;
    }
    return 0;
  }

  int cut_in_lateral(const AgentState& a, const ActiveOverride& o) const {
    const AgentState* ego = world_.ego();
    if (ego == nullptr || ego->edge() != a.edge()) return 0;
    int diff = ego->lane_index - a.lane_index;
    if (std::abs(diff) != 1) return 0;
    double lead = a.s - ego->s - (a.dims.length + ego->dims.length) / 2.0;
    if (lead < o.kind.target_gap_m * 0.5 || lead > o.kind.target_gap_m * 2.0) return 0;
    return diff > 0 ? +1 : -1;
  }

  bool change_is_safe(const AgentState& a, int target) const {
    NeighborOnLane nf = nearest_on_lane(a, target, false);
    if (!nf.found) return true;
    double gap = a.s - nf.s - (a.dims.length + nf.length) / 2.0;
    if (gap <= 0.2) return false;
    double induced = idm_acceleration(nf.speed, a.speed, std::max(gap, 0.05), opt_.behavior.idm);
    return induced >= -opt_.behavior.lane_change.b_safe;
  }

  bool discretionary_change_accepted(const AgentState& a, int target) const {
    const IdmParams& p = opt_.behavior.idm;
    auto gap_speed = [&](const NeighborOnLane& n, bool ahead) {
      double g = ahead ? n.s - a.s - (a.dims.length + n.length) / 2.0
                       : a.s - n.s - (a.dims.length + n.length) / 2.0;
      return std::max(g, 0.05);
    };

    NeighborOnLane cur_lead = nearest_on_lane(a, a.lane_index, true);
    NeighborOnLane tgt_lead = nearest_on_lane(a, target, true);
    NeighborOnLane tgt_follow = nearest_on_lane(a, target, false);
    NeighborOnLane cur_follow = nearest_on_lane(a, a.lane_index, false);

    double inf = std::numeric_limits<double>::infinity();
    double a_cur = idm_acceleration(a.speed, cur_lead.found ? cur_lead.speed : 0.0,
                                    cur_lead.found ? gap_speed(cur_lead, true) : inf, p);
    double a_tgt = idm_acceleration(a.speed, tgt_lead.found ? tgt_lead.speed : 0.0,
                                    tgt_lead.found ? gap_speed(tgt_lead, true) : inf, p);

    FollowerImpact new_follower, old_follower;
    if (tgt_follow.found) {
      new_follower.exists = true;
      double before_gap = tgt_lead.found
                              ? tgt_lead.s - tgt_follow.s - (tgt_lead.length + tgt_follow.length) / 2.0
                              : inf;
      new_follower.a_before = idm_acceleration(
          tgt_follow.speed, tgt_lead.found ? tgt_lead.speed : 0.0, std::max(before_gap, 0.05), p);
      new_follower.a_after =
          idm_acceleration(tgt_follow.speed, a.speed, gap_speed(tgt_follow, false), p);
      if (gap_speed(tgt_follow, false) <= 0.2) return false;
    }
    if (cur_follow.found) {
      old_follower.exists = true;
      old_follower.a_before =
          idm_acceleration(cur_follow.speed, a.speed, gap_speed(cur_follow, false), p);
      double after_gap = cur_lead.found
                             ? cur_lead.s - cur_follow.s - (cur_lead.length + cur_follow.length) / 2.0
                             : inf;
      old_follower.a_after = idm_acceleration(
          cur_follow.speed, cur_lead.found ? cur_lead.speed : 0.0, std::max(after_gap, 0.05), p);
    }

    LaneChangeDecision d =
        evaluate_lane_change(a_cur, a_tgt, new_follower, old_follower, opt_.behavior.lane_change);
    return d.accept;
  }

  void apply_lane_change(AgentState& a, int dir) {
    const Edge& e = net_.edge(a.edge());
    int target = a.lane_index + dir;
    if (target < 0 || target >= static_cast<int>(e.lanes.size())) return;
    const Lane& from = agent_lane(a);
    const Lane& to = net_.lane(e.lanes.at(static_cast<size_t>(target)));
    Vec2 from_pos = polyline_point_at(from.centerline, a.s);
    double new_s = polyline_project(to.centerline, from_pos);
    Vec2 to_pos = polyline_point_at(to.centerline, new_s);
    double heading = polyline_heading_at(to.centerline, new_s);
    Vec2 n = Vec2{std::cos(heading), std::sin(heading)}.right_normal();
    // Rendered pose blends from the old lateral position over the next 2 s.
    a.lateral_offset = (from_pos - to_pos).dot(n);
    a.lane_index = target;
    a.s = new_s;
    a.last_lane_change_t = world_.t;
    if (auto it = world_.overrides.find(a.id); it != world_.overrides.end() &&
                                               it->second.kind.type == BehaviorKindType::cut_in) {
      it->second.lane_change_done = true;
    }
  }

  // -- integration ----------------------------------------------------------

  void integrate_vehicle(AgentState& a, double accel) {
    a.speed = std::max(0.0, a.speed + accel * kSimDt);
    a.s += a.speed * kSimDt;

    // Lateral blend decay: full lane width in the configured cooldown time.
    double decay = agent_lane(a).width * kSimDt / opt_.behavior.lane_change.cooldown_s;
    if (std::abs(a.lateral_offset) <= decay) a.lateral_offset = 0.0;
    else a.lateral_offset -= decay * (a.lateral_offset > 0 ? 1.0 : -1.0);

    while (a.s > lane_len(a)) {
      if (a.on_last_edge()) {
        finished_.push_back(a.id);
        break;
      }
      double rest = a.s - lane_len(a);
      const Lane& cur = agent_lane(a);
      const Edge& next = net_.edge(a.route[static_cast<size_t>(a.route_pos + 1)]);
      int next_lane = transition_lane_index(cur, next, a.cls);
      if (next_lane < 0) {
        finished_.push_back(a.id);
        break;
      }
      a.route_pos++;
      a.lane_index = next_lane;
      a.s = rest;
      a.approach_enter_t = std::numeric_limits<double>::infinity();
    }
    place_on_lane(a, agent_lane(a));
  }

  void integrate_pedestrian(AgentState& a) {
    double speed = opt_.behavior.pedestrian_speed;
    bool dash = world_.has_override(a.id, BehaviorKindType::pedestrian_dash);
    if (dash) {
      auto& ov = world_.overrides.at(a.id);
      speed *= ov.kind.speed_multiplier;
    }
    a.waiting_at_crossing = !dash && pedestrian_should_wait(a);
    a.speed = a.waiting_at_crossing ? 0.0 : speed;
    a.s += a.speed * kSimDt;
    while (a.s > lane_len(a)) {
      if (a.on_last_edge()) {
        finished_.push_back(a.id);
        break;
      }
      double rest = a.s - lane_len(a);
      const Lane& cur = agent_lane(a);
      const Edge& next = net_.edge(a.route[static_cast<size_t>(a.route_pos + 1)]);
      int next_lane = transition_lane_index(cur, next, a.cls);
      if (next_lane < 0) {
        finished_.push_back(a.id);
        break;
      }
      a.route_pos++;
      a.lane_index = next_lane;
      a.s = rest;
    }
    place_on_lane(a, agent_lane(a));
  }

  /// Wait at the junction side until no vehicle is due within the acceptance
  /// gap, or a signal holds the crossing traffic.
  bool pedestrian_should_wait(const AgentState& a) const {
    double to_end = lane_len(a) - a.s;
    if (to_end > 2.0 || a.on_last_edge()) return false;
    NodeId junction = net_.edge(a.edge()).to;

    auto in_it = net_.in_edges.find(junction);
    if (in_it == net_.in_edges.end()) return false;
    bool any_vehicle_edge = false;
    for (EdgeId eid : in_it->second) {
      const Edge& e = net_.edge(eid);
      if (!e.vehicle_capable) continue;
      any_vehicle_edge = true;
      if (world_.signal_red_for(eid)) continue;  // held: safe to walk in front of it
      for (const auto& [id, other] : world_.agents) {
        if (other.cls == AgentClass::pedestrian || other.edge() != eid) continue;
        double dist = net_.lane(e.lanes.at(static_cast<size_t>(other.lane_index))).length - other.s;
        double due = dist / std::max(other.speed, 0.3);
        if (due < opt_.behavior.pedestrian_gap_accept_s) return true;
      }
    }
    (void)any_vehicle_edge;
    return false;
  }

  // -- bookkeeping ----------------------------------------------------------

  void sample_trajectories() {
    for (const auto& [id, a] : world_.agents) {
      AgentTrack& track = trajectories_.tracks[id];
      if (track.samples.empty()) {
        track.id = id;
        track.cls = a.cls;
        track.dims = a.dims;
        track.is_ego = a.is_ego;
      }
      track.is_ego = track.is_ego || a.is_ego;
      track.samples.push_back({world_.t, a.x, a.y, a.heading, a.speed});
    }
    if (world_.ego_id >= 0) trajectories_.ego_id = world_.ego_id;
    trajectories_.duration_s = world_.t;
  }

  void expire_overrides() {
    for (auto it = world_.overrides.begin(); it != world_.overrides.end();) {
      bool gone = world_.agents.count(it->second.agent) == 0;
      if (gone || world_.t >= it->second.t_end - 1e-9) {
        orchestrator_.release(it->second.spec_id);
        it = world_.overrides.erase(it);
      } else {
        ++it;
      }
    }
  }

  void update_fifo_stamps() {
    for (auto& [id, a] : world_.agents) {
      if (a.cls == AgentClass::pedestrian) continue;
      double to_end = lane_len(a) - a.s;
      if (to_end < opt_.conflict_zone_m &&
          a.approach_enter_t == std::numeric_limits<double>::infinity()) {
        a.approach_enter_t = world_.t;
      }
    }
  }

  void detect_collisions() {
    std::vector<const AgentState*> cuboids;
    for (const auto& [id, a] : world_.agents)
      if (a.cls != AgentClass::pedestrian) cuboids.push_back(&a);
    for (size_t i = 0; i < cuboids.size(); ++i) {
      for (size_t j = i + 1; j < cuboids.size(); ++j) {
        const AgentState& a = *cuboids[i];
        const AgentState& b = *cuboids[j];
        if (std::hypot(a.x - b.x, a.y - b.y) > (a.dims.length + b.dims.length)) continue;
        if (obb_overlap(a.footprint(), b.footprint()))
          world_.collisions.push_back({world_.t, a.id, b.id});
      }
    }
    // Pedestrian impacts also end the episode.
    for (const auto& [id, a] : world_.agents) {
      if (a.cls != AgentClass::pedestrian) continue;
      for (const AgentState* v : cuboids) {
        if (std::hypot(a.x - v->x, a.y - v->y) > 5.0) continue;
        if (obb_overlap(a.footprint(), v->footprint()))
          world_.collisions.push_back({world_.t, std::min(a.id, v->id), std::max(a.id, v->id)});
      }
    }
  }

  void despawn_finished() {
    for (int64_t id : finished_) {
      auto it = world_.agents.find(id);
      if (it == world_.agents.end()) continue;
      if (auto ov = world_.overrides.find(id); ov != world_.overrides.end()) {
        orchestrator_.release(ov->second.spec_id);
        world_.overrides.erase(ov);
      }
      world_.agents.erase(it);
      ++despawned_;
    }
    finished_.clear();
  }

  double current_ego_heading() const {
    const AgentState* ego = world_.ego();
    return ego ? ego->heading : 0.0;
  }

  void track_ego_heading(double prev) {
    const AgentState* ego = world_.ego();
    if (ego == nullptr) {
      ego_turning_right_ = false;
      return;
    }
    double rate = wrap_angle(ego->heading - prev) / kSimDt;
    // Sticky: once the turn starts, the blind-spot release stays open.
    if (rate < -0.15) ego_turning_right_ = true;
  }

  const RoadNetwork& net_;
  SimOptions opt_;
  WorldState world_;
  Orchestrator orchestrator_;
  Rng spawn_rng_;
  AdversityLog log_;
  PromptContext prompt_context_;
  TrajectorySet trajectories_;
  std::deque<PendingSpawn> pending_;
  std::vector<PendingSpawn> blocked_;
  std::vector<int64_t> finished_;
  int spawned_ = 0;
  int despawned_ = 0;
  bool ego_turning_right_ = false;
};

/// End-to-end simulation: realize the demand, step with the orchestrator, and
/// return the 10 Hz trajectory log plus the adversity log.
inline SimResult simulate(const RoadNetwork& net, const DemandTable& demand,
                          std::vector<AdversitySpec> adversities, double horizon_s, uint64_t seed,
                          const SimOptions& opt = {}) {
  Simulation sim(net, std::move(adversities), opt, seed);
  SpawnEvents events = spawn_schedule(demand, horizon_s, derive_seed(seed, "demand-realization"),
                                      net);
  sim.queue_spawns(demand, events);
  return sim.run(horizon_s);
}

}  // namespace tsw
