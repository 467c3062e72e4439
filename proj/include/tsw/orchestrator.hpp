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

#include <limits>
#include <map>
#include <string>
#include <vector>

#include "tsw/adversity.hpp"
#include "tsw/world.hpp"

// Per-step adversity control: trigger evaluation in deterministic
// (spec id, agent id) order, importance-sampled activation, cooldowns, per-spec
// and global concurrency caps, and application of static adversities.

namespace tsw {

/// Time to collision between the ego and another agent: distance along the
/// ego's remaining route when the agent is on it, radial closing speed
/// otherwise; +inf when the gap is opening.
inline double ttc_to_ego(const WorldState& world, const AgentState& agent) {
  const AgentState* ego = world.ego();
  if (ego == nullptr || agent.id == world.ego_id) return std::numeric_limits<double>::infinity();

  double bumper = (ego->dims.length + agent.dims.length) / 2.0;
  // Route-based when the agent occupies an edge on the ego's remaining route.
  double along = 0.0;
  bool on_route = false;
  for (int i = ego->route_pos; i < static_cast<int>(ego->route.size()); ++i) {
    EdgeId eid = ego->route[static_cast<size_t>(i)];
    if (eid == agent.edge()) {
      double agent_s = agent.s;
      double gap = (i == ego->route_pos) ? agent_s - ego->s : along - ego->s + agent_s;
      if (i == ego->route_pos && agent_s < ego->s) break;  // behind on the same edge
      gap -= bumper;
      if (gap <= 0.0) return 0.0;
      double closing = ego->speed - agent.speed;
      return closing > 1e-6 ? gap / closing : std::numeric_limits<double>::infinity();
    }
    along += world.net->edge(eid).length;
    on_route = i - ego->route_pos < 8;
    if (!on_route) break;
  }
  // Radial fallback.
  Vec2 rel{agent.x - ego->x, agent.y - ego->y};
  double dist = rel.norm() - bumper;
  if (dist <= 0.0) return 0.0;
  Vec2 v_ego{ego->speed * std::cos(ego->heading), ego->speed * std::sin(ego->heading)};
  Vec2 v_agent{agent.speed * std::cos(agent.heading), agent.speed * std::sin(agent.heading)};
  double closing = (v_ego - v_agent).dot(rel.normalized());
  return closing > 1e-6 ? dist / closing : std::numeric_limits<double>::infinity();
}

inline bool evaluate_trigger(const TriggerExpr& expr, const WorldState& world,
                             const AgentState& agent) {
  switch (expr.op) {
    case TriggerExpr::Op::always:
      return true;
    case TriggerExpr::Op::and_:
      for (const auto& c : expr.args)
        if (!evaluate_trigger(c, world, agent)) return false;
      return true;
    case TriggerExpr::Op::or_:
      for (const auto& c : expr.args)
        if (evaluate_trigger(c, world, agent)) return true;
      return false;
    case TriggerExpr::Op::not_:
      return !evaluate_trigger(expr.args[0], world, agent);
    case TriggerExpr::Op::dist_to_ego_lt: {
      const AgentState* ego = world.ego();
      if (ego == nullptr) return false;
      return std::hypot(agent.x - ego->x, agent.y - ego->y) < expr.a;
    }
    case TriggerExpr::Op::ttc_to_ego_lt:
      return ttc_to_ego(world, agent) < expr.a;
    case TriggerExpr::Op::sim_time_in:
      return world.t >= expr.a && world.t <= expr.b;
    case TriggerExpr::Op::agent_on_edge:
      for (EdgeId e : expr.edges)
        if (agent.edge() == e) return true;
      return false;
    case TriggerExpr::Op::relative_bearing: {
      const AgentState* ego = world.ego();
      if (ego == nullptr) return false;
      double b = relative_bearing_deg(*ego, agent);
      double from = wrap_deg360(expr.a), to = wrap_deg360(expr.b);
      return from <= to ? (b >= from && b <= to) : (b >= from || b <= to);
    }
    case TriggerExpr::Op::signal_state: {
      auto it = world.net->signals.find(expr.node);
      if (it == world.net->signals.end()) return false;
      // Red for the node means some approach is currently held; we test the
      // phase the agent's own edge sees when it ends at the node.
      bool red = world.net->edge(agent.edge()).to == expr.node
                     ? world.signal_red_for(agent.edge())
                     : it->second.phase_at(world.t) % 2 == 1;  // interphase
      return (expr.color == "red") == red;
    }
    case TriggerExpr::Op::agent_class_is:
      return agent.cls == expr.cls;
  }
  return false;
}

/// Behavior override for a compatible agent; the simulator interprets the
/// override while it is active.
inline ActiveOverride apply_behavior(const AgentState& agent, const BehaviorKind& kind,
                                     const WorldState& world) {
  require(!kind.is_static(), Errc::domain_error, "static adversities do not attach to agents");
  require(agent.cls == behavior_agent_class(kind.type), Errc::incompatible_class,
          std::string(behavior_kind_name(kind.type)) + " requires class " +
              agent_class_name(behavior_agent_class(kind.type)));
  ActiveOverride ov;
  ov.kind = kind;
  ov.agent = agent.id;
  ov.t_start = world.t;
  ov.t_end = world.t + kind.duration_s;
  return ov;
}

struct PromptContext {
  std::vector<std::string> weather_tags;
  bool roadwork = false;
};

/// Static adversities: construction zones close lanes over an extent and
/// register cone cuboids at 4 m spacing; weather only annotates the prompt
/// context.
inline void apply_static(const BehaviorKind& kind, const RoadNetwork& net, WorldState& world,
                         PromptContext& prompts) {
  require(kind.is_static(), Errc::domain_error, "dynamic adversity passed to apply_static");
  if (kind.type == BehaviorKindType::weather) {
    prompts.weather_tags.push_back(kind.weather_tag);
    return;
  }
  const Edge& e = net.edge(kind.zone_edge);
  ConstructionZoneState zone;
  zone.edge = kind.zone_edge;
  zone.lane_indices = kind.zone_lanes;
  double extent = std::min(kind.zone_extent_m, e.length);
  zone.start_s = kind.zone_start_s >= 0.0 ? kind.zone_start_s
                                          : std::max(0.0, (e.length - extent) / 2.0);
  zone.end_s = std::min(e.length, zone.start_s + extent);
  for (int lane_index : zone.lane_indices) {
    require(lane_index >= 0 && lane_index < static_cast<int>(e.lanes.size()), Errc::config_error,
            "construction zone closes a lane the edge does not have");
    const Lane& lane = net.lane(e.lanes[static_cast<size_t>(lane_index)]);
    for (double s = zone.start_s; s <= zone.end_s + 1e-9; s += 4.0)
      zone.cones.push_back(polyline_point_at(lane.centerline, s));
  }
  world.zones.push_back(std::move(zone));
  prompts.roadwork = true;
}

/// Stateful per-episode controller. Owned by the simulation loop;
/// single-threaded mutation, deterministic ordering.
class Orchestrator {
 public:
  Orchestrator(std::vector<AdversitySpec> specs, uint64_t seed, int global_cap = 1)
      : specs_(std::move(specs)), rng_(seed), global_cap_(global_cap) {
    std::sort(specs_.begin(), specs_.end(),
              [](const AdversitySpec& a, const AdversitySpec& b) { return a.id < b.id; });
  }

  /// Apply all static specs once, before stepping.
  void apply_statics(const RoadNetwork& net, WorldState& world, AdversityLog& log,
                     PromptContext& prompts) {
    for (const auto& spec : specs_) {
      if (!spec.is_static()) continue;
      apply_static(spec.behavior, net, world, prompts);
      log.activations.push_back(
          {world.t, spec.id, -1, behavior_kind_name(spec.behavior.type), ""});
    }
  }

  /// One decision pass in (spec id, agent id) order. Expired overrides must be
  /// removed by the step loop before this runs.
  void step(WorldState& world, AdversityLog& log) {
    for (const auto& spec : specs_) {
      if (spec.is_static()) continue;
      AgentClass want = behavior_agent_class(spec.behavior.type);
      for (auto& [agent_id, agent] : world.agents) {
        if (agent.cls != want) continue;
        if (agent.is_ego) continue;  // adversaries are background traffic
        if (world.overrides.count(agent_id)) continue;
        if (active_dynamic_count(world) >= global_cap_) return;
        if (per_spec_active_[spec.id] >= spec.max_concurrent) break;
        double last = last_activation_.count(spec.id) ? last_activation_.at(spec.id) : -1e18;
        if (world.t < last + spec.cooldown_s) break;

        bool triggered = evaluate_trigger(spec.trigger, world, agent);
        if (!triggered) continue;
        ActivationSample sample = sample_activation(spec, true, rng_);
        log.decisions.push_back({world.t, spec.id, sample.activated, sample.factor});
        if (!sample.activated) continue;

        ActiveOverride ov = apply_behavior(agent, spec.behavior, world);
        ov.spec_id = spec.id;
        world.overrides[agent_id] = ov;
        last_activation_[spec.id] = world.t;
        ++per_spec_active_[spec.id];
        std::string bearing;
        if (const AgentState* ego = world.ego())
          bearing = bearing_sector_name(relative_bearing_deg(*ego, agent));
        log.activations.push_back(
            {world.t, spec.id, agent_id, behavior_kind_name(spec.behavior.type), bearing});
      }
    }
  }

  /// Called by the step loop when an override expires or its agent despawns.
  void release(const std::string& spec_id) {
    auto it = per_spec_active_.find(spec_id);
    if (it != per_spec_active_.end() && it->second > 0) --it->second;
  }

  int active_dynamic_count(const WorldState& world) const {
    return static_cast<int>(world.overrides.size());
  }

  const std::vector<AdversitySpec>& specs() const { return specs_; }

 private:
  std::vector<AdversitySpec> specs_;
  Rng rng_;
  int global_cap_ = 1;
  std::map<std::string, double> last_activation_;
  std::map<std::string, int> per_spec_active_;
};

}  // namespace tsw
