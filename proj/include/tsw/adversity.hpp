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

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "tsw/errors.hpp"
#include "tsw/network.hpp"
#include "tsw/rng.hpp"

// Safety-critical adversities: trigger conditions, activated behaviors, and
// activation probabilities. Dynamic adversities override agent behavior for a
// bounded duration; static adversities modify the environment (lane closures)
// or the prompt context (weather). Activation is importance-sampled: events
// fire at a boosted probability while the log keeps the likelihood ratio that
// restores naturalistic statistics.

namespace tsw {

enum class BehaviorKindType {
  cut_in,
  hard_brake,
  fail_to_yield,
  run_red_light,
  pedestrian_dash,
  cyclist_blind_spot,
  zigzag_drift,
  construction_zone,  // static
  weather,            // static
};

inline const char* behavior_kind_name(BehaviorKindType t) {
  switch (t) {
    case BehaviorKindType::cut_in: return "cut_in";
    case BehaviorKindType::hard_brake: return "hard_brake";
    case BehaviorKindType::fail_to_yield: return "fail_to_yield";
    case BehaviorKindType::run_red_light: return "run_red_light";
    case BehaviorKindType::pedestrian_dash: return "pedestrian_dash";
    case BehaviorKindType::cyclist_blind_spot: return "cyclist_blind_spot";
    case BehaviorKindType::zigzag_drift: return "zigzag_drift";
    case BehaviorKindType::construction_zone: return "construction_zone";
    case BehaviorKindType::weather: return "weather";
  }
  return "unknown";
}

inline BehaviorKindType behavior_kind_from(std::string_view s) {
  for (BehaviorKindType t :
       {BehaviorKindType::cut_in, BehaviorKindType::hard_brake, BehaviorKindType::fail_to_yield,
        BehaviorKindType::run_red_light, BehaviorKindType::pedestrian_dash,
        BehaviorKindType::cyclist_blind_spot, BehaviorKindType::zigzag_drift,
        BehaviorKindType::construction_zone, BehaviorKindType::weather}) {
    if (s == behavior_kind_name(t)) return t;
  }
  fail(Errc::config_error, "unknown behavior kind '" + std::string(s) + "'");
}

inline bool behavior_kind_is_static(BehaviorKindType t) {
  return t == BehaviorKindType::construction_zone || t == BehaviorKindType::weather;
}

/// Agent class a dynamic behavior applies to.
inline AgentClass behavior_agent_class(BehaviorKindType t) {
  switch (t) {
    case BehaviorKindType::pedestrian_dash: return AgentClass::pedestrian;
    case BehaviorKindType::cyclist_blind_spot: return AgentClass::cyclist;
    default: return AgentClass::vehicle;
  }
}

struct BehaviorKind {
  BehaviorKindType type = BehaviorKindType::hard_brake;
  double duration_s = 6.0;

  // cut_in
  double target_gap_m = 6.0;
  // hard_brake
  double decel = 6.0;
  // pedestrian_dash
  double speed_multiplier = 2.0;
  // zigzag_drift
  double amplitude_m = 1.2;
  double period_s = 4.0;
  // construction_zone
  EdgeId zone_edge = 0;
  std::set<int> zone_lanes;
  double zone_extent_m = 40.0;
  double zone_start_s = -1.0;  // < 0 centers the zone on the edge
  // weather
  std::string weather_tag;  // rain | snow | fog | night

  bool is_static() const { return behavior_kind_is_static(type); }

  void validate() const {
    switch (type) {
      case BehaviorKindType::hard_brake:
        require(decel >= 3.0 && decel <= 9.0, Errc::config_error,
                "hard_brake deceleration must be in [3, 9] m/s^2");
        break;
      case BehaviorKindType::cut_in:
        require(target_gap_m > 0.0 && target_gap_m <= 30.0, Errc::config_error,
                "cut_in target gap must be in (0, 30] m");
        break;
      case BehaviorKindType::pedestrian_dash:
        require(speed_multiplier >= 1.0 && speed_multiplier <= 4.0, Errc::config_error,
                "pedestrian_dash speed multiplier must be in [1, 4]");
        break;
      case BehaviorKindType::zigzag_drift:
        require(amplitude_m > 0.0 && amplitude_m <= 3.0, Errc::config_error,
                "zigzag amplitude must be in (0, 3] m");
        require(period_s >= 1.0 && period_s <= 20.0, Errc::config_error,
                "zigzag period must be in [1, 20] s");
        break;
      case BehaviorKindType::construction_zone:
        require(zone_extent_m > 0.0, Errc::config_error, "zone extent must be positive");
        require(!zone_lanes.empty(), Errc::config_error, "zone must close at least one lane");
        break;
      case BehaviorKindType::weather:
        require(weather_tag == "rain" || weather_tag == "snow" || weather_tag == "fog" ||
                    weather_tag == "night",
                Errc::config_error, "weather tag must be rain|snow|fog|night");
        break;
      default:
        break;
    }
    require(duration_s > 0.0 && duration_s <= 120.0, Errc::config_error,
            "behavior duration must be in (0, 120] s");
  }
};

/// Boolean tree over world predicates, evaluated per (spec, agent) each step.
struct TriggerExpr {
  enum class Op {
    always,
    and_,
    or_,
    not_,
    dist_to_ego_lt,
    ttc_to_ego_lt,
    sim_time_in,
    agent_on_edge,
    relative_bearing,  // agent bearing in an ego-relative sector, degrees CW from forward
    signal_state,
    agent_class_is,
  };

  Op op = Op::always;
  std::vector<TriggerExpr> args;     // combinators
  double a = 0.0, b = 0.0;           // numeric parameters
  std::vector<EdgeId> edges;         // agent_on_edge
  NodeId node = 0;                   // signal_state
  std::string color;                 // "red" | "green"
  AgentClass cls = AgentClass::vehicle;

  void validate(const RoadNetwork& net) const {
    switch (op) {
      case Op::and_:
      case Op::or_:
        require(!args.empty(), Errc::config_error, "and/or needs operands");
        break;
      case Op::not_:
        require(args.size() == 1, Errc::config_error, "not takes one operand");
        break;
      case Op::agent_on_edge:
        require(!edges.empty(), Errc::config_error, "agent_on_edge needs edges");
        for (EdgeId e : edges) net.edge(e);
        break;
      case Op::signal_state:
        require(net.signals.count(node) > 0, Errc::config_error,
                "signal_state references node without signal");
        require(color == "red" || color == "green", Errc::config_error,
                "signal color must be red or green");
        break;
      case Op::sim_time_in:
        require(a <= b, Errc::config_error, "sim_time_in window inverted");
        break;
      default:
        break;
    }
    for (const auto& child : args) child.validate(net);
  }
};

struct AdversitySpec {
  std::string id;
  TriggerExpr trigger;
  BehaviorKind behavior;
  double p_natural = 1e-3;   // per decision step
  double q_boosted = 0.5;    // per decision step, >= p_natural
  double cooldown_s = 30.0;
  int max_concurrent = 1;

  bool is_static() const { return behavior.is_static(); }

  void validate(const RoadNetwork& net) const {
    require(!id.empty(), Errc::config_error, "adversity spec needs an id");
    require(p_natural > 0.0 && p_natural < 1.0, Errc::config_error, "p_natural must be in (0,1)");
    require(q_boosted > 0.0 && q_boosted < 1.0, Errc::config_error, "q_boosted must be in (0,1)");
    require(q_boosted >= p_natural, Errc::config_error, "q_boosted must be >= p_natural");
    require(max_concurrent >= 1, Errc::config_error, "max_concurrent must be >= 1");
    require(cooldown_s >= 0.0, Errc::config_error, "cooldown must be >= 0");
    behavior.validate();
    trigger.validate(net);
  }
};

struct Activation {
  double t = 0.0;
  std::string spec_id;
  int64_t agent = 0;
  std::string behavior;
  std::string bearing;  // adversary position relative to ego at activation
};

struct DecisionRecord {
  double t = 0.0;
  std::string spec_id;
  bool activated = false;
  double factor = 1.0;  // p/q when activated, (1-p)/(1-q) otherwise
};

struct AdversityLog {
  std::vector<Activation> activations;
  std::vector<DecisionRecord> decisions;
};

/// Product of all recorded likelihood ratios; 1.0 for an empty log. Weighting
/// simulated episodes by this value makes boosted-event statistics unbiased
/// estimates of the natural ones.
inline double episode_weight(const AdversityLog& log) {
  double w = 1.0;
  for (const auto& d : log.decisions) w *= d.factor;
  return w;
}

struct ActivationSample {
  bool activated = false;
  double factor = 1.0;
};

/// One Bernoulli decision under the boosted probability with its likelihood
/// ratio. Untriggered decisions carry no weight.
inline ActivationSample sample_activation(const AdversitySpec& spec, bool triggered, Rng& rng) {
  if (!triggered) return {false, 1.0};
  double u = rng.uniform01();
  if (u < spec.q_boosted) return {true, spec.p_natural / spec.q_boosted};
  return {false, (1.0 - spec.p_natural) / (1.0 - spec.q_boosted)};
}

// ---------------------------------------------------------------------------
// JSON configuration
// ---------------------------------------------------------------------------

inline TriggerExpr trigger_from_json(const nlohmann::json& j) {
  TriggerExpr e;
  std::string op = j.at("op").get<std::string>();
  if (op == "true" || op == "always") {
    e.op = TriggerExpr::Op::always;
  } else if (op == "and" || op == "or") {
    e.op = op == "and" ? TriggerExpr::Op::and_ : TriggerExpr::Op::or_;
    for (const auto& c : j.at("args")) e.args.push_back(trigger_from_json(c));
  } else if (op == "not") {
    e.op = TriggerExpr::Op::not_;
    e.args.push_back(trigger_from_json(j.at("args").at(0)));
  } else if (op == "dist_to_ego_lt") {
    e.op = TriggerExpr::Op::dist_to_ego_lt;
    e.a = j.at("meters").get<double>();
  } else if (op == "ttc_to_ego_lt") {
    e.op = TriggerExpr::Op::ttc_to_ego_lt;
    e.a = j.at("seconds").get<double>();
  } else if (op == "sim_time_in") {
    e.op = TriggerExpr::Op::sim_time_in;
    e.a = j.at("from").get<double>();
    e.b = j.at("to").get<double>();
  } else if (op == "agent_on_edge") {
    e.op = TriggerExpr::Op::agent_on_edge;
    e.edges = j.at("edges").get<std::vector<EdgeId>>();
  } else if (op == "relative_bearing") {
    e.op = TriggerExpr::Op::relative_bearing;
    e.a = j.at("from_deg").get<double>();
    e.b = j.at("to_deg").get<double>();
  } else if (op == "signal_state") {
    e.op = TriggerExpr::Op::signal_state;
    e.node = j.at("node").get<NodeId>();
    e.color = j.at("color").get<std::string>();
  } else if (op == "agent_class") {
    e.op = TriggerExpr::Op::agent_class_is;
    e.cls = agent_class_from(j.at("class").get<std::string>());
  } else {
    fail(Errc::config_error, "unknown trigger op '" + op + "'");
  }
  return e;
}

inline BehaviorKind behavior_from_json(const nlohmann::json& j) {
  BehaviorKind k;
  k.type = behavior_kind_from(j.at("kind").get<std::string>());
  k.duration_s = j.value("duration_s", k.duration_s);
  k.target_gap_m = j.value("target_gap_m", k.target_gap_m);
  k.decel = j.value("decel", k.decel);
  k.speed_multiplier = j.value("speed_multiplier", k.speed_multiplier);
  k.amplitude_m = j.value("amplitude_m", k.amplitude_m);
  k.period_s = j.value("period_s", k.period_s);
  k.zone_edge = j.value("edge", k.zone_edge);
  if (j.contains("lanes"))
    for (const auto& l : j.at("lanes")) k.zone_lanes.insert(l.get<int>());
  k.zone_extent_m = j.value("extent_m", k.zone_extent_m);
  k.zone_start_s = j.value("start_s", k.zone_start_s);
  k.weather_tag = j.value("tag", k.weather_tag);
  return k;
}

/// Default naturalistic activation probabilities per decision step. These are
/// configuration priors standing in for calibrated crash statistics; override
/// them per spec in the adversity configuration.
inline double default_p_natural(BehaviorKindType t) {
  switch (t) {
    case BehaviorKindType::cut_in: return 1e-3;
    case BehaviorKindType::hard_brake: return 2e-3;
    case BehaviorKindType::fail_to_yield: return 5e-4;
    case BehaviorKindType::run_red_light: return 1e-4;
    case BehaviorKindType::pedestrian_dash: return 5e-4;
    case BehaviorKindType::cyclist_blind_spot: return 5e-4;
    case BehaviorKindType::zigzag_drift: return 1e-3;
    default: return 1e-3;
  }
}

inline AdversitySpec adversity_from_json(const nlohmann::json& j) {
  AdversitySpec spec;
  spec.id = j.at("id").get<std::string>();
  spec.behavior = behavior_from_json(j.at("behavior"));
  spec.trigger = j.contains("trigger") ? trigger_from_json(j.at("trigger")) : TriggerExpr{};
  spec.p_natural = j.value("p_natural", default_p_natural(spec.behavior.type));
  spec.q_boosted = j.value("q_boosted", 0.5);
  spec.cooldown_s = j.value("cooldown_s", 30.0);
  spec.max_concurrent = j.value("max_concurrent", 1);
  return spec;
}

inline std::vector<AdversitySpec> adversities_from_json(const nlohmann::json& arr,
                                                        const RoadNetwork& net) {
  std::vector<AdversitySpec> specs;
  std::set<std::string> ids;
  for (const auto& j : arr) {
    AdversitySpec spec = adversity_from_json(j);
    spec.validate(net);
    require(ids.insert(spec.id).second, Errc::config_error,
            "duplicate adversity spec id '" + spec.id + "'");
    specs.push_back(std::move(spec));
  }
  return specs;
}

inline nlohmann::json adversity_log_to_json(const AdversityLog& log) {
  nlohmann::json doc;
  nlohmann::json acts = nlohmann::json::array();
  for (const auto& a : log.activations) {
    acts.push_back({{"t", a.t},
                    {"spec", a.spec_id},
                    {"agent", a.agent},
                    {"behavior", a.behavior},
                    {"bearing", a.bearing}});
  }
  nlohmann::json decs = nlohmann::json::array();
  for (const auto& d : log.decisions) {
    decs.push_back(
        {{"t", d.t}, {"spec", d.spec_id}, {"activated", d.activated}, {"factor", d.factor}});
  }
  doc["activations"] = acts;
  doc["decisions"] = decs;
  doc["episode_weight"] = episode_weight(log);
  return doc;
}

}  // namespace tsw
