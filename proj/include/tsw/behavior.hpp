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
#include <limits>

#include "tsw/errors.hpp"

// Rule-based longitudinal and lateral behavior: intelligent-driver
// car-following plus a politeness-weighted incentive/safety lane-change test.
// The behavior interface in the simulator is pluggable; these are the default
// models.

namespace tsw {

inline constexpr double kMaxBrake = 9.0;  // physical deceleration floor, m/s^2

struct IdmParams {
  double v0 = 15.0;     // desired speed, m/s
  double T = 1.5;       // time headway, s
  double a_max = 2.0;   // maximum acceleration, m/s^2
  double b = 3.0;       // comfortable deceleration, m/s^2
  double s0 = 2.0;      // jam gap, m
  double delta = 4.0;   // velocity exponent

  void validate() const {
    require(v0 > 0 && T > 0 && a_max > 0 && b > 0 && s0 > 0, Errc::domain_error,
            "driver-model parameters must be positive");
    require(delta >= 1.0, Errc::domain_error, "velocity exponent must be >= 1");
  }
};

struct LaneChangeParams {
  double politeness = 0.3;       // weight of follower gains, [0, 1]
  double threshold = 0.2;        // incentive threshold, m/s^2
  double b_safe = 4.0;           // max deceleration imposed on the new follower, m/s^2
  double cooldown_s = 2.0;       // one change per agent per cooldown
};

struct BehaviorParams {
  IdmParams idm;
  LaneChangeParams lane_change;
  double pedestrian_speed = 1.4;                          // m/s
  IdmParams cyclist{5.5, 1.2, 1.0, 2.0, 1.5, 4.0};        // reduced desired speed and power
  double pedestrian_gap_accept_s = 4.0;                   // crossing gap acceptance
};

/// Car-following acceleration toward a leader `gap` metres ahead moving at
/// `v_lead` (pass an infinite gap for a free road):
///   s* = s0 + v T + v (v - v_lead) / (2 sqrt(a_max b))
///   a  = a_max (1 - (v/v0)^delta - (s*/gap)^2),  clamped to [-9, a_max].
inline double idm_acceleration(double v, double v_lead, double gap, const IdmParams& p) {
  require(gap > 0.0, Errc::domain_error, "gap must be positive (use +inf for no leader)");
  require(v >= 0.0, Errc::domain_error, "speed must be non-negative");
  double interaction = 0.0;
  if (std::isfinite(gap)) {
    double s_star = p.s0 + v * p.T + v * (v - v_lead) / (2.0 * std::sqrt(p.a_max * p.b));
    interaction = (s_star / gap) * (s_star / gap);
  }
  double a = p.a_max * (1.0 - std::pow(v / p.v0, p.delta) - interaction);
  return std::clamp(a, -kMaxBrake, p.a_max);
}

/// Equilibrium following gap at steady speed v (zero closing speed).
inline double idm_equilibrium_gap(double v, const IdmParams& p) {
  double denom = 1.0 - std::pow(v / p.v0, p.delta);
  require(denom > 0.0, Errc::domain_error, "no equilibrium at or above the desired speed");
  return (p.s0 + v * p.T) / std::sqrt(denom);
}

/// Acceleration change a follower experiences from a maneuver.
struct FollowerImpact {
  bool exists = false;
  double a_before = 0.0;
  double a_after = 0.0;

  double gain() const { return exists ? a_after - a_before : 0.0; }
};

struct LaneChangeDecision {
  bool safe = false;
  double gain = 0.0;
  bool accept = false;
};

/// Incentive/safety test: change when the new follower keeps its braking
/// within b_safe and the politeness-weighted acceleration gain clears the
/// threshold.
inline LaneChangeDecision evaluate_lane_change(double a_current, double a_target,
                                               const FollowerImpact& new_follower,
                                               const FollowerImpact& old_follower,
                                               const LaneChangeParams& p) {
  LaneChangeDecision d;
  d.safe = !new_follower.exists || new_follower.a_after >= -p.b_safe;
  d.gain = (a_target - a_current) +
           p.politeness * (new_follower.gain() + old_follower.gain());
  d.accept = d.safe && d.gain > p.threshold;
  return d;
}

}  // namespace tsw
