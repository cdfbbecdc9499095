// Copyright 2026 The Spinebound Authors
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

#ifndef SPINEBOUND_ROBOT_MODEL_HPP_
#define SPINEBOUND_ROBOT_MODEL_HPP_

#include "spinebound/kinematics.hpp"

namespace spinebound {

struct BodySegment {
  double mass = 0.0;     // kg
  double inertia = 0.0;  // kg m^2 about the center of mass
  double length = 0.0;   // m
};

struct PdGains {
  double kp = 50.0;  // N m / rad
  double kd = 1.0;   // N m s / rad
};

// Immutable morphology of the sagittal model. Leg link masses are per
// physical link; each effective planar leg stands for `legs_per_pair`
// physical legs moving in unison.
//
// Defaults: 5.0 kg total with 1.25 kg of legs, 102 mm spine link,
// 245 mm legs, Table 1 style joint ranges, 4 N m actuators.
struct RobotModel {
  BodySegment body_front{1.6, 0.00385, 0.15};
  BodySegment body_rear{1.6, 0.00385, 0.15};
  BodySegment spine{0.55, 0.00064, 0.102};
  double upper_link_mass = 0.09375;
  double lower_link_mass = 0.0625;
  // hip axis distance ahead of the front body center / behind the rear one
  double hip_offset_front = 0.05;
  double hip_offset_rear = 0.05;
  LegGeometry leg;
  JointLimits limits;
  // Knee range enforced by mechanical stops in simulation; narrower than
  // the joint limits so the closed chain never reaches a fold.
  double knee_stop_min = 0.05;
  double knee_stop_max = 0.9;
  double torque_limit = 4.0;  // N m per actuator
  PdGains leg_gains;
  PdGains spine_gains;
  // reflected rotor inertia added to each actuated coordinate, per motor
  double armature = 0.01;
  double gravity = 9.81;
  int legs_per_pair = 2;

  double leg_mass() const {
    return 4.0 * (2.0 * upper_link_mass + 2.0 * lower_link_mass);
  }
  double total_mass() const {
    return body_front.mass + body_rear.mass + spine.mass + leg_mass();
  }
  // Throws ConfigError naming the offending field.
  void validate() const;
};

}  // namespace spinebound

#endif  // SPINEBOUND_ROBOT_MODEL_HPP_
