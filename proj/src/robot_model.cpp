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

#include "spinebound/robot_model.hpp"

#include "spinebound/errors.hpp"

namespace spinebound {

void RobotModel::validate() const {
  auto positive = [](double v, const char* field) {
    if (!(v > 0)) throw ConfigError(field, "must be > 0");
  };
  positive(body_front.mass, "robot.body_front.mass");
  positive(body_front.inertia, "robot.body_front.inertia");
  positive(body_front.length, "robot.body_front.length");
  positive(body_rear.mass, "robot.body_rear.mass");
  positive(body_rear.inertia, "robot.body_rear.inertia");
  positive(body_rear.length, "robot.body_rear.length");
  positive(spine.mass, "robot.spine.mass");
  positive(spine.inertia, "robot.spine.inertia");
  positive(spine.length, "robot.spine.length");
  positive(upper_link_mass, "robot.upper_link_mass");
  positive(lower_link_mass, "robot.lower_link_mass");
  positive(torque_limit, "robot.torque_limit");
  positive(gravity, "robot.gravity");
  if (!(armature >= 0)) throw ConfigError("robot.armature", "must be >= 0");
  if (legs_per_pair < 1)
    throw ConfigError("robot.legs_per_pair", "must be >= 1");
  if (!(knee_stop_min < knee_stop_max))
    throw ConfigError("robot.knee_stop_min", "must be < knee_stop_max");
  if (!(leg_gains.kp >= 0 && leg_gains.kd >= 0))
    throw ConfigError("robot.leg_gains", "gains must be >= 0");
  if (!(spine_gains.kp >= 0 && spine_gains.kd >= 0))
    throw ConfigError("robot.spine_gains", "gains must be >= 0");
  leg.validate();
}

}  // namespace spinebound
