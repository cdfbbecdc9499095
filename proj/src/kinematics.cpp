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

#include "spinebound/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "spinebound/errors.hpp"

namespace spinebound {
namespace {

double wrap_angle(double a) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  a = std::fmod(a + std::numbers::pi, kTwoPi);
  if (a < 0) a += kTwoPi;
  return a - std::numbers::pi;
}

void check_leg_limits(const LegJoints& j, const JointLimits& limits) {
  if (j.hip < limits.hip_min || j.hip > limits.hip_max ||
      j.knee < limits.knee_min || j.knee > limits.knee_max) {
    std::ostringstream os;
    os << "leg joints (hip " << j.hip << ", knee " << j.knee
       << ") outside limits";
    throw JointLimitViolation(os.str());
  }
}

}  // namespace

void LegGeometry::validate() const {
  if (!(upper_link_length > 0))
    throw ConfigError("robot.leg.upper_link_length", "must be > 0");
  if (!(lower_link_length > 0))
    throw ConfigError("robot.leg.lower_link_length", "must be > 0");
  if (!(hip_separation > 0)) throw ConfigError("robot.leg.hip_separation", "must be > 0");
  if (!(singularity_margin >= 0))
    throw ConfigError("robot.leg.singularity_margin", "must be >= 0");
}

TwoLinkAngles solve_2r_ik(const Eigen::Vector2d& target, double l1, double l2,
                          ElbowBranch branch, double margin, ZeroPose pose) {
  // coordinates along the zero direction (u) and its CCW normal (w)
  double u = target.x();
  double w = target.y();
  if (pose == ZeroPose::kDown) {
    u = -target.y();
    w = target.x();
  }
  const double dist = std::hypot(u, w);
  const double inner = std::abs(l1 - l2);
  const double outer = l1 + l2;
  if (dist > outer || dist < inner) {
    std::ostringstream os;
    os << "target at distance " << dist << " outside annulus [" << inner
       << ", " << outer << "]";
    throw UnreachableTarget(os.str());
  }
  if (dist > outer - margin || dist < inner + margin) {
    std::ostringstream os;
    os << "target at distance " << dist << " within " << margin
       << " of a singular configuration";
    throw NearSingular(os.str());
  }
  const double c = std::clamp(
      (dist * dist - l1 * l1 - l2 * l2) / (2.0 * l1 * l2), -1.0, 1.0);
  double elbow = std::acos(c);
  if (branch == ElbowBranch::kUp) elbow = -elbow;
  const double shoulder = std::atan2(w, u) - std::atan2(l2 * std::sin(elbow),
                                                        l1 + l2 * std::cos(elbow));
  return {wrap_angle(shoulder), elbow};
}

MotorAngles five_bar_ik(const PolarEndpoint& endpoint, const LegGeometry& geom,
                        const JointLimits& limits) {
  const Eigen::Vector2d foot = endpoint.position();
  const Eigen::Vector2d pivot(0.5 * geom.hip_separation, 0.0);
  const double l1 = geom.upper_link_length;
  const double l2 = geom.lower_link_length;
  const double margin = geom.singularity_margin;

  const TwoLinkAngles anterior =
      solve_2r_ik(foot - pivot, l1, l2, ElbowBranch::kUp, margin);
  const TwoLinkAngles posterior =
      solve_2r_ik(foot + pivot, l1, l2, ElbowBranch::kDown, margin);

  // closed chain: the lower links must not become collinear (knees 2*l2
  // apart) and the knees must not meet
  const FiveBarPose<double> pose =
      five_bar_fk(anterior.shoulder, posterior.shoulder, geom);
  const double knee_gap = (pose.anterior_knee - pose.posterior_knee).norm();
  if (knee_gap > 2.0 * l2 - margin || knee_gap < margin) {
    std::ostringstream os;
    os << "closed chain near singular: knee gap " << knee_gap;
    throw NearSingular(os.str());
  }

  const MotorAngles motors{anterior.shoulder, posterior.shoulder};
  check_leg_limits(leg_joints_from_motors(motors), limits);
  return motors;
}

ActionTargets clamp_action(const Action& raw, const ActionBox& box) {
  auto affine = [](double x, double lo, double hi) {
    // NaN saturates to the midpoint
    const double s = std::isnan(x) ? 0.0 : std::clamp(x, -1.0, 1.0);
    return 0.5 * (lo + hi) + 0.5 * (hi - lo) * s;
  };
  ActionTargets t;
  t.front.r = affine(raw[0], box.front.r_min, box.front.r_max);
  t.front.alpha = affine(raw[1], box.front.alpha_min, box.front.alpha_max);
  t.rear.r = affine(raw[2], box.rear.r_min, box.rear.r_max);
  t.rear.alpha = affine(raw[3], box.rear.alpha_min, box.rear.alpha_max);
  t.beta_front = affine(raw[4], -box.spine_max, box.spine_max);
  return t;
}

Action normalize_action(const ActionTargets& targets, const ActionBox& box) {
  auto inverse = [](double v, double lo, double hi) {
    return (v - 0.5 * (lo + hi)) / (0.5 * (hi - lo));
  };
  Action raw;
  raw << inverse(targets.front.r, box.front.r_min, box.front.r_max),
      inverse(targets.front.alpha, box.front.alpha_min, box.front.alpha_max),
      inverse(targets.rear.r, box.rear.r_min, box.rear.r_max),
      inverse(targets.rear.alpha, box.rear.alpha_min, box.rear.alpha_max),
      inverse(targets.beta_front, -box.spine_max, box.spine_max);
  return raw;
}

SpineAngles spine_couple(double beta_front, const JointLimits& limits) {
  if (!(beta_front >= limits.spine_front_min &&
        beta_front <= limits.spine_front_max)) {
    std::ostringstream os;
    os << "spine angle " << beta_front << " outside ["
       << limits.spine_front_min << ", " << limits.spine_front_max << "]";
    throw JointLimitViolation(os.str());
  }
  return {beta_front, -beta_front};
}

JointCommand joint_command(const ActionTargets& targets,
                           const LegGeometry& geom,
                           const JointLimits& limits) {
  const SpineAngles spine = spine_couple(targets.beta_front, limits);
  const LegJoints front =
      leg_joints_from_motors(five_bar_ik(targets.front, geom, limits));
  const LegJoints rear =
      leg_joints_from_motors(five_bar_ik(targets.rear, geom, limits));
  return {front.hip, front.knee, rear.hip, rear.knee, spine.front, spine.rear};
}

bool satisfies_limits(const JointCommand& cmd, const JointLimits& limits) {
  auto in = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
  return in(cmd.hip_front, limits.hip_min, limits.hip_max) &&
         in(cmd.hip_rear, limits.hip_min, limits.hip_max) &&
         in(cmd.knee_front, limits.knee_min, limits.knee_max) &&
         in(cmd.knee_rear, limits.knee_min, limits.knee_max) &&
         in(cmd.spine_front, limits.spine_front_min, limits.spine_front_max) &&
         in(cmd.spine_rear, limits.spine_rear_min, limits.spine_rear_max) &&
         cmd.spine_rear == -cmd.spine_front;
}

}  // namespace spinebound
