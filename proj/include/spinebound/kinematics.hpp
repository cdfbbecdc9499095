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

#ifndef SPINEBOUND_KINEMATICS_HPP_
#define SPINEBOUND_KINEMATICS_HPP_

// Leg and spine command kinematics in the sagittal plane.
//
// Frames: x points forward, z points up. Every planar angle is positive
// counter-clockwise in the (x, z) drawing, i.e. it turns +x toward +z.
// A leg frame has its origin midway between the two actuated five-bar pivots.

#include <cmath>
#include <numbers>

#include <Eigen/Core>

namespace spinebound {

template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;

using Action = Eigen::Matrix<double, 5, 1>;

inline constexpr double deg_to_rad(double deg) {
  return deg * std::numbers::pi / 180.0;
}

// Symmetric five-bar leg: two actuated pivots `hip_separation` apart, each
// driving a 2R branch (upper link on the motor, lower link to the shared
// foot). Defaults give a 245 mm total leg length.
struct LegGeometry {
  double upper_link_length = 0.1225;
  double lower_link_length = 0.1225;
  double hip_separation = 0.04;
  // Minimum clearance, in meters of radial reach, from a fully stretched or
  // fully folded branch and from a degenerate closed chain.
  double singularity_margin = 1e-3;

  double total_leg_length() const {
    return upper_link_length + lower_link_length;
  }
  // Throws ConfigError on non-positive lengths.
  void validate() const;
};

// Joint ranges in radians.
struct JointLimits {
  double hip_min = deg_to_rad(-45.0);
  double hip_max = deg_to_rad(45.0);
  double knee_min = deg_to_rad(-70.0);
  double knee_max = deg_to_rad(70.0);
  double spine_front_min = deg_to_rad(-15.0);
  double spine_front_max = deg_to_rad(15.0);
  double spine_rear_min = deg_to_rad(-15.0);
  double spine_rear_max = deg_to_rad(15.0);
};

// Direction of a 2R chain at zero joint angles.
enum class ZeroPose { kAlongX, kDown };

// kDown: elbow angle >= 0, kUp: elbow angle <= 0. In a leg frame with the
// chain hanging down, kDown bends the knee backward.
enum class ElbowBranch { kUp, kDown };

struct TwoLinkAngles {
  double shoulder = 0.0;
  double elbow = 0.0;
};

// Closed-form 2R inverse kinematics. The target must lie inside the annulus
// [|l1 - l2| + margin, l1 + l2 - margin]; throws UnreachableTarget outside
// the annulus and NearSingular inside the margin band.
TwoLinkAngles solve_2r_ik(const Eigen::Vector2d& target, double l1, double l2,
                          ElbowBranch branch, double margin = 1e-3,
                          ZeroPose pose = ZeroPose::kDown);

// Unit vector at `angle` from the zero direction.
template <typename Scalar>
Vector2<Scalar> chain_direction(const Scalar& angle, ZeroPose pose) {
  using std::cos;
  using std::sin;
  if (pose == ZeroPose::kDown) return Vector2<Scalar>(sin(angle), -cos(angle));
  return Vector2<Scalar>(cos(angle), sin(angle));
}

// Endpoint of a 2R chain rooted at the origin.
template <typename Scalar>
Vector2<Scalar> forward_kinematics_leg(const Scalar& shoulder,
                                       const Scalar& elbow, double l1,
                                       double l2,
                                       ZeroPose pose = ZeroPose::kDown) {
  return chain_direction<Scalar>(shoulder, pose) * Scalar(l1) +
         chain_direction<Scalar>(shoulder + elbow, pose) * Scalar(l2);
}

// Foot target in polar form: r from the leg origin, alpha measured from
// straight down (positive swings the foot forward).
struct PolarEndpoint {
  double r = 0.0;
  double alpha = 0.0;

  Eigen::Vector2d position() const {
    return {r * std::sin(alpha), -r * std::cos(alpha)};
  }
};

// Actuated pivot angles, each measured from straight down. The anterior
// motor sits at +hip_separation/2 and bends its knee forward; the posterior
// motor sits at -hip_separation/2 and bends its knee backward.
struct MotorAngles {
  double anterior = 0.0;
  double posterior = 0.0;
};

// Leg-level joint coordinates of a five-bar: hip is the mean motor angle
// (leg swing), knee is half the motor opening (leg flexion).
template <typename Scalar>
struct LegJointsT {
  Scalar hip{};
  Scalar knee{};
};
using LegJoints = LegJointsT<double>;

template <typename Scalar>
LegJointsT<Scalar> leg_joints_from_motors(const Scalar& anterior,
                                          const Scalar& posterior) {
  return {(anterior + posterior) * Scalar(0.5),
          (anterior - posterior) * Scalar(0.5)};
}

inline LegJoints leg_joints_from_motors(const MotorAngles& m) {
  return leg_joints_from_motors<double>(m.anterior, m.posterior);
}

inline MotorAngles motors_from_leg_joints(const LegJoints& j) {
  return {j.hip + j.knee, j.hip - j.knee};
}

template <typename Scalar>
struct FiveBarPose {
  Vector2<Scalar> anterior_pivot;
  Vector2<Scalar> posterior_pivot;
  Vector2<Scalar> anterior_knee;
  Vector2<Scalar> posterior_knee;
  Vector2<Scalar> foot;
};

// Closed-chain forward kinematics in the leg frame. The foot is the
// intersection of the two lower-link circles lying below the knee-to-knee
// line. Outside the assembly range the result is NaN.
template <typename Scalar>
FiveBarPose<Scalar> five_bar_fk(const Scalar& anterior, const Scalar& posterior,
                                const LegGeometry& geom) {
  using std::sqrt;
  FiveBarPose<Scalar> pose;
  const double half = 0.5 * geom.hip_separation;
  pose.anterior_pivot = Vector2<Scalar>(Scalar(half), Scalar(0.0));
  pose.posterior_pivot = Vector2<Scalar>(Scalar(-half), Scalar(0.0));
  pose.anterior_knee =
      pose.anterior_pivot + chain_direction<Scalar>(anterior, ZeroPose::kDown) *
                                Scalar(geom.upper_link_length);
  pose.posterior_knee =
      pose.posterior_pivot +
      chain_direction<Scalar>(posterior, ZeroPose::kDown) *
          Scalar(geom.upper_link_length);
  const Vector2<Scalar> span = pose.anterior_knee - pose.posterior_knee;
  const Scalar dist_sq = span.squaredNorm();
  const Scalar dist = sqrt(dist_sq);
  const double l2 = geom.lower_link_length;
  const Scalar height = sqrt(Scalar(l2 * l2) - dist_sq * Scalar(0.25));
  const Vector2<Scalar> mid = (pose.anterior_knee + pose.posterior_knee) *
                              Scalar(0.5);
  // span rotated clockwise by 90 degrees points below the knee line
  const Vector2<Scalar> down(span.y() / dist, -span.x() / dist);
  pose.foot = mid + down * height;
  return pose;
}

// Motor angles placing the foot at `endpoint`. Throws UnreachableTarget or
// NearSingular when either branch or the closed chain leaves the safe range,
// and JointLimitViolation when the leg joints exceed `limits`.
MotorAngles five_bar_ik(const PolarEndpoint& endpoint, const LegGeometry& geom,
                        const JointLimits& limits = {});

// Box the normalized action is mapped into, per leg pair.
struct LegBox {
  double r_min = 0.15;
  double r_max = 0.23;
  double alpha_min = -0.6;
  double alpha_max = 0.6;
};

struct ActionBox {
  LegBox front;
  LegBox rear;
  double spine_max = deg_to_rad(15.0);  // symmetric bound on beta_front
};

struct ActionTargets {
  PolarEndpoint front;
  PolarEndpoint rear;
  double beta_front = 0.0;
};

// Action layout: (r_front, alpha_front, r_rear, alpha_rear, beta_front),
// each saturated to [-1, 1] and mapped affinely onto the box. Total.
ActionTargets clamp_action(const Action& raw, const ActionBox& box);

// Inverse of the affine part of clamp_action.
Action normalize_action(const ActionTargets& targets, const ActionBox& box);

struct SpineAngles {
  double front = 0.0;
  double rear = 0.0;
};

// rear = -front. Throws JointLimitViolation outside the front spine range.
SpineAngles spine_couple(double beta_front, const JointLimits& limits = {});

// Joint targets for one command: spine coupling plus five-bar IK per pair.
struct JointCommand {
  double hip_front = 0.0;
  double knee_front = 0.0;
  double hip_rear = 0.0;
  double knee_rear = 0.0;
  double spine_front = 0.0;
  double spine_rear = 0.0;
};

JointCommand joint_command(const ActionTargets& targets,
                           const LegGeometry& geom,
                           const JointLimits& limits = {});

// True when every angle is inside `limits` and the spine is coupled.
bool satisfies_limits(const JointCommand& cmd, const JointLimits& limits = {});

}  // namespace spinebound

#endif  // SPINEBOUND_KINEMATICS_HPP_
