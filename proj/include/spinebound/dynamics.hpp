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

#ifndef SPINEBOUND_DYNAMICS_HPP_
#define SPINEBOUND_DYNAMICS_HPP_

// Planar articulated dynamics of the spined robot: front body (floating
// base), spine link, rear body and two effective five-bar legs, integrated
// with semi-implicit Euler under PD control, gravity and penalty contacts.

#include <array>
#include <bitset>
#include <cstdint>

#include <Eigen/Core>

#include "spinebound/kinematics.hpp"
#include "spinebound/robot_model.hpp"

namespace spinebound {

// Generalized coordinates.
enum Coord : int {
  kBaseX = 0,
  kBaseZ,
  kPitch,  // front body angle, nose up positive
  kSpineFront,
  kSpineRear,
  kHipFront,
  kKneeFront,
  kHipRear,
  kKneeRear,
  kNumCoords
};

inline constexpr int kNumActuated = 6;
inline constexpr int kFirstActuated = kSpineFront;

using CoordVector = Eigen::Matrix<double, kNumCoords, 1>;
// Actuated joints in coordinate order: spine front, spine rear, hip front,
// knee front, hip rear, knee rear. Values are per physical motor.
using JointVector = Eigen::Matrix<double, kNumActuated, 1>;

enum class SpineMode { kActive, kRigid };

enum Foot : int { kFrontFoot = 0, kRearFoot = 1, kNumFeet };

struct FootContact {
  bool in_contact = false;
  double anchor_x = 0.0;  // world x of the friction anchor while in contact

  bool operator==(const FootContact&) const = default;
};

struct DynState {
  CoordVector q = CoordVector::Zero();
  CoordVector qdot = CoordVector::Zero();
  double t = 0.0;
  JointVector last_applied_torques = JointVector::Zero();
  std::array<FootContact, kNumFeet> feet{};
  SpineMode mode = SpineMode::kActive;
  // Coordinates held at their current value. Rigid mode locks both spine
  // joints; tests lock more to build sub-models.
  std::bitset<kNumCoords> locked;
  // running actuator energy: sum |tau * omega| dt and sum max(tau*omega, 0) dt
  double abs_work = 0.0;
  double positive_work = 0.0;

  bool operator==(const DynState&) const = default;
};

struct ContactParams {
  double k_n = 5000.0;  // N/m per physical foot
  double c_n = 30.0;    // N s/m
  double mu = 0.8;
  double k_t = 5000.0;  // N/m, tangential anchor spring
  double c_t = 30.0;    // N s/m, tangential damping
  void validate() const;
};

struct DynamicsParams {
  ContactParams contact;
  double dt = 1.0 / 240.0;
  bool contacts_enabled = true;
  // mechanical joint stops (N m / rad, N m s / rad)
  double stop_stiffness = 2000.0;
  double stop_damping = 10.0;
  // any |qdot| above this aborts with NumericalDivergence
  double max_speed = 500.0;
  void validate() const;
};

// Point of the ground-contact model: world position and velocity of a foot.
struct FootSample {
  Eigen::Vector2d position;
  Eigen::Vector2d velocity;
};

struct ContactForce {
  Eigen::Vector2d force = Eigen::Vector2d::Zero();  // (tangential, normal)
  FootContact next;  // contact bookkeeping after this evaluation
};

// Penalty normal force plus a Coulomb-capped anchor spring. `scale`
// multiplies the stiffness and damping (legs per effective foot).
ContactForce contact_force(const FootSample& foot, const FootContact& previous,
                           const ContactParams& params, double scale = 1.0);

std::array<FootSample, kNumFeet> foot_samples(const DynState& state,
                                              const RobotModel& model);

std::array<ContactForce, kNumFeet> contact_forces(const DynState& state,
                                                  const RobotModel& model,
                                                  const ContactParams& params);

// Joint targets for the actuated coordinates, in JointVector order.
JointVector joint_targets(const JointCommand& cmd);

// tau_j = clip(kp (target_j - q_j) - kd qdot_j, +-torque_limit). Locked
// joints receive zero torque.
JointVector pd_torque(const JointCommand& target, const DynState& state,
                      const RobotModel& model);

// One semi-implicit Euler step. Throws NumericalDivergence when the state
// becomes non-finite or exceeds params.max_speed.
DynState step(const DynState& state, const JointVector& torques,
              const RobotModel& model, const DynamicsParams& params,
              double dt);

inline DynState step(const DynState& state, const JointVector& torques,
                     const RobotModel& model, const DynamicsParams& params) {
  return step(state, torques, model, params, params.dt);
}

// Standing pose at the box-midpoint command with seeded perturbations:
// +-0.02 rad on the free joints and +-0.01 rad on pitch. The lowest foot
// touches the ground.
DynState reset(const RobotModel& model, SpineMode mode, std::uint64_t seed,
               const ActionBox& box = {});

// Standing pose without perturbation.
DynState standing_state(const RobotModel& model, SpineMode mode,
                        const ActionBox& box = {});

// Body bookkeeping, exposed for analysis and tests.
inline constexpr int kNumBodies = 11;

struct BodyPose {
  Eigen::Vector2d com;
  double angle = 0.0;
  double mass = 0.0;
  double inertia = 0.0;
};

std::array<BodyPose, kNumBodies> body_poses(const CoordVector& q,
                                            const RobotModel& model);

Eigen::Vector2d center_of_mass(const CoordVector& q, const RobotModel& model);

// Kinetic (including rotor) plus gravitational and joint-stop energy.
double mechanical_energy(const DynState& state, const RobotModel& model,
                         const DynamicsParams& params);

// Joint-space mass matrix, full coordinates.
Eigen::Matrix<double, kNumCoords, kNumCoords> mass_matrix(
    const CoordVector& q, const RobotModel& model);

}  // namespace spinebound

#endif  // SPINEBOUND_DYNAMICS_HPP_
