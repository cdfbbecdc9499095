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


#ifndef SPINEBOUND_ENVIRONMENT_HPP_
#define SPINEBOUND_ENVIRONMENT_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "spinebound/dynamics.hpp"
#include "spinebound/kinematics.hpp"
#include "spinebound/robot_model.hpp"

namespace spinebound {

class TrajectoryRecorder;

inline constexpr int kObservationSize = 34;
inline constexpr int kActionSize = 5;
inline constexpr int kNumObservedJoints = 10;

using Observation = Eigen::Matrix<double, kObservationSize, 1>;
using SlotVector = Eigen::Matrix<double, kNumObservedJoints, 1>;

// Observed joint slots. Each effective planar leg fills its left and right
// slots with identical values.
enum Slot : int {
  kSlotFrontLeftHip = 0,
  kSlotFrontLeftKnee,
  kSlotFrontRightHip,
  kSlotFrontRightKnee,
  kSlotRearLeftHip,
  kSlotRearLeftKnee,
  kSlotRearRightHip,
  kSlotRearRightKnee,
  kSlotSpineFront,
  kSlotSpineRear,
};

// Column names of the ten slots, in slot order.
const std::array<std::string_view, kNumObservedJoints>& slot_names();

// Coordinate index feeding each slot.
int slot_coordinate(int slot);

struct JointSlots {
  SlotVector angle = SlotVector::Zero();
  SlotVector velocity = SlotVector::Zero();
  SlotVector torque = SlotVector::Zero();  // last applied, per motor
};

JointSlots joint_slots(const DynState& state);

// Unit quaternion (w, x, y, z) of a rotation by `pitch` about the lateral
// axis; nose-up pitch maps to a positive y component.
Eigen::Vector4d pitch_quaternion(double pitch);

// Layout: 10 angles, 10 velocities, 10 torques (slot order), quaternion.
Observation observe(const DynState& state);

// sum_i |tau_i * omega_i| * dt over the ten slots.
double energy_step(const SlotVector& torques, const SlotVector& velocities,
                   double dt);

struct RewardConfig {
  double v_des = 1.0;
  double sigma = 0.0;  // m/s; 0 selects max(0.1, 0.4 v_des)
  double w_vel = 1.0;
  double w_E = 0.02;
  double gamma = 0.99;

  double effective_sigma() const;
  void validate() const;
  bool operator==(const RewardConfig&) const = default;
};

// w_vel exp(-(v - v_des)^2 / (2 sigma^2)) - w_E delta_E
double reward(double forward_velocity, double delta_E, const RewardConfig& cfg);

enum class Termination { kNone, kFell, kTimeLimit, kDiverged };

std::string_view to_string(Termination reason);

struct EpisodeConfig {
  double max_seconds = 10.0;
  double max_pitch = 0.9;    // rad
  double min_height = 0.09;  // m, base height below which the robot fell
  int substeps = 6;          // physics steps per control step

  void validate() const;
  bool operator==(const EpisodeConfig&) const = default;
};

// Termination check. Divergence is reported by the caller, which owns the
// exception.
Termination terminate(const DynState& state, double t_episode,
                      const EpisodeConfig& cfg);

// Result of one control step of any environment.
struct Transition {
  Eigen::VectorXd observation;
  double reward = 0.0;
  bool done = false;
  double forward_velocity = 0.0;
  double delta_E = 0.0;
  Termination reason = Termination::kNone;
};

// Episodic environment as seen by the learner. Instances are owned by one
// thread at a time.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual int observation_size() const = 0;
  virtual int action_size() const = 0;

  // Starts a new episode and returns its first observation.
  virtual Eigen::VectorXd reset(std::uint64_t seed) = 0;
  // Throws ContractViolation when the episode is already done.
  virtual Transition step(const Eigen::VectorXd& action) = 0;
  virtual Eigen::VectorXd observation() const = 0;
  virtual bool done() const = 0;

  // Full mid-episode state as a flat list, for checkpoint and resume.
  virtual std::vector<double> snapshot() const = 0;
  virtual void restore(const std::vector<double>& data) = 0;
};

struct EnvConfig {
  RobotModel robot;
  DynamicsParams physics;
  RewardConfig reward;
  EpisodeConfig episode;
  ActionBox box;
  SpineMode mode = SpineMode::kActive;

  double control_dt() const { return physics.dt * episode.substeps; }
  void validate() const;
};

// The bounding task: 34-D observation, 5-D polar-endpoint and spine action,
// PD tracking of the inverse-kinematics targets.
class BoundingEnv final : public Environment {
 public:
  explicit BoundingEnv(EnvConfig cfg);

  int observation_size() const override { return kObservationSize; }
  int action_size() const override { return kActionSize; }
  Eigen::VectorXd reset(std::uint64_t seed) override;
  Transition step(const Eigen::VectorXd& action) override;
  Eigen::VectorXd observation() const override;
  bool done() const override { return done_; }
  std::vector<double> snapshot() const override;
  void restore(const std::vector<double>& data) override;

  const DynState& state() const { return state_; }
  const EnvConfig& config() const { return cfg_; }
  // Receives one row per control step (and one at reset) when set.
  void set_recorder(TrajectoryRecorder* recorder) { recorder_ = recorder; }

 private:
  EnvConfig cfg_;
  DynState state_;
  bool started_ = false;
  bool done_ = false;
  TrajectoryRecorder* recorder_ = nullptr;
};

}  // namespace spinebound

#endif  // SPINEBOUND_ENVIRONMENT_HPP_
