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


#include "spinebound/environment.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "spinebound/errors.hpp"
#include "spinebound/trajectory_log.hpp"

namespace spinebound {
namespace {

constexpr int kSnapshotSize = 2 * kNumCoords + 1 + kNumActuated +
                              2 * kNumFeet + 6;

// Position of the actuated joint (in JointVector order) behind each slot.
constexpr std::array<int, kNumObservedJoints> kSlotJoint = {2, 3, 2, 3, 4,
                                                            5, 4, 5, 0, 1};

}  // namespace

const std::array<std::string_view, kNumObservedJoints>& slot_names() {
  static constexpr std::array<std::string_view, kNumObservedJoints> kNames = {
      "fl_hip", "fl_knee", "fr_hip", "fr_knee", "rl_hip",
      "rl_knee", "rr_hip", "rr_knee", "spine_front", "spine_rear"};
  return kNames;
}

int slot_coordinate(int slot) { return kFirstActuated + kSlotJoint[slot]; }

JointSlots joint_slots(const DynState& state) {
  JointSlots out;
  for (int s = 0; s < kNumObservedJoints; ++s) {
    const int c = slot_coordinate(s);
    out.angle[s] = state.q[c];
    out.velocity[s] = state.qdot[c];
    out.torque[s] = state.last_applied_torques[kSlotJoint[s]];
  }
  return out;
}

Eigen::Vector4d pitch_quaternion(double pitch) {
  return {std::cos(0.5 * pitch), 0.0, std::sin(0.5 * pitch), 0.0};
}

Observation observe(const DynState& state) {
  const JointSlots slots = joint_slots(state);
  Observation obs;
  obs << slots.angle, slots.velocity, slots.torque,
      pitch_quaternion(state.q[kPitch]);
  return obs;
}

double energy_step(const SlotVector& torques, const SlotVector& velocities,
                   double dt) {
  return torques.cwiseProduct(velocities).cwiseAbs().sum() * dt;
}

double RewardConfig::effective_sigma() const {
  return sigma > 0.0 ? sigma : std::max(0.1, 0.4 * v_des);
}

void RewardConfig::validate() const {
  if (!std::isfinite(v_des)) throw ConfigError("reward.v_des", "not finite");
  if (!(sigma >= 0.0))
    throw ConfigError("reward.sigma", "must be > 0, or 0 for the default");
  if (!(w_vel >= 0.0)) throw ConfigError("reward.w_vel", "must be >= 0");
  if (!(w_E >= 0.0)) throw ConfigError("reward.w_E", "must be >= 0");
  if (!(gamma > 0.0 && gamma < 1.0))
    throw ConfigError("reward.gamma", "must lie in (0, 1)");
}

double reward(double forward_velocity, double delta_E,
              const RewardConfig& cfg) {
  const double sigma = cfg.effective_sigma();
  const double error = forward_velocity - cfg.v_des;
  return cfg.w_vel * std::exp(-error * error / (2.0 * sigma * sigma)) -
         cfg.w_E * delta_E;
}

std::string_view to_string(Termination reason) {
  switch (reason) {
    case Termination::kNone:
      return "none";
    case Termination::kFell:
      return "fell";
    case Termination::kTimeLimit:
      return "time-limit";
    case Termination::kDiverged:
      return "diverged";
  }
  return "unknown";
}

void EpisodeConfig::validate() const {
  if (!(max_seconds > 0))
    throw ConfigError("episode.max_seconds", "must be > 0");
  if (!(max_pitch > 0)) throw ConfigError("episode.max_pitch", "must be > 0");
  if (!(min_height >= 0))
    throw ConfigError("episode.min_height", "must be >= 0");
  if (substeps < 1) throw ConfigError("episode.substeps", "must be >= 1");
}

Termination terminate(const DynState& state, double t_episode,
                      const EpisodeConfig& cfg) {
  if (std::abs(state.q[kPitch]) > cfg.max_pitch) return Termination::kFell;
  if (state.q[kBaseZ] < cfg.min_height) return Termination::kFell;
  // a tolerance keeps accumulated float time from missing the horizon
  if (t_episode >= cfg.max_seconds - 1e-9) return Termination::kTimeLimit;
  return Termination::kNone;
}

void EnvConfig::validate() const {
  robot.validate();
  physics.validate();
  reward.validate();
  episode.validate();
  if (!(box.front.r_min < box.front.r_max && box.rear.r_min < box.rear.r_max))
    throw ConfigError("env.box", "r_min must be below r_max");
  if (!(box.front.alpha_min < box.front.alpha_max &&
        box.rear.alpha_min < box.rear.alpha_max))
    throw ConfigError("env.box", "alpha_min must be below alpha_max");
  if (!(box.spine_max >= 0 && box.spine_max <= robot.limits.spine_front_max))
    throw ConfigError("env.box.spine_max", "must lie within the spine limit");
  // every corner of the box must map through the leg inverse kinematics
  for (const LegBox& leg : {box.front, box.rear}) {
    for (double r : {leg.r_min, leg.r_max}) {
      for (double alpha : {leg.alpha_min, leg.alpha_max}) {
        try {
          five_bar_ik({r, alpha}, robot.leg, robot.limits);
        } catch (const Error& e) {
          std::ostringstream os;
          os << "corner (r=" << r << ", alpha=" << alpha
             << ") is infeasible: " << e.what();
          throw ConfigError("env.box", os.str());
        }
      }
    }
  }
}

BoundingEnv::BoundingEnv(EnvConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
}

Eigen::VectorXd BoundingEnv::reset(std::uint64_t seed) {
  state_ = spinebound::reset(cfg_.robot, cfg_.mode, seed, cfg_.box);
  state_.t = 0.0;
  started_ = true;
  done_ = false;
  if (recorder_ != nullptr) {
    recorder_->record(make_row(state_, cfg_.robot, state_.qdot[kBaseX], 0.0, 0.0, false));
  }
  return observation();
}

Eigen::VectorXd BoundingEnv::observation() const { return observe(state_); }

Transition BoundingEnv::step(const Eigen::VectorXd& action) {
  if (!started_) throw ContractViolation("step called before reset");
  if (done_) throw ContractViolation("step called after the episode ended");
  if (action.size() != kActionSize) {
    throw ContractViolation("action must have 5 entries");
  }
  const ActionTargets targets = clamp_action(Action(action), cfg_.box);
  const JointCommand command =
      joint_command(targets, cfg_.robot.leg, cfg_.robot.limits);

  Transition out;
  const double x0 = state_.q[kBaseX];
  const double t0 = state_.t;
  const double dt = cfg_.physics.dt;
  try {
    for (int i = 0; i < cfg_.episode.substeps; ++i) {
      const JointVector tau = pd_torque(command, state_, cfg_.robot);
      state_ = spinebound::step(state_, tau, cfg_.robot, cfg_.physics, dt);
      const JointSlots slots = joint_slots(state_);
      out.delta_E += energy_step(slots.torque, slots.velocity, dt);
    }
    out.reason = terminate(state_, state_.t, cfg_.episode);
  } catch (const NumericalDivergence&) {
    out.reason = Termination::kDiverged;
  }
  const double elapsed = state_.t - t0;
  out.forward_velocity =
      elapsed > 0.0 ? (state_.q[kBaseX] - x0) / elapsed : 0.0;
  out.reward = out.reason == Termination::kDiverged
                   ? 0.0
                   : spinebound::reward(out.forward_velocity, out.delta_E,
                                        cfg_.reward);
  out.done = out.reason != Termination::kNone;
  out.observation = observation();
  done_ = out.done;
  if (recorder_ != nullptr) {
    recorder_->record(make_row(state_, cfg_.robot, out.forward_velocity, out.reward,
                               out.delta_E, out.done));
  }
  return out;
}

std::vector<double> BoundingEnv::snapshot() const {
  std::vector<double> d;
  d.reserve(kSnapshotSize);
  for (int i = 0; i < kNumCoords; ++i) d.push_back(state_.q[i]);
  for (int i = 0; i < kNumCoords; ++i) d.push_back(state_.qdot[i]);
  d.push_back(state_.t);
  for (int i = 0; i < kNumActuated; ++i)
    d.push_back(state_.last_applied_torques[i]);
  for (const FootContact& f : state_.feet) {
    d.push_back(f.in_contact ? 1.0 : 0.0);
    d.push_back(f.anchor_x);
  }
  d.push_back(state_.mode == SpineMode::kRigid ? 1.0 : 0.0);
  d.push_back(static_cast<double>(state_.locked.to_ulong()));
  d.push_back(state_.abs_work);
  d.push_back(state_.positive_work);
  d.push_back(started_ ? 1.0 : 0.0);
  d.push_back(done_ ? 1.0 : 0.0);
  return d;
}

void BoundingEnv::restore(const std::vector<double>& d) {
  if (d.size() != static_cast<std::size_t>(kSnapshotSize)) {
    throw IncompatibleArtifact("environment snapshot has the wrong size");
  }
  std::size_t k = 0;
  DynState s;
  for (int i = 0; i < kNumCoords; ++i) s.q[i] = d[k++];
  for (int i = 0; i < kNumCoords; ++i) s.qdot[i] = d[k++];
  s.t = d[k++];
  for (int i = 0; i < kNumActuated; ++i) s.last_applied_torques[i] = d[k++];
  for (FootContact& f : s.feet) {
    f.in_contact = d[k++] != 0.0;
    f.anchor_x = d[k++];
  }
  s.mode = d[k++] != 0.0 ? SpineMode::kRigid : SpineMode::kActive;
  s.locked = std::bitset<kNumCoords>(static_cast<unsigned long>(d[k++]));
  s.abs_work = d[k++];
  s.positive_work = d[k++];
  started_ = d[k++] != 0.0;
  done_ = d[k++] != 0.0;
  state_ = s;
}

}  // namespace spinebound
