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

#include "spinebound/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>
#include <unsupported/Eigen/AutoDiff>

#include "spinebound/errors.hpp"
#include "spinebound/rng.hpp"
#include "spinebound/second_order_dual.hpp"

namespace spinebound {
namespace {

using Jet = Eigen::AutoDiffScalar<Eigen::Matrix<double, kNumCoords, 1>>;
using CoordMatrix = Eigen::Matrix<double, kNumCoords, kNumCoords>;

template <typename S>
using Coords = Eigen::Matrix<S, kNumCoords, 1>;

template <typename S>
struct PoseSet {
  std::array<Vector2<S>, kNumBodies> com;
  std::array<S, kNumBodies> angle;
  std::array<Vector2<S>, kNumFeet> feet;
};

template <typename S>
Vector2<S> rotate(const S& angle, const Vector2<S>& v) {
  using std::cos;
  using std::sin;
  const S c = cos(angle);
  const S s = sin(angle);
  return Vector2<S>(S(c * v.x() - s * v.y()), S(s * v.x() + c * v.y()));
}

template <typename S>
Vector2<S> body_point(double x, double z) {
  return Vector2<S>(S(x), S(z));
}

// Link angle, from straight down, of the segment a -> b in the leg frame.
template <typename S>
S segment_angle(const Vector2<S>& a, const Vector2<S>& b) {
  using std::atan2;
  const Vector2<S> d = b - a;
  return S(atan2(d.x(), S(-d.y())));
}

template <typename S>
void place_leg(const Vector2<S>& hip, const S& body_angle, const S& hip_coord,
               const S& knee_coord, const LegGeometry& geom, int first_body,
               int foot, PoseSet<S>& out) {
  const S anterior = hip_coord + knee_coord;
  const S posterior = hip_coord - knee_coord;
  const FiveBarPose<S> leg = five_bar_fk(anterior, posterior, geom);
  auto world = [&](const Vector2<S>& p) -> Vector2<S> {
    return hip + rotate(body_angle, p);
  };
  const S half(0.5);
  out.com[first_body] = world((leg.anterior_pivot + leg.anterior_knee) * half);
  out.angle[first_body] = body_angle + anterior;
  out.com[first_body + 1] = world((leg.anterior_knee + leg.foot) * half);
  out.angle[first_body + 1] =
      body_angle + segment_angle(leg.anterior_knee, leg.foot);
  out.com[first_body + 2] =
      world((leg.posterior_pivot + leg.posterior_knee) * half);
  out.angle[first_body + 2] = body_angle + posterior;
  out.com[first_body + 3] = world((leg.posterior_knee + leg.foot) * half);
  out.angle[first_body + 3] =
      body_angle + segment_angle(leg.posterior_knee, leg.foot);
  out.feet[foot] = world(leg.foot);
}

// Body order: front body, spine link, rear body, then per leg (front, rear):
// anterior upper, anterior lower, posterior upper, posterior lower.
template <typename S>
PoseSet<S> evaluate_poses(const Coords<S>& q, const RobotModel& m) {
  PoseSet<S> out;
  const Vector2<S> base(q[kBaseX], q[kBaseZ]);
  const S pitch = q[kPitch];
  out.com[0] = base;
  out.angle[0] = pitch;

  const Vector2<S> spine_front_joint =
      base + rotate(pitch, body_point<S>(-0.5 * m.body_front.length, 0.0));
  const S spine_angle = pitch + q[kSpineFront];
  out.com[1] = spine_front_joint +
               rotate(spine_angle, body_point<S>(-0.5 * m.spine.length, 0.0));
  out.angle[1] = spine_angle;
  const Vector2<S> spine_rear_joint =
      spine_front_joint +
      rotate(spine_angle, body_point<S>(-m.spine.length, 0.0));
  const S rear_angle = spine_angle + q[kSpineRear];
  out.com[2] = spine_rear_joint +
               rotate(rear_angle, body_point<S>(-0.5 * m.body_rear.length, 0.0));
  out.angle[2] = rear_angle;

  const Vector2<S> front_hip =
      base + rotate(pitch, body_point<S>(m.hip_offset_front, 0.0));
  const Vector2<S> rear_hip =
      out.com[2] + rotate(rear_angle, body_point<S>(-m.hip_offset_rear, 0.0));
  place_leg(front_hip, pitch, q[kHipFront], q[kKneeFront], m.leg, 3, kFrontFoot,
            out);
  place_leg(rear_hip, rear_angle, q[kHipRear], q[kKneeRear], m.leg, 7,
            kRearFoot, out);
  return out;
}

struct InertialProperties {
  std::array<double, kNumBodies> mass;
  std::array<double, kNumBodies> inertia;
};

InertialProperties inertial_properties(const RobotModel& m) {
  InertialProperties p;
  p.mass[0] = m.body_front.mass;
  p.inertia[0] = m.body_front.inertia;
  p.mass[1] = m.spine.mass;
  p.inertia[1] = m.spine.inertia;
  p.mass[2] = m.body_rear.mass;
  p.inertia[2] = m.body_rear.inertia;
  const double n = m.legs_per_pair;
  const double upper = n * m.upper_link_mass;
  const double lower = n * m.lower_link_mass;
  const double lu = m.leg.upper_link_length;
  const double ll = m.leg.lower_link_length;
  for (int leg = 0; leg < 2; ++leg) {
    const int b = 3 + 4 * leg;
    for (int side = 0; side < 2; ++side) {
      p.mass[b + 2 * side] = upper;
      p.inertia[b + 2 * side] = upper * lu * lu / 12.0;
      p.mass[b + 2 * side + 1] = lower;
      p.inertia[b + 2 * side + 1] = lower * ll * ll / 12.0;
    }
  }
  return p;
}

// Motors per actuated coordinate (legs are effective pairs).
double actuator_multiplicity(int joint, const RobotModel& m) {
  return joint < 2 ? 1.0 : static_cast<double>(m.legs_per_pair);
}

struct DynamicsTerms {
  CoordMatrix mass = CoordMatrix::Zero();
  CoordVector bias = CoordVector::Zero();     // velocity-product forces
  CoordVector gravity = CoordVector::Zero();  // generalized gravity force
  std::array<Eigen::Matrix<double, 2, kNumCoords>, kNumFeet> foot_jacobian;
  std::array<FootSample, kNumFeet> feet;
  double potential = 0.0;
};

DynamicsTerms evaluate_terms(const CoordVector& q, const CoordVector& qdot,
                             const RobotModel& m) {
  Coords<Jet> q_jet;
  for (int i = 0; i < kNumCoords; ++i) q_jet[i] = Jet(q[i], kNumCoords, i);
  const PoseSet<Jet> jet = evaluate_poses(q_jet, m);

  Coords<SecondOrderDual> q_dual;
  for (int i = 0; i < kNumCoords; ++i) q_dual[i] = {q[i], qdot[i], 0.0};
  const PoseSet<SecondOrderDual> dual = evaluate_poses(q_dual, m);

  const InertialProperties inertial = inertial_properties(m);
  DynamicsTerms terms;
  for (int b = 0; b < kNumBodies; ++b) {
    Eigen::Matrix<double, 2, kNumCoords> jp;
    jp.row(0) = jet.com[b].x().derivatives().transpose();
    jp.row(1) = jet.com[b].y().derivatives().transpose();
    const Eigen::Matrix<double, 1, kNumCoords> ja =
        jet.angle[b].derivatives().transpose();
    const double mass = inertial.mass[b];
    const double inertia = inertial.inertia[b];
    terms.mass.noalias() += mass * jp.transpose() * jp;
    terms.mass.noalias() += inertia * ja.transpose() * ja;
    const Eigen::Vector2d accel_bias(dual.com[b].x().dd, dual.com[b].y().dd);
    terms.bias.noalias() += mass * jp.transpose() * accel_bias;
    terms.bias.noalias() += inertia * ja.transpose() * dual.angle[b].dd;
    terms.gravity.noalias() -= mass * m.gravity * jp.row(1).transpose();
    terms.potential += mass * m.gravity * jet.com[b].y().value();
  }
  for (int j = 0; j < kNumActuated; ++j) {
    terms.mass(kFirstActuated + j, kFirstActuated + j) +=
        m.armature * actuator_multiplicity(j, m);
  }
  for (int f = 0; f < kNumFeet; ++f) {
    terms.foot_jacobian[f].row(0) =
        jet.feet[f].x().derivatives().transpose();
    terms.foot_jacobian[f].row(1) =
        jet.feet[f].y().derivatives().transpose();
    terms.feet[f].position = {dual.feet[f].x().v, dual.feet[f].y().v};
    terms.feet[f].velocity = {dual.feet[f].x().d, dual.feet[f].y().d};
  }
  return terms;
}

struct StopRange {
  double lo;
  double hi;
};

StopRange stop_range(int joint, const RobotModel& m) {
  switch (kFirstActuated + joint) {
    case kSpineFront:
      return {m.limits.spine_front_min, m.limits.spine_front_max};
    case kSpineRear:
      return {m.limits.spine_rear_min, m.limits.spine_rear_max};
    case kHipFront:
    case kHipRear:
      return {m.limits.hip_min, m.limits.hip_max};
    default:
      return {m.knee_stop_min, m.knee_stop_max};
  }
}

struct StopForce {
  double force = 0.0;
  double energy = 0.0;
  bool engaged = false;  // spring acts on the end-of-step position
  bool damped = false;   // joint already past the limit
};

// Generalized stop force and stored spring energy for one joint. The stop
// engages once the position predicted one step ahead crosses the limit, so
// the implicit spring acts on the end-of-step position.
StopForce joint_stop(int joint, double q, double qdot, const RobotModel& m,
                     const DynamicsParams& p, double dt) {
  const StopRange range = stop_range(joint, m);
  const double scale = actuator_multiplicity(joint, m);
  const double k = scale * p.stop_stiffness;
  const double c = scale * p.stop_damping;
  const double predicted = q + dt * qdot;
  StopForce out;
  if (predicted > range.hi) {
    const double depth = q - range.hi;
    out.damped = depth > 0;
    out.force = -k * depth - (out.damped ? c * qdot : 0.0);
    out.engaged = true;
  } else if (predicted < range.lo) {
    const double depth = range.lo - q;
    out.damped = depth > 0;
    out.force = k * depth - (out.damped ? c * qdot : 0.0);
    out.engaged = true;
  }
  const double outside = std::max({q - range.hi, range.lo - q, 0.0});
  out.energy = 0.5 * k * outside * outside;
  return out;
}

// Free-velocity basis: qdot = basis * v for the unlocked coordinates, with
// the spine pair sharing one column when active (spine_rear = -spine_front).
Eigen::Matrix<double, kNumCoords, Eigen::Dynamic> free_basis(
    const DynState& s) {
  std::bitset<kNumCoords> locked = s.locked;
  if (s.mode == SpineMode::kRigid) {
    locked.set(kSpineFront);
    locked.set(kSpineRear);
  }
  std::vector<Eigen::Matrix<double, kNumCoords, 1>> columns;
  for (int i = 0; i < kNumCoords; ++i) {
    if (locked.test(i) || i == kSpineRear) continue;
    CoordVector col = CoordVector::Zero();
    col[i] = 1.0;
    if (i == kSpineFront) {
      if (locked.test(kSpineRear)) continue;
      col[kSpineRear] = -1.0;
    }
    columns.push_back(col);
  }
  Eigen::Matrix<double, kNumCoords, Eigen::Dynamic> basis(
      kNumCoords, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) basis.col(c) = columns[c];
  return basis;
}

bool is_finite(const CoordVector& v) { return v.allFinite(); }

}  // namespace

void ContactParams::validate() const {
  if (!(k_n > 0)) throw ConfigError("physics.contact.k_n", "must be > 0");
  if (!(c_n >= 0)) throw ConfigError("physics.contact.c_n", "must be >= 0");
  if (!(mu >= 0)) throw ConfigError("physics.contact.mu", "must be >= 0");
  if (!(k_t > 0)) throw ConfigError("physics.contact.k_t", "must be > 0");
  if (!(c_t >= 0)) throw ConfigError("physics.contact.c_t", "must be >= 0");
}

void DynamicsParams::validate() const {
  contact.validate();
  if (!(dt > 0)) throw ConfigError("physics.dt", "must be > 0");
  if (!(stop_stiffness >= 0))
    throw ConfigError("physics.stop_stiffness", "must be >= 0");
  if (!(stop_damping >= 0))
    throw ConfigError("physics.stop_damping", "must be >= 0");
  if (!(max_speed > 0)) throw ConfigError("physics.max_speed", "must be > 0");
}

ContactForce contact_force(const FootSample& foot, const FootContact& previous,
                           const ContactParams& params, double scale) {
  ContactForce out;
  const double penetration = -foot.position.y();
  if (penetration <= 0.0) return out;
  const double normal = std::max(
      0.0, scale * (params.k_n * penetration - params.c_n * foot.velocity.y()));
  const double x = foot.position.x();
  double anchor = previous.in_contact ? previous.anchor_x : x;
  double tangential =
      -scale * params.k_t * (x - anchor) - scale * params.c_t * foot.velocity.x();
  const double cap = params.mu * normal;
  if (std::abs(tangential) > cap) {
    tangential = std::copysign(cap, tangential);
    // slide the anchor so the spring alone carries the capped force
    anchor = x + tangential / (scale * params.k_t);
  }
  out.force = {tangential, normal};
  out.next = {true, anchor};
  return out;
}

std::array<FootSample, kNumFeet> foot_samples(const DynState& state,
                                              const RobotModel& model) {
  Coords<SecondOrderDual> q_dual;
  for (int i = 0; i < kNumCoords; ++i)
    q_dual[i] = {state.q[i], state.qdot[i], 0.0};
  const PoseSet<SecondOrderDual> dual = evaluate_poses(q_dual, model);
  std::array<FootSample, kNumFeet> feet;
  for (int f = 0; f < kNumFeet; ++f) {
    feet[f].position = {dual.feet[f].x().v, dual.feet[f].y().v};
    feet[f].velocity = {dual.feet[f].x().d, dual.feet[f].y().d};
  }
  return feet;
}

std::array<ContactForce, kNumFeet> contact_forces(const DynState& state,
                                                  const RobotModel& model,
                                                  const ContactParams& params) {
  const auto feet = foot_samples(state, model);
  std::array<ContactForce, kNumFeet> out;
  for (int f = 0; f < kNumFeet; ++f) {
    out[f] = contact_force(feet[f], state.feet[f], params,
                           static_cast<double>(model.legs_per_pair));
  }
  return out;
}

JointVector joint_targets(const JointCommand& cmd) {
  JointVector t;
  t << cmd.spine_front, cmd.spine_rear, cmd.hip_front, cmd.knee_front,
      cmd.hip_rear, cmd.knee_rear;
  return t;
}

JointVector pd_torque(const JointCommand& target, const DynState& state,
                      const RobotModel& model) {
  const JointVector goal = joint_targets(target);
  JointVector tau;
  for (int j = 0; j < kNumActuated; ++j) {
    const int c = kFirstActuated + j;
    const bool locked = state.locked.test(c) ||
                        (state.mode == SpineMode::kRigid && j < 2);
    if (locked) {
      tau[j] = 0.0;
      continue;
    }
    const PdGains& g = j < 2 ? model.spine_gains : model.leg_gains;
    const double raw = g.kp * (goal[j] - state.q[c]) - g.kd * state.qdot[c];
    tau[j] = std::clamp(raw, -model.torque_limit, model.torque_limit);
  }
  return tau;
}

DynState step(const DynState& state, const JointVector& torques,
              const RobotModel& model, const DynamicsParams& params,
              double dt) {
  const DynamicsTerms terms = evaluate_terms(state.q, state.qdot, model);

  DynState next = state;
  CoordVector force = terms.gravity - terms.bias;
  // Spring and damper terms that are integrated linearly-implicitly:
  // (M + dt C + dt^2 K) dv = dt (f - dt K qdot).
  CoordMatrix stiffness = CoordMatrix::Zero();
  CoordMatrix damping = CoordMatrix::Zero();

  for (int j = 0; j < kNumActuated; ++j) {
    const int c = kFirstActuated + j;
    const double tau =
        std::clamp(torques[j], -model.torque_limit, model.torque_limit);
    next.last_applied_torques[j] = tau;
    force[c] += actuator_multiplicity(j, model) * tau;
    const StopForce stop =
        joint_stop(j, state.q[c], state.qdot[c], model, params, dt);
    force[c] += stop.force;
    if (stop.engaged) {
      const double scale = actuator_multiplicity(j, model);
      stiffness(c, c) += scale * params.stop_stiffness;
      if (stop.damped) damping(c, c) += scale * params.stop_damping;
    }
  }

  if (params.contacts_enabled) {
    const double scale = static_cast<double>(model.legs_per_pair);
    for (int f = 0; f < kNumFeet; ++f) {
      const ContactForce c = contact_force(terms.feet[f], state.feet[f],
                                           params.contact, scale);
      const auto& jac = terms.foot_jacobian[f];
      force.noalias() += jac.transpose() * c.force;
      next.feet[f] = c.next;
      if (c.force.y() <= 0.0) continue;
      stiffness.noalias() += scale * params.contact.k_n *
                             jac.row(1).transpose() * jac.row(1);
      damping.noalias() += scale * params.contact.c_n *
                           jac.row(1).transpose() * jac.row(1);
      const bool sticking =
          std::abs(c.force.x()) < params.contact.mu * c.force.y();
      if (sticking) {
        stiffness.noalias() += scale * params.contact.k_t *
                               jac.row(0).transpose() * jac.row(0);
        damping.noalias() += scale * params.contact.c_t *
                             jac.row(0).transpose() * jac.row(0);
      }
    }
  } else {
    next.feet = {};
  }

  const auto basis = free_basis(state);
  JointVector applied = next.last_applied_torques;
  if (basis.cols() > 0) {
    const CoordMatrix effective =
        terms.mass + dt * damping + dt * dt * stiffness;
    const Eigen::MatrixXd reduced_mass =
        basis.transpose() * effective * basis;
    const Eigen::VectorXd reduced_force =
        basis.transpose() * (force - dt * stiffness * state.qdot);
    const Eigen::VectorXd dv = reduced_mass.llt().solve(reduced_force);
    next.qdot = state.qdot + dt * (basis * dv);
  }
  // locked coordinates never move, even if a caller left a velocity there
  for (int i = 0; i < kNumCoords; ++i) {
    const bool rigid_spine = state.mode == SpineMode::kRigid &&
                             (i == kSpineFront || i == kSpineRear);
    if (state.locked.test(i) || rigid_spine) next.qdot[i] = 0.0;
  }
  next.q = state.q + dt * next.qdot;
  next.t = state.t + dt;

  for (int j = 0; j < kNumActuated; ++j) {
    const double power = actuator_multiplicity(j, model) * applied[j] *
                         next.qdot[kFirstActuated + j];
    next.abs_work += std::abs(power) * dt;
    next.positive_work += std::max(power, 0.0) * dt;
  }

  if (!is_finite(next.q) || !is_finite(next.qdot) ||
      next.qdot.cwiseAbs().maxCoeff() > params.max_speed) {
    std::ostringstream os;
    os << "state diverged at t = " << next.t;
    throw NumericalDivergence(os.str());
  }
  return next;
}

DynState standing_state(const RobotModel& model, SpineMode mode,
                        const ActionBox& box) {
  const JointCommand cmd =
      joint_command(clamp_action(Action::Zero(), box), model.leg, model.limits);
  DynState s;
  s.mode = mode;
  s.q[kHipFront] = cmd.hip_front;
  s.q[kKneeFront] = cmd.knee_front;
  s.q[kHipRear] = cmd.hip_rear;
  s.q[kKneeRear] = cmd.knee_rear;
  const auto feet = foot_samples(s, model);
  s.q[kBaseZ] = -std::min(feet[kFrontFoot].position.y(),
                          feet[kRearFoot].position.y());
  return s;
}

DynState reset(const RobotModel& model, SpineMode mode, std::uint64_t seed,
               const ActionBox& box) {
  DynState s = standing_state(model, mode, box);
  Rng rng(seed);
  s.q[kPitch] += rng.uniform(-0.01, 0.01);
  // drawn in both modes so seed-matched episodes share leg perturbations
  const double spine = rng.uniform(-0.02, 0.02);
  if (mode == SpineMode::kActive) {
    s.q[kSpineFront] = spine;
    s.q[kSpineRear] = -spine;
  }
  for (int c : {kHipFront, kKneeFront, kHipRear, kKneeRear})
    s.q[c] += rng.uniform(-0.02, 0.02);
  s.q[kBaseZ] = 0.0;
  const auto feet = foot_samples(s, model);
  s.q[kBaseZ] = -std::min(feet[kFrontFoot].position.y(),
                          feet[kRearFoot].position.y());
  return s;
}

std::array<BodyPose, kNumBodies> body_poses(const CoordVector& q,
                                            const RobotModel& model) {
  const PoseSet<double> p = evaluate_poses<double>(q, model);
  const InertialProperties inertial = inertial_properties(model);
  std::array<BodyPose, kNumBodies> out;
  for (int b = 0; b < kNumBodies; ++b) {
    out[b] = {p.com[b], p.angle[b], inertial.mass[b], inertial.inertia[b]};
  }
  return out;
}

Eigen::Vector2d center_of_mass(const CoordVector& q, const RobotModel& model) {
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  double mass = 0.0;
  for (const BodyPose& b : body_poses(q, model)) {
    sum += b.mass * b.com;
    mass += b.mass;
  }
  return sum / mass;
}

CoordMatrix mass_matrix(const CoordVector& q, const RobotModel& model) {
  return evaluate_terms(q, CoordVector::Zero(), model).mass;
}

double mechanical_energy(const DynState& state, const RobotModel& model,
                         const DynamicsParams& params) {
  const DynamicsTerms terms = evaluate_terms(state.q, state.qdot, model);
  double energy =
      0.5 * state.qdot.dot(terms.mass * state.qdot) + terms.potential;
  for (int j = 0; j < kNumActuated; ++j) {
    energy += joint_stop(j, state.q[kFirstActuated + j], 0.0, model, params, 0.0)
                  .energy;
  }
  return energy;
}

}  // namespace spinebound
