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

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "spinebound/errors.hpp"
#include "spinebound/rng.hpp"
#include "support/oracles.hpp"

namespace spinebound {
namespace {

constexpr double kDt = 1.0 / 240.0;

TEST(PdTorqueTest, FixedPointGivesZeroTorque) {
  const RobotModel m;
  const DynState s = standing_state(m, SpineMode::kActive);
  JointCommand cmd = oracle::standing_command(m);
  EXPECT_TRUE(pd_torque(cmd, s, m).isZero(0.0));
}

TEST(PdTorqueTest, ProportionalAndSaturated) {
  RobotModel m;
  m.leg_gains = {10.0, 0.0};
  m.torque_limit = 5.0;
  DynState s = standing_state(m, SpineMode::kActive);
  JointCommand cmd = oracle::standing_command(m);
  cmd.hip_front += 0.1;
  EXPECT_DOUBLE_EQ(pd_torque(cmd, s, m)[2], 1.0);
  m.leg_gains = {100.0, 0.0};
  cmd.hip_front = s.q[kHipFront] + 1.0;
  EXPECT_DOUBLE_EQ(pd_torque(cmd, s, m)[2], 5.0);
}

TEST(PdTorqueTest, RigidSpineGetsNoTorque) {
  const RobotModel m;
  const DynState s = standing_state(m, SpineMode::kRigid);
  JointCommand cmd = oracle::standing_command(m);
  cmd.spine_front = 0.2;
  cmd.spine_rear = -0.2;
  const JointVector tau = pd_torque(cmd, s, m);
  EXPECT_EQ(tau[0], 0.0);
  EXPECT_EQ(tau[1], 0.0);
}

TEST(ContactForceTest, PenetrationGivesSpringForce) {
  ContactParams p;
  p.k_n = 5000.0;
  const FootSample foot{{0.0, -0.001}, {0.0, 0.0}};
  const ContactForce c = contact_force(foot, {}, p);
  EXPECT_NEAR(c.force.y(), 5.0, 1e-12);
  EXPECT_EQ(c.force.x(), 0.0);
  EXPECT_TRUE(c.next.in_contact);
}

TEST(ContactForceTest, AirborneFootHasNoForce) {
  const FootSample foot{{0.3, 0.01}, {1.0, -2.0}};
  const ContactForce c = contact_force(foot, {true, 0.2}, ContactParams{});
  EXPECT_TRUE(c.force.isZero(0.0));
  EXPECT_FALSE(c.next.in_contact);
}

TEST(ContactForceTest, FrictionConeCapsTangentialForce) {
  ContactParams p;
  p.k_n = 5000.0;
  p.c_n = 0.0;
  p.k_t = 1000.0;
  p.c_t = 0.0;
  p.mu = 0.8;
  // 10 mm penetration -> 50 N normal; 0.1 m anchor stretch -> 100 N demand
  const FootSample foot{{0.1, -0.01}, {0.0, 0.0}};
  const ContactForce c = contact_force(foot, {true, 0.0}, p);
  EXPECT_NEAR(c.force.y(), 50.0, 1e-9);
  EXPECT_NEAR(c.force.x(), -40.0, 1e-9);
  EXPECT_NEAR(c.next.anchor_x, 0.1 - 0.04, 1e-12);
}

TEST(ContactForceTest, NormalForceNeverPulls) {
  ContactParams p;
  const FootSample rising{{0.0, -0.0001}, {0.0, 5.0}};
  EXPECT_EQ(contact_force(rising, {}, p).force.y(), 0.0);
}

TEST(StepTest, BallisticFlightMatchesIntegratorClosedForm) {
  const RobotModel m;
  DynamicsParams p;
  p.contacts_enabled = false;
  DynState s = standing_state(m, SpineMode::kActive);
  s.q[kBaseZ] = 1.0;
  s.qdot[kBaseX] = 0.7;
  s.qdot[kBaseZ] = 1.5;
  const double z0 = s.q[kBaseZ];
  const double x0 = s.q[kBaseX];
  const DynState first = step(s, JointVector::Zero(), m, p);
  EXPECT_NEAR(first.qdot[kBaseZ], 1.5 - m.gravity * kDt, 1e-12);
  const int n = 120;
  for (int i = 0; i < n; ++i) s = step(s, JointVector::Zero(), m, p);
  // exact solution of the semi-implicit update under constant gravity
  const double t = n * kDt;
  const double z = z0 + 1.5 * t - m.gravity * kDt * kDt * n * (n + 1) / 2.0;
  EXPECT_NEAR(s.q[kBaseZ], z, 1e-6);
  EXPECT_NEAR(s.q[kBaseX], x0 + 0.7 * t, 1e-6);
  EXPECT_NEAR(s.q[kPitch], 0.0, 1e-9);
}

TEST(StepTest, PendulumPeriodMatchesSmallOscillationTheory) {
  const RobotModel m;
  DynamicsParams p;
  p.contacts_enabled = false;
  double equilibrium = 0.0;
  double period = 0.0;
  DynState s = oracle::pinned_pendulum(m, 0.02, &equilibrium, &period);
  std::vector<double> crossings;
  double prev = s.q[kPitch] - equilibrium;
  while (crossings.size() < 21 && s.t < 40 * period) {
    s = step(s, JointVector::Zero(), m, p);
    const double now = s.q[kPitch] - equilibrium;
    if ((prev < 0) != (now < 0)) {
      crossings.push_back(s.t - kDt * now / (now - prev));
    }
    prev = now;
  }
  ASSERT_EQ(crossings.size(), 21u);
  const double measured = (crossings[20] - crossings[0]) / 10.0;
  EXPECT_NEAR(measured / period, 1.0, 0.005) << "period " << period;
}

TEST(StepTest, PendulumEnergyDoesNotDrift) {
  const RobotModel m;
  DynamicsParams p;
  p.contacts_enabled = false;
  double equilibrium = 0.0;
  double period = 0.0;
  DynState s = oracle::pinned_pendulum(m, 0.5, &equilibrium, &period);
  DynState rest = s;
  rest.q[kPitch] = equilibrium;
  const double swing =
      mechanical_energy(s, m, p) - mechanical_energy(rest, m, p);
  // least-squares slope of E(t) over 10 s
  double st = 0, se = 0, stt = 0, ste = 0;
  int n = 0;
  while (s.t < 10.0) {
    s = step(s, JointVector::Zero(), m, p);
    const double e = mechanical_energy(s, m, p);
    st += s.t;
    se += e;
    stt += s.t * s.t;
    ste += s.t * e;
    ++n;
  }
  const double slope = (n * ste - st * se) / (n * stt - st * st);
  EXPECT_LT(std::abs(slope) / swing, 1e-3);
}

TEST(StepTest, FreeFloatingTumblingConservesEnergy) {
  RobotModel m;
  m.gravity = 0.0;
  DynamicsParams p;
  p.contacts_enabled = false;
  DynState s = standing_state(m, SpineMode::kActive);
  s.q[kBaseZ] = 2.0;
  s.qdot[kPitch] = 1.0;
  s.qdot[kSpineFront] = 0.3;
  s.qdot[kSpineRear] = -0.3;
  s.qdot[kHipFront] = 0.4;
  s.qdot[kKneeFront] = -0.2;
  s.qdot[kHipRear] = -0.3;
  s.qdot[kKneeRear] = 0.25;
  const double e0 = mechanical_energy(s, m, p);
  double worst = 0.0;
  while (s.t < 1.0) {
    s = step(s, JointVector::Zero(), m, p);
    // stays clear of every stop, so only inertial coupling acts
    ASSERT_LT(std::abs(s.q[kSpineFront]), m.limits.spine_front_max);
    ASSERT_LT(std::abs(s.q[kHipFront]), m.limits.hip_max);
    ASSERT_LT(std::abs(s.q[kHipRear]), m.limits.hip_max);
    ASSERT_GT(std::min(s.q[kKneeFront], s.q[kKneeRear]), m.knee_stop_min);
    ASSERT_LT(std::max(s.q[kKneeFront], s.q[kKneeRear]), m.knee_stop_max);
    worst = std::max(worst, std::abs(mechanical_energy(s, m, p) - e0));
  }
  EXPECT_LT(worst / e0, 1e-3);
}

TEST(StepTest, StandingPoseHoldsHeight) {
  const RobotModel m;
  const DynamicsParams p;
  DynState s = reset(m, SpineMode::kActive, 42);
  const JointCommand cmd = oracle::standing_command(m);
  while (s.t < 1.0) s = step(s, pd_torque(cmd, s, m), m, p);
  const double settled = s.q[kBaseZ];
  double worst = 0.0;
  while (s.t < 6.0) {
    s = step(s, pd_torque(cmd, s, m), m, p);
    worst = std::max(worst, std::abs(s.q[kBaseZ] - settled));
  }
  EXPECT_LT(worst, 0.002);
}

TEST(StepTest, DeterministicBitExact) {
  const RobotModel m;
  const DynamicsParams p;
  DynState a = reset(m, SpineMode::kActive, 9);
  DynState b = reset(m, SpineMode::kActive, 9);
  Rng rng(1);
  for (int i = 0; i < 500; ++i) {
    JointVector tau;
    for (int j = 0; j < kNumActuated; ++j) tau[j] = rng.uniform(-4, 4);
    a = step(a, tau, m, p);
    b = step(b, tau, m, p);
  }
  EXPECT_TRUE(a == b);
}

TEST(StepTest, InvariantsHoldUnderRandomActuation) {
  const RobotModel m;
  const DynamicsParams p;
  for (SpineMode mode : {SpineMode::kActive, SpineMode::kRigid}) {
    DynState s = reset(m, mode, 3);
    Rng rng(8);
    JointCommand cmd = oracle::standing_command(m);
    for (int i = 0; i < 2400; ++i) {
      if (i % 10 == 0) {
        Action raw;
        for (int k = 0; k < 5; ++k) raw[k] = rng.uniform(-1, 1);
        cmd = joint_command(clamp_action(raw, ActionBox{}), m.leg, m.limits);
      }
      JointVector tau = pd_torque(cmd, s, m);
      tau *= 3.0;  // step saturates whatever it is handed
      const auto forces = contact_forces(s, m, p.contact);
      const auto feet = foot_samples(s, m);
      for (int f = 0; f < kNumFeet; ++f) {
        ASSERT_GE(forces[f].force.y(), 0.0);
        if (forces[f].force.y() > 0) ASSERT_LT(feet[f].position.y(), 0.0);
        ASSERT_LE(std::abs(forces[f].force.x()),
                  p.contact.mu * forces[f].force.y() + 1e-9);
      }
      s = step(s, tau, m, p);
      ASSERT_LE(s.last_applied_torques.cwiseAbs().maxCoeff(), m.torque_limit);
      if (mode == SpineMode::kActive) {
        ASSERT_LT(std::abs(s.q[kSpineFront] + s.q[kSpineRear]), 1e-12);
      } else {
        ASSERT_EQ(s.q[kSpineFront], 0.0);
        ASSERT_EQ(s.q[kSpineRear], 0.0);
      }
    }
  }
}

TEST(StepTest, StopsBoundOvershootUnderBangBangTorque) {
  const RobotModel m;
  const DynamicsParams p;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    DynState s = reset(m, SpineMode::kActive, seed);
    Rng rng(seed + 100);
    JointVector tau = JointVector::Zero();
    for (int i = 0; i < 1200; ++i) {
      if (i % 3 == 0) {
        for (int j = 0; j < kNumActuated; ++j) {
          tau[j] = rng.uniform() < 0.5 ? -m.torque_limit : m.torque_limit;
        }
      }
      ASSERT_NO_THROW(s = step(s, tau, m, p));
      worst = std::max({worst, s.q[kKneeFront] - m.knee_stop_max,
                        s.q[kKneeRear] - m.knee_stop_max});
    }
  }
  EXPECT_LT(worst, 0.05);
}

TEST(StepTest, DivergenceIsReported) {
  const RobotModel m;
  const DynamicsParams p;
  DynState s = standing_state(m, SpineMode::kActive);
  s.qdot[kHipFront] = 1e4;
  EXPECT_THROW(step(s, JointVector::Zero(), m, p), NumericalDivergence);
  s.qdot[kHipFront] = std::nan("");
  EXPECT_THROW(step(s, JointVector::Zero(), m, p), NumericalDivergence);
}

TEST(MassMatrixTest, SymmetricPositiveDefinite) {
  const RobotModel m;
  Rng rng(4);
  for (int i = 0; i < 20; ++i) {
    DynState s = reset(m, SpineMode::kActive, i);
    s.q[kPitch] = rng.uniform(-1, 1);
    const auto mm = mass_matrix(s.q, m);
    EXPECT_LT((mm - mm.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(mm);
    EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
    EXPECT_NEAR(mm(kBaseX, kBaseX), m.total_mass(), 1e-12);
  }
}

TEST(ResetTest, SeedContract) {
  const RobotModel m;
  EXPECT_TRUE(reset(m, SpineMode::kActive, 5) ==
              reset(m, SpineMode::kActive, 5));
  EXPECT_FALSE(reset(m, SpineMode::kActive, 5).q ==
               reset(m, SpineMode::kActive, 6).q);
  const DynState rigid = reset(m, SpineMode::kRigid, 5);
  EXPECT_EQ(rigid.q[kSpineFront], 0.0);
  EXPECT_EQ(rigid.q[kSpineRear], 0.0);
  const DynState active = reset(m, SpineMode::kActive, 5);
  EXPECT_EQ(rigid.q[kHipFront], active.q[kHipFront]);
  EXPECT_EQ(active.q[kSpineFront], -active.q[kSpineRear]);
  const DynState base = standing_state(m, SpineMode::kActive);
  EXPECT_LE(std::abs(active.q[kPitch] - base.q[kPitch]), 0.01);
  for (int c : {kHipFront, kKneeFront, kHipRear, kKneeRear}) {
    EXPECT_LE(std::abs(active.q[c] - base.q[c]), 0.02);
  }
}

TEST(RobotModelTest, LegMassFraction) {
  const RobotModel m;
  EXPECT_NEAR(m.total_mass(), 5.0, 1e-12);
  EXPECT_NEAR(m.leg_mass() / m.total_mass(), 0.25, 1e-12);
  EXPECT_DOUBLE_EQ(m.spine.length, 0.102);
  EXPECT_DOUBLE_EQ(m.leg.total_leg_length(), 0.245);
}

}  // namespace
}  // namespace spinebound
