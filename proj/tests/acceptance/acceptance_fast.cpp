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

// Acceptance criteria 1-7 and 10. Prints one PASS/FAIL line per criterion
// and exits non-zero when any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "spinebound/environment.hpp"
#include "spinebound/harness.hpp"
#include "spinebound/kinematics.hpp"
#include "spinebound/learner.hpp"
#include "spinebound/metrics.hpp"
#include "spinebound/toy_env.hpp"
#include "support/oracles.hpp"

namespace spinebound {
namespace {

namespace fs = std::filesystem;

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

// 1. |FK(IK(p)) - p| < 1e-9 m over 1000 in-box endpoints, under 1 s.
Verdict kinematics_round_trip() {
  const auto start = std::chrono::steady_clock::now();
  const RobotModel model;
  const ActionBox box;
  Rng rng(1);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const LegBox& leg = i % 2 ? box.rear : box.front;
    const PolarEndpoint e{rng.uniform(leg.r_min, leg.r_max),
                          rng.uniform(leg.alpha_min, leg.alpha_max)};
    const MotorAngles m = five_bar_ik(e, model.leg, model.limits);
    const Eigen::Vector2d fk =
        five_bar_fk(m.anterior, m.posterior, model.leg).foot;
    worst = std::max(worst, (fk - e.position()).norm());
    worst = std::max(worst, (oracle::foot(m, model.leg) - e.position()).norm());
  }
  const double elapsed = seconds_since(start);
  return {worst < 1e-9 && elapsed < 1.0,
          format("max error %.3g m, %.3f s", worst, elapsed)};
}

// 2. Unit peak and exact argmax of the velocity reward.
Verdict reward_exactness() {
  double worst_peak = 0.0;
  bool argmax_exact = true;
  for (double v_des : {0.5, 1.0, 1.37, 2.5}) {
    RewardConfig cfg;
    cfg.v_des = v_des;
    cfg.w_vel = 1.3;
    worst_peak = std::max(worst_peak, std::abs(reward(v_des, 0.0, cfg) - 1.3));
    // 10,000 points with v_des at index 5000
    const double h = 4.0 / 10000;
    int best = -1;
    double best_reward = -1.0;
    for (int k = 0; k < 10000; ++k) {
      const double v = v_des + (k - 5000) * h;
      const double r = reward(v, 0.0, cfg);
      if (r > best_reward) {
        best_reward = r;
        best = k;
      }
    }
    argmax_exact = argmax_exact && v_des + (best - 5000) * h == v_des;
  }
  return {worst_peak <= 1e-12 && argmax_exact,
          format("max |r(v_des) - w_vel| %.3g, argmax exact: %s", worst_peak,
                 argmax_exact ? "yes" : "no")};
}

// 3. energy_step and cost_of_transport against brute-force oracles.
Verdict energy_and_cot_oracles() {
  Rng rng(3);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const TrajectoryLog log = oracle::random_log(rng, 20 + trial);
    const double cot = cost_of_transport(log, 8.4, 9.81);
    const double expected = oracle::brute_force_cot(log, 8.4, 9.81);
    worst = std::max(worst, std::abs(cot - expected) / expected);
    double energy = 0.0;
    double expected_energy = 0.0;
    for (const TrajectoryRow& row : log.rows) {
      energy += energy_step(row.tau, row.qdot, 1.0 / 240.0);
      expected_energy += oracle::brute_force_energy(
          row.tau.data(), row.qdot.data(), kNumObservedJoints, 1.0 / 240.0);
    }
    worst = std::max(worst,
                     std::abs(energy - expected_energy) / expected_energy);
  }
  return {worst < 1e-9, format("max relative error %.3g", worst)};
}

// 4. Froude number at the reported top speed and at 1.55 m/s.
Verdict froude_consistency() {
  const double top = froude(2.21, 0.245, 9.81);
  const double mid = froude(1.55, 0.245, 9.81);
  return {std::abs(top - 2.03) <= 0.05 * 2.03 && std::abs(mid - 1.0) <= 0.01,
          format("Fr(2.21) = %.4f, Fr(1.55) = %.4f", top, mid)};
}

// 5. Ballistic flight, pendulum energy drift and PD standing.
Verdict dynamics_oracles() {
  const RobotModel m;
  DynamicsParams free_flight;
  free_flight.contacts_enabled = false;
  const double dt = free_flight.dt;

  DynState s = standing_state(m, SpineMode::kActive);
  s.q[kBaseZ] = 1.0;
  s.qdot[kBaseX] = 0.7;
  s.qdot[kBaseZ] = 1.5;
  const double x0 = s.q[kBaseX];
  const double z0 = s.q[kBaseZ];
  const int n = static_cast<int>(std::lround(0.5 / dt));
  for (int i = 0; i < n; ++i) s = step(s, JointVector::Zero(), m, free_flight);
  // exact solution of the semi-implicit update under constant gravity
  const double t = n * dt;
  const double z = z0 + 1.5 * t - m.gravity * dt * dt * n * (n + 1) / 2.0;
  const double ballistic = std::max(std::abs(s.q[kBaseZ] - z),
                                    std::abs(s.q[kBaseX] - (x0 + 0.7 * t)));

  double equilibrium = 0.0;
  double period = 0.0;
  DynState p = oracle::pinned_pendulum(m, 0.5, &equilibrium, &period);
  DynState rest = p;
  rest.q[kPitch] = equilibrium;
  const double swing = mechanical_energy(p, m, free_flight) -
                       mechanical_energy(rest, m, free_flight);
  double st = 0, se = 0, stt = 0, ste = 0;
  int samples = 0;
  while (p.t < 10.0) {
    p = step(p, JointVector::Zero(), m, free_flight);
    const double e = mechanical_energy(p, m, free_flight);
    st += p.t;
    se += e;
    stt += p.t * p.t;
    ste += p.t * e;
    ++samples;
  }
  const double drift = std::abs((samples * ste - st * se) /
                                (samples * stt - st * st)) /
                       swing;

  const DynamicsParams with_contacts;
  DynState h = reset(m, SpineMode::kActive, 42);
  const JointCommand cmd = oracle::standing_command(m);
  while (h.t < 1.0) h = step(h, pd_torque(cmd, h, m), m, with_contacts);
  const double settled = h.q[kBaseZ];
  double sag = 0.0;
  while (h.t < 6.0) {
    h = step(h, pd_torque(cmd, h, m), m, with_contacts);
    sag = std::max(sag, std::abs(h.q[kBaseZ] - settled));
  }
  return {ballistic < 1e-6 && drift < 1e-3 && sag < 0.002,
          format("ballistic %.3g m, pendulum drift %.3g %%/s, standing "
                 "excursion %.3g mm",
                 ballistic, 100 * drift, 1000 * sag)};
}

// 6. Backpropagation against central finite differences.
Verdict gradient_check() {
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    const int obs = 2 + static_cast<int>(seed % 3);
    const int act = 1 + static_cast<int>(seed % 2);
    Policy<double> policy(obs, act, {4 + static_cast<int>(seed), 3});
    for (int i = 0; i < policy.num_params(); ++i) {
      policy.params()[i] = 0.7 * rng.normal();
    }
    for (int j = 0; j < act; ++j) policy.log_std()[j] = rng.uniform(-2.0, -0.2);
    TrajectoryBatch batch;
    const int n = 6;
    batch.n_envs = 1;
    batch.horizon = n;
    batch.observations = Eigen::MatrixXd(obs, n);
    batch.actions = Eigen::MatrixXd(act, n);
    batch.log_probs.resize(n);
    batch.advantages.resize(n);
    batch.returns.resize(n);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < obs; ++k) batch.observations(k, i) = rng.normal();
      const ActionDistribution d =
          policy_forward(policy, batch.observations.col(i));
      for (int j = 0; j < act; ++j) {
        batch.actions(j, i) = d.mean[j] + d.std[j] * rng.normal();
      }
      // half the ratios fall outside the clip range
      batch.log_probs[i] =
          gaussian_log_prob(batch.actions.col(i), d.mean, d.std) +
          (i % 2 ? 0.05 : 0.5) * (i % 4 < 2 ? 1 : -1);
      batch.advantages[i] = rng.normal();
      batch.returns[i] = rng.normal();
    }
    PpoConfig cfg;
    cfg.entropy_coef = 0.01;
    const Eigen::VectorXd grad = ppo_loss(policy, batch, cfg).gradient;
    for (int k = 0; k < policy.num_params(); ++k) {
      Policy<double> plus = policy;
      Policy<double> minus = policy;
      plus.params()[k] += 1e-6;
      minus.params()[k] -= 1e-6;
      const double fd = (ppo_loss(plus, batch, cfg).total -
                         ppo_loss(minus, batch, cfg).total) /
                        2e-6;
      worst = std::max(worst, std::abs(grad[k] - fd) /
                                  std::max({std::abs(grad[k]), std::abs(fd),
                                            1e-6}));
      ++checked;
    }
  }
  const double elapsed = seconds_since(start);
  return {worst < 1e-4 && elapsed < 30.0,
          format("%d parameters, max relative error %.3g, %.2f s", checked,
                 worst, elapsed)};
}

// 7. Learning on the analytic velocity-tracking task.
Verdict toy_learning() {
  const auto start = std::chrono::steady_clock::now();
  PpoConfig cfg;
  cfg.n_envs = 8;
  cfg.horizon = 250;
  cfg.epochs = 10;
  cfg.learning_rate = 1e-3;
  cfg.max_total_steps = 200'000;
  const ToyConfig toy;
  int reached = 0;
  std::string ratios;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    cfg.seed = seed;
    const TrainResult result = train(
        cfg, [&](int) { return std::make_unique<ToyVelocityEnv>(toy); });
    ToyVelocityEnv env(toy);
    double achieved = 0.0;
    double optimal = 0.0;
    for (std::uint64_t k = 0; k < 20; ++k) {
      const std::uint64_t episode_seed = 5000 + k;
      achieved += run_episode(env, result.policy, result.normalizer,
                              episode_seed, true)
                      .total_return;
      optimal += toy_optimal_return(
          toy, ToyVelocityEnv::initial_velocity(episode_seed, toy));
    }
    const double ratio = achieved / optimal;
    if (ratio >= 0.9) ++reached;
    ratios += format("%s%.3f", seed ? ", " : "", ratio);
  }
  const double elapsed = seconds_since(start);
  return {reached >= 2 && elapsed < 600.0,
          format("return/optimum per seed [%s], %d of 3 >= 0.9, %.0f s",
                 ratios.c_str(), reached, elapsed)};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// 10. Identical config and seed give byte-identical curves and logs.
Verdict determinism() {
  const fs::path root =
      fs::temp_directory_path() / "spinebound_acceptance_determinism";
  fs::remove_all(root);
  std::ostringstream log;
  bool same = true;
  std::string detail;
  for (EnvKind kind : {EnvKind::kToy, EnvKind::kBounding}) {
    RunConfig cfg;
    cfg.env_kind = kind;
    cfg.ppo.n_envs = 2;
    cfg.ppo.horizon = 64;
    cfg.ppo.max_total_steps = 384;
    cfg.ppo.normalizer_warmup_steps = 200;
    cfg.seed = 11;
    cfg.eval.trials = 2;
    cfg.eval.seconds = 2.0;
    std::string curves[2];
    std::string trajectories[2];
    for (int run = 0; run < 2; ++run) {
      cfg.output.dir = (root / (to_string(kind) + std::to_string(run))).string();
      run_training(cfg, log);
      curves[run] = slurp(fs::path(cfg.output.dir) / kCurveFile);
      if (kind == EnvKind::kBounding) {
        const Checkpoint cp = Checkpoint::load(
            (fs::path(cfg.output.dir) / kCheckpointFile).string());
        const fs::path eval_dir = fs::path(cfg.output.dir) / "eval";
        run_evaluation(cfg, cp, eval_dir.string(), log);
        trajectories[run] = slurp(eval_dir / "trajectory_trial0.csv") +
                            slurp(eval_dir / "trajectory_trial1.csv");
      }
    }
    const bool curve_same = !curves[0].empty() && curves[0] == curves[1];
    const bool log_same = trajectories[0] == trajectories[1];
    same = same && curve_same && log_same;
    detail += format("%s%s curves %s", detail.empty() ? "" : ", ",
                     to_string(kind).c_str(),
                     curve_same ? "identical" : "DIFFER");
    if (kind == EnvKind::kBounding) {
      same = same && !trajectories[0].empty();
      detail += format(", trajectory logs %s (%zu bytes)",
                       log_same ? "identical" : "DIFFER",
                       trajectories[0].size());
    }
  }
  fs::remove_all(root);
  return {same, detail};
}

}  // namespace
}  // namespace spinebound

int main() {
  using namespace spinebound;
  struct Criterion {
    int id;
    const char* name;
    Verdict (*run)();
  };
  const Criterion criteria[] = {
      {1, "kinematics round trip", kinematics_round_trip},
      {2, "reward exactness", reward_exactness},
      {3, "energy/CoT oracles", energy_and_cot_oracles},
      {4, "Froude consistency", froude_consistency},
      {5, "dynamics oracles", dynamics_oracles},
      {6, "PPO gradient check", gradient_check},
      {7, "PPO learning sanity", toy_learning},
      {10, "determinism", determinism},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failures;
    std::printf("%s criterion %d (%s): %s\n", v.pass ? "PASS" : "FAIL", c.id,
                c.name, v.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
