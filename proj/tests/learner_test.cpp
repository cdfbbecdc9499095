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

#include "spinebound/learner.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "spinebound/checkpoint.hpp"
#include "spinebound/errors.hpp"
#include "spinebound/normalizer.hpp"
#include "spinebound/toy_env.hpp"

namespace spinebound {
namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

Policy<double> small_policy(std::uint64_t seed) {
  Policy<double> p(3, 2, {5, 4});
  Rng rng(seed);
  p.initialize(rng, std::log(0.6));
  // larger output weights so tanh and ReLU both operate off their origin
  for (int i = 0; i < p.num_params(); ++i) p.params()[i] = rng.normal() * 0.7;
  p.log_std() << std::log(0.6), std::log(0.3);
  return p;
}

// Four-sample batch whose old log-probabilities sit around the current
// policy, so some ratios are clipped and some are not.
TrajectoryBatch toy_batch(const Policy<double>& p, Rng& rng,
                          double log_prob_jitter) {
  TrajectoryBatch b;
  b.n_envs = 1;
  b.horizon = 4;
  b.observations = Eigen::MatrixXd(3, 4);
  b.actions = Eigen::MatrixXd(2, 4);
  b.log_probs.resize(4);
  b.advantages.resize(4);
  b.returns.resize(4);
  for (int i = 0; i < 4; ++i) {
    for (int k = 0; k < 3; ++k) b.observations(k, i) = rng.normal();
    const ActionDistribution d = policy_forward(p, b.observations.col(i));
    for (int j = 0; j < 2; ++j) {
      b.actions(j, i) = d.mean[j] + d.std[j] * rng.normal();
    }
    b.log_probs[i] =
        gaussian_log_prob(b.actions.col(i), d.mean, d.std) +
        log_prob_jitter * (i % 2 == 0 ? 1.0 : 0.1) * (i < 2 ? 1.0 : -1.0);
    b.advantages[i] = rng.normal();
    b.returns[i] = rng.normal();
  }
  return b;
}

// Bitwise comparison, so NaN rewards before the first finished episode match.
bool same_curve(const std::vector<CurveRow>& a, const std::vector<CurveRow>& b) {
  std::ostringstream sa, sb;
  write_learning_curve_csv(sa, a, "h");
  write_learning_curve_csv(sb, b, "h");
  return sa.str() == sb.str();
}

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

TEST(PolicyForwardTest, ZeroNetworkGivesZeroMean) {
  Policy<float> p(34, 5, {128, 64});
  p.params().setZero();
  const Eigen::VectorXd obs = Eigen::VectorXd::LinSpaced(34, -3, 3);
  const ActionDistribution d = policy_forward(p, obs);
  EXPECT_TRUE(d.mean.isZero(0.0));
  EXPECT_TRUE(d.std.isOnes(0.0));
}

TEST(PolicyForwardTest, DeterministicAndBounded) {
  Policy<float> p(34, 5, {128, 64});
  Rng rng(3);
  p.initialize(rng, std::log(0.5));
  Eigen::VectorXd obs(34);
  for (int i = 0; i < 34; ++i) obs[i] = 5.0 * rng.normal();
  const ActionDistribution a = policy_forward(p, obs);
  const ActionDistribution b = policy_forward(p, obs);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_LT(a.mean.cwiseAbs().maxCoeff(), 1.0);
  EXPECT_NEAR(a.std[0], 0.5, 1e-6);
}

TEST(PolicyForwardTest, DeadInputColumnIsIgnored) {
  Policy<double> p(34, 5, {128, 64});
  Rng rng(4);
  p.initialize(rng, std::log(0.5));
  // zero the first-layer weight column of input 7
  Eigen::Map<Eigen::MatrixXd> w(p.params().data(), 128, 34);
  w.col(7).setZero();
  Eigen::Map<Eigen::MatrixXd> wc(p.params().data() + p.critic_offset(), 128, 34);
  wc.col(7).setZero();
  Eigen::VectorXd obs(34);
  for (int i = 0; i < 34; ++i) obs[i] = rng.normal();
  Eigen::VectorXd other = obs;
  other[7] += 3.0;
  EXPECT_EQ(policy_forward(p, obs).mean, policy_forward(p, other).mean);
  EXPECT_EQ(value_forward(p, obs), value_forward(p, other));
}

TEST(PolicyForwardTest, LogStdIsClamped) {
  Policy<double> p(2, 2, {4});
  p.params().setZero();
  p.log_std() << -20.0, 3.0;
  const ActionDistribution d = policy_forward(p, Eigen::VectorXd::Zero(2));
  EXPECT_NEAR(d.std[0], 1e-3, 1e-15);
  EXPECT_EQ(d.std[1], 1.0);
}

TEST(GaussianTest, LogProbExamples) {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  EXPECT_NEAR(gaussian_log_prob(zero, zero, one), -0.9189385332, 1e-10);
  Eigen::VectorXd mean(3), std(3);
  mean << 0.1, -0.4, 0.7;
  std << 0.5, 0.2, 1.0;
  const double expected =
      -(std.array().log().sum()) - 3 * kHalfLog2Pi;
  EXPECT_NEAR(gaussian_log_prob(mean, mean, std), expected, 1e-14);
  EXPECT_NEAR(mean_action({mean, std}).log_prob, expected, 1e-14);
}

TEST(GaussianTest, EntropyClosedForm) {
  Eigen::VectorXd std(2);
  std << 0.5, 2.0;
  const double closed = std::log(0.5) + std::log(2.0) +
                        std::log(2 * std::numbers::pi * std::numbers::e);
  EXPECT_NEAR(gaussian_entropy(std), closed, 1e-14);
}

TEST(GaussianTest, SmallStdSamplesConcentrateOnMean) {
  Eigen::VectorXd mean(2), std(2);
  mean << 0.3, -0.6;
  std << 1e-3, 1e-3;
  Rng rng(11);
  const int n = 4000;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(2);
  for (int i = 0; i < n; ++i) sum += sample_action({mean, std}, rng).action;
  const Eigen::VectorXd empirical = sum / n;
  const double standard_error = 1e-3 / std::sqrt(n);
  EXPECT_LT((empirical - mean).cwiseAbs().maxCoeff(), 3 * standard_error);
}

TrajectoryBatch gae_batch(int horizon) {
  TrajectoryBatch b;
  b.n_envs = 1;
  b.horizon = horizon;
  b.rewards = Eigen::VectorXd::Zero(horizon);
  b.values = Eigen::VectorXd::Zero(horizon);
  b.dones.assign(horizon, 0);
  b.bootstrap_values = Eigen::VectorXd::Zero(1);
  return b;
}

TEST(GaeTest, SingleTerminalStep) {
  TrajectoryBatch b = gae_batch(1);
  b.rewards[0] = 1.0;
  b.dones[0] = 1;
  b.bootstrap_values[0] = 123.0;  // ignored after done
  compute_gae(b, 0.99, 0.95, false);
  EXPECT_EQ(b.advantages[0], 1.0);
  EXPECT_EQ(b.returns[0], 1.0);
}

TEST(GaeTest, LambdaZeroIsTdResidual) {
  TrajectoryBatch b = gae_batch(5);
  Rng rng(2);
  for (int i = 0; i < 5; ++i) {
    b.rewards[i] = rng.normal();
    b.values[i] = rng.normal();
  }
  b.bootstrap_values[0] = 0.7;
  b.dones[2] = 1;
  compute_gae(b, 0.9, 0.0, false);
  for (int i = 0; i < 5; ++i) {
    const double next =
        i == 4 ? 0.7 : (b.dones[i] ? 0.0 : b.values[i + 1]);
    EXPECT_NEAR(b.advantages[i], b.rewards[i] + 0.9 * next - b.values[i],
                1e-15);
  }
}

TEST(GaeTest, LambdaOneIsRewardToGo) {
  TrajectoryBatch b = gae_batch(6);
  b.rewards << 1, 2, 3, 4, 5, 6;
  b.dones[2] = 1;
  compute_gae(b, 1.0, 1.0, false);
  const double expected[] = {6, 5, 3, 15, 11, 6};
  for (int i = 0; i < 6; ++i) EXPECT_DOUBLE_EQ(b.advantages[i], expected[i]);
}

TEST(GaeTest, SegmentsAreIndependentAndNormalized) {
  TrajectoryBatch b = gae_batch(6);
  b.n_envs = 2;
  b.horizon = 3;
  b.rewards << 1, 1, 1, 5, 5, 5;
  b.bootstrap_values = Eigen::VectorXd::Zero(2);
  compute_gae(b, 1.0, 1.0, false);
  EXPECT_DOUBLE_EQ(b.advantages[2], 1.0);  // env 0 does not see env 1
  EXPECT_DOUBLE_EQ(b.advantages[3], 15.0);
  compute_gae(b, 0.99, 0.95, true);
  EXPECT_NEAR(b.advantages.mean(), 0.0, 1e-12);
  const double var = (b.advantages.array() - b.advantages.mean()).square().sum() / 5;
  EXPECT_NEAR(var, 1.0, 1e-6);
}

TEST(SurrogateTest, ClipExamples) {
  EXPECT_DOUBLE_EQ(clipped_surrogate(1.5, 1.0, 0.2), 1.2);
  EXPECT_DOUBLE_EQ(clipped_surrogate(0.5, -1.0, 0.2), -0.8);
  Rng rng(6);
  for (int i = 0; i < 1000; ++i) {
    const double rho = rng.uniform(0.0, 3.0);
    const double adv = rng.normal();
    const double s = clipped_surrogate(rho, adv, 0.2);
    EXPECT_LE(s, rho * adv + 1e-15);
    if (std::abs(rho - 1.0) <= 0.2) EXPECT_DOUBLE_EQ(s, rho * adv);
  }
}

TEST(PpoLossTest, GradientMatchesFiniteDifferences) {
  PpoConfig cfg;
  cfg.entropy_coef = 0.05;
  cfg.value_loss_coef = 0.5;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    Policy<double> p = small_policy(seed);
    Rng rng(seed + 10);
    const TrajectoryBatch batch = toy_batch(p, rng, 0.4);
    const auto eval = ppo_loss(p, batch, cfg);
    const double h = 1e-6;
    for (int k = 0; k < p.num_params(); ++k) {
      Policy<double> plus = p;
      Policy<double> minus = p;
      plus.params()[k] += h;
      minus.params()[k] -= h;
      const double fd = (ppo_loss(plus, batch, cfg).total -
                         ppo_loss(minus, batch, cfg).total) /
                        (2 * h);
      worst = std::max(worst, relative_error(eval.gradient[k], fd));
    }
    EXPECT_EQ(eval.stats.clip_fraction, 0.5);
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(PpoLossTest, UnclippedObjectiveIsVanillaPolicyGradient) {
  PpoConfig cfg;
  cfg.clip_epsilon = 1e9;
  cfg.value_loss_coef = 0.0;
  cfg.entropy_coef = 0.0;
  Policy<double> p = small_policy(21);
  Rng rng(5);
  const TrajectoryBatch batch = toy_batch(p, rng, 0.0);
  const auto eval = ppo_loss(p, batch, cfg);
  // oracle: finite differences of -mean(A log pi)
  auto pg_objective = [&](const Policy<double>& q) {
    double sum = 0.0;
    for (int i = 0; i < 4; ++i) {
      const ActionDistribution d = policy_forward(q, batch.observations.col(i));
      sum += batch.advantages[i] *
             gaussian_log_prob(batch.actions.col(i), d.mean, d.std);
    }
    return -sum / 4;
  };
  Eigen::VectorXd fd(p.num_params());
  for (int k = 0; k < p.num_params(); ++k) {
    Policy<double> plus = p;
    Policy<double> minus = p;
    plus.params()[k] += 1e-6;
    minus.params()[k] -= 1e-6;
    fd[k] = (pg_objective(plus) - pg_objective(minus)) / 2e-6;
  }
  const double cosine =
      eval.gradient.dot(fd) / (eval.gradient.norm() * fd.norm());
  EXPECT_GT(cosine, 0.999);
}

TEST(PpoLossTest, StatsAtOldPolicy) {
  PpoConfig cfg;
  Policy<double> p = small_policy(8);
  Rng rng(9);
  const TrajectoryBatch batch = toy_batch(p, rng, 0.0);
  const auto eval = ppo_loss(p, batch, cfg);
  EXPECT_EQ(eval.stats.clip_fraction, 0.0);
  EXPECT_NEAR(eval.stats.approx_kl, 0.0, 1e-12);
  EXPECT_NEAR(eval.stats.policy_loss, -batch.advantages.mean(), 1e-12);
  Eigen::VectorXd std(2);
  std << 0.6, 0.3;
  EXPECT_NEAR(eval.stats.entropy, gaussian_entropy(std), 1e-12);
}

TEST(AdamTest, FirstStepMovesByLearningRate) {
  Adam<double> adam(3);
  Eigen::VectorXd params = Eigen::VectorXd::Zero(3);
  Eigen::VectorXd grad(3);
  grad << 2.0, -0.5, 1e-3;
  adam.step(params, grad, 0.1);
  EXPECT_NEAR(params[0], -0.1, 1e-7);
  EXPECT_NEAR(params[1], 0.1, 1e-7);
  EXPECT_NEAR(params[2], -0.1, 1e-5);
  EXPECT_EQ(adam.steps(), 1);
}

TEST(PpoUpdateTest, ImprovesSurrogateAndRejectsNonFiniteLoss) {
  PpoConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.epochs = 3;
  Policy<double> pd = small_policy(31);
  Policy<float> p = pd.cast<float>();
  Rng rng(2);
  TrajectoryBatch batch = toy_batch(pd, rng, 0.0);
  Adam<float> adam(p.num_params());
  const double before = ppo_loss(p, batch, cfg).total;
  const UpdateStats stats = ppo_update(batch, p, adam, cfg);
  EXPECT_LT(ppo_loss(p, batch, cfg).total, before);
  EXPECT_GE(stats.clip_fraction, 0.0);
  EXPECT_LE(stats.clip_fraction, 1.0);
  EXPECT_EQ(adam.steps(), 3);

  const Policy<float> kept = p;
  batch.advantages[0] = std::nan("");
  EXPECT_THROW(ppo_update(batch, p, adam, cfg), NumericalDivergence);
  EXPECT_EQ(p.params(), kept.params());
  EXPECT_EQ(adam.steps(), 3);
}

TEST(NormalizerTest, MatchesTwoPassStatistics) {
  Rng rng(7);
  Eigen::MatrixXd all(4, 0);
  ObservationNormalizer norm(4);
  for (int chunk : {1, 7, 100, 3, 250}) {
    Eigen::MatrixXd x(4, chunk);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = 3.0 + 10.0 * rng.normal();
    norm.update(x);
    Eigen::MatrixXd grown(4, all.cols() + chunk);
    grown << all, x;
    all = grown;
  }
  const Eigen::VectorXd mean = all.rowwise().mean();
  const Eigen::VectorXd var =
      (all.colwise() - mean).rowwise().squaredNorm() / all.cols();
  EXPECT_LT((norm.mean() - mean).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((norm.variance() - var).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_EQ(norm.count(), all.cols());
  const Eigen::VectorXd z = norm.normalize(all.col(0));
  const Eigen::VectorXd expected =
      (all.col(0) - mean).array() / (var.array() + 1e-8).sqrt();
  EXPECT_LT((z - expected).cwiseAbs().maxCoeff(), 1e-9);
}

EnvFactory toy_factory() {
  return [](int) { return std::make_unique<ToyVelocityEnv>(); };
}

Policy<float> toy_policy() {
  Policy<float> p(1, 1, {8, 8});
  Rng rng(1);
  p.initialize(rng, std::log(0.5));
  return p;
}

TEST(RolloutTest, BatchShapes) {
  auto envs = make_env_slots(toy_factory(), 30, 1);
  const TrajectoryBatch b =
      collect_rollouts(envs, toy_policy(), ObservationNormalizer(1), 256, 1);
  EXPECT_EQ(b.size(), 7680);
  EXPECT_EQ(b.observations.cols(), 7680);
  EXPECT_EQ(b.dones.size(), 7680u);
  auto one = make_env_slots(toy_factory(), 1, 1);
  const TrajectoryBatch single =
      collect_rollouts(one, toy_policy(), ObservationNormalizer(1), 1, 1);
  EXPECT_EQ(single.size(), 1);
  EXPECT_EQ(single.bootstrap_values.size(), 1);
}

TEST(RolloutTest, IndependentOfWorkerCount) {
  auto a = make_env_slots(toy_factory(), 5, 3);
  auto b = make_env_slots(toy_factory(), 5, 3);
  const Policy<float> p = toy_policy();
  for (int rep = 0; rep < 2; ++rep) {
    const TrajectoryBatch ba =
        collect_rollouts(a, p, ObservationNormalizer(1), 70, 1);
    const TrajectoryBatch bb =
        collect_rollouts(b, p, ObservationNormalizer(1), 70, 4);
    EXPECT_TRUE(ba == bb);
    EXPECT_EQ(ba.episodes.size(), 5u);
  }
}

TEST(TrainTest, ZeroStepsReturnsInitialPolicy) {
  PpoConfig cfg;
  cfg.n_envs = 2;
  cfg.horizon = 10;
  cfg.hidden = {8};
  cfg.max_total_steps = 0;
  cfg.seed = 4;
  const TrainResult r = train(cfg, toy_factory());
  EXPECT_TRUE(r.curve.empty());
  Trainer fresh(cfg, toy_factory());
  EXPECT_EQ(r.policy.params(), fresh.policy().params());
}

PpoConfig small_toy_config() {
  PpoConfig cfg;
  cfg.n_envs = 3;
  cfg.horizon = 40;
  cfg.hidden = {16, 16};
  cfg.max_total_steps = 600;
  cfg.seed = 9;
  cfg.normalizer_warmup_steps = 100;
  return cfg;
}

TEST(TrainTest, IdenticalConfigGivesIdenticalCurves) {
  const PpoConfig cfg = small_toy_config();
  const TrainResult a = train(cfg, toy_factory());
  const TrainResult b = train(cfg, toy_factory());
  ASSERT_EQ(a.curve.size(), 5u);
  EXPECT_TRUE(same_curve(a.curve, b.curve));
  EXPECT_EQ(a.policy.params(), b.policy.params());
}

TEST(TrainTest, ResumeIsBitExact) {
  PpoConfig cfg = small_toy_config();
  const TrainResult direct = train(cfg, toy_factory());

  PpoConfig first = cfg;
  first.max_total_steps = 240;
  Trainer partial(first, toy_factory());
  partial.run();
  Checkpoint cp("hash");
  partial.save(cp);
  std::stringstream buffer;
  cp.write(buffer);

  Trainer resumed(cfg, toy_factory());
  resumed.load(Checkpoint::read(buffer));
  EXPECT_EQ(resumed.total_steps(), 240);
  resumed.run();
  EXPECT_TRUE(same_curve(resumed.curve(), direct.curve));
  EXPECT_EQ(resumed.policy().params(), direct.policy.params());
  EXPECT_TRUE(resumed.normalizer() == direct.normalizer);
}

TEST(TrainTest, LoadRejectsMismatchedLayout) {
  PpoConfig cfg = small_toy_config();
  Trainer a(cfg, toy_factory());
  Checkpoint cp;
  a.save(cp);
  cfg.hidden = {8};
  Trainer b(cfg, toy_factory());
  EXPECT_THROW(b.load(cp), IncompatibleArtifact);
}

TEST(ToyEnvTest, DynamicsAndOptimum) {
  ToyConfig cfg;
  cfg.initial_spread = 0.0;
  ToyVelocityEnv env(cfg);
  env.reset(1);
  Transition t = env.step(Eigen::VectorXd::Constant(1, 5.0));  // clamped
  EXPECT_DOUBLE_EQ(t.forward_velocity, 0.25);
  EXPECT_NEAR(t.reward, std::exp(-0.75 * 0.75 / 0.08), 1e-15);
  // greedy from rest: four saturated steps, then exact tracking
  double v = 0.0;
  double expected = 0.0;
  for (int k = 0; k < 4; ++k) {
    v = 0.9 * v + 0.25;
    expected += std::exp(-(v - 1) * (v - 1) / 0.08);
  }
  expected += 46.0;
  EXPECT_NEAR(toy_optimal_return(cfg, 0.0), expected, 1e-12);
  for (int k = 1; k < 50; ++k) t = env.step(Eigen::VectorXd::Zero(1));
  EXPECT_TRUE(t.done);
  EXPECT_THROW(env.step(Eigen::VectorXd::Zero(1)), ContractViolation);
}

TEST(CheckpointTest, RoundTripAndGuards) {
  Checkpoint cp("abc");
  cp.put_f32("w", {2, 3}, {1, 2, 3, 4, 5, 6.5f});
  cp.put_f64("x", {std::nan(""), -0.0, 1e300});
  cp.put_bytes("rng", std::string("a\0b", 3));
  std::stringstream buffer;
  cp.write(buffer);
  const std::string bytes = buffer.str();
  const Checkpoint back = Checkpoint::read(buffer);
  EXPECT_EQ(back.config_hash(), "abc");
  EXPECT_EQ(back.f32("w"), cp.f32("w"));
  EXPECT_EQ(back.get("w").shape, (std::vector<std::uint64_t>{2, 3}));
  EXPECT_TRUE(std::isnan(back.f64("x")[0]));
  EXPECT_TRUE(std::signbit(back.f64("x")[1]));
  EXPECT_EQ(back.bytes("rng"), std::string("a\0b", 3));
  EXPECT_THROW(back.f64("w"), IncompatibleArtifact);
  EXPECT_THROW(back.get("missing"), IncompatibleArtifact);

  std::stringstream bad_magic("NOTACKPT");
  EXPECT_THROW(Checkpoint::read(bad_magic), IncompatibleArtifact);
  std::string wrong_version = bytes;
  wrong_version[8] = 7;
  std::stringstream versioned(wrong_version);
  EXPECT_THROW(Checkpoint::read(versioned), IncompatibleArtifact);
  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(Checkpoint::read(truncated), IncompatibleArtifact);
}

TEST(CheckpointTest, Float32PayloadIsLittleEndian) {
  Checkpoint cp;
  cp.put_f32("one", {1}, {1.0f});
  std::stringstream buffer;
  cp.write(buffer);
  const std::string bytes = buffer.str();
  // 1.0f = 0x3f800000, least significant byte first
  EXPECT_EQ(bytes.substr(bytes.size() - 4), std::string("\x00\x00\x80\x3f", 4));
}

}  // namespace
}  // namespace spinebound
