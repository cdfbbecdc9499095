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


#ifndef SPINEBOUND_LEARNER_HPP_
#define SPINEBOUND_LEARNER_HPP_

#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "spinebound/environment.hpp"
#include "spinebound/mlp.hpp"
#include "spinebound/normalizer.hpp"
#include "spinebound/rng.hpp"

namespace spinebound {

class Checkpoint;

struct PpoConfig {
  int n_envs = 30;
  int horizon = 256;  // control steps per env per iteration
  double clip_epsilon = 0.2;
  double gae_lambda = 0.95;
  double gamma = 0.99;
  double learning_rate = 3e-4;
  int epochs = 4;  // full-batch Adam steps per iteration
  double entropy_coef = 0.0;
  double value_loss_coef = 0.5;
  double max_grad_norm = 0.5;  // global gradient-norm clip; 0 disables
  std::int64_t max_total_steps = 10'000'000;
  std::uint64_t seed = 0;
  std::vector<int> hidden = {128, 64};
  double initial_log_std = std::log(0.5);
  int normalizer_warmup_steps = 1000;  // random-policy steps before training

  void validate() const;
  bool operator==(const PpoConfig&) const = default;
};

inline const double kMinLogStd = std::log(1e-3);
inline constexpr double kMaxLogStd = 0.0;

// Actor, critic and state-independent log standard deviations, stored in
// one flat parameter vector: [actor | critic | log_std].
template <typename Scalar>
class Policy {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Policy() = default;
  Policy(int obs_dim, int act_dim, const std::vector<int>& hidden)
      : actor_(layer_sizes(obs_dim, hidden, act_dim), OutputActivation::kTanh),
        critic_(layer_sizes(obs_dim, hidden, 1), OutputActivation::kLinear),
        params_(Vector::Zero(actor_.num_params() + critic_.num_params() +
                             act_dim)) {}

  const Mlp<Scalar>& actor() const { return actor_; }
  const Mlp<Scalar>& critic() const { return critic_; }
  int obs_dim() const { return actor_.input_size(); }
  int act_dim() const { return actor_.output_size(); }
  int num_params() const { return static_cast<int>(params_.size()); }
  int critic_offset() const { return actor_.num_params(); }
  int log_std_offset() const { return critic_offset() + critic_.num_params(); }

  Vector& params() { return params_; }
  const Vector& params() const { return params_; }
  const Scalar* actor_params() const { return params_.data(); }
  const Scalar* critic_params() const {
    return params_.data() + critic_offset();
  }
  auto log_std() const { return params_.segment(log_std_offset(), act_dim()); }
  auto log_std() { return params_.segment(log_std_offset(), act_dim()); }

  // Small actor output layer so initial means sit near the box center.
  void initialize(Rng& rng, double initial_log_std) {
    actor_.initialize(params_.data(), rng, 0.01);
    critic_.initialize(params_.data() + critic_offset(), rng, 1.0);
    log_std().setConstant(static_cast<Scalar>(initial_log_std));
  }

  template <typename T>
  Policy<T> cast() const {
    Policy<T> out(obs_dim(), act_dim(), hidden());
    out.params() = params_.template cast<T>();
    return out;
  }

  std::vector<int> hidden() const {
    const auto& s = actor_.sizes();
    return {s.begin() + 1, s.end() - 1};
  }

 private:
  static std::vector<int> layer_sizes(int in, const std::vector<int>& hidden,
                                      int out) {
    std::vector<int> sizes{in};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(out);
    return sizes;
  }

  Mlp<Scalar> actor_;
  Mlp<Scalar> critic_;
  Vector params_;
};

struct ActionDistribution {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;
};

// Mean in (-1, 1) from the tanh head, std = exp(clamped log_std).
template <typename Scalar>
ActionDistribution policy_forward(const Policy<Scalar>& policy,
                                  const Eigen::VectorXd& obs);

template <typename Scalar>
double value_forward(const Policy<Scalar>& policy, const Eigen::VectorXd& obs);

struct SampledAction {
  Eigen::VectorXd action;
  double log_prob = 0.0;
};

SampledAction sample_action(const ActionDistribution& dist, Rng& rng);
// Evaluation mode: the mean and its log-density.
SampledAction mean_action(const ActionDistribution& dist);

double gaussian_log_prob(const Eigen::VectorXd& action,
                         const Eigen::VectorXd& mean,
                         const Eigen::VectorXd& std);
// sum_j (log sigma_j + 0.5 log(2 pi e))
double gaussian_entropy(const Eigen::VectorXd& std);

struct EpisodeSummary {
  double total_return = 0.0;
  double mean_speed = 0.0;  // mean forward velocity over the episode
  int length = 0;
  bool operator==(const EpisodeSummary&) const = default;
};

// Rollout storage. Samples are env-major: index = env * horizon + t.
struct TrajectoryBatch {
  int n_envs = 0;
  int horizon = 0;
  Eigen::MatrixXd observations;      // obs_dim x N, as fed to the policy
  Eigen::MatrixXd raw_observations;  // obs_dim x N, physical units
  Eigen::MatrixXd actions;           // act_dim x N, pre-clamp samples
  Eigen::VectorXd log_probs;
  Eigen::VectorXd rewards;
  Eigen::VectorXd values;
  Eigen::VectorXd forward_velocity;
  std::vector<std::uint8_t> dones;
  Eigen::VectorXd bootstrap_values;  // per env, value after the last step
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;
  std::vector<EpisodeSummary> episodes;  // completed during collection

  int size() const { return n_envs * horizon; }
  bool operator==(const TrajectoryBatch&) const = default;
};

// GAE(gamma, lambda) per env segment, cut at done flags; returns =
// advantages + values. Advantages are then normalized when requested.
void compute_gae(TrajectoryBatch& batch, double gamma, double lambda,
                 bool normalize = true);

// min(rho A, clip(rho, 1 - eps, 1 + eps) A)
double clipped_surrogate(double ratio, double advantage, double epsilon);

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  bool operator==(const UpdateStats&) const = default;
};

template <typename Scalar>
struct LossEvaluation {
  double total = 0.0;
  UpdateStats stats;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> gradient;
};

// Total loss -surrogate + c_v value_loss - c_e entropy over the full batch
// and its gradient with respect to the flat parameters.
template <typename Scalar>
LossEvaluation<Scalar> ppo_loss(const Policy<Scalar>& policy,
                                const TrajectoryBatch& batch,
                                const PpoConfig& cfg);

template <typename Scalar>
class Adam {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Adam() = default;
  explicit Adam(int size, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : m_(Vector::Zero(size)),
        v_(Vector::Zero(size)),
        beta1_(beta1),
        beta2_(beta2),
        eps_(eps) {}

  void step(Vector& params, const Vector& grad, double lr) {
    ++t_;
    const Scalar b1 = static_cast<Scalar>(beta1_);
    const Scalar b2 = static_cast<Scalar>(beta2_);
    m_ = b1 * m_ + (Scalar(1) - b1) * grad;
    v_ = b2 * v_ + (Scalar(1) - b2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    const Scalar step_size = static_cast<Scalar>(lr * std::sqrt(c2) / c1);
    const Scalar eps = static_cast<Scalar>(eps_ * std::sqrt(c2));
    params.array() -= step_size * m_.array() / (v_.array().sqrt() + eps);
  }

  const Vector& first_moment() const { return m_; }
  const Vector& second_moment() const { return v_; }
  std::int64_t steps() const { return t_; }
  void set_state(Vector m, Vector v, std::int64_t t) {
    m_ = std::move(m);
    v_ = std::move(v);
    t_ = t;
  }

 private:
  Vector m_;
  Vector v_;
  std::int64_t t_ = 0;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
};

// `epochs` full-batch Adam steps. Stats are averaged over the epochs.
// Throws NumericalDivergence, leaving `policy` untouched, when a loss or
// gradient is not finite.
UpdateStats ppo_update(const TrajectoryBatch& batch, Policy<float>& policy,
                       Adam<float>& adam, const PpoConfig& cfg);

using EnvFactory = std::function<std::unique_ptr<Environment>(int index)>;

// One environment with its private random stream and episode bookkeeping.
struct EnvSlot {
  std::unique_ptr<Environment> env;
  Rng rng;
  Eigen::VectorXd observation;  // current raw observation
  double episode_return = 0.0;
  double episode_speed_sum = 0.0;
  int episode_length = 0;
};

std::vector<EnvSlot> make_env_slots(const EnvFactory& factory, int n_envs,
                                    std::uint64_t seed);

// Worker threads for collection: SPINEBOUND_WORKERS when set, else the
// hardware concurrency, never more than n_envs.
int worker_count(int n_envs);

// Advances every env `horizon` control steps under the stochastic policy.
// Finished episodes reset from the env's own stream. The result does not
// depend on the worker count.
TrajectoryBatch collect_rollouts(std::vector<EnvSlot>& envs,
                                 const Policy<float>& policy,
                                 const ObservationNormalizer& normalizer,
                                 int horizon, int workers);

// One full episode; deterministic mode acts with the mean.
EpisodeSummary run_episode(Environment& env, const Policy<float>& policy,
                           const ObservationNormalizer& normalizer,
                           std::uint64_t seed, bool deterministic,
                           Rng* rng = nullptr);

struct CurveRow {
  int iteration = 0;
  std::int64_t total_steps = 0;
  double mean_episode_reward = 0.0;  // over the recent completed episodes
  double mean_forward_speed = 0.0;   // over the iteration's samples
  UpdateStats stats;
  bool operator==(const CurveRow&) const = default;
};

void write_learning_curve_csv(std::ostream& out,
                              const std::vector<CurveRow>& curve,
                              const std::string& config_hash);

// PPO training loop state: collect, estimate advantages, update.
class Trainer {
 public:
  static constexpr int kRecentEpisodes = 20;

  Trainer(PpoConfig cfg, EnvFactory factory);

  bool finished() const { return total_steps_ >= cfg_.max_total_steps; }
  // One collect/update iteration.
  void iterate();
  // Iterates until finished; `on_iteration` runs after every iteration.
  void run(const std::function<void(const Trainer&)>& on_iteration = {});

  const PpoConfig& config() const { return cfg_; }
  const Policy<float>& policy() const { return policy_; }
  const ObservationNormalizer& normalizer() const { return normalizer_; }
  const std::vector<CurveRow>& curve() const { return curve_; }
  std::int64_t total_steps() const { return total_steps_; }
  int iteration() const { return iteration_; }

  // Complete training state, sufficient for a bit-exact resume.
  void save(Checkpoint& checkpoint) const;
  void load(const Checkpoint& checkpoint);

 private:
  PpoConfig cfg_;
  EnvFactory factory_;
  Policy<float> policy_;
  Adam<float> adam_;
  ObservationNormalizer normalizer_;
  std::vector<EnvSlot> envs_;
  std::deque<double> recent_returns_;
  std::vector<CurveRow> curve_;
  std::int64_t total_steps_ = 0;
  int iteration_ = 0;
};

struct TrainResult {
  Policy<float> policy;
  ObservationNormalizer normalizer;
  std::vector<CurveRow> curve;
};

TrainResult train(const PpoConfig& cfg, const EnvFactory& factory,
                  const std::function<void(const Trainer&)>& on_iteration = {});

struct TrainedPolicy {
  Policy<float> policy;
  ObservationNormalizer normalizer;
};

// Policy and normalizer of a Trainer checkpoint, without the training state.
// Throws IncompatibleArtifact on a malformed layout.
TrainedPolicy load_trained_policy(const Checkpoint& checkpoint);

}  // namespace spinebound

#endif  // SPINEBOUND_LEARNER_HPP_
