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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include "spinebound/checkpoint.hpp"
#include "spinebound/errors.hpp"

namespace spinebound {
namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

double clamp_log_std(double value) {
  return std::clamp(value, kMinLogStd, kMaxLogStd);
}

void write_number(std::ostream& out, double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.9g", value);
  out << buffer;
}

std::vector<std::uint64_t> shape1(std::size_t n) { return {n}; }

template <typename Vector>
std::vector<float> to_floats(const Vector& v) {
  return {v.data(), v.data() + v.size()};
}

Eigen::VectorXf from_floats(const std::vector<float>& v) {
  return Eigen::Map<const Eigen::VectorXf>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

Eigen::VectorXd from_doubles(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void PpoConfig::validate() const {
  if (n_envs < 1) throw ConfigError("ppo.n_envs", "must be >= 1");
  if (horizon < 1) throw ConfigError("ppo.horizon", "must be >= 1");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0))
    throw ConfigError("ppo.clip_epsilon", "must lie in (0, 1)");
  if (!(gae_lambda > 0.0 && gae_lambda <= 1.0))
    throw ConfigError("ppo.gae_lambda", "must lie in (0, 1]");
  if (!(gamma > 0.0 && gamma <= 1.0))
    throw ConfigError("ppo.gamma", "must lie in (0, 1]");
  if (!(learning_rate > 0.0))
    throw ConfigError("ppo.learning_rate", "must be > 0");
  if (epochs < 1) throw ConfigError("ppo.epochs", "must be >= 1");
  if (!(entropy_coef >= 0.0))
    throw ConfigError("ppo.entropy_coef", "must be >= 0");
  if (!(value_loss_coef >= 0.0))
    throw ConfigError("ppo.value_loss_coef", "must be >= 0");
  if (!(max_grad_norm >= 0.0))
    throw ConfigError("ppo.max_grad_norm", "must be >= 0");
  if (max_total_steps < 0)
    throw ConfigError("ppo.max_total_steps", "must be >= 0");
  if (hidden.empty()) throw ConfigError("ppo.hidden", "needs a layer");
  for (int h : hidden) {
    if (h < 1) throw ConfigError("ppo.hidden", "sizes must be >= 1");
  }
  if (!(initial_log_std >= kMinLogStd && initial_log_std <= kMaxLogStd))
    throw ConfigError("ppo.initial_log_std", "must lie in [log 1e-3, 0]");
  if (normalizer_warmup_steps < 0)
    throw ConfigError("ppo.normalizer_warmup_steps", "must be >= 0");
}

template <typename Scalar>
ActionDistribution policy_forward(const Policy<Scalar>& policy,
                                  const Eigen::VectorXd& obs) {
  using Vector = typename Policy<Scalar>::Vector;
  const Vector x = obs.cast<Scalar>();
  ActionDistribution d;
  d.mean = policy.actor().forward_one(policy.actor_params(), x).template cast<double>();
  d.std.resize(policy.act_dim());
  for (int j = 0; j < policy.act_dim(); ++j) {
    d.std[j] = std::exp(clamp_log_std(static_cast<double>(policy.log_std()[j])));
  }
  return d;
}

template <typename Scalar>
double value_forward(const Policy<Scalar>& policy, const Eigen::VectorXd& obs) {
  using Vector = typename Policy<Scalar>::Vector;
  const Vector x = obs.cast<Scalar>();
  return static_cast<double>(
      policy.critic().forward_one(policy.critic_params(), x)[0]);
}

SampledAction sample_action(const ActionDistribution& dist, Rng& rng) {
  SampledAction s;
  s.action.resize(dist.mean.size());
  for (Eigen::Index j = 0; j < dist.mean.size(); ++j) {
    s.action[j] = dist.mean[j] + dist.std[j] * rng.normal();
  }
  s.log_prob = gaussian_log_prob(s.action, dist.mean, dist.std);
  return s;
}

SampledAction mean_action(const ActionDistribution& dist) {
  return {dist.mean, gaussian_log_prob(dist.mean, dist.mean, dist.std)};
}

double gaussian_log_prob(const Eigen::VectorXd& action,
                         const Eigen::VectorXd& mean,
                         const Eigen::VectorXd& std) {
  double lp = 0.0;
  for (Eigen::Index j = 0; j < action.size(); ++j) {
    const double z = (action[j] - mean[j]) / std[j];
    lp += -0.5 * z * z - std::log(std[j]) - kHalfLog2Pi;
  }
  return lp;
}

double gaussian_entropy(const Eigen::VectorXd& std) {
  return (std.array().log() + 0.5 * std::log(2.0 * std::numbers::pi *
                                             std::numbers::e))
      .sum();
}

void compute_gae(TrajectoryBatch& batch, double gamma, double lambda,
                 bool normalize) {
  const int n = batch.size();
  batch.advantages.resize(n);
  for (int e = 0; e < batch.n_envs; ++e) {
    double gae = 0.0;
    for (int t = batch.horizon - 1; t >= 0; --t) {
      const int i = e * batch.horizon + t;
      const double next_value = t + 1 == batch.horizon
                                    ? batch.bootstrap_values[e]
                                    : batch.values[i + 1];
      const double live = batch.dones[i] ? 0.0 : 1.0;
      const double delta =
          batch.rewards[i] + gamma * next_value * live - batch.values[i];
      gae = delta + gamma * lambda * live * gae;
      batch.advantages[i] = gae;
    }
  }
  batch.returns = batch.advantages + batch.values;
  if (normalize && n > 1) {
    const double mean = batch.advantages.mean();
    const double var =
        (batch.advantages.array() - mean).square().sum() / (n - 1);
    batch.advantages =
        (batch.advantages.array() - mean) / (std::sqrt(var) + 1e-8);
  }
}

double clipped_surrogate(double ratio, double advantage, double epsilon) {
  const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
  return std::min(ratio * advantage, clipped * advantage);
}

template <typename Scalar>
LossEvaluation<Scalar> ppo_loss(const Policy<Scalar>& policy,
                                const TrajectoryBatch& batch,
                                const PpoConfig& cfg) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const int n = batch.size();
  const int act = policy.act_dim();
  if (n == 0) throw ContractViolation("empty batch");

  LossEvaluation<Scalar> out;
  out.gradient = Vector::Zero(policy.num_params());
  const Matrix x = batch.observations.cast<Scalar>();

  typename Mlp<Scalar>::Cache actor_cache;
  const Matrix mean = policy.actor().forward(policy.actor_params(), x, &actor_cache);
  typename Mlp<Scalar>::Cache critic_cache;
  const Matrix value =
      policy.critic().forward(policy.critic_params(), x, &critic_cache);

  Vector log_std(act);
  Vector inv_var(act);
  for (int j = 0; j < act; ++j) {
    log_std[j] = static_cast<Scalar>(
        clamp_log_std(static_cast<double>(policy.log_std()[j])));
    inv_var[j] = std::exp(Scalar(-2) * log_std[j]);
  }

  const Matrix diff = batch.actions.cast<Scalar>() - mean;
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(n);
  Matrix grad_mean(act, n);
  Vector grad_log_std = Vector::Zero(act);
  double surrogate_sum = 0.0;
  double clipped_count = 0.0;
  double kl_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    Scalar log_prob(0);
    for (int j = 0; j < act; ++j) {
      log_prob += Scalar(-0.5) * diff(j, i) * diff(j, i) * inv_var[j] -
                  log_std[j] - static_cast<Scalar>(kHalfLog2Pi);
    }
    const double log_ratio =
        static_cast<double>(log_prob) - batch.log_probs[i];
    const double ratio = std::exp(log_ratio);
    const double adv = batch.advantages[i];
    const double unclipped = ratio * adv;
    const double clipped =
        std::clamp(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon) *
        adv;
    surrogate_sum += std::min(unclipped, clipped);
    if (std::abs(ratio - 1.0) > cfg.clip_epsilon) clipped_count += 1.0;
    kl_sum += (ratio - 1.0) - log_ratio;
    // d(-surrogate)/d log_prob; zero where the clipped branch is the min
    const Scalar g = unclipped <= clipped
                         ? static_cast<Scalar>(-unclipped) * inv_n
                         : Scalar(0);
    for (int j = 0; j < act; ++j) {
      grad_mean(j, i) = g * diff(j, i) * inv_var[j];
      grad_log_std[j] += g * (diff(j, i) * diff(j, i) * inv_var[j] - Scalar(1));
    }
  }

  const Vector returns = batch.returns.cast<Scalar>();
  const Matrix value_error = value - returns.transpose();
  const double value_loss =
      static_cast<double>(value_error.squaredNorm()) / n;
  const Matrix grad_value = value_error *
                            static_cast<Scalar>(2.0 * cfg.value_loss_coef) *
                            inv_n;

  double entropy = 0.0;
  for (int j = 0; j < act; ++j) {
    entropy += static_cast<double>(log_std[j]) +
               0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);
    grad_log_std[j] -= static_cast<Scalar>(cfg.entropy_coef);
  }

  policy.actor().backward(policy.actor_params(), actor_cache, grad_mean,
                          out.gradient.data());
  policy.critic().backward(policy.critic_params(), critic_cache, grad_value,
                           out.gradient.data() + policy.critic_offset());
  for (int j = 0; j < act; ++j) {
    const double raw = static_cast<double>(policy.log_std()[j]);
    const bool inside = raw > kMinLogStd && raw < kMaxLogStd;
    out.gradient[policy.log_std_offset() + j] =
        inside ? grad_log_std[j] : Scalar(0);
  }

  out.stats.policy_loss = -surrogate_sum / n;
  out.stats.value_loss = value_loss;
  out.stats.entropy = entropy;
  out.stats.clip_fraction = clipped_count / n;
  out.stats.approx_kl = kl_sum / n;
  out.total = out.stats.policy_loss + cfg.value_loss_coef * value_loss -
              cfg.entropy_coef * entropy;
  return out;
}

UpdateStats ppo_update(const TrajectoryBatch& batch, Policy<float>& policy,
                       Adam<float>& adam, const PpoConfig& cfg) {
  Policy<float> next = policy;
  Adam<float> next_adam = adam;
  UpdateStats mean;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    LossEvaluation<float> eval = ppo_loss(next, batch, cfg);
    if (!std::isfinite(eval.total) || !eval.gradient.allFinite()) {
      std::ostringstream os;
      os << "PPO loss is not finite at epoch " << epoch;
      throw NumericalDivergence(os.str());
    }
    if (cfg.max_grad_norm > 0.0) {
      const double norm = static_cast<double>(eval.gradient.norm());
      if (norm > cfg.max_grad_norm) {
        eval.gradient *= static_cast<float>(cfg.max_grad_norm / norm);
      }
    }
    next_adam.step(next.params(), eval.gradient, cfg.learning_rate);
    mean.policy_loss += eval.stats.policy_loss / cfg.epochs;
    mean.value_loss += eval.stats.value_loss / cfg.epochs;
    mean.entropy += eval.stats.entropy / cfg.epochs;
    mean.clip_fraction += eval.stats.clip_fraction / cfg.epochs;
    mean.approx_kl += eval.stats.approx_kl / cfg.epochs;
  }
  if (!next.params().allFinite()) {
    throw NumericalDivergence("policy parameters are not finite");
  }
  policy = std::move(next);
  adam = std::move(next_adam);
  return mean;
}

void write_learning_curve_csv(std::ostream& out,
                              const std::vector<CurveRow>& curve,
                              const std::string& config_hash) {
  out << "# spinebound learning_curve format=1 config_hash=" << config_hash
      << '\n';
  out << "iteration,total_steps,mean_episode_reward,mean_forward_speed,"
         "policy_loss,value_loss,entropy,clip_fraction,approx_kl\n";
  for (const CurveRow& r : curve) {
    out << r.iteration << ',' << r.total_steps << ',';
    for (double v : {r.mean_episode_reward, r.mean_forward_speed,
                     r.stats.policy_loss, r.stats.value_loss, r.stats.entropy,
                     r.stats.clip_fraction}) {
      write_number(out, v);
      out << ',';
    }
    write_number(out, r.stats.approx_kl);
    out << '\n';
  }
}

Trainer::Trainer(PpoConfig cfg, EnvFactory factory)
    : cfg_(std::move(cfg)), factory_(std::move(factory)) {
  cfg_.validate();
  envs_ = make_env_slots(factory_, cfg_.n_envs, cfg_.seed);
  Environment& probe = *envs_.front().env;
  policy_ = Policy<float>(probe.observation_size(), probe.action_size(),
                          cfg_.hidden);
  Rng init_rng = Rng::derive(cfg_.seed, 1);
  policy_.initialize(init_rng, cfg_.initial_log_std);
  adam_ = Adam<float>(policy_.num_params());
  normalizer_ = ObservationNormalizer(probe.observation_size());

  // statistics from a uniformly random policy on a separate instance
  if (cfg_.normalizer_warmup_steps > 0) {
    std::unique_ptr<Environment> env = factory_(cfg_.n_envs);
    Rng rng = Rng::derive(cfg_.seed, 2);
    Eigen::MatrixXd samples(env->observation_size(),
                            cfg_.normalizer_warmup_steps);
    Eigen::VectorXd obs = env->reset(rng.next_u64());
    Eigen::VectorXd action(env->action_size());
    for (int i = 0; i < cfg_.normalizer_warmup_steps; ++i) {
      samples.col(i) = obs;
      for (Eigen::Index j = 0; j < action.size(); ++j) {
        action[j] = rng.uniform(-1.0, 1.0);
      }
      const Transition t = env->step(action);
      obs = t.done ? env->reset(rng.next_u64()) : t.observation;
    }
    normalizer_.update(samples);
  }
}

void Trainer::iterate() {
  TrajectoryBatch batch = collect_rollouts(envs_, policy_, normalizer_,
                                           cfg_.horizon,
                                           worker_count(cfg_.n_envs));
  compute_gae(batch, cfg_.gamma, cfg_.gae_lambda);
  const UpdateStats stats = ppo_update(batch, policy_, adam_, cfg_);
  normalizer_.update(batch.raw_observations);

  for (const EpisodeSummary& e : batch.episodes) {
    recent_returns_.push_back(e.total_return);
    if (recent_returns_.size() > kRecentEpisodes) recent_returns_.pop_front();
  }
  total_steps_ += batch.size();
  ++iteration_;

  CurveRow row;
  row.iteration = iteration_;
  row.total_steps = total_steps_;
  row.mean_episode_reward = std::nan("");
  if (!recent_returns_.empty()) {
    double sum = 0.0;
    for (double r : recent_returns_) sum += r;
    row.mean_episode_reward = sum / static_cast<double>(recent_returns_.size());
  }
  row.mean_forward_speed = batch.forward_velocity.mean();
  row.stats = stats;
  curve_.push_back(row);
}

void Trainer::run(const std::function<void(const Trainer&)>& on_iteration) {
  while (!finished()) {
    iterate();
    if (on_iteration) on_iteration(*this);
  }
}

void Trainer::save(Checkpoint& cp) const {
  std::vector<double> sizes = {static_cast<double>(policy_.obs_dim()),
                               static_cast<double>(policy_.act_dim())};
  for (int h : policy_.hidden()) sizes.push_back(h);
  cp.put_f64("policy/layout", sizes);
  cp.put_f32("policy/params", shape1(policy_.params().size()),
             to_floats(policy_.params()));
  cp.put_f32("adam/m", shape1(adam_.first_moment().size()),
             to_floats(adam_.first_moment()));
  cp.put_f32("adam/v", shape1(adam_.second_moment().size()),
             to_floats(adam_.second_moment()));
  cp.put_f64("adam/t", {static_cast<double>(adam_.steps())});
  cp.put_f64("normalizer/count", {normalizer_.count()});
  cp.put_f64("normalizer/mean", {normalizer_.mean().data(),
                                 normalizer_.mean().data() + normalizer_.size()});
  cp.put_f64("normalizer/m2", {normalizer_.m2().data(),
                               normalizer_.m2().data() + normalizer_.size()});
  cp.put_f64("trainer/counters", {static_cast<double>(total_steps_),
                                  static_cast<double>(iteration_),
                                  static_cast<double>(envs_.size())});
  cp.put_f64("trainer/recent_returns",
             {recent_returns_.begin(), recent_returns_.end()});
  std::vector<double> curve;
  for (const CurveRow& r : curve_) {
    curve.insert(curve.end(),
                 {static_cast<double>(r.iteration),
                  static_cast<double>(r.total_steps), r.mean_episode_reward,
                  r.mean_forward_speed, r.stats.policy_loss,
                  r.stats.value_loss, r.stats.entropy, r.stats.clip_fraction,
                  r.stats.approx_kl});
  }
  cp.put_f64("trainer/curve", {curve_.size(), 9}, curve);
  for (std::size_t i = 0; i < envs_.size(); ++i) {
    const EnvSlot& slot = envs_[i];
    const std::string prefix = "env/" + std::to_string(i) + "/";
    cp.put_f64(prefix + "snapshot", slot.env->snapshot());
    cp.put_f64(prefix + "observation",
               {slot.observation.data(),
                slot.observation.data() + slot.observation.size()});
    cp.put_f64(prefix + "episode",
               {slot.episode_return, slot.episode_speed_sum,
                static_cast<double>(slot.episode_length)});
    cp.put_bytes(prefix + "rng", slot.rng.serialize());
  }
}

void Trainer::load(const Checkpoint& cp) {
  std::vector<double> sizes = {static_cast<double>(policy_.obs_dim()),
                               static_cast<double>(policy_.act_dim())};
  for (int h : policy_.hidden()) sizes.push_back(h);
  if (cp.f64("policy/layout") != sizes) {
    throw IncompatibleArtifact("checkpoint network layout differs");
  }
  const auto& counters = cp.f64("trainer/counters");
  if (counters.size() != 3 ||
      counters[2] != static_cast<double>(envs_.size())) {
    throw IncompatibleArtifact("checkpoint environment count differs");
  }
  const auto& params = cp.f32("policy/params");
  if (static_cast<int>(params.size()) != policy_.num_params()) {
    throw IncompatibleArtifact("checkpoint parameter count differs");
  }
  policy_.params() = from_floats(params);
  adam_.set_state(from_floats(cp.f32("adam/m")), from_floats(cp.f32("adam/v")),
                  static_cast<std::int64_t>(cp.f64("adam/t").at(0)));
  normalizer_.set_state(cp.f64("normalizer/count").at(0),
                        from_doubles(cp.f64("normalizer/mean")),
                        from_doubles(cp.f64("normalizer/m2")));
  total_steps_ = static_cast<std::int64_t>(counters[0]);
  iteration_ = static_cast<int>(counters[1]);
  const auto& recent = cp.f64("trainer/recent_returns");
  recent_returns_.assign(recent.begin(), recent.end());
  const auto& curve = cp.f64("trainer/curve");
  curve_.clear();
  for (std::size_t k = 0; k + 9 <= curve.size(); k += 9) {
    CurveRow r;
    r.iteration = static_cast<int>(curve[k]);
    r.total_steps = static_cast<std::int64_t>(curve[k + 1]);
    r.mean_episode_reward = curve[k + 2];
    r.mean_forward_speed = curve[k + 3];
    r.stats = {curve[k + 4], curve[k + 5], curve[k + 6], curve[k + 7],
               curve[k + 8]};
    curve_.push_back(r);
  }
  for (std::size_t i = 0; i < envs_.size(); ++i) {
    EnvSlot& slot = envs_[i];
    const std::string prefix = "env/" + std::to_string(i) + "/";
    slot.env->restore(cp.f64(prefix + "snapshot"));
    slot.observation = from_doubles(cp.f64(prefix + "observation"));
    const auto& episode = cp.f64(prefix + "episode");
    slot.episode_return = episode.at(0);
    slot.episode_speed_sum = episode.at(1);
    slot.episode_length = static_cast<int>(episode.at(2));
    slot.rng.deserialize(cp.bytes(prefix + "rng"));
  }
}

TrainResult train(const PpoConfig& cfg, const EnvFactory& factory,
                  const std::function<void(const Trainer&)>& on_iteration) {
  Trainer trainer(cfg, factory);
  trainer.run(on_iteration);
  return {trainer.policy(), trainer.normalizer(), trainer.curve()};
}

template ActionDistribution policy_forward(const Policy<float>&,
                                           const Eigen::VectorXd&);
template ActionDistribution policy_forward(const Policy<double>&,
                                           const Eigen::VectorXd&);
template double value_forward(const Policy<float>&, const Eigen::VectorXd&);
template double value_forward(const Policy<double>&, const Eigen::VectorXd&);
template LossEvaluation<float> ppo_loss(const Policy<float>&,
                                        const TrajectoryBatch&,
                                        const PpoConfig&);
template LossEvaluation<double> ppo_loss(const Policy<double>&,
                                         const TrajectoryBatch&,
                                         const PpoConfig&);

TrainedPolicy load_trained_policy(const Checkpoint& cp) {
  const auto& sizes = cp.f64("policy/layout");
  if (sizes.size() < 2) throw IncompatibleArtifact("policy layout too short");
  std::vector<int> hidden;
  for (std::size_t k = 2; k < sizes.size(); ++k) {
    hidden.push_back(static_cast<int>(sizes[k]));
  }
  TrainedPolicy out{Policy<float>(static_cast<int>(sizes[0]),
                                  static_cast<int>(sizes[1]), hidden),
                    ObservationNormalizer(static_cast<int>(sizes[0]))};
  const auto& params = cp.f32("policy/params");
  if (static_cast<int>(params.size()) != out.policy.num_params()) {
    throw IncompatibleArtifact("checkpoint parameter count differs");
  }
  out.policy.params() = from_floats(params);
  out.normalizer.set_state(cp.f64("normalizer/count").at(0),
                           from_doubles(cp.f64("normalizer/mean")),
                           from_doubles(cp.f64("normalizer/m2")));
  return out;
}

}  // namespace spinebound
