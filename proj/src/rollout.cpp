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


#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>

#include "spinebound/errors.hpp"
#include "spinebound/learner.hpp"

namespace spinebound {
namespace {

// Per-env rollout segment, merged in env order afterwards.
struct Segment {
  Eigen::MatrixXd observations;
  Eigen::MatrixXd raw_observations;
  Eigen::MatrixXd actions;
  Eigen::VectorXd log_probs;
  Eigen::VectorXd rewards;
  Eigen::VectorXd values;
  Eigen::VectorXd forward_velocity;
  std::vector<std::uint8_t> dones;
  double bootstrap_value = 0.0;
  std::vector<EpisodeSummary> episodes;
};

Segment collect_segment(EnvSlot& slot, const Policy<float>& policy,
                        const ObservationNormalizer& normalizer,
                        int horizon) {
  Environment& env = *slot.env;
  const int obs_dim = env.observation_size();
  const int act_dim = env.action_size();
  Segment s;
  s.observations.resize(obs_dim, horizon);
  s.raw_observations.resize(obs_dim, horizon);
  s.actions.resize(act_dim, horizon);
  s.log_probs.resize(horizon);
  s.rewards.resize(horizon);
  s.values.resize(horizon);
  s.forward_velocity.resize(horizon);
  s.dones.resize(horizon);
  for (int t = 0; t < horizon; ++t) {
    const Eigen::VectorXd obs = normalizer.normalize(slot.observation);
    const ActionDistribution dist = policy_forward(policy, obs);
    const SampledAction sampled = sample_action(dist, slot.rng);
    s.observations.col(t) = obs;
    s.raw_observations.col(t) = slot.observation;
    s.actions.col(t) = sampled.action;
    s.log_probs[t] = sampled.log_prob;
    s.values[t] = value_forward(policy, obs);

    const Transition tr = env.step(sampled.action);
    s.rewards[t] = tr.reward;
    s.forward_velocity[t] = tr.forward_velocity;
    s.dones[t] = tr.done ? 1 : 0;
    slot.episode_return += tr.reward;
    slot.episode_speed_sum += tr.forward_velocity;
    ++slot.episode_length;
    if (tr.done) {
      s.episodes.push_back({slot.episode_return,
                            slot.episode_speed_sum / slot.episode_length,
                            slot.episode_length});
      slot.episode_return = 0.0;
      slot.episode_speed_sum = 0.0;
      slot.episode_length = 0;
      slot.observation = env.reset(slot.rng.next_u64());
    } else {
      slot.observation = tr.observation;
    }
  }
  s.bootstrap_value =
      value_forward(policy, normalizer.normalize(slot.observation));
  return s;
}

}  // namespace

std::vector<EnvSlot> make_env_slots(const EnvFactory& factory, int n_envs,
                                    std::uint64_t seed) {
  std::vector<EnvSlot> slots;
  slots.reserve(n_envs);
  for (int i = 0; i < n_envs; ++i) {
    EnvSlot slot;
    slot.env = factory(i);
    if (!slot.env) throw ContractViolation("env factory returned null");
    slot.rng = Rng::derive(seed, 1000 + static_cast<std::uint64_t>(i));
    slot.observation = slot.env->reset(slot.rng.next_u64());
    slots.push_back(std::move(slot));
  }
  return slots;
}

int worker_count(int n_envs) {
  int workers = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SPINEBOUND_WORKERS")) {
    try {
      workers = std::stoi(env);
    } catch (const std::exception&) {
      throw ConfigError("SPINEBOUND_WORKERS", "must be an integer");
    }
  }
  return std::clamp(workers, 1, std::max(1, n_envs));
}

TrajectoryBatch collect_rollouts(std::vector<EnvSlot>& envs,
                                 const Policy<float>& policy,
                                 const ObservationNormalizer& normalizer,
                                 int horizon, int workers) {
  const int n = static_cast<int>(envs.size());
  if (n == 0 || horizon < 1) {
    throw ContractViolation("rollouts need at least one env and step");
  }
  std::vector<Segment> segments(n);
  std::vector<std::exception_ptr> errors(n);
  auto work = [&](int worker, int stride) {
    for (int e = worker; e < n; e += stride) {
      try {
        segments[e] = collect_segment(envs[e], policy, normalizer, horizon);
      } catch (...) {
        errors[e] = std::current_exception();
      }
    }
  };
  workers = std::clamp(workers, 1, n);
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) threads.emplace_back(work, w, workers);
    for (std::thread& t : threads) t.join();
  }
  for (const auto& error : errors) {
    if (error) std::rethrow_exception(error);
  }

  TrajectoryBatch batch;
  batch.n_envs = n;
  batch.horizon = horizon;
  const int total = n * horizon;
  const int obs_dim = static_cast<int>(segments[0].observations.rows());
  const int act_dim = static_cast<int>(segments[0].actions.rows());
  batch.observations.resize(obs_dim, total);
  batch.raw_observations.resize(obs_dim, total);
  batch.actions.resize(act_dim, total);
  batch.log_probs.resize(total);
  batch.rewards.resize(total);
  batch.values.resize(total);
  batch.forward_velocity.resize(total);
  batch.bootstrap_values.resize(n);
  for (int e = 0; e < n; ++e) {
    const Segment& s = segments[e];
    const int at = e * horizon;
    batch.observations.middleCols(at, horizon) = s.observations;
    batch.raw_observations.middleCols(at, horizon) = s.raw_observations;
    batch.actions.middleCols(at, horizon) = s.actions;
    batch.log_probs.segment(at, horizon) = s.log_probs;
    batch.rewards.segment(at, horizon) = s.rewards;
    batch.values.segment(at, horizon) = s.values;
    batch.forward_velocity.segment(at, horizon) = s.forward_velocity;
    batch.dones.insert(batch.dones.end(), s.dones.begin(), s.dones.end());
    batch.bootstrap_values[e] = s.bootstrap_value;
    batch.episodes.insert(batch.episodes.end(), s.episodes.begin(),
                          s.episodes.end());
  }
  return batch;
}

EpisodeSummary run_episode(Environment& env, const Policy<float>& policy,
                           const ObservationNormalizer& normalizer,
                           std::uint64_t seed, bool deterministic, Rng* rng) {
  if (!deterministic && rng == nullptr) {
    throw ContractViolation("stochastic episodes need a random stream");
  }
  EpisodeSummary summary;
  Eigen::VectorXd obs = env.reset(seed);
  double speed_sum = 0.0;
  while (true) {
    const ActionDistribution dist =
        policy_forward(policy, normalizer.normalize(obs));
    const SampledAction a =
        deterministic ? mean_action(dist) : sample_action(dist, *rng);
    const Transition t = env.step(a.action);
    summary.total_return += t.reward;
    speed_sum += t.forward_velocity;
    ++summary.length;
    obs = t.observation;
    if (t.done) break;
  }
  summary.mean_speed = speed_sum / summary.length;
  return summary;
}

}  // namespace spinebound
