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


#include "spinebound/toy_env.hpp"

#include <algorithm>
#include <cmath>

#include "spinebound/errors.hpp"
#include "spinebound/rng.hpp"

namespace spinebound {
namespace {

double kernel(double v, const ToyConfig& cfg) {
  const double e = v - cfg.v_des;
  return std::exp(-e * e / (2.0 * cfg.sigma * cfg.sigma));
}

}  // namespace

void ToyConfig::validate() const {
  if (!(std::abs(decay) < 1.0)) throw ConfigError("toy.decay", "|decay| < 1");
  if (!(gain > 0.0)) throw ConfigError("toy.gain", "must be > 0");
  if (!(sigma > 0.0)) throw ConfigError("toy.sigma", "must be > 0");
  if (horizon < 1) throw ConfigError("toy.horizon", "must be >= 1");
  if (!(initial_spread >= 0.0))
    throw ConfigError("toy.initial_spread", "must be >= 0");
}

ToyVelocityEnv::ToyVelocityEnv(ToyConfig cfg) : cfg_(cfg) { cfg_.validate(); }

double ToyVelocityEnv::initial_velocity(std::uint64_t seed,
                                        const ToyConfig& cfg) {
  Rng rng(seed);
  return rng.uniform(-cfg.initial_spread, cfg.initial_spread);
}

Eigen::VectorXd ToyVelocityEnv::reset(std::uint64_t seed) {
  v_ = initial_velocity(seed, cfg_);
  t_ = 0;
  started_ = true;
  done_ = false;
  return observation();
}

Eigen::VectorXd ToyVelocityEnv::observation() const {
  return Eigen::VectorXd::Constant(1, v_);
}

Transition ToyVelocityEnv::step(const Eigen::VectorXd& action) {
  if (!started_) throw ContractViolation("step called before reset");
  if (done_) throw ContractViolation("step called after the episode ended");
  if (action.size() != 1) throw ContractViolation("action must be 1-D");
  const double u = std::isnan(action[0]) ? 0.0 : std::clamp(action[0], -1.0, 1.0);
  v_ = cfg_.decay * v_ + cfg_.gain * u;
  ++t_;
  Transition out;
  out.forward_velocity = v_;
  out.reward = kernel(v_, cfg_);
  done_ = t_ >= cfg_.horizon;
  out.done = done_;
  out.reason = done_ ? Termination::kTimeLimit : Termination::kNone;
  out.observation = observation();
  return out;
}

std::vector<double> ToyVelocityEnv::snapshot() const {
  return {v_, static_cast<double>(t_), started_ ? 1.0 : 0.0,
          done_ ? 1.0 : 0.0};
}

void ToyVelocityEnv::restore(const std::vector<double>& data) {
  if (data.size() != 4) {
    throw IncompatibleArtifact("toy snapshot has the wrong size");
  }
  v_ = data[0];
  t_ = static_cast<int>(data[1]);
  started_ = data[2] != 0.0;
  done_ = data[3] != 0.0;
}

double toy_optimal_return(const ToyConfig& cfg, double v0) {
  double v = v0;
  double total = 0.0;
  for (int t = 0; t < cfg.horizon; ++t) {
    const double u =
        std::clamp((cfg.v_des - cfg.decay * v) / cfg.gain, -1.0, 1.0);
    v = cfg.decay * v + cfg.gain * u;
    total += kernel(v, cfg);
  }
  return total;
}

}  // namespace spinebound
