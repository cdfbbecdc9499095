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


#ifndef SPINEBOUND_TOY_ENV_HPP_
#define SPINEBOUND_TOY_ENV_HPP_

#include <cstdint>
#include <vector>

#include "spinebound/environment.hpp"

namespace spinebound {

// One-dimensional velocity tracking with the bounding reward kernel:
// v' = decay v + gain u, u = clamp(action, -1, 1),
// r = exp(-(v' - v_des)^2 / (2 sigma^2)).
struct ToyConfig {
  double decay = 0.9;
  double gain = 0.25;
  double v_des = 1.0;
  double sigma = 0.2;
  int horizon = 50;
  double initial_spread = 0.1;  // v0 ~ U(-spread, spread)

  void validate() const;
  bool operator==(const ToyConfig&) const = default;
};

class ToyVelocityEnv final : public Environment {
 public:
  explicit ToyVelocityEnv(ToyConfig cfg = {});

  int observation_size() const override { return 1; }
  int action_size() const override { return 1; }
  Eigen::VectorXd reset(std::uint64_t seed) override;
  Transition step(const Eigen::VectorXd& action) override;
  Eigen::VectorXd observation() const override;
  bool done() const override { return done_; }
  std::vector<double> snapshot() const override;
  void restore(const std::vector<double>& data) override;

  double velocity() const { return v_; }
  static double initial_velocity(std::uint64_t seed, const ToyConfig& cfg);

 private:
  ToyConfig cfg_;
  double v_ = 0.0;
  int t_ = 0;
  bool started_ = false;
  bool done_ = false;
};

// Return of the greedy controller that moves v' as close to v_des as the
// input bound allows. Each step's reachable interval shifts monotonically
// with v, so being closer never shrinks what later steps can reach, and
// the greedy return is the optimum.
double toy_optimal_return(const ToyConfig& cfg, double v0);

}  // namespace spinebound

#endif  // SPINEBOUND_TOY_ENV_HPP_
