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


#ifndef SPINEBOUND_NORMALIZER_HPP_
#define SPINEBOUND_NORMALIZER_HPP_

#include <Eigen/Core>

namespace spinebound {

// Running per-feature mean and population variance, merged batch by batch
// with the parallel (Chan et al.) update.
class ObservationNormalizer {
 public:
  ObservationNormalizer() = default;
  explicit ObservationNormalizer(int size, double clip = 10.0);

  int size() const { return static_cast<int>(mean_.size()); }
  double count() const { return count_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  Eigen::VectorXd variance() const;
  double clip() const { return clip_; }

  // Merges the columns of `samples`.
  void update(const Eigen::MatrixXd& samples);
  void update_one(const Eigen::VectorXd& sample);

  // clip((x - mean) / sqrt(var + 1e-8), +-clip); identity before any data.
  Eigen::VectorXd normalize(const Eigen::VectorXd& x) const;

  // Raw state for checkpoints: count, mean, sum of squared deviations.
  const Eigen::VectorXd& m2() const { return m2_; }
  void set_state(double count, Eigen::VectorXd mean, Eigen::VectorXd m2);

  bool operator==(const ObservationNormalizer& other) const;

 private:
  double count_ = 0.0;
  double clip_ = 10.0;
  Eigen::VectorXd mean_;
  Eigen::VectorXd m2_;
};

}  // namespace spinebound

#endif  // SPINEBOUND_NORMALIZER_HPP_
