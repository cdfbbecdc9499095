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


#include "spinebound/normalizer.hpp"

#include "spinebound/errors.hpp"

namespace spinebound {

ObservationNormalizer::ObservationNormalizer(int size, double clip)
    : clip_(clip),
      mean_(Eigen::VectorXd::Zero(size)),
      m2_(Eigen::VectorXd::Zero(size)) {}

Eigen::VectorXd ObservationNormalizer::variance() const {
  if (count_ <= 0.0) return Eigen::VectorXd::Ones(size());
  return m2_ / count_;
}

void ObservationNormalizer::update(const Eigen::MatrixXd& samples) {
  if (samples.cols() == 0) return;
  if (samples.rows() != size()) {
    throw ContractViolation("normalizer sample size mismatch");
  }
  const double n = static_cast<double>(samples.cols());
  const Eigen::VectorXd batch_mean = samples.rowwise().mean();
  const Eigen::VectorXd batch_m2 =
      (samples.colwise() - batch_mean).rowwise().squaredNorm();
  const double total = count_ + n;
  const Eigen::VectorXd delta = batch_mean - mean_;
  mean_ += delta * (n / total);
  m2_ += batch_m2 + delta.cwiseProduct(delta) * (count_ * n / total);
  count_ = total;
}

void ObservationNormalizer::update_one(const Eigen::VectorXd& sample) {
  update(Eigen::MatrixXd(sample));
}

Eigen::VectorXd ObservationNormalizer::normalize(
    const Eigen::VectorXd& x) const {
  if (count_ <= 0.0) return x;
  const Eigen::VectorXd scaled =
      (x - mean_).array() / (variance().array() + 1e-8).sqrt();
  return scaled.cwiseMax(-clip_).cwiseMin(clip_);
}

void ObservationNormalizer::set_state(double count, Eigen::VectorXd mean,
                                      Eigen::VectorXd m2) {
  if (mean.size() != m2.size()) {
    throw IncompatibleArtifact("normalizer mean/m2 size mismatch");
  }
  count_ = count;
  mean_ = std::move(mean);
  m2_ = std::move(m2);
}

bool ObservationNormalizer::operator==(
    const ObservationNormalizer& other) const {
  return count_ == other.count_ && clip_ == other.clip_ &&
         mean_ == other.mean_ && m2_ == other.m2_;
}

}  // namespace spinebound
