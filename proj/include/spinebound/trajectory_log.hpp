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


#ifndef SPINEBOUND_TRAJECTORY_LOG_HPP_
#define SPINEBOUND_TRAJECTORY_LOG_HPP_

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "spinebound/environment.hpp"

namespace spinebound {

inline constexpr int kTrajectoryFormatVersion = 1;

// One control step. Joint columns follow the observation slot order.
struct TrajectoryRow {
  double t = 0.0;
  double base_x = 0.0;
  double base_z = 0.0;
  double pitch = 0.0;
  double v_x = 0.0;  // control-period mean forward velocity
  SlotVector q = SlotVector::Zero();
  SlotVector qdot = SlotVector::Zero();
  SlotVector tau = SlotVector::Zero();
  std::array<bool, kNumFeet> contact{};
  std::array<double, kNumFeet> foot_x{};  // world x of each foot
  double reward = 0.0;
  double delta_E = 0.0;
  bool done = false;

  bool operator==(const TrajectoryRow&) const = default;
};

struct TrajectoryLog {
  std::string config_hash;
  std::vector<TrajectoryRow> rows;

  // Sampling interval; throws ContractViolation unless time is strictly
  // increasing with a constant step (at least two rows).
  double sample_interval() const;
};

// Column names in file order.
std::vector<std::string> trajectory_columns();

TrajectoryRow make_row(const DynState& state, const RobotModel& model,
                       double v_x, double reward, double delta_E, bool done);

// Writes the versioned header comment, the column line and every row.
void write_trajectory_csv(std::ostream& out, const TrajectoryLog& log);
void write_trajectory_csv(const std::string& path, const TrajectoryLog& log);

// Throws IncompatibleArtifact on a version or column mismatch.
TrajectoryLog read_trajectory_csv(std::istream& in);
TrajectoryLog read_trajectory_csv(const std::string& path);

// Collects rows emitted by an environment.
class TrajectoryRecorder {
 public:
  explicit TrajectoryRecorder(std::string config_hash = {}) {
    log_.config_hash = std::move(config_hash);
  }

  void record(const TrajectoryRow& row) { log_.rows.push_back(row); }
  const TrajectoryLog& log() const { return log_; }
  void clear() { log_.rows.clear(); }

 private:
  TrajectoryLog log_;
};

}  // namespace spinebound

#endif  // SPINEBOUND_TRAJECTORY_LOG_HPP_
