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

#ifndef SPINEBOUND_METRICS_HPP_
#define SPINEBOUND_METRICS_HPP_

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "spinebound/trajectory_log.hpp"

namespace spinebound {

// Minimum run length, in control steps, of a stance or swing phase.
inline constexpr int kMinPhaseSteps = 2;

// Positive actuator work per unit weight and distance, rectangle rule over
// the log rows. Throws ZeroDistance when the net base displacement is at
// most min_distance.
double cost_of_transport(const TrajectoryLog& log, double mass, double g,
                         double min_distance = 1e-6);

double froude(double v, double leg_length, double g);

// Debounced contact flags of one foot, starting in swing. The phase switches
// only at a run of at least kMinPhaseSteps equal samples.
std::vector<bool> debounced_contact(const TrajectoryLog& log, Foot foot);

struct StanceInterval {
  double start = 0.0;
  double end = 0.0;
  bool operator==(const StanceInterval&) const = default;
};

using GaitDiagram = std::array<std::vector<StanceInterval>, kNumFeet>;

// A stance ends at the time of the first swing row, or at the last row.
GaitDiagram gait_diagram(const TrajectoryLog& log);

struct StrideResult {
  double mean = 0.0;
  std::vector<double> strides;
};

// World-x distance between consecutive debounced touchdowns of one foot.
// Throws InsufficientStrides with fewer than two touchdowns.
StrideResult stride_length(const TrajectoryLog& log, Foot foot);

struct TorqueProfile {
  Eigen::VectorXd t;
  Eigen::MatrixXd torque;  // rows x slots
  Eigen::MatrixXd power;   // torque * velocity
  // Row ranges [first, last) between consecutive front-foot touchdowns.
  std::vector<std::array<int, 2>> cycles;
  std::vector<SlotVector> cycle_peak_torque;
  SlotVector peak_torque = SlotVector::Zero();
  SlotVector mean_abs_power = SlotVector::Zero();
};

TorqueProfile torque_power_profile(const TrajectoryLog& log);

struct AnalysisConfig {
  double mass = 0.0;         // kg
  double g = 9.81;           // m/s^2
  double leg_length = 0.245; // m
  double min_distance = 0.05;  // m; shorter runs have no defined CoT
  double steady_fraction = 0.6;  // trailing share of the episode
};

struct GaitReport {
  std::string config_hash;
  int n_trials = 1;
  // NaN when undefined for the log (no progress, too few strides).
  double cot = 0.0;
  double froude = 0.0;      // from the steady-state mean speed
  double froude_max = 0.0;  // from the maximum speed
  double mean_forward_speed = 0.0;
  double max_forward_speed = 0.0;
  double mean_stride_length = 0.0;
  double stride_front = 0.0;
  double stride_rear = 0.0;
  double stride_count = 0.0;
  SlotVector peak_torque = SlotVector::Zero();
  SlotVector mean_abs_power = SlotVector::Zero();
  std::vector<GaitDiagram> gait_diagrams;  // one per trial
};

GaitReport analyze(const TrajectoryLog& log, const AnalysisConfig& cfg);

// Mean of the scalar fields; throws ConfigMismatch on differing hashes.
GaitReport average_trials(const std::vector<GaitReport>& reports);

void write_report(std::ostream& out, const GaitReport& report);
void write_torque_profile_csv(std::ostream& out, const TorqueProfile& profile,
                              const std::string& config_hash);
void write_gait_diagram_csv(std::ostream& out, const GaitReport& report);

}  // namespace spinebound

#endif  // SPINEBOUND_METRICS_HPP_
