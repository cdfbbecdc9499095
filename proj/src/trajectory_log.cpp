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


#include "spinebound/trajectory_log.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "spinebound/errors.hpp"

namespace spinebound {
namespace {

constexpr std::string_view kMagic = "# spinebound trajectory";

// Shortest text that parses back to the same double.
void append_number(std::string& line, double value) {
  char buffer[32];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  line.append(buffer, result.ptr);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

double parse_number(const std::string& text) {
  double value = 0.0;
  const auto result =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size()) {
    throw IncompatibleArtifact("trajectory cell is not a number: " + text);
  }
  return value;
}

}  // namespace

double TrajectoryLog::sample_interval() const {
  if (rows.size() < 2) {
    throw ContractViolation("trajectory needs at least two rows");
  }
  const double dt = rows[1].t - rows[0].t;
  if (!(dt > 0)) throw ContractViolation("trajectory time must increase");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double step = rows[i].t - rows[i - 1].t;
    if (!(step > 0) || std::abs(step - dt) > 1e-9 * std::max(1.0, rows[i].t)) {
      throw ContractViolation("trajectory sampling interval is not constant");
    }
  }
  return dt;
}

std::vector<std::string> trajectory_columns() {
  std::vector<std::string> cols = {"t", "base_x", "base_z", "pitch", "v_x"};
  for (std::string_view name : slot_names()) {
    cols.push_back("q_" + std::string(name));
    cols.push_back("qdot_" + std::string(name));
    cols.push_back("tau_" + std::string(name));
  }
  cols.insert(cols.end(), {"contact_front", "contact_rear", "foot_x_front",
                           "foot_x_rear", "reward", "delta_E", "done"});
  return cols;
}

TrajectoryRow make_row(const DynState& state, const RobotModel& model,
                       double v_x, double reward, double delta_E, bool done) {
  TrajectoryRow row;
  row.t = state.t;
  row.base_x = state.q[kBaseX];
  row.base_z = state.q[kBaseZ];
  row.pitch = state.q[kPitch];
  row.v_x = v_x;
  const JointSlots slots = joint_slots(state);
  row.q = slots.angle;
  row.qdot = slots.velocity;
  row.tau = slots.torque;
  const auto feet = foot_samples(state, model);
  for (int f = 0; f < kNumFeet; ++f) {
    row.contact[f] = state.feet[f].in_contact;
    row.foot_x[f] = feet[f].position.x();
  }
  row.reward = reward;
  row.delta_E = delta_E;
  row.done = done;
  return row;
}

void write_trajectory_csv(std::ostream& out, const TrajectoryLog& log) {
  out << kMagic << " format=" << kTrajectoryFormatVersion
      << " config_hash=" << log.config_hash << '\n';
  const auto cols = trajectory_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    out << (i ? "," : "") << cols[i];
  }
  out << '\n';
  std::string line;
  for (const TrajectoryRow& r : log.rows) {
    line.clear();
    auto cell = [&line](double v) {
      if (!line.empty()) line.push_back(',');
      append_number(line, v);
    };
    cell(r.t);
    cell(r.base_x);
    cell(r.base_z);
    cell(r.pitch);
    cell(r.v_x);
    for (int s = 0; s < kNumObservedJoints; ++s) {
      cell(r.q[s]);
      cell(r.qdot[s]);
      cell(r.tau[s]);
    }
    for (bool c : r.contact) cell(c ? 1.0 : 0.0);
    for (double x : r.foot_x) cell(x);
    cell(r.reward);
    cell(r.delta_E);
    cell(r.done ? 1.0 : 0.0);
    out << line << '\n';
  }
}

void write_trajectory_csv(const std::string& path, const TrajectoryLog& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  write_trajectory_csv(out, log);
}

TrajectoryLog read_trajectory_csv(std::istream& in) {
  TrajectoryLog log;
  std::string line;
  if (!std::getline(in, line) || line.rfind(kMagic, 0) != 0) {
    throw IncompatibleArtifact("missing trajectory header comment");
  }
  std::istringstream header(line.substr(kMagic.size()));
  std::string field;
  int version = -1;
  while (header >> field) {
    if (field.rfind("format=", 0) == 0) version = std::stoi(field.substr(7));
    if (field.rfind("config_hash=", 0) == 0) log.config_hash = field.substr(12);
  }
  if (version != kTrajectoryFormatVersion) {
    throw IncompatibleArtifact("trajectory format " + std::to_string(version) +
                               " is not supported");
  }
  const auto expected = trajectory_columns();
  if (!std::getline(in, line) || split(line) != expected) {
    throw IncompatibleArtifact("trajectory columns do not match");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != expected.size()) {
      throw IncompatibleArtifact("trajectory row has the wrong arity");
    }
    std::size_t k = 0;
    auto next = [&]() { return parse_number(cells[k++]); };
    TrajectoryRow r;
    r.t = next();
    r.base_x = next();
    r.base_z = next();
    r.pitch = next();
    r.v_x = next();
    for (int s = 0; s < kNumObservedJoints; ++s) {
      r.q[s] = next();
      r.qdot[s] = next();
      r.tau[s] = next();
    }
    for (bool& c : r.contact) c = next() != 0.0;
    for (double& x : r.foot_x) x = next();
    r.reward = next();
    r.delta_E = next();
    r.done = next() != 0.0;
    log.rows.push_back(r);
  }
  return log;
}

TrajectoryLog read_trajectory_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return read_trajectory_csv(in);
}

}  // namespace spinebound
