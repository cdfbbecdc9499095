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

#include "spinebound/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "spinebound/errors.hpp"

namespace spinebound {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Run {
  bool value;
  int begin;
  int end;  // exclusive
};

std::vector<Run> runs_of(const std::vector<bool>& flags) {
  std::vector<Run> out;
  for (int i = 0; i < static_cast<int>(flags.size()); ++i) {
    if (out.empty() || out.back().value != flags[i]) {
      out.push_back({flags[i], i, i + 1});
    } else {
      out.back().end = i + 1;
    }
  }
  return out;
}

std::vector<int> touchdown_rows(const std::vector<bool>& contact) {
  std::vector<int> rows;
  for (const Run& run : runs_of(contact)) {
    if (run.value) rows.push_back(run.begin);
  }
  return rows;
}

void write_csv_number(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out << buf;
}

double nan_mean(const std::vector<double>& values) {
  double sum = 0.0;
  int n = 0;
  for (double v : values) {
    if (std::isfinite(v)) {
      sum += v;
      ++n;
    }
  }
  return n > 0 ? sum / n : kNaN;
}

}  // namespace

double cost_of_transport(const TrajectoryLog& log, double mass, double g,
                         double min_distance) {
  const double dt = log.sample_interval();
  const double distance = log.rows.back().base_x - log.rows.front().base_x;
  if (!(distance > min_distance)) {
    throw ZeroDistance("net displacement " + std::to_string(distance) +
                       " m is not above " + std::to_string(min_distance));
  }
  // each row after the first closes the interval ending at its time
  double work = 0.0;
  for (std::size_t i = 1; i < log.rows.size(); ++i) {
    const TrajectoryRow& row = log.rows[i];
    work += row.tau.cwiseProduct(row.qdot).cwiseMax(0.0).sum() * dt;
  }
  return work / (mass * g * distance);
}

double froude(double v, double leg_length, double g) {
  return v * v / (g * leg_length);
}

std::vector<bool> debounced_contact(const TrajectoryLog& log, Foot foot) {
  const int n = static_cast<int>(log.rows.size());
  std::vector<bool> out(n, false);
  bool state = false;
  for (int i = 0; i < n; ++i) {
    const bool value = log.rows[i].contact[foot];
    if (value != state && i + kMinPhaseSteps <= n) {
      bool persists = true;
      for (int k = 1; k < kMinPhaseSteps; ++k) {
        persists = persists && log.rows[i + k].contact[foot] == value;
      }
      if (persists) state = value;
    }
    out[i] = state;
  }
  return out;
}

GaitDiagram gait_diagram(const TrajectoryLog& log) {
  GaitDiagram out;
  if (log.rows.empty()) return out;
  for (int f = 0; f < kNumFeet; ++f) {
    for (const Run& run : runs_of(debounced_contact(log, Foot(f)))) {
      if (!run.value) continue;
      const int last = static_cast<int>(log.rows.size()) - 1;
      out[f].push_back({log.rows[run.begin].t,
                        log.rows[std::min(run.end, last)].t});
    }
  }
  return out;
}

StrideResult stride_length(const TrajectoryLog& log, Foot foot) {
  const std::vector<int> rows = touchdown_rows(debounced_contact(log, foot));
  if (rows.size() < 2) {
    throw InsufficientStrides(std::to_string(rows.size()) +
                              " touchdown(s); at least 2 are needed");
  }
  StrideResult out;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    out.strides.push_back(log.rows[rows[k]].foot_x[foot] -
                          log.rows[rows[k - 1]].foot_x[foot]);
  }
  double sum = 0.0;
  for (double s : out.strides) sum += s;
  out.mean = sum / out.strides.size();
  return out;
}

TorqueProfile torque_power_profile(const TrajectoryLog& log) {
  const int n = static_cast<int>(log.rows.size());
  TorqueProfile out;
  out.t.resize(n);
  out.torque.resize(n, kNumObservedJoints);
  out.power.resize(n, kNumObservedJoints);
  for (int i = 0; i < n; ++i) {
    const TrajectoryRow& row = log.rows[i];
    out.t[i] = row.t;
    out.torque.row(i) = row.tau.transpose();
    out.power.row(i) = row.tau.cwiseProduct(row.qdot).transpose();
  }
  if (n == 0) return out;
  out.peak_torque = out.torque.cwiseAbs().colwise().maxCoeff().transpose();
  out.mean_abs_power = out.power.cwiseAbs().colwise().mean().transpose();
  const std::vector<int> touchdowns =
      touchdown_rows(debounced_contact(log, kFrontFoot));
  for (std::size_t k = 1; k < touchdowns.size(); ++k) {
    const int first = touchdowns[k - 1];
    const int last = touchdowns[k];
    out.cycles.push_back({first, last});
    out.cycle_peak_torque.push_back(out.torque.middleRows(first, last - first)
                                        .cwiseAbs()
                                        .colwise()
                                        .maxCoeff()
                                        .transpose());
  }
  return out;
}

GaitReport analyze(const TrajectoryLog& log, const AnalysisConfig& cfg) {
  GaitReport r;
  r.config_hash = log.config_hash;
  const double t0 = log.rows.front().t;
  const double t1 = log.rows.back().t;
  const double window_start = t1 - cfg.steady_fraction * (t1 - t0);
  std::vector<double> window;
  r.max_forward_speed = kNaN;
  for (std::size_t i = 1; i < log.rows.size(); ++i) {
    const TrajectoryRow& row = log.rows[i];
    if (row.t >= window_start) window.push_back(row.v_x);
    if (!(row.v_x <= r.max_forward_speed)) r.max_forward_speed = row.v_x;
  }
  r.mean_forward_speed = nan_mean(window);
  r.froude = froude(r.mean_forward_speed, cfg.leg_length, cfg.g);
  r.froude_max = froude(r.max_forward_speed, cfg.leg_length, cfg.g);
  try {
    r.cot = cost_of_transport(log, cfg.mass, cfg.g, cfg.min_distance);
  } catch (const ZeroDistance&) {
    r.cot = kNaN;
  }
  std::vector<double> all_strides;
  double* per_foot[kNumFeet] = {&r.stride_front, &r.stride_rear};
  for (int f = 0; f < kNumFeet; ++f) {
    try {
      const StrideResult s = stride_length(log, Foot(f));
      *per_foot[f] = s.mean;
      all_strides.insert(all_strides.end(), s.strides.begin(),
                         s.strides.end());
    } catch (const InsufficientStrides&) {
      *per_foot[f] = kNaN;
    }
  }
  r.stride_count = static_cast<double>(all_strides.size());
  r.mean_stride_length = nan_mean(all_strides);
  const TorqueProfile profile = torque_power_profile(log);
  r.peak_torque = profile.peak_torque;
  r.mean_abs_power = profile.mean_abs_power;
  r.gait_diagrams.push_back(gait_diagram(log));
  return r;
}

GaitReport average_trials(const std::vector<GaitReport>& reports) {
  if (reports.empty()) throw ContractViolation("no reports to average");
  GaitReport out;
  out.config_hash = reports.front().config_hash;
  out.n_trials = 0;
  std::vector<double> cot, fr, frm, speed, vmax, stride, front, rear, count;
  for (const GaitReport& r : reports) {
    if (r.config_hash != out.config_hash) {
      throw ConfigMismatch("config hash " + r.config_hash + " differs from " +
                           out.config_hash);
    }
    out.n_trials += r.n_trials;
    cot.push_back(r.cot);
    fr.push_back(r.froude);
    frm.push_back(r.froude_max);
    speed.push_back(r.mean_forward_speed);
    vmax.push_back(r.max_forward_speed);
    stride.push_back(r.mean_stride_length);
    front.push_back(r.stride_front);
    rear.push_back(r.stride_rear);
    count.push_back(r.stride_count);
    out.gait_diagrams.insert(out.gait_diagrams.end(), r.gait_diagrams.begin(),
                             r.gait_diagrams.end());
  }
  if (reports.size() == 1) return reports.front();
  out.cot = nan_mean(cot);
  out.froude = nan_mean(fr);
  out.froude_max = nan_mean(frm);
  out.mean_forward_speed = nan_mean(speed);
  out.max_forward_speed = nan_mean(vmax);
  out.mean_stride_length = nan_mean(stride);
  out.stride_front = nan_mean(front);
  out.stride_rear = nan_mean(rear);
  out.stride_count = nan_mean(count);
  for (const GaitReport& r : reports) {
    out.peak_torque += r.peak_torque / reports.size();
    out.mean_abs_power += r.mean_abs_power / reports.size();
  }
  return out;
}

void write_report(std::ostream& out, const GaitReport& r) {
  out << "# spinebound gait_report format=1 config_hash=" << r.config_hash
      << '\n';
  auto line = [&](const std::string& key, double v) {
    out << key << '=';
    write_csv_number(out, v);
    out << '\n';
  };
  out << "n_trials=" << r.n_trials << '\n';
  line("cot", r.cot);
  line("froude", r.froude);
  line("froude_max", r.froude_max);
  line("mean_forward_speed", r.mean_forward_speed);
  line("max_forward_speed", r.max_forward_speed);
  line("mean_stride_length", r.mean_stride_length);
  line("stride_front", r.stride_front);
  line("stride_rear", r.stride_rear);
  line("stride_count", r.stride_count);
  for (int s = 0; s < kNumObservedJoints; ++s) {
    line("peak_torque_" + std::string(slot_names()[s]), r.peak_torque[s]);
  }
  for (int s = 0; s < kNumObservedJoints; ++s) {
    line("mean_abs_power_" + std::string(slot_names()[s]),
         r.mean_abs_power[s]);
  }
}

void write_torque_profile_csv(std::ostream& out, const TorqueProfile& p,
                              const std::string& config_hash) {
  out << "# spinebound torque_profile format=1 config_hash=" << config_hash
      << '\n';
  out << "t,cycle";
  for (auto name : slot_names()) out << ",tau_" << name;
  for (auto name : slot_names()) out << ",power_" << name;
  out << '\n';
  std::vector<int> cycle(p.t.size(), -1);
  for (std::size_t c = 0; c < p.cycles.size(); ++c) {
    for (int i = p.cycles[c][0]; i < p.cycles[c][1]; ++i) cycle[i] = c;
  }
  for (int i = 0; i < p.t.size(); ++i) {
    write_csv_number(out, p.t[i]);
    out << ',' << cycle[i];
    for (int s = 0; s < kNumObservedJoints; ++s) {
      out << ',';
      write_csv_number(out, p.torque(i, s));
    }
    for (int s = 0; s < kNumObservedJoints; ++s) {
      out << ',';
      write_csv_number(out, p.power(i, s));
    }
    out << '\n';
  }
}

void write_gait_diagram_csv(std::ostream& out, const GaitReport& r) {
  out << "# spinebound gait_diagram format=1 config_hash=" << r.config_hash
      << '\n';
  out << "trial,foot,stance_start,stance_end\n";
  for (std::size_t trial = 0; trial < r.gait_diagrams.size(); ++trial) {
    for (int f = 0; f < kNumFeet; ++f) {
      for (const StanceInterval& s : r.gait_diagrams[trial][f]) {
        out << trial << ',' << (f == kFrontFoot ? "front" : "rear") << ',';
        write_csv_number(out, s.start);
        out << ',';
        write_csv_number(out, s.end);
        out << '\n';
      }
    }
  }
}

}  // namespace spinebound
