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

#ifndef SPINEBOUND_HARNESS_HPP_
#define SPINEBOUND_HARNESS_HPP_

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "spinebound/checkpoint.hpp"
#include "spinebound/config.hpp"
#include "spinebound/metrics.hpp"

namespace spinebound {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitDivergence = 3;
inline constexpr int kExitIncompatible = 4;

// Run-directory file names.
inline constexpr const char* kCheckpointFile = "checkpoint.bin";
inline constexpr const char* kCurveFile = "learning_curve.csv";
inline constexpr const char* kConfigFile = "config.json";
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kReportFile = "report.txt";
inline constexpr const char* kGaitDiagramFile = "gait_diagram.csv";
inline constexpr const char* kCompareFile = "compare.csv";

// Command-line inputs shared by the verbs. Flags are applied after the
// config file and the --override list.
struct CommandOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<int> trials;
};

// Config file (or defaults), overrides and flags, validated.
RunConfig resolve_config(const CommandOptions& opts);

struct TrainSummary {
  std::string run_dir;
  std::string config_hash;
  bool resumed = false;
  std::vector<CurveRow> curve;
};

// Trains into cfg.output.dir, resuming from its checkpoint when present.
// Throws IncompatibleArtifact when that checkpoint has another config hash.
TrainSummary run_training(const RunConfig& cfg, std::ostream& log);

// Deterministic-policy evaluation of a checkpoint: one trajectory log per
// trial plus the averaged report, written to out_dir.
GaitReport run_evaluation(const RunConfig& cfg, const Checkpoint& checkpoint,
                          const std::string& out_dir, std::ostream& log);

struct CompareRow {
  double v_des = 0.0;
  SpineMode mode = SpineMode::kActive;
  std::string status;  // "ok", "missing" or an error message
  GaitReport report;
};

// Per (speed, mode) cell under out_dir/v<speed>_<mode>: reuses the cell's
// checkpoint or trains one when train_missing is set, then evaluates.
// Failed cells are reported in the table and do not stop the sweep.
std::vector<CompareRow> run_comparison(const RunConfig& base,
                                       const std::vector<double>& speeds,
                                       const std::vector<SpineMode>& modes,
                                       const std::string& out_dir,
                                       bool train_missing, std::ostream& log);

void write_compare_csv(std::ostream& out, const std::vector<CompareRow>& rows,
                       const std::string& config_hash);

// Human-readable summary of a checkpoint file.
void describe_checkpoint(std::ostream& out, const Checkpoint& checkpoint);

// Config embedded in a checkpoint written by run_training.
RunConfig checkpoint_config(const Checkpoint& checkpoint);

// Runs `command`, printing errors to `err` and mapping them to exit codes.
int guarded(const std::function<int()>& command, std::ostream& err);

}  // namespace spinebound

#endif  // SPINEBOUND_HARNESS_HPP_
