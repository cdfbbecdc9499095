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

#include "spinebound/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "spinebound/errors.hpp"
#include "spinebound/rng.hpp"
#include "spinebound/trajectory_log.hpp"

#ifndef SPINEBOUND_VERSION
#define SPINEBOUND_VERSION "unknown"
#endif

namespace spinebound {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;

constexpr const char* kConfigArray = "run/config";
// Stream offset of the evaluation trial seeds.
constexpr std::uint64_t kEvalStream = 9000;

std::string utc_now() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("write failed: " + path.string());
  }
  fs::rename(tmp, path);
}

template <typename Writer>
void write_file(const fs::path& path, Writer&& writer) {
  std::ostringstream out;
  writer(out);
  write_text(path, out.str());
}

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(); }

Json report_summary(const GaitReport& r) {
  return {{"n_trials", r.n_trials},
          {"cot", number_or_null(r.cot)},
          {"froude", number_or_null(r.froude)},
          {"mean_forward_speed", number_or_null(r.mean_forward_speed)},
          {"max_forward_speed", number_or_null(r.max_forward_speed)},
          {"mean_stride_length", number_or_null(r.mean_stride_length)}};
}

void write_manifest(const fs::path& dir, const std::string& command,
                    const RunConfig& cfg, const std::string& started,
                    const std::vector<std::string>& files,
                    const std::vector<std::string>& checkpoints,
                    const Json& summary) {
  Json m;
  m["format"] = "spinebound-manifest";
  m["version"] = 1;
  m["command"] = command;
  m["config_hash"] = config_hash(cfg);
  m["code_version"] = SPINEBOUND_VERSION;
  m["seed"] = cfg.seed;
  m["started"] = started;
  m["finished"] = utc_now();
  m["files"] = files;
  m["checkpoints"] = checkpoints;
  m["summary"] = summary;
  write_text(dir / kManifestFile, m.dump(2) + "\n");
}

void save_checkpoint(const Trainer& trainer, const RunConfig& cfg,
                     const fs::path& dir) {
  Checkpoint cp(config_hash(cfg));
  trainer.save(cp);
  cp.put_bytes(kConfigArray, serialize(cfg));
  cp.save((dir / kCheckpointFile).string());
}

void require_compatible(const std::string& checkpoint_hash,
                        const std::string& expected) {
  if (checkpoint_hash != expected) {
    throw IncompatibleArtifact("checkpoint config hash " + checkpoint_hash +
                               " does not match config hash " + expected);
  }
}

GaitReport undefined_report() {
  GaitReport r;
  r.cot = r.froude = r.froude_max = NAN;
  r.mean_forward_speed = r.max_forward_speed = NAN;
  r.mean_stride_length = r.stride_front = r.stride_rear = NAN;
  r.stride_count = NAN;
  r.peak_torque.setConstant(NAN);
  r.mean_abs_power.setConstant(NAN);
  return r;
}

std::string speed_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

RunConfig resolve_config(const CommandOptions& opts) {
  RunConfig cfg = opts.config_path.empty() ? RunConfig{}
                                           : load_config(opts.config_path);
  for (const std::string& o : opts.overrides) apply_override(cfg, o);
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.mode) apply_override(cfg, "env.mode=\"" + *opts.mode + "\"");
  if (opts.trials) cfg.eval.trials = *opts.trials;
  if (opts.out) cfg.output.dir = *opts.out;
  cfg.validate();
  return cfg;
}

TrainSummary run_training(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const std::string started = utc_now();
  const fs::path dir = cfg.output.dir;
  fs::create_directories(dir);
  TrainSummary summary;
  summary.run_dir = dir.string();
  summary.config_hash = config_hash(cfg);

  Trainer trainer(cfg.learner_config(), make_env_factory(cfg));
  if (fs::exists(dir / kCheckpointFile)) {
    const Checkpoint cp = Checkpoint::load((dir / kCheckpointFile).string());
    require_compatible(cp.config_hash(), summary.config_hash);
    trainer.load(cp);
    summary.resumed = true;
    log << "resuming " << dir.string() << " at step " << trainer.total_steps()
        << '\n';
  }
  write_text(dir / kConfigFile, serialize(cfg));

  auto write_curve = [&] {
    write_file(dir / kCurveFile, [&](std::ostream& out) {
      write_learning_curve_csv(out, trainer.curve(), summary.config_hash);
    });
  };
  trainer.run([&](const Trainer& t) {
    const CurveRow& row = t.curve().back();
    log << "iteration " << row.iteration << " steps " << row.total_steps
        << " reward " << row.mean_episode_reward << " speed "
        << row.mean_forward_speed << '\n';
    if (cfg.output.checkpoint_every > 0 &&
        t.iteration() % cfg.output.checkpoint_every == 0) {
      save_checkpoint(t, cfg, dir);
      write_curve();
    }
  });
  save_checkpoint(trainer, cfg, dir);
  write_curve();

  Json final_summary = {{"total_steps", trainer.total_steps()},
                        {"iterations", trainer.iteration()}};
  if (!trainer.curve().empty()) {
    const CurveRow& last = trainer.curve().back();
    final_summary["mean_episode_reward"] =
        number_or_null(last.mean_episode_reward);
    final_summary["mean_forward_speed"] =
        number_or_null(last.mean_forward_speed);
  }
  write_manifest(dir, "train", cfg, started,
                 {kConfigFile, kCurveFile, kCheckpointFile, kManifestFile},
                 {kCheckpointFile}, final_summary);
  summary.curve = trainer.curve();
  return summary;
}

GaitReport run_evaluation(const RunConfig& cfg, const Checkpoint& checkpoint,
                          const std::string& out_dir, std::ostream& log) {
  cfg.validate();
  if (cfg.env_kind != EnvKind::kBounding) {
    throw ConfigError("env.kind", "evaluation needs the bounding environment");
  }
  const std::string hash = config_hash(cfg);
  require_compatible(checkpoint.config_hash(), hash);
  const std::string started = utc_now();
  const fs::path dir = out_dir;
  fs::create_directories(dir);
  const TrainedPolicy trained = load_trained_policy(checkpoint);

  EnvConfig env_cfg = cfg.env;
  env_cfg.episode.max_seconds = cfg.eval.seconds;
  AnalysisConfig analysis;
  analysis.mass = env_cfg.robot.total_mass();
  analysis.g = env_cfg.robot.gravity;
  analysis.leg_length = env_cfg.robot.leg.total_leg_length();

  std::vector<std::string> files;
  std::vector<GaitReport> reports;
  for (int trial = 0; trial < cfg.eval.trials; ++trial) {
    BoundingEnv env(env_cfg);
    TrajectoryRecorder recorder(hash);
    env.set_recorder(&recorder);
    const std::uint64_t seed =
        Rng::derive(cfg.seed, kEvalStream + trial).next_u64();
    const EpisodeSummary episode =
        run_episode(env, trained.policy, trained.normalizer, seed, true);
    const TrajectoryLog& trajectory = recorder.log();
    const std::string name = "trajectory_trial" + std::to_string(trial) + ".csv";
    write_file(dir / name, [&](std::ostream& out) {
      write_trajectory_csv(out, trajectory);
    });
    const std::string torque_name =
        "torque_profile_trial" + std::to_string(trial) + ".csv";
    write_file(dir / torque_name, [&](std::ostream& out) {
      write_torque_profile_csv(out, torque_power_profile(trajectory), hash);
    });
    files.push_back(name);
    files.push_back(torque_name);
    reports.push_back(analyze(trajectory, analysis));
    log << "trial " << trial << " length " << episode.length << " speed "
        << reports.back().mean_forward_speed << " cot " << reports.back().cot
        << '\n';
  }
  const GaitReport report = average_trials(reports);
  write_file(dir / kReportFile,
             [&](std::ostream& out) { write_report(out, report); });
  write_file(dir / kGaitDiagramFile,
             [&](std::ostream& out) { write_gait_diagram_csv(out, report); });
  files.insert(files.end(), {kReportFile, kGaitDiagramFile, kManifestFile});
  write_manifest(dir, "eval", cfg, started, files, {}, report_summary(report));
  return report;
}

std::vector<CompareRow> run_comparison(const RunConfig& base,
                                       const std::vector<double>& speeds,
                                       const std::vector<SpineMode>& modes,
                                       const std::string& out_dir,
                                       bool train_missing, std::ostream& log) {
  std::vector<CompareRow> rows;
  for (double v : speeds) {
    for (SpineMode mode : modes) {
      CompareRow row;
      row.v_des = v;
      row.mode = mode;
      row.report = undefined_report();
      RunConfig cell = base;
      cell.env.reward.v_des = v;
      cell.env.mode = mode;
      const fs::path cell_dir =
          fs::path(out_dir) / ("v" + speed_label(v) + "_" + to_string(mode));
      cell.output.dir = cell_dir.string();
      try {
        const fs::path ckpt = cell_dir / kCheckpointFile;
        if (!fs::exists(ckpt)) {
          if (!train_missing) {
            row.status = "missing";
            log << "cell " << cell_dir.string() << ": no checkpoint\n";
            rows.push_back(row);
            continue;
          }
          run_training(cell, log);
        }
        row.report = run_evaluation(cell, Checkpoint::load(ckpt.string()),
                                    (cell_dir / "eval").string(), log);
        row.status = "ok";
      } catch (const Error& e) {
        row.status = e.what();
        log << "cell " << cell_dir.string() << " failed: " << e.what() << '\n';
      }
      rows.push_back(row);
    }
  }
  return rows;
}

void write_compare_csv(std::ostream& out, const std::vector<CompareRow>& rows,
                       const std::string& config_hash) {
  out << "# spinebound compare format=1 config_hash=" << config_hash << '\n';
  out << "v_des,mode,status,achieved_speed,max_speed,cot,froude,"
         "stride_length,stride_count";
  for (auto name : slot_names()) out << ",peak_torque_" << name;
  out << '\n';
  auto number = [&](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    out << ',' << buf;
  };
  for (const CompareRow& row : rows) {
    std::string status = row.status;
    for (char& ch : status) {
      if (ch == ',' || ch == '\n') ch = ';';
    }
    out << speed_label(row.v_des) << ',' << to_string(row.mode) << ','
        << status;
    const GaitReport& r = row.report;
    for (double v : {r.mean_forward_speed, r.max_forward_speed, r.cot,
                     r.froude, r.mean_stride_length, r.stride_count}) {
      number(v);
    }
    for (int s = 0; s < kNumObservedJoints; ++s) number(r.peak_torque[s]);
    out << '\n';
  }
}

RunConfig checkpoint_config(const Checkpoint& checkpoint) {
  if (!checkpoint.has(kConfigArray)) {
    throw IncompatibleArtifact("checkpoint carries no run config");
  }
  return parse_config(checkpoint.bytes(kConfigArray));
}

void describe_checkpoint(std::ostream& out, const Checkpoint& cp) {
  out << "format_version=" << Checkpoint::kFormatVersion << '\n';
  out << "config_hash=" << cp.config_hash() << '\n';
  if (cp.has("trainer/counters")) {
    const auto& c = cp.f64("trainer/counters");
    out << "total_steps=" << static_cast<std::int64_t>(c.at(0)) << '\n';
    out << "iteration=" << static_cast<std::int64_t>(c.at(1)) << '\n';
    out << "n_envs=" << static_cast<std::int64_t>(c.at(2)) << '\n';
  }
  out << "arrays=" << cp.arrays().size() << '\n';
  for (const NamedArray& a : cp.arrays()) {
    if (a.name.rfind("env/", 0) == 0) continue;
    out << "  " << a.name << " ["
        << (a.dtype == DType::kFloat32   ? "f32"
            : a.dtype == DType::kFloat64 ? "f64"
                                         : "bytes")
        << ']';
    for (std::uint64_t d : a.shape) out << ' ' << d;
    out << '\n';
  }
}

int guarded(const std::function<int()>& command, std::ostream& err) {
  try {
    return command();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const NumericalDivergence& e) {
    err << "numerical divergence: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const IncompatibleArtifact& e) {
    err << "incompatible artifact: " << e.what() << '\n';
    return kExitIncompatible;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace spinebound
