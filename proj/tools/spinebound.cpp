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

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spinebound/errors.hpp"
#include "spinebound/harness.hpp"

namespace spinebound {
namespace {

struct Flags {
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string mode;
  std::optional<int> trials;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON run config");
  cmd->add_option("--override", f.overrides, "dotted.key=value (repeatable)")
      ->take_all();
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--mode", f.mode, "spine mode")
      ->check(CLI::IsMember({"active", "rigid"}));
}

CommandOptions to_options(const Flags& f) {
  CommandOptions o;
  o.config_path = f.config;
  o.overrides = f.overrides;
  if (!f.out.empty()) o.out = f.out;
  o.seed = f.seed;
  if (!f.mode.empty()) o.mode = f.mode;
  o.trials = f.trials;
  return o;
}

int main_impl(int argc, char** argv) {
  CLI::App app{"Sagittal-plane spined quadruped bounding: train, evaluate, "
               "compare."};
  app.require_subcommand(1);
  app.set_version_flag("--version", SPINEBOUND_VERSION);

  Flags train_flags;
  CLI::App* train = app.add_subcommand("train", "train a policy");
  add_common(train, train_flags);

  Flags eval_flags;
  std::string checkpoint;
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("checkpoint", checkpoint, "checkpoint file")->required();
  add_common(eval, eval_flags);
  eval->add_option("--trials", eval_flags.trials, "evaluation trials")
      ->check(CLI::PositiveNumber);

  Flags compare_flags;
  std::vector<double> speeds;
  std::vector<std::string> modes = {"active", "rigid"};
  bool no_train = false;
  CLI::App* compare =
      app.add_subcommand("compare", "spine-vs-rigid sweep over target speeds");
  add_common(compare, compare_flags);
  compare->add_option("--speeds", speeds, "target speeds, m/s")
      ->delimiter(',');
  compare->add_option("--modes", modes, "spine modes")
      ->delimiter(',')
      ->check(CLI::IsMember({"active", "rigid"}));
  compare->add_option("--trials", compare_flags.trials, "evaluation trials")
      ->check(CLI::PositiveNumber);
  compare->add_flag("--no-train", no_train,
                    "report cells without a checkpoint instead of training");

  std::string inspect_path;
  CLI::App* inspect =
      app.add_subcommand("inspect-checkpoint", "print checkpoint contents");
  inspect->add_option("checkpoint", inspect_path, "checkpoint file")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfigError;
  }

  return guarded(
      [&]() -> int {
        if (*train) {
          const RunConfig cfg = resolve_config(to_options(train_flags));
          const TrainSummary s = run_training(cfg, std::cout);
          std::cout << "run " << s.run_dir << " config_hash " << s.config_hash
                    << '\n';
          return kExitOk;
        }
        if (*eval) {
          const Checkpoint cp = Checkpoint::load(checkpoint);
          CommandOptions opts = to_options(eval_flags);
          RunConfig cfg;
          if (opts.config_path.empty()) {
            // start from the config the checkpoint was trained with
            cfg = checkpoint_config(cp);
            for (const auto& o : opts.overrides) apply_override(cfg, o);
            if (opts.seed) cfg.seed = *opts.seed;
            if (opts.mode) apply_override(cfg, "env.mode=\"" + *opts.mode + "\"");
            if (opts.trials) cfg.eval.trials = *opts.trials;
            cfg.validate();
          } else {
            cfg = resolve_config(opts);
          }
          const std::string out =
              opts.out ? *opts.out : cfg.output.dir + "/eval";
          const GaitReport report = run_evaluation(cfg, cp, out, std::cout);
          write_report(std::cout, report);
          return kExitOk;
        }
        if (*compare) {
          const RunConfig cfg = resolve_config(to_options(compare_flags));
          std::vector<SpineMode> mode_list;
          for (const auto& m : modes) {
            mode_list.push_back(m == "rigid" ? SpineMode::kRigid
                                             : SpineMode::kActive);
          }
          const std::vector<CompareRow> rows = run_comparison(
              cfg, speeds, mode_list, cfg.output.dir, !no_train, std::cerr);
          std::ostringstream table;
          write_compare_csv(table, rows, config_hash(cfg));
          std::filesystem::create_directories(cfg.output.dir);
          std::ofstream(std::filesystem::path(cfg.output.dir) / kCompareFile)
              << table.str();
          std::cout << table.str();
          for (const CompareRow& row : rows) {
            if (row.status != "ok") return kExitFailure;
          }
          return kExitOk;
        }
        const Checkpoint cp = Checkpoint::load(inspect_path);
        describe_checkpoint(std::cout, cp);
        return kExitOk;
      },
      std::cerr);
}

}  // namespace
}  // namespace spinebound

int main(int argc, char** argv) { return spinebound::main_impl(argc, argv); }
