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

#ifndef SPINEBOUND_CONFIG_HPP_
#define SPINEBOUND_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "spinebound/environment.hpp"
#include "spinebound/learner.hpp"
#include "spinebound/toy_env.hpp"

namespace spinebound {

inline constexpr int kConfigFormatVersion = 1;

enum class EnvKind { kBounding, kToy };

struct OutputConfig {
  std::string dir = "runs/default";
  int checkpoint_every = 10;  // iterations between checkpoints; 0 = end only
  bool operator==(const OutputConfig&) const = default;
};

struct EvalConfig {
  int trials = 5;
  double seconds = 5.0;  // episode length of each evaluation trial
  bool operator==(const EvalConfig&) const = default;
};

// Complete description of a run. `ppo.gamma` and `ppo.seed` are not keys of
// their own: they mirror `reward.gamma` and `seed`.
struct RunConfig {
  EnvKind env_kind = EnvKind::kBounding;
  EnvConfig env;
  ToyConfig toy;
  PpoConfig ppo;
  std::uint64_t seed = 0;
  OutputConfig output;
  EvalConfig eval;

  // Throws ConfigError naming the offending field.
  void validate() const;
  // Learner settings with the mirrored fields filled in.
  PpoConfig learner_config() const;
  bool operator==(const RunConfig& other) const;
};

// JSON text with every key present; keys sorted, two-space indent.
std::string serialize(const RunConfig& cfg);

// Missing keys keep their defaults. Unknown keys, wrong types and
// malformed JSON raise ConfigError naming the dotted key.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// Applies "dotted.key=value"; the value is read as JSON when it parses,
// otherwise as a string.
void apply_override(RunConfig& cfg, const std::string& assignment);

// FNV-1a 64 of the serialized config without the `output` and `eval`
// sections and `ppo.max_total_steps`, as 16 hex digits. Those keys do not
// change what a checkpoint contains, so runs that differ only there
// remain compatible.
std::string config_hash(const RunConfig& cfg);

std::string to_string(EnvKind kind);
std::string to_string(SpineMode mode);

EnvFactory make_env_factory(const RunConfig& cfg);

}  // namespace spinebound

#endif  // SPINEBOUND_CONFIG_HPP_
