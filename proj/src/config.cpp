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

#include "spinebound/config.hpp"

#include <cmath>
#include <fstream>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "spinebound/errors.hpp"

namespace spinebound {
namespace {

using Json = nlohmann::json;

// Calls f(dotted_key, field) for every configurable field.
template <typename Cfg, typename F>
void visit_fields(Cfg& c, F&& f) {
  f("env.kind", c.env_kind);
  f("env.mode", c.env.mode);
  f("env.box.front.r_min", c.env.box.front.r_min);
  f("env.box.front.r_max", c.env.box.front.r_max);
  f("env.box.front.alpha_min", c.env.box.front.alpha_min);
  f("env.box.front.alpha_max", c.env.box.front.alpha_max);
  f("env.box.rear.r_min", c.env.box.rear.r_min);
  f("env.box.rear.r_max", c.env.box.rear.r_max);
  f("env.box.rear.alpha_min", c.env.box.rear.alpha_min);
  f("env.box.rear.alpha_max", c.env.box.rear.alpha_max);
  f("env.box.spine_max", c.env.box.spine_max);

  auto& robot = c.env.robot;
  f("robot.body_front.mass", robot.body_front.mass);
  f("robot.body_front.inertia", robot.body_front.inertia);
  f("robot.body_front.length", robot.body_front.length);
  f("robot.body_rear.mass", robot.body_rear.mass);
  f("robot.body_rear.inertia", robot.body_rear.inertia);
  f("robot.body_rear.length", robot.body_rear.length);
  f("robot.spine.mass", robot.spine.mass);
  f("robot.spine.inertia", robot.spine.inertia);
  f("robot.spine.length", robot.spine.length);
  f("robot.upper_link_mass", robot.upper_link_mass);
  f("robot.lower_link_mass", robot.lower_link_mass);
  f("robot.hip_offset_front", robot.hip_offset_front);
  f("robot.hip_offset_rear", robot.hip_offset_rear);
  f("robot.leg.upper_link_length", robot.leg.upper_link_length);
  f("robot.leg.lower_link_length", robot.leg.lower_link_length);
  f("robot.leg.hip_separation", robot.leg.hip_separation);
  f("robot.leg.singularity_margin", robot.leg.singularity_margin);
  f("robot.limits.hip_min", robot.limits.hip_min);
  f("robot.limits.hip_max", robot.limits.hip_max);
  f("robot.limits.knee_min", robot.limits.knee_min);
  f("robot.limits.knee_max", robot.limits.knee_max);
  f("robot.limits.spine_front_min", robot.limits.spine_front_min);
  f("robot.limits.spine_front_max", robot.limits.spine_front_max);
  f("robot.limits.spine_rear_min", robot.limits.spine_rear_min);
  f("robot.limits.spine_rear_max", robot.limits.spine_rear_max);
  f("robot.knee_stop_min", robot.knee_stop_min);
  f("robot.knee_stop_max", robot.knee_stop_max);
  f("robot.torque_limit", robot.torque_limit);
  f("robot.leg_gains.kp", robot.leg_gains.kp);
  f("robot.leg_gains.kd", robot.leg_gains.kd);
  f("robot.spine_gains.kp", robot.spine_gains.kp);
  f("robot.spine_gains.kd", robot.spine_gains.kd);
  f("robot.armature", robot.armature);
  f("robot.gravity", robot.gravity);
  f("robot.legs_per_pair", robot.legs_per_pair);

  auto& physics = c.env.physics;
  f("physics.dt", physics.dt);
  f("physics.contacts_enabled", physics.contacts_enabled);
  f("physics.stop_stiffness", physics.stop_stiffness);
  f("physics.stop_damping", physics.stop_damping);
  f("physics.max_speed", physics.max_speed);
  f("physics.contact.k_n", physics.contact.k_n);
  f("physics.contact.c_n", physics.contact.c_n);
  f("physics.contact.mu", physics.contact.mu);
  f("physics.contact.k_t", physics.contact.k_t);
  f("physics.contact.c_t", physics.contact.c_t);

  f("reward.v_des", c.env.reward.v_des);
  f("reward.sigma", c.env.reward.sigma);
  f("reward.w_vel", c.env.reward.w_vel);
  f("reward.w_E", c.env.reward.w_E);
  f("reward.gamma", c.env.reward.gamma);

  f("episode.max_seconds", c.env.episode.max_seconds);
  f("episode.max_pitch", c.env.episode.max_pitch);
  f("episode.min_height", c.env.episode.min_height);
  f("episode.substeps", c.env.episode.substeps);

  f("toy.decay", c.toy.decay);
  f("toy.gain", c.toy.gain);
  f("toy.v_des", c.toy.v_des);
  f("toy.sigma", c.toy.sigma);
  f("toy.horizon", c.toy.horizon);
  f("toy.initial_spread", c.toy.initial_spread);

  f("ppo.n_envs", c.ppo.n_envs);
  f("ppo.horizon", c.ppo.horizon);
  f("ppo.clip_epsilon", c.ppo.clip_epsilon);
  f("ppo.gae_lambda", c.ppo.gae_lambda);
  f("ppo.learning_rate", c.ppo.learning_rate);
  f("ppo.epochs", c.ppo.epochs);
  f("ppo.entropy_coef", c.ppo.entropy_coef);
  f("ppo.value_loss_coef", c.ppo.value_loss_coef);
  f("ppo.max_grad_norm", c.ppo.max_grad_norm);
  f("ppo.max_total_steps", c.ppo.max_total_steps);
  f("ppo.hidden", c.ppo.hidden);
  f("ppo.initial_log_std", c.ppo.initial_log_std);
  f("ppo.normalizer_warmup_steps", c.ppo.normalizer_warmup_steps);

  f("seed", c.seed);
  f("output.dir", c.output.dir);
  f("output.checkpoint_every", c.output.checkpoint_every);
  f("eval.trials", c.eval.trials);
  f("eval.seconds", c.eval.seconds);
}

Json::json_pointer pointer(const std::string& dotted) {
  std::string path = "/" + dotted;
  for (char& ch : path) {
    if (ch == '.') ch = '/';
  }
  return Json::json_pointer(path);
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = [] {
    std::set<std::string> out = {"version"};
    RunConfig cfg;
    visit_fields(cfg, [&](const char* key, auto&) { out.insert(key); });
    return out;
  }();
  return keys;
}

Json to_json_value(double v) { return v; }
Json to_json_value(int v) { return v; }
Json to_json_value(std::int64_t v) { return v; }
Json to_json_value(std::uint64_t v) { return v; }
Json to_json_value(bool v) { return v; }
Json to_json_value(const std::string& v) { return v; }
Json to_json_value(const std::vector<int>& v) { return v; }
Json to_json_value(SpineMode v) { return to_string(v); }
Json to_json_value(EnvKind v) { return to_string(v); }

[[noreturn]] void type_error(const std::string& key, const char* expected,
                             const Json& value) {
  throw ConfigError(key, std::string("expected ") + expected + ", got " +
                             value.dump());
}

// Integral value of a JSON number, accepting floats such as 2e6.
template <typename Int>
Int integral(const std::string& key, const Json& value) {
  if (value.is_number_integer()) {
    if (value.is_number_unsigned()) {
      const auto u = value.get<std::uint64_t>();
      if (u <= static_cast<std::uint64_t>(std::numeric_limits<Int>::max()))
        return static_cast<Int>(u);
    } else {
      const auto s = value.get<std::int64_t>();
      if (s >= static_cast<std::int64_t>(std::numeric_limits<Int>::min()) &&
          (s < 0 || static_cast<std::uint64_t>(s) <=
                        static_cast<std::uint64_t>(
                            std::numeric_limits<Int>::max())))
        return static_cast<Int>(s);
    }
    throw ConfigError(key, "integer out of range: " + value.dump());
  }
  if (value.is_number_float()) {
    const double d = value.get<double>();
    if (std::floor(d) == d &&
        d >= static_cast<double>(std::numeric_limits<Int>::min()) &&
        d <= static_cast<double>(std::numeric_limits<Int>::max()))
      return static_cast<Int>(d);
  }
  type_error(key, "an integer", value);
}

void from_json_value(const std::string& key, const Json& j, double& v) {
  if (!j.is_number()) type_error(key, "a number", j);
  v = j.get<double>();
}
void from_json_value(const std::string& key, const Json& j, int& v) {
  v = integral<int>(key, j);
}
void from_json_value(const std::string& key, const Json& j, std::int64_t& v) {
  v = integral<std::int64_t>(key, j);
}
void from_json_value(const std::string& key, const Json& j, std::uint64_t& v) {
  v = integral<std::uint64_t>(key, j);
}
void from_json_value(const std::string& key, const Json& j, bool& v) {
  if (!j.is_boolean()) type_error(key, "true or false", j);
  v = j.get<bool>();
}
void from_json_value(const std::string& key, const Json& j, std::string& v) {
  if (!j.is_string()) type_error(key, "a string", j);
  v = j.get<std::string>();
}
void from_json_value(const std::string& key, const Json& j,
                     std::vector<int>& v) {
  if (!j.is_array()) type_error(key, "an array of integers", j);
  v.clear();
  for (const Json& item : j) v.push_back(integral<int>(key, item));
}
void from_json_value(const std::string& key, const Json& j, SpineMode& v) {
  if (j == "active") {
    v = SpineMode::kActive;
  } else if (j == "rigid") {
    v = SpineMode::kRigid;
  } else {
    type_error(key, "\"active\" or \"rigid\"", j);
  }
}
void from_json_value(const std::string& key, const Json& j, EnvKind& v) {
  if (j == "bounding") {
    v = EnvKind::kBounding;
  } else if (j == "toy") {
    v = EnvKind::kToy;
  } else {
    type_error(key, "\"bounding\" or \"toy\"", j);
  }
}

Json to_json(const RunConfig& cfg) {
  Json j = Json::object();
  j["version"] = kConfigFormatVersion;
  visit_fields(cfg, [&](const char* key, const auto& value) {
    j[pointer(key)] = to_json_value(value);
  });
  return j;
}

void check_keys(const Json& j, const std::string& prefix) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object()) {
      check_keys(*it, key);
    } else if (!known_keys().count(key)) {
      throw ConfigError(key, "unknown key");
    }
  }
}

RunConfig from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("<config>", "top level must be an object");
  check_keys(j, "");
  if (j.contains("version") && j["version"] != kConfigFormatVersion) {
    throw ConfigError("version", "unsupported config version " +
                                     j["version"].dump());
  }
  RunConfig cfg;
  visit_fields(cfg, [&](const char* key, auto& value) {
    const auto ptr = pointer(key);
    if (j.contains(ptr)) from_json_value(key, j[ptr], value);
  });
  return cfg;
}

}  // namespace

std::string to_string(EnvKind kind) {
  return kind == EnvKind::kToy ? "toy" : "bounding";
}

std::string to_string(SpineMode mode) {
  return mode == SpineMode::kRigid ? "rigid" : "active";
}

void RunConfig::validate() const {
  env.validate();
  toy.validate();
  learner_config().validate();
  if (output.dir.empty()) throw ConfigError("output.dir", "must not be empty");
  if (output.checkpoint_every < 0)
    throw ConfigError("output.checkpoint_every", "must be >= 0");
  if (eval.trials < 1) throw ConfigError("eval.trials", "must be >= 1");
  if (!(eval.seconds > 0)) throw ConfigError("eval.seconds", "must be > 0");
}

PpoConfig RunConfig::learner_config() const {
  PpoConfig out = ppo;
  out.gamma = env.reward.gamma;
  out.seed = seed;
  return out;
}

bool RunConfig::operator==(const RunConfig& other) const {
  return serialize(*this) == serialize(other);
}

std::string serialize(const RunConfig& cfg) {
  return to_json(cfg).dump(2) + "\n";
}

RunConfig parse_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("<config>", std::string("malformed JSON: ") + e.what());
  }
  return from_json(j);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<config>", "cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("<override>",
                      "expected key=value, got '" + assignment + "'");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  if (!known_keys().count(key) || key == "version") {
    throw ConfigError(key, "unknown key");
  }
  Json value;
  try {
    value = Json::parse(text);
  } catch (const Json::parse_error&) {
    value = text;
  }
  Json j = to_json(cfg);
  j[pointer(key)] = value;
  cfg = from_json(j);
}

std::string config_hash(const RunConfig& cfg) {
  Json j = to_json(cfg);
  j.erase("output");
  j.erase("eval");
  j["ppo"].erase("max_total_steps");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

EnvFactory make_env_factory(const RunConfig& cfg) {
  if (cfg.env_kind == EnvKind::kToy) {
    const ToyConfig toy = cfg.toy;
    return [toy](int) { return std::make_unique<ToyVelocityEnv>(toy); };
  }
  const EnvConfig env = cfg.env;
  return [env](int) { return std::make_unique<BoundingEnv>(env); };
}

}  // namespace spinebound
