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

#ifndef SPINEBOUND_ERRORS_HPP_
#define SPINEBOUND_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace spinebound {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// kinematics
class UnreachableTarget : public Error {
 public:
  using Error::Error;
};
class NearSingular : public Error {
 public:
  using Error::Error;
};
class JointLimitViolation : public Error {
 public:
  using Error::Error;
};

// dynamics / learner: non-finite or exploding state, non-finite losses
class NumericalDivergence : public Error {
 public:
  using Error::Error;
};

// environment lifecycle misuse (e.g. stepping a finished episode)
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// metrics
class ZeroDistance : public Error {
 public:
  using Error::Error;
};
class InsufficientStrides : public Error {
 public:
  using Error::Error;
};
class ConfigMismatch : public Error {
 public:
  using Error::Error;
};

// harness
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// checkpoint or log produced by an incompatible version or config
class IncompatibleArtifact : public Error {
 public:
  using Error::Error;
};

}  // namespace spinebound

#endif  // SPINEBOUND_ERRORS_HPP_
