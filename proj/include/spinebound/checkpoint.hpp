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


#ifndef SPINEBOUND_CHECKPOINT_HPP_
#define SPINEBOUND_CHECKPOINT_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace spinebound {

enum class DType : std::uint8_t { kFloat32 = 1, kFloat64 = 2, kBytes = 3 };

struct NamedArray {
  std::string name;
  DType dtype = DType::kFloat64;
  std::vector<std::uint64_t> shape;  // row-major
  std::vector<float> f32;
  std::vector<double> f64;
  std::string bytes;

  bool operator==(const NamedArray&) const = default;
};

// Versioned binary container of named typed arrays. Layout: 8-byte magic,
// u32 format version, config hash, u32 array count, then per array its
// name, dtype, rank, u64 dimensions and little-endian payload.
class Checkpoint {
 public:
  static constexpr std::uint32_t kFormatVersion = 1;

  Checkpoint() = default;
  explicit Checkpoint(std::string config_hash)
      : config_hash_(std::move(config_hash)) {}

  const std::string& config_hash() const { return config_hash_; }
  void set_config_hash(std::string hash) { config_hash_ = std::move(hash); }
  const std::vector<NamedArray>& arrays() const { return arrays_; }

  void put_f32(const std::string& name, std::vector<std::uint64_t> shape,
               std::vector<float> data);
  void put_f64(const std::string& name, std::vector<std::uint64_t> shape,
               std::vector<double> data);
  void put_f64(const std::string& name, std::vector<double> data);
  void put_bytes(const std::string& name, std::string data);

  bool has(const std::string& name) const;
  // Throw IncompatibleArtifact when the array is missing or mistyped.
  const NamedArray& get(const std::string& name) const;
  const std::vector<float>& f32(const std::string& name) const;
  const std::vector<double>& f64(const std::string& name) const;
  const std::string& bytes(const std::string& name) const;

  void write(std::ostream& out) const;
  // Writes to a temporary file and renames it into place.
  void save(const std::string& path) const;
  static Checkpoint read(std::istream& in);
  static Checkpoint load(const std::string& path);

  bool operator==(const Checkpoint&) const = default;

 private:
  void put(NamedArray array);

  std::string config_hash_;
  std::vector<NamedArray> arrays_;
};

}  // namespace spinebound

#endif  // SPINEBOUND_CHECKPOINT_HPP_
