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


#include "spinebound/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>

#include "spinebound/errors.hpp"

namespace spinebound {
namespace {

constexpr char kMagic[8] = {'S', 'P', 'N', 'B', 'C', 'K', 'P', 'T'};
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 34;

template <typename U>
void write_le(std::ostream& out, U value) {
  unsigned char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    buf[i] = static_cast<unsigned char>(value >> (8 * i));
  }
  out.write(reinterpret_cast<const char*>(buf), sizeof(U));
}

template <typename U>
U read_le(std::istream& in) {
  unsigned char buf[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(U))) {
    throw IncompatibleArtifact("checkpoint is truncated");
  }
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    value |= static_cast<U>(buf[i]) << (8 * i);
  }
  return value;
}

void write_string(std::ostream& out, const std::string& s) {
  write_le<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  const auto size = read_le<std::uint64_t>(in);
  if (size > kMaxElements) throw IncompatibleArtifact("corrupt string size");
  std::string s(size, '\0');
  if (size > 0 && !in.read(s.data(), static_cast<std::streamsize>(size))) {
    throw IncompatibleArtifact("checkpoint is truncated");
  }
  return s;
}

std::uint64_t element_count(const std::vector<std::uint64_t>& shape) {
  std::uint64_t n = 1;
  for (std::uint64_t d : shape) n *= d;
  return n;
}

}  // namespace

void Checkpoint::put(NamedArray array) {
  for (NamedArray& existing : arrays_) {
    if (existing.name == array.name) {
      existing = std::move(array);
      return;
    }
  }
  arrays_.push_back(std::move(array));
}

void Checkpoint::put_f32(const std::string& name,
                         std::vector<std::uint64_t> shape,
                         std::vector<float> data) {
  if (element_count(shape) != data.size()) {
    throw ContractViolation("shape does not match data for " + name);
  }
  NamedArray a;
  a.name = name;
  a.dtype = DType::kFloat32;
  a.shape = std::move(shape);
  a.f32 = std::move(data);
  put(std::move(a));
}

void Checkpoint::put_f64(const std::string& name,
                         std::vector<std::uint64_t> shape,
                         std::vector<double> data) {
  if (element_count(shape) != data.size()) {
    throw ContractViolation("shape does not match data for " + name);
  }
  NamedArray a;
  a.name = name;
  a.dtype = DType::kFloat64;
  a.shape = std::move(shape);
  a.f64 = std::move(data);
  put(std::move(a));
}

void Checkpoint::put_f64(const std::string& name, std::vector<double> data) {
  const std::uint64_t n = data.size();
  put_f64(name, {n}, std::move(data));
}

void Checkpoint::put_bytes(const std::string& name, std::string data) {
  NamedArray a;
  a.name = name;
  a.dtype = DType::kBytes;
  a.shape = {data.size()};
  a.bytes = std::move(data);
  put(std::move(a));
}

bool Checkpoint::has(const std::string& name) const {
  for (const NamedArray& a : arrays_) {
    if (a.name == name) return true;
  }
  return false;
}

const NamedArray& Checkpoint::get(const std::string& name) const {
  for (const NamedArray& a : arrays_) {
    if (a.name == name) return a;
  }
  throw IncompatibleArtifact("checkpoint has no array named " + name);
}

const std::vector<float>& Checkpoint::f32(const std::string& name) const {
  const NamedArray& a = get(name);
  if (a.dtype != DType::kFloat32) {
    throw IncompatibleArtifact(name + " is not float32");
  }
  return a.f32;
}

const std::vector<double>& Checkpoint::f64(const std::string& name) const {
  const NamedArray& a = get(name);
  if (a.dtype != DType::kFloat64) {
    throw IncompatibleArtifact(name + " is not float64");
  }
  return a.f64;
}

const std::string& Checkpoint::bytes(const std::string& name) const {
  const NamedArray& a = get(name);
  if (a.dtype != DType::kBytes) {
    throw IncompatibleArtifact(name + " is not a byte array");
  }
  return a.bytes;
}

void Checkpoint::write(std::ostream& out) const {
  out.write(kMagic, sizeof(kMagic));
  write_le<std::uint32_t>(out, kFormatVersion);
  write_string(out, config_hash_);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(arrays_.size()));
  for (const NamedArray& a : arrays_) {
    write_string(out, a.name);
    write_le<std::uint8_t>(out, static_cast<std::uint8_t>(a.dtype));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(a.shape.size()));
    for (std::uint64_t d : a.shape) write_le<std::uint64_t>(out, d);
    switch (a.dtype) {
      case DType::kFloat32:
        for (float v : a.f32) write_le(out, std::bit_cast<std::uint32_t>(v));
        break;
      case DType::kFloat64:
        for (double v : a.f64) write_le(out, std::bit_cast<std::uint64_t>(v));
        break;
      case DType::kBytes:
        out.write(a.bytes.data(), static_cast<std::streamsize>(a.bytes.size()));
        break;
    }
  }
}

void Checkpoint::save(const std::string& path) const {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp + " for writing");
    write(out);
    if (!out) throw Error("failed writing " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint Checkpoint::read(std::istream& in) {
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) ||
      std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IncompatibleArtifact("not a spinebound checkpoint (bad magic)");
  }
  const auto version = read_le<std::uint32_t>(in);
  if (version != kFormatVersion) {
    throw IncompatibleArtifact("checkpoint format version " +
                               std::to_string(version) + " is not supported");
  }
  Checkpoint cp(read_string(in));
  const auto count = read_le<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedArray a;
    a.name = read_string(in);
    const auto dtype = read_le<std::uint8_t>(in);
    if (dtype < 1 || dtype > 3) {
      throw IncompatibleArtifact("unknown dtype for " + a.name);
    }
    a.dtype = static_cast<DType>(dtype);
    const auto rank = read_le<std::uint32_t>(in);
    if (rank > 8) throw IncompatibleArtifact("corrupt rank for " + a.name);
    for (std::uint32_t r = 0; r < rank; ++r) {
      a.shape.push_back(read_le<std::uint64_t>(in));
    }
    const std::uint64_t n = element_count(a.shape);
    if (n > kMaxElements) throw IncompatibleArtifact("corrupt shape");
    switch (a.dtype) {
      case DType::kFloat32:
        a.f32.resize(n);
        for (auto& v : a.f32) v = std::bit_cast<float>(read_le<std::uint32_t>(in));
        break;
      case DType::kFloat64:
        a.f64.resize(n);
        for (auto& v : a.f64) v = std::bit_cast<double>(read_le<std::uint64_t>(in));
        break;
      case DType::kBytes:
        a.bytes.resize(n);
        if (n > 0 && !in.read(a.bytes.data(), static_cast<std::streamsize>(n))) {
          throw IncompatibleArtifact("checkpoint is truncated");
        }
        break;
    }
    cp.arrays_.push_back(std::move(a));
  }
  return cp;
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IncompatibleArtifact("cannot open checkpoint " + path);
  return read(in);
}

}  // namespace spinebound
