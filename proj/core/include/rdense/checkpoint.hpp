// Copyright 2026 The RDenseCNN Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Versioned little-endian checkpoint files.
//
//   "RDNSCKPT" | u32 version | u8 element bytes | spec | u64 epoch |
//   u32 entry count | entries | "END."
//
// spec is the name (u32 length + bytes), eight u64 geometry fields and a u8
// residual flag. Each entry is a u8 kind (value, velocity, buffer), the
// parameter path, u32 rank, u64 extents and the raw elements.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rdense/network.hpp"

namespace rdense {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointInfo {
  std::uint32_t version = 0;
  std::size_t element_bytes = 0;  // 4 for float, 8 for double
  ArchSpec spec;
  std::size_t epoch = 0;  // number of completed epochs
};

template <typename T>
struct Checkpoint {
  Network<T> net;
  std::size_t epoch = 0;
};

template <typename T>
std::vector<std::uint8_t> encode_checkpoint(const Network<T>& net, std::size_t epoch);

template <typename T>
void save_checkpoint(const Network<T>& net, std::size_t epoch, const std::filesystem::path& path);

/// Reads only the header. Throws FormatError on bad magic, version or
/// truncation.
CheckpointInfo peek_checkpoint(const std::filesystem::path& path);
CheckpointInfo decode_checkpoint_header(std::span<const std::uint8_t> bytes);

/// Restores parameters, BN running statistics and velocities bit-exactly.
/// When `expected` is given and differs from the embedded spec, throws
/// ConfigError listing the differing fields. Element type mismatch,
/// version mismatch and truncation throw FormatError.
template <typename T>
Checkpoint<T> decode_checkpoint(std::span<const std::uint8_t> bytes,
                                const ArchSpec* expected = nullptr);

template <typename T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path,
                              const ArchSpec* expected = nullptr);

}  // namespace rdense
