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

// The rdense command line: analyze, train, eval and ablate.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rdense/arch_spec.hpp"
#include "rdense/dataset.hpp"

namespace rdense::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kData = 3,
  kNumerical = 4,
};

/// Environment variable consulted when --data-root is absent.
inline constexpr const char* kDataRootEnv = "RDENSE_DATA";

/// Runs one invocation. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Building blocks shared by the subcommands ---------------------------------------

struct ArchOptions {
  std::string preset;
  std::size_t growth_rate = 0;
  std::size_t layers_per_block = 0;
  std::size_t num_blocks = 0;
  bool plane = false;
  std::string input;  // "CxHxW"
  std::size_t classes = 0;
};

/// Geometry and handling implied by a dataset name.
struct DatasetKind {
  std::string name;
  bool idx = false;  // MNIST family, otherwise CIFAR binary
  CifarVariant variant = CifarVariant::kC10;
  std::size_t channels = 0;
  std::size_t extent = 0;
  std::size_t classes = 0;
  bool augment = false;
};

/// mnist, fmnist, cifar10, cifar100. Throws UsageError otherwise.
DatasetKind dataset_kind(const std::string& name);

/// Parses "CxHxW". Throws UsageError.
void parse_geometry(const std::string& text, std::size_t& c, std::size_t& h, std::size_t& w);

/// Preset or explicit (k, m, B, plane), with geometry from the dataset kind
/// and then --input/--classes. Throws UsageError.
ArchSpec resolve_arch(const ArchOptions& options, const std::optional<DatasetKind>& kind);

/// --data-root, else $RDENSE_DATA. Throws UsageError when neither is set.
std::filesystem::path resolve_data_root(const std::string& flag);

struct LoadedData {
  DatasetKind kind;
  std::filesystem::path dir;
  Dataset train;
  Dataset test;
  nlohmann::json files;  // [{name, bytes, crc32}]
};

/// Loads both splits from `<root>/<name>` (or `root` itself when that
/// subdirectory is absent), trims to the subset sizes (0 keeps all), centers
/// with the train mean and enables augmentation for CIFAR unless disabled.
LoadedData load_data(const DatasetKind& kind, const std::filesystem::path& root,
                     std::size_t train_subset, std::size_t test_subset, bool augment);

/// CRC-32 (zlib polynomial) of a byte range.
std::uint32_t crc32_of(std::span<const std::uint8_t> bytes);

nlohmann::json spec_to_json(const ArchSpec& spec);
ArchSpec spec_from_json(const nlohmann::json& doc);

}  // namespace rdense::cli
