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

#include <zlib.h>

#include <cstdlib>
#include <sstream>

#include "cli.hpp"
#include "rdense/error.hpp"

namespace rdense::cli {

namespace fs = std::filesystem;

DatasetKind dataset_kind(const std::string& name) {
  DatasetKind k;
  k.name = name;
  if (name == "mnist" || name == "fmnist") {
    k.idx = true;
    k.channels = 1;
    k.extent = 28;
    k.classes = 10;
  } else if (name == "cifar10" || name == "cifar100") {
    k.variant = name == "cifar10" ? CifarVariant::kC10 : CifarVariant::kC100;
    k.channels = 3;
    k.extent = 32;
    k.classes = name == "cifar10" ? 10 : 100;
    k.augment = true;
  } else {
    throw UsageError("unknown dataset '" + name + "' (expected mnist, fmnist, cifar10, cifar100)");
  }
  return k;
}

void parse_geometry(const std::string& text, std::size_t& c, std::size_t& h, std::size_t& w) {
  std::size_t values[3];
  std::istringstream in(text);
  for (int i = 0; i < 3; ++i) {
    long long v = 0;
    if (!(in >> v) || v <= 0) throw UsageError("--input expects CxHxW, got '" + text + "'");
    values[i] = static_cast<std::size_t>(v);
    if (i < 2 && (in.get() != 'x')) throw UsageError("--input expects CxHxW, got '" + text + "'");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw UsageError("--input expects CxHxW, got '" + text + "'");
  }
  c = values[0];
  h = values[1];
  w = values[2];
}

ArchSpec resolve_arch(const ArchOptions& o, const std::optional<DatasetKind>& kind) {
  const bool explicit_arch = o.growth_rate || o.layers_per_block || o.num_blocks || o.plane;
  ArchSpec spec;
  if (!o.preset.empty()) {
    if (explicit_arch) {
      throw UsageError("--arch cannot be combined with -k/-m/-B/--plane");
    }
    const auto parsed = parse_preset(o.preset);
    if (!parsed) {
      std::string msg = "unknown preset '" + o.preset + "'; valid presets:";
      for (const std::string& n : preset_names()) msg += "\n  " + n;
      throw UsageError(msg);
    }
    spec = *parsed;
  } else {
    if (!o.growth_rate || !o.layers_per_block || !o.num_blocks) {
      throw UsageError("select an architecture with --arch or all of -k, -m and -B");
    }
    spec.growth_rate = o.growth_rate;
    spec.layers_per_block = o.layers_per_block;
    spec.num_blocks = o.num_blocks;
    spec.residual = !o.plane;
    spec.name = std::string(o.plane ? "pdense" : "rdense") + "-k" + std::to_string(o.growth_rate) +
                "-m" + std::to_string(o.layers_per_block) + "-b" + std::to_string(o.num_blocks);
  }
  if (kind) {
    spec.input_channels = kind->channels;
    spec.input_height = spec.input_width = kind->extent;
    spec.num_classes = kind->classes;
  }
  if (!o.input.empty()) {
    parse_geometry(o.input, spec.input_channels, spec.input_height, spec.input_width);
  }
  if (o.classes) spec.num_classes = o.classes;
  try {
    spec.validate();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  return spec;
}

fs::path resolve_data_root(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kDataRootEnv); env && *env) return env;
  throw UsageError(std::string("no dataset root: pass --data-root or set ") + kDataRootEnv);
}

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  return static_cast<std::uint32_t>(crc32_z(crc32_z(0L, Z_NULL, 0), bytes.data(), bytes.size()));
}

namespace {

nlohmann::json checksum_entry(const fs::path& path) {
  const auto bytes = read_file(path);
  return {{"name", path.filename().string()}, {"bytes", bytes.size()}, {"crc32", crc32_of(bytes)}};
}

// Directory holding the CIFAR batch files, mirroring load_cifar's search.
fs::path cifar_files_dir(const fs::path& dir, CifarVariant variant) {
  const std::string first = cifar_file_names(variant, Split::kTrain).front();
  for (const fs::path& candidate :
       {dir, dir / "cifar-10-batches-bin", dir / "cifar-100-binary"}) {
    if (fs::exists(candidate / first)) return candidate;
  }
  return dir;
}

}  // namespace

LoadedData load_data(const DatasetKind& kind, const fs::path& root, std::size_t train_subset,
                     std::size_t test_subset, bool augment) {
  LoadedData d;
  d.kind = kind;
  d.dir = fs::is_directory(root / kind.name) ? root / kind.name : root;
  Dataset train, test;
  d.files = nlohmann::json::array();
  if (kind.idx) {
    train = load_mnist_dir(d.dir, Split::kTrain, kind.name);
    test = load_mnist_dir(d.dir, Split::kTest, kind.name);
    for (const Split s : {Split::kTrain, Split::kTest}) {
      const auto [images, labels] = idx_file_names(s);
      d.files.push_back(checksum_entry(d.dir / images));
      d.files.push_back(checksum_entry(d.dir / labels));
    }
  } else {
    train = load_cifar(d.dir, kind.variant, Split::kTrain);
    test = load_cifar(d.dir, kind.variant, Split::kTest);
    const fs::path files_dir = cifar_files_dir(d.dir, kind.variant);
    for (const Split s : {Split::kTrain, Split::kTest}) {
      for (const std::string& f : cifar_file_names(kind.variant, s)) {
        d.files.push_back(checksum_entry(files_dir / f));
      }
    }
  }
  if (train_subset) train = train.subset(train_subset);
  if (test_subset) test = test.subset(test_subset);
  d.train = preprocess(train, PreprocessScheme::kPerPixelMean);
  d.test = preprocess(test, PreprocessScheme::kPerPixelMean, &d.train);
  if (kind.augment && augment) d.train = d.train.with_augmentation(Augmentation::kPadCropFlip);
  return d;
}

nlohmann::json spec_to_json(const ArchSpec& s) {
  return {{"name", s.name},
          {"growth_rate", s.growth_rate},
          {"layers_per_block", s.layers_per_block},
          {"num_blocks", s.num_blocks},
          {"input_channels", s.input_channels},
          {"input_height", s.input_height},
          {"input_width", s.input_width},
          {"num_classes", s.num_classes},
          {"residual", s.residual},
          {"stem_stride", s.stem_stride}};
}

ArchSpec spec_from_json(const nlohmann::json& d) {
  ArchSpec s;
  s.name = d.at("name").get<std::string>();
  s.growth_rate = d.at("growth_rate").get<std::size_t>();
  s.layers_per_block = d.at("layers_per_block").get<std::size_t>();
  s.num_blocks = d.at("num_blocks").get<std::size_t>();
  s.input_channels = d.at("input_channels").get<std::size_t>();
  s.input_height = d.at("input_height").get<std::size_t>();
  s.input_width = d.at("input_width").get<std::size_t>();
  s.num_classes = d.at("num_classes").get<std::size_t>();
  s.residual = d.at("residual").get<bool>();
  s.stem_stride = d.at("stem_stride").get<std::size_t>();
  return s;
}

}  // namespace rdense::cli
