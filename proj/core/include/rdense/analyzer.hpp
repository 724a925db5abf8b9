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

// Static parameter and FLOP accounting. The FLOP convention counts one FLOP
// per multiply-accumulate in convolutions and the final linear layer; BN,
// ReLU, pooling and the residual sum contribute zero.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rdense/arch_spec.hpp"

namespace rdense {

struct CostRow {
  std::string path;
  std::string kind;  // conv1x1, conv3x3, bn, relu, pool, gap, concat, add, fc
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::uint64_t params = 0;
  std::uint64_t macs = 0;
};

/// Coarse stage view (stem, pooling, dense and transition blocks, head).
struct CostStage {
  std::string name;
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
};

struct CostReport {
  ArchSpec spec;
  std::vector<CostRow> rows;
  std::vector<CostStage> stages;
  std::uint64_t total_params = 0;
  std::uint64_t total_flops = 0;
};

std::uint64_t count_params(const ArchSpec& spec);
std::uint64_t count_flops(const ArchSpec& spec);
CostReport report(const ArchSpec& spec);

/// Machine-readable rendering: JSON with keys spec, rows, stages,
/// total_params, total_flops.
std::string render_json(const CostReport& report);
/// Human-readable tables with totals rounded to 0.01M parameters and 0.1M
/// FLOPs.
std::string render_table(const CostReport& report);

/// "0.61M" style rendering with the given number of decimals.
std::string format_millions(std::uint64_t value, int decimals);

}  // namespace rdense
