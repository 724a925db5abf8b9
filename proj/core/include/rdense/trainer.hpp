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

// SGD with momentum and step decay, evaluation, the training loop and the
// residual-versus-plane ablation.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rdense/dataset.hpp"
#include "rdense/network.hpp"

namespace rdense {

enum class Precision { kFloat, kDouble };

std::string to_string(Precision p);
/// "float"/"single" or "double"; throws InputError otherwise.
Precision parse_precision(const std::string& name);

struct TrainConfig {
  double base_lr = 0.1;
  double lr_decay_factor = 10.0;
  std::size_t lr_step = 30;
  double weight_decay = 1e-4;
  double momentum = 0.9;
  std::size_t epochs = 10;
  std::size_t batch_size = 128;
  std::uint64_t seed = 0;
  Precision precision = Precision::kDouble;

  /// Throws InputError on an invalid field.
  void validate() const;

  /// Defaults with `epochs` epochs; below 90 epochs the decay step shrinks to
  /// ceil(epochs / 3) so the three plateaus survive.
  static TrainConfig desk_scale(std::size_t epochs);
  /// 300 epochs, decay every 30.
  static TrainConfig paper_schedule();
};

/// base_lr * decay^-floor(epoch / lr_step).
double lr_at(const TrainConfig& config, std::size_t epoch);

/// v <- momentum * v + (g + wd * w); w <- w - lr * v, where wd is zero for
/// parameters flagged without decay. Throws UsageError when no parameter
/// holds a gradient.
template <typename T>
void sgd_step(ParamStore<T>& params, const TrainConfig& config, double lr);

struct MetricsRow {
  std::size_t epoch = 0;
  double lr = 0;
  double train_loss = 0;
  double train_acc = 0;
  double test_acc = 0;
  double seconds = 0;
};

struct RunMetrics {
  std::vector<MetricsRow> rows;

  static std::string csv_header();  // epoch,lr,train_loss,train_acc,test_acc,seconds
  static std::string csv_row(const MetricsRow& row);
  /// Round-trips exactly through csv_row (values are printed with 17
  /// significant digits).
  static MetricsRow parse_csv_row(const std::string& line);
};

struct EvalResult {
  double loss = 0;
  double accuracy = 0;
  std::size_t correct = 0;
  std::size_t count = 0;
};

/// Index of the largest entry; ties resolve to the lowest index.
template <typename T>
std::size_t argmax(std::span<const T> row);

/// Number of rows of `logits` [N, classes] whose argmax equals the label.
template <typename T>
std::size_t count_correct(const Tensor<T>& logits, std::span<const int> labels);

/// Mean loss and top-1 accuracy over `ds` in eval mode.
template <typename T>
EvalResult evaluate(Network<T>& net, const Dataset& ds, std::size_t batch_size = 256);

struct StepResult {
  double loss = 0;
  std::size_t correct = 0;
};

/// Forward in train mode, backward and one SGD update. Throws NumericalError
/// when the loss is not finite.
template <typename T>
StepResult train_step(Network<T>& net, const Batch<T>& batch, const TrainConfig& config,
                      double lr);

struct TrainHooks {
  /// Called once per finished epoch, in order.
  std::function<void(const MetricsRow&)> on_epoch;
};

/// Runs epochs [start_epoch, config.epochs) on `net`. Batch order and
/// augmentation draws depend only on (seed, epoch), so a run resumed from a
/// checkpoint taken after epoch e matches an uninterrupted run from e on.
template <typename T>
RunMetrics train(Network<T>& net, const Dataset& train_set, const Dataset& test_set,
                 const TrainConfig& config, const TrainHooks& hooks = {},
                 std::size_t start_epoch = 0);

struct AblationRun {
  std::uint64_t seed = 0;
  std::size_t residual_params = 0;
  std::size_t plane_params = 0;
  RunMetrics residual;
  RunMetrics plane;
};

template <typename T>
struct AblationHooks {
  std::function<void(std::uint64_t seed, bool residual, const MetricsRow&)> on_epoch;
  /// Receives each trained network before it is discarded.
  std::function<void(std::uint64_t seed, bool residual, Network<T>& net)> on_finished;
};

/// For each seed: builds the residual network, copies it into a plane
/// network with identical weights and trains both with the same seed, so
/// batch order and augmentation draws coincide.
template <typename T>
std::vector<AblationRun> ablate(const ArchSpec& spec, const Dataset& train_set,
                                const Dataset& test_set, const TrainConfig& config,
                                std::span<const std::uint64_t> seeds,
                                const AblationHooks<T>& hooks = {});

/// Median of final-epoch test accuracies.
double median_final_accuracy(std::span<const AblationRun> runs, bool residual);

}  // namespace rdense
