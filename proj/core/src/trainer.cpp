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

#include "rdense/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "rdense/error.hpp"

namespace rdense {

std::string to_string(Precision p) { return p == Precision::kFloat ? "float" : "double"; }

Precision parse_precision(const std::string& name) {
  if (name == "float" || name == "single" || name == "f32") return Precision::kFloat;
  if (name == "double" || name == "f64") return Precision::kDouble;
  throw InputError("unknown precision '" + name + "' (expected float or double)");
}

void TrainConfig::validate() const {
  if (!(base_lr > 0)) throw InputError("base_lr must be positive");
  if (!(lr_decay_factor > 0)) throw InputError("lr_decay_factor must be positive");
  if (lr_step == 0) throw InputError("lr_step must be at least 1");
  if (!(weight_decay >= 0)) throw InputError("weight_decay must be non-negative");
  if (!(momentum >= 0 && momentum < 1)) throw InputError("momentum must lie in [0, 1)");
  if (epochs == 0) throw InputError("epochs must be at least 1");
  if (batch_size == 0) throw InputError("batch_size must be at least 1");
}

TrainConfig TrainConfig::desk_scale(std::size_t epochs) {
  TrainConfig c;
  c.epochs = epochs;
  c.lr_step = epochs < 90 ? std::max<std::size_t>(1, (epochs + 2) / 3) : 30;
  return c;
}

TrainConfig TrainConfig::paper_schedule() {
  TrainConfig c;
  c.epochs = 300;
  c.lr_step = 30;
  return c;
}

double lr_at(const TrainConfig& config, std::size_t epoch) {
  const std::size_t drops = epoch / config.lr_step;
  double lr = config.base_lr;
  for (std::size_t i = 0; i < drops; ++i) lr /= config.lr_decay_factor;
  return lr;
}

template <typename T>
void sgd_step(ParamStore<T>& params, const TrainConfig& config, double lr) {
  if (!params.any_grad()) {
    throw UsageError("sgd_step called before backward: no parameter holds a gradient");
  }
  const T mu = static_cast<T>(config.momentum);
  const T step = static_cast<T>(lr);
  for (Parameter<T>& p : params.parameters()) {
    if (!p.var.has_grad()) continue;
    const T wd = p.weight_decay ? static_cast<T>(config.weight_decay) : T(0);
    T* w = p.var.mutable_value().ptr();
    const T* g = p.var.grad().ptr();
    T* v = p.velocity.ptr();
    const std::size_t n = p.velocity.numel();
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = mu * v[i] + (g[i] + wd * w[i]);
      w[i] -= step * v[i];
    }
  }
}

// Metrics ---------------------------------------------------------------------

std::string RunMetrics::csv_header() { return "epoch,lr,train_loss,train_acc,test_acc,seconds"; }

std::string RunMetrics::csv_row(const MetricsRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.3f", r.epoch, r.lr, r.train_loss,
                r.train_acc, r.test_acc, r.seconds);
  return buf;
}

MetricsRow RunMetrics::parse_csv_row(const std::string& line) {
  MetricsRow r;
  std::istringstream in(line);
  std::string field;
  std::vector<std::string> fields;
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (fields.size() != 6) throw FormatError("metrics row has " + std::to_string(fields.size()) +
                                            " fields, expected 6: " + line);
  try {
    r.epoch = std::stoul(fields[0]);
    r.lr = std::stod(fields[1]);
    r.train_loss = std::stod(fields[2]);
    r.train_acc = std::stod(fields[3]);
    r.test_acc = std::stod(fields[4]);
    r.seconds = std::stod(fields[5]);
  } catch (const std::exception&) {
    throw FormatError("unparseable metrics row: " + line);
  }
  return r;
}

// Evaluation ------------------------------------------------------------------

template <typename T>
std::size_t argmax(std::span<const T> row) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < row.size(); ++i) {
    if (row[i] > row[best]) best = i;
  }
  return best;
}

template <typename T>
std::size_t count_correct(const Tensor<T>& logits, std::span<const int> labels) {
  const std::size_t n = logits.dim(0), classes = logits.dim(1);
  if (labels.size() != n) throw DimensionError("label count does not match logits rows");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = logits.data().subspan(i * classes, classes);
    if (static_cast<int>(argmax<T>(row)) == labels[i]) ++correct;
  }
  return correct;
}

template <typename T>
EvalResult evaluate(Network<T>& net, const Dataset& ds, std::size_t batch_size) {
  EvalResult out;
  if (ds.size() == 0) return out;
  double loss_sum = 0;
  std::vector<std::size_t> indices;
  for (std::size_t start = 0; start < ds.size(); start += batch_size) {
    const std::size_t end = std::min(ds.size(), start + batch_size);
    indices.resize(end - start);
    for (std::size_t i = start; i < end; ++i) indices[i - start] = i;
    const Batch<T> batch = make_batch<T>(ds, indices);
    Tape<T> tape;
    const Var<T> logits = net.forward(tape, batch.images, Mode::kEval);
    const Var<T> loss = ops::softmax_cross_entropy<T>(tape, logits, batch.labels);
    loss_sum += static_cast<double>(loss.value()[0]) * static_cast<double>(indices.size());
    out.correct += count_correct(logits.value(), batch.labels);
  }
  out.count = ds.size();
  out.loss = loss_sum / static_cast<double>(out.count);
  out.accuracy = static_cast<double>(out.correct) / static_cast<double>(out.count);
  return out;
}

// Training --------------------------------------------------------------------

template <typename T>
StepResult train_step(Network<T>& net, const Batch<T>& batch, const TrainConfig& config,
                      double lr) {
  Tape<T> tape;
  net.params().zero_grad();
  const Var<T> logits = net.forward(tape, batch.images, Mode::kTrain);
  const Var<T> loss = ops::softmax_cross_entropy<T>(tape, logits, batch.labels);
  StepResult r;
  r.loss = static_cast<double>(loss.value()[0]);
  if (!std::isfinite(r.loss)) throw NumericalError("non-finite loss " + std::to_string(r.loss));
  r.correct = count_correct(logits.value(), batch.labels);
  tape.backward(loss);
  sgd_step(net.params(), config, lr);
  return r;
}

template <typename T>
RunMetrics train(Network<T>& net, const Dataset& train_set, const Dataset& test_set,
                 const TrainConfig& config, const TrainHooks& hooks, std::size_t start_epoch) {
  config.validate();
  const ArchSpec& spec = net.spec();
  for (const Dataset* ds : {&train_set, &test_set}) {
    if (ds->size() == 0) continue;
    if (ds->channels() != spec.input_channels || ds->height() != spec.input_height ||
        ds->width() != spec.input_width) {
      throw DimensionError("dataset " + ds->name() + " images are " +
                           std::to_string(ds->channels()) + "x" + std::to_string(ds->height()) +
                           "x" + std::to_string(ds->width()) + " but " + spec.name +
                           " expects " + std::to_string(spec.input_channels) + "x" +
                           std::to_string(spec.input_height) + "x" +
                           std::to_string(spec.input_width));
    }
    if (ds->num_classes() > spec.num_classes) {
      throw DimensionError("dataset " + ds->name() + " has " +
                           std::to_string(ds->num_classes()) + " classes, network has " +
                           std::to_string(spec.num_classes));
    }
  }
  if (train_set.size() == 0) throw InputError("training set is empty");

  RunMetrics metrics;
  for (std::size_t epoch = start_epoch; epoch < config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    const double lr = lr_at(config, epoch);
    const auto batches = epoch_batches(train_set.size(), config.batch_size, config.seed, epoch);
    std::mt19937_64 aug_rng = seeded_rng(config.seed, epoch, 1);
    double loss_sum = 0;
    std::size_t correct = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const Batch<T> batch = make_batch<T>(train_set, batches[b], &aug_rng);
      StepResult step;
      try {
        step = train_step(net, batch, config, lr);
      } catch (const NumericalError& e) {
        throw NumericalError(std::string(e.what()) + " at epoch " + std::to_string(epoch) +
                             ", batch " + std::to_string(b));
      }
      loss_sum += step.loss * static_cast<double>(batches[b].size());
      correct += step.correct;
    }
    MetricsRow row;
    row.epoch = epoch;
    row.lr = lr;
    row.train_loss = loss_sum / static_cast<double>(train_set.size());
    row.train_acc = static_cast<double>(correct) / static_cast<double>(train_set.size());
    row.test_acc = evaluate(net, test_set).accuracy;
    row.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    metrics.rows.push_back(row);
    if (hooks.on_epoch) hooks.on_epoch(row);
  }
  return metrics;
}

template <typename T>
std::vector<AblationRun> ablate(const ArchSpec& spec, const Dataset& train_set,
                                const Dataset& test_set, const TrainConfig& config,
                                std::span<const std::uint64_t> seeds,
                                const AblationHooks<T>& hooks) {
  if (seeds.empty()) throw InputError("ablation needs at least one seed");
  ArchSpec residual_spec = spec;
  residual_spec.residual = true;
  std::vector<AblationRun> runs;
  for (const std::uint64_t seed : seeds) {
    TrainConfig cfg = config;
    cfg.seed = seed;
    AblationRun run;
    run.seed = seed;
    Network<T> residual = Network<T>::build(residual_spec, seed);
    Network<T> plane = residual.clone_with_residual(false);
    run.residual_params = residual.params().parameter_count();
    run.plane_params = plane.params().parameter_count();
    for (const bool is_residual : {true, false}) {
      Network<T>& net = is_residual ? residual : plane;
      TrainHooks th;
      if (hooks.on_epoch) {
        th.on_epoch = [&](const MetricsRow& r) { hooks.on_epoch(seed, is_residual, r); };
      }
      (is_residual ? run.residual : run.plane) = train(net, train_set, test_set, cfg, th);
      if (hooks.on_finished) hooks.on_finished(seed, is_residual, net);
    }
    runs.push_back(std::move(run));
  }
  return runs;
}

double median_final_accuracy(std::span<const AblationRun> runs, bool residual) {
  std::vector<double> acc;
  for (const AblationRun& r : runs) {
    const RunMetrics& m = residual ? r.residual : r.plane;
    if (!m.rows.empty()) acc.push_back(m.rows.back().test_acc);
  }
  if (acc.empty()) return 0;
  std::sort(acc.begin(), acc.end());
  const std::size_t n = acc.size();
  return n % 2 ? acc[n / 2] : 0.5 * (acc[n / 2 - 1] + acc[n / 2]);
}

#define RDENSE_INSTANTIATE_TRAINER(T)                                                         \
  template void sgd_step(ParamStore<T>&, const TrainConfig&, double);                         \
  template std::size_t argmax(std::span<const T>);                                            \
  template std::size_t count_correct(const Tensor<T>&, std::span<const int>);                 \
  template EvalResult evaluate(Network<T>&, const Dataset&, std::size_t);                     \
  template StepResult train_step(Network<T>&, const Batch<T>&, const TrainConfig&, double);   \
  template RunMetrics train(Network<T>&, const Dataset&, const Dataset&, const TrainConfig&,  \
                            const TrainHooks&, std::size_t);                                  \
  template std::vector<AblationRun> ablate(const ArchSpec&, const Dataset&, const Dataset&,   \
                                           const TrainConfig&, std::span<const std::uint64_t>, \
                                           const AblationHooks<T>&);

RDENSE_INSTANTIATE_TRAINER(float)
RDENSE_INSTANTIATE_TRAINER(double)

}  // namespace rdense
