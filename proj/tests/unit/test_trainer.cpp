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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include "rdense/checkpoint.hpp"
#include "rdense/error.hpp"
#include "rdense/trainer.hpp"
#include "support/oracles.hpp"

namespace rdense {
namespace {

using testing::tiny_spec;

// Four classes, each lighting one quadrant of a 16x16 image over noise.
Dataset quadrant_dataset(std::size_t count, std::uint64_t seed, Split split = Split::kTrain) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> px(count * 256);
  std::vector<int> labels(count);
  for (std::size_t i = 0; i < count; ++i) {
    labels[i] = static_cast<int>(rng() % 4);
    const std::size_t qy = labels[i] / 2, qx = labels[i] % 2;
    for (std::size_t y = 0; y < 16; ++y)
      for (std::size_t x = 0; x < 16; ++x) {
        const bool lit = y / 8 == qy && x / 8 == qx;
        px[i * 256 + y * 16 + x] = static_cast<std::uint8_t>((lit ? 160 : 0) + rng() % 64);
      }
  }
  return Dataset("quadrants", split, 1, 16, 16, 10, std::move(px), std::move(labels));
}

struct Splits {
  Dataset train, test;
};

Splits quadrant_splits(std::size_t train_count, std::size_t test_count) {
  Dataset train = preprocess(quadrant_dataset(train_count, 1), PreprocessScheme::kPerPixelMean);
  Dataset test = preprocess(quadrant_dataset(test_count, 2, Split::kTest),
                            PreprocessScheme::kPerPixelMean, &train);
  return {std::move(train), std::move(test)};
}

TrainConfig small_config(std::size_t epochs, std::uint64_t seed = 0) {
  TrainConfig c = TrainConfig::desk_scale(epochs);
  c.batch_size = 32;
  c.seed = seed;
  return c;
}

bool same_except_time(const MetricsRow& a, const MetricsRow& b) {
  return a.epoch == b.epoch && a.lr == b.lr && a.train_loss == b.train_loss &&
         a.train_acc == b.train_acc && a.test_acc == b.test_acc;
}

template <typename F>
std::string error_message(F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

// Schedule -----------------------------------------------------------------------

TEST(Schedule, StepBoundaries) {
  const TrainConfig c;
  EXPECT_EQ(lr_at(c, 0), 0.1);
  EXPECT_EQ(lr_at(c, 29), 0.1);
  EXPECT_EQ(lr_at(c, 30), 0.01);
  EXPECT_EQ(lr_at(c, 89), 0.001);
  EXPECT_EQ(lr_at(c, 90), 0.0001);
  EXPECT_EQ(TrainConfig::paper_schedule().epochs, 300u);
  EXPECT_EQ(TrainConfig::paper_schedule().lr_step, 30u);
}

TEST(Schedule, DeskScaleKeepsThreePlateaus) {
  const TrainConfig c = TrainConfig::desk_scale(10);
  EXPECT_EQ(c.lr_step, 4u);
  std::vector<double> lrs;
  for (std::size_t e = 0; e < 10; ++e) lrs.push_back(lr_at(c, e));
  EXPECT_EQ(lrs, (std::vector<double>{0.1, 0.1, 0.1, 0.1, 0.01, 0.01, 0.01, 0.01, 0.001, 0.001}));
  EXPECT_EQ(TrainConfig::desk_scale(3).lr_step, 1u);
  EXPECT_EQ(TrainConfig::desk_scale(90).lr_step, 30u);
}

TEST(Schedule, ConfigValidation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.base_lr = 0;
  EXPECT_THROW(c.validate(), InputError);
  c = TrainConfig();
  c.weight_decay = -1e-4;
  EXPECT_THROW(c.validate(), InputError);
  c = TrainConfig();
  c.epochs = 0;
  EXPECT_THROW(c.validate(), InputError);
  c = TrainConfig();
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), InputError);
  EXPECT_EQ(parse_precision("float"), Precision::kFloat);
  EXPECT_EQ(parse_precision("double"), Precision::kDouble);
  EXPECT_THROW(parse_precision("half"), InputError);
}

// SGD ------------------------------------------------------------------------------

struct Scalar {
  ParamStore<double> store;
  Var<double> w;
};

Scalar scalar_param(double value, bool weight_decay = true) {
  Scalar s;
  s.w = Var<double>::leaf(Tensor<double>(Shape{1}, value), true);
  s.store.add_parameter("w", s.w, weight_decay);
  return s;
}

void set_grad(Var<double>& v, double g) { v.mutable_grad().ptr()[0] = g; }

TrainConfig sgd_config(double momentum, double wd) {
  TrainConfig c;
  c.momentum = momentum;
  c.weight_decay = wd;
  return c;
}

TEST(Sgd, ZeroGradientLeavesParameters) {
  Scalar s = scalar_param(0.7);
  set_grad(s.w, 0.0);
  sgd_step(s.store, sgd_config(0.9, 0.0), 0.1);
  EXPECT_EQ(s.w.value()[0], 0.7);
}

TEST(Sgd, SingleStepArithmetic) {
  Scalar s = scalar_param(1.0);
  set_grad(s.w, 1.0);
  sgd_step(s.store, sgd_config(0.0, 0.0), 0.1);
  EXPECT_DOUBLE_EQ(s.w.value()[0], 0.9);
}

TEST(Sgd, QuadraticBowlMatchesRecurrence) {
  Scalar s = scalar_param(1.0);
  const TrainConfig c = sgd_config(0.9, 0.0);
  double w = 1.0, v = 0.0;
  for (int i = 0; i < 100; ++i) {
    set_grad(s.w, s.w.value()[0]);
    sgd_step(s.store, c, 0.1);
    v = 0.9 * v + w;
    w -= 0.1 * v;
    EXPECT_DOUBLE_EQ(s.w.value()[0], w);
  }
  // Characteristic roots of the heavy-ball recurrence on f = w^2/2 have
  // modulus sqrt(momentum) here, so |w_100| is bounded by a multiple of
  // 0.9^50 (~5.2e-3) and cannot fall below 1e-3 in 100 steps.
  const double lr = 0.1, mu = 0.9;
  const double tr = 1 + mu - lr;
  ASSERT_LT(tr * tr, 4 * mu);
  const double envelope = std::pow(std::sqrt(mu), 100);
  const double theta = std::acos(tr / (2 * std::sqrt(mu)));
  const double amplitude = 1.0 / std::sin(theta);
  EXPECT_LE(std::abs(s.w.value()[0]), amplitude * envelope);
  EXPECT_GT(std::abs(s.w.value()[0]), 1e-3);
}

TEST(Sgd, WeightDecayIsGeometricAndRespectsExclusions) {
  Scalar decayed = scalar_param(2.0, true);
  Scalar excluded = scalar_param(2.0, false);
  const TrainConfig c = sgd_config(0.0, 0.01);
  for (int i = 1; i <= 20; ++i) {
    set_grad(decayed.w, 0.0);
    set_grad(excluded.w, 0.0);
    sgd_step(decayed.store, c, 0.5);
    sgd_step(excluded.store, c, 0.5);
    EXPECT_NEAR(decayed.w.value()[0], 2.0 * std::pow(1 - 0.5 * 0.01, i), 1e-14);
  }
  EXPECT_EQ(excluded.w.value()[0], 2.0);
}

TEST(Sgd, NetworkDecayFlagsFollowParameterRole) {
  Network<double> net = Network<double>::build(tiny_spec(), 1);
  for (const Parameter<double>& p : net.params().parameters()) {
    const bool exempt = p.path.ends_with("/gamma") || p.path.ends_with("/beta") ||
                        p.path.ends_with("/bias");
    EXPECT_EQ(p.weight_decay, !exempt) << p.path;
  }
}

TEST(Sgd, StepBeforeBackwardIsUsageError) {
  Scalar s = scalar_param(1.0);
  EXPECT_THROW(sgd_step(s.store, TrainConfig(), 0.1), UsageError);
}

// Evaluation -----------------------------------------------------------------------

TEST(Evaluate, OnehotAndUniformLogits) {
  const std::vector<int> labels{3, 0, 2, 0, 1, 3};
  Tensor<double> onehot(Shape{6, 4});
  for (std::size_t i = 0; i < 6; ++i) onehot.ptr()[i * 4 + labels[i]] = 5.0;
  EXPECT_EQ(count_correct(onehot, labels), 6u);
  const Tensor<double> uniform(Shape{6, 4}, 0.25);
  EXPECT_EQ(count_correct(uniform, labels), 2u);
  const std::vector<float> row{1.0f, 3.0f, 3.0f};
  EXPECT_EQ(argmax<float>(row), 1u);
}

TEST(Evaluate, RandomLogitsMatchDirectCount) {
  std::mt19937_64 rng(5);
  const Tensor<double> logits = testing::random_tensor(Shape{50, 7}, rng);
  std::vector<int> labels(50);
  for (int& l : labels) l = static_cast<int>(rng() % 7);
  std::size_t expected = 0;
  for (std::size_t i = 0; i < 50; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 0; j < 7; ++j)
      if (logits[i * 7 + j] > logits[i * 7 + best]) best = j;
    expected += static_cast<int>(best) == labels[i];
  }
  EXPECT_EQ(count_correct(logits, labels), expected);
}

TEST(Evaluate, NetworkAccuracyAndLossMatchStraightLineOracle) {
  const Splits d = quadrant_splits(8, 37);
  Network<double> net = Network<double>::build(tiny_spec(), 3);
  const EvalResult r = evaluate(net, d.test, 16);
  std::vector<std::size_t> all(d.test.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const Batch<double> batch = make_batch<double>(d.test, all);
  const auto logits = testing::straight_line_forward(net, batch.images, false);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto first = logits.begin() + static_cast<std::ptrdiff_t>(i * 10);
    correct += std::max_element(first, first + 10) - first == batch.labels[i];
  }
  EXPECT_EQ(r.count, 37u);
  EXPECT_EQ(r.correct, correct);
  EXPECT_NEAR(r.loss, testing::naive_cross_entropy(logits, 10, batch.labels), 1e-10);
}

// Training -------------------------------------------------------------------------

TEST(Train, OneEpochWritesOneRowAtBaseRate) {
  const Splits d = quadrant_splits(64, 32);
  Network<double> net = Network<double>::build(tiny_spec(), 0);
  std::vector<MetricsRow> seen;
  const RunMetrics m = train(net, d.train, d.test, small_config(1), {[&](const MetricsRow& r) {
                               seen.push_back(r);
                             }});
  ASSERT_EQ(m.rows.size(), 1u);
  ASSERT_EQ(seen.size(), 1u);
  EXPECT_EQ(m.rows[0].epoch, 0u);
  EXPECT_EQ(m.rows[0].lr, 0.1);
  EXPECT_TRUE(std::isfinite(m.rows[0].train_loss));
  EXPECT_GE(m.rows[0].test_acc, 0.0);
  EXPECT_LE(m.rows[0].test_acc, 1.0);
}

TEST(Train, SameSeedIsBitwiseReproducible) {
  const Splits d = quadrant_splits(96, 32);
  RunMetrics runs[3];
  for (int i = 0; i < 3; ++i) {
    Network<double> net = Network<double>::build(tiny_spec(), 4);
    runs[i] = train(net, d.train, d.test, small_config(3, i < 2 ? 9 : 10));
  }
  ASSERT_EQ(runs[0].rows.size(), 3u);
  for (std::size_t e = 0; e < 3; ++e) {
    EXPECT_TRUE(same_except_time(runs[0].rows[e], runs[1].rows[e])) << e;
    const std::string a = RunMetrics::csv_row(runs[0].rows[e]);
    const std::string b = RunMetrics::csv_row(runs[1].rows[e]);
    EXPECT_EQ(a.substr(0, a.rfind(',')), b.substr(0, b.rfind(',')));
  }
  EXPECT_NE(runs[0].rows[0].train_loss, runs[2].rows[0].train_loss);
}

TEST(Train, LrColumnFollowsScheduleAndLossFalls) {
  const Splits d = quadrant_splits(256, 64);
  std::vector<std::vector<double>> losses;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    Network<double> net = Network<double>::build(tiny_spec(), seed);
    const TrainConfig c = small_config(3, seed);
    const RunMetrics m = train(net, d.train, d.test, c);
    std::vector<double> l;
    for (const MetricsRow& r : m.rows) {
      EXPECT_EQ(r.lr, lr_at(c, r.epoch));
      l.push_back(r.train_loss);
    }
    losses.push_back(l);
  }
  std::vector<double> median(3);
  for (std::size_t e = 0; e < 3; ++e) {
    std::vector<double> col{losses[0][e], losses[1][e], losses[2][e]};
    std::sort(col.begin(), col.end());
    median[e] = col[1];
  }
  EXPECT_GT(median[0], median[1]);
  EXPECT_GT(median[1], median[2]);
}

TEST(Train, FloatPrecisionRuns) {
  const Splits d = quadrant_splits(64, 16);
  Network<float> net = Network<float>::build(tiny_spec(), 0);
  const RunMetrics m = train(net, d.train, d.test, small_config(2));
  ASSERT_EQ(m.rows.size(), 2u);
  EXPECT_TRUE(std::isfinite(m.rows[1].train_loss));
}

TEST(Train, NonFiniteLossNamesEpochAndBatch) {
  const Splits d = quadrant_splits(64, 16);
  Network<double> net = Network<double>::build(tiny_spec(), 0);
  net.params().find("head/fc/bias")->var.mutable_value().ptr()[0] =
      std::numeric_limits<double>::quiet_NaN();
  const std::string msg = error_message([&] { train(net, d.train, d.test, small_config(1)); });
  EXPECT_NE(msg.find("at epoch 0, batch 0"), std::string::npos) << msg;
  EXPECT_THROW(train(net, d.train, d.test, small_config(1)), NumericalError);
}

TEST(Train, GeometryAndEmptyInputErrors) {
  const Splits d = quadrant_splits(16, 16);
  ArchSpec wide = tiny_spec();
  wide.input_height = 20;
  Network<double> net = Network<double>::build(wide, 0);
  EXPECT_THROW(train(net, d.train, d.test, small_config(1)), DimensionError);
  Network<double> ok = Network<double>::build(tiny_spec(), 0);
  EXPECT_THROW(train(ok, d.train.subset(0), d.test, small_config(1)), InputError);
}

TEST(Metrics, CsvRoundTrip) {
  const MetricsRow r{4, 0.01, 1.0 / 3.0, 0.125, 0.9871234567890123, 12.345};
  EXPECT_EQ(RunMetrics::csv_header(), "epoch,lr,train_loss,train_acc,test_acc,seconds");
  const MetricsRow back = RunMetrics::parse_csv_row(RunMetrics::csv_row(r));
  EXPECT_TRUE(same_except_time(r, back));
  EXPECT_DOUBLE_EQ(back.seconds, 12.345);
  EXPECT_THROW(RunMetrics::parse_csv_row("1,2,3"), FormatError);
}

// Checkpoints ----------------------------------------------------------------------

TEST(Checkpoint, RoundTripIsBitwise) {
  const Splits d = quadrant_splits(64, 16);
  Network<double> net = Network<double>::build(tiny_spec(), 6);
  train(net, d.train, d.test, small_config(1));
  const auto path = std::filesystem::temp_directory_path() / "rdense_roundtrip.ckpt";
  save_checkpoint(net, 1, path);
  EXPECT_EQ(peek_checkpoint(path).epoch, 1u);
  EXPECT_EQ(peek_checkpoint(path).element_bytes, 8u);
  EXPECT_EQ(peek_checkpoint(path).version, kCheckpointVersion);
  Checkpoint<double> loaded = load_checkpoint<double>(path, &net.spec());
  EXPECT_EQ(loaded.epoch, 1u);
  const auto a = net.params().parameters(), b = loaded.net.params().parameters();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].path, b[i].path);
    EXPECT_EQ(a[i].var.value(), b[i].var.value()) << a[i].path;
    EXPECT_EQ(a[i].velocity, b[i].velocity) << a[i].path;
  }
  const auto ba = net.params().buffers(), bb = loaded.net.params().buffers();
  ASSERT_EQ(ba.size(), bb.size());
  for (std::size_t i = 0; i < ba.size(); ++i) EXPECT_EQ(ba[i].var.value(), bb[i].var.value());
  std::vector<std::size_t> idx{0, 1, 2, 3, 4, 5, 6, 7};
  const Batch<double> batch = make_batch<double>(d.test, idx);
  Tape<double> t1, t2;
  EXPECT_EQ(net.forward(t1, batch.images, Mode::kEval).value(),
            loaded.net.forward(t2, batch.images, Mode::kEval).value());
  std::filesystem::remove(path);
}

TEST(Checkpoint, MismatchedSpecIsRejectedWithDiff) {
  Network<double> net = Network<double>::build(tiny_spec(), 0);
  const auto bytes = encode_checkpoint(net, 0);
  ArchSpec other = tiny_spec();
  other.growth_rate = 8;
  const std::string msg = error_message([&] { decode_checkpoint<double>(bytes, &other); });
  EXPECT_NE(msg.find("growth_rate"), std::string::npos) << msg;
  EXPECT_THROW(decode_checkpoint<double>(bytes, &other), ConfigError);
  EXPECT_NO_THROW(decode_checkpoint<double>(bytes, nullptr));
}

TEST(Checkpoint, FormatErrors) {
  Network<float> net = Network<float>::build(tiny_spec(), 0);
  auto bytes = encode_checkpoint(net, 2);
  EXPECT_EQ(decode_checkpoint_header(bytes).element_bytes, 4u);
  EXPECT_THROW(decode_checkpoint<double>(bytes), FormatError);
  auto bumped = bytes;
  bumped[8] = static_cast<std::uint8_t>(kCheckpointVersion + 1);
  EXPECT_NE(error_message([&] { decode_checkpoint<float>(bumped); }).find("version"),
            std::string::npos);
  EXPECT_THROW(decode_checkpoint<float>(bumped), FormatError);
  for (std::size_t cut : {std::size_t{3}, bytes.size() / 2, bytes.size() - 1}) {
    const std::vector<std::uint8_t> truncated(bytes.begin(), bytes.begin() + cut);
    EXPECT_THROW(decode_checkpoint<float>(truncated), FormatError) << cut;
  }
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_checkpoint<float>(bad_magic), FormatError);
  EXPECT_THROW(load_checkpoint<float>("/nonexistent/rdense.ckpt"), MissingFileError);
}

TEST(Checkpoint, ResumeReproducesUninterruptedRun) {
  const Splits d = quadrant_splits(96, 32);
  TrainConfig c = small_config(4, 21);
  c.lr_step = 2;
  Network<double> whole = Network<double>::build(tiny_spec(), 8);
  const RunMetrics uninterrupted = train(whole, d.train, d.test, c);

  Network<double> first = Network<double>::build(tiny_spec(), 8);
  TrainConfig head = c;
  head.epochs = 2;
  train(first, d.train, d.test, head);
  const auto bytes = encode_checkpoint(first, 2);
  Checkpoint<double> resumed = decode_checkpoint<double>(bytes, &first.spec());
  const RunMetrics tail = train(resumed.net, d.train, d.test, c, {}, resumed.epoch);
  ASSERT_EQ(tail.rows.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_TRUE(same_except_time(tail.rows[i], uninterrupted.rows[i + 2])) << i;
  }
}

// Ablation -------------------------------------------------------------------------

TEST(Ablation, PairsShareInitialWeightsAndBatchOrder) {
  const Splits d = quadrant_splits(64, 32);
  const TrainConfig c = small_config(2);
  const std::vector<std::uint64_t> seeds{5, 6};
  std::size_t epochs_seen = 0, finished = 0;
  AblationHooks<double> hooks;
  hooks.on_epoch = [&](std::uint64_t, bool, const MetricsRow&) { ++epochs_seen; };
  hooks.on_finished = [&](std::uint64_t, bool residual, Network<double>& net) {
    EXPECT_EQ(net.spec().residual, residual);
    ++finished;
  };
  const auto runs = ablate<double>(tiny_spec(), d.train, d.test, c, seeds, hooks);
  EXPECT_EQ(epochs_seen, 8u);
  EXPECT_EQ(finished, 4u);
  ASSERT_EQ(runs.size(), 2u);
  for (const AblationRun& run : runs) {
    EXPECT_EQ(run.residual_params, run.plane_params);
    TrainConfig cs = c;
    cs.seed = run.seed;
    Network<double> residual = Network<double>::build(tiny_spec(), run.seed);
    Network<double> plane = residual.clone_with_residual(false);
    const RunMetrics r = train(residual, d.train, d.test, cs);
    const RunMetrics p = train(plane, d.train, d.test, cs);
    for (std::size_t e = 0; e < 2; ++e) {
      EXPECT_TRUE(same_except_time(r.rows[e], run.residual.rows[e]));
      EXPECT_TRUE(same_except_time(p.rows[e], run.plane.rows[e]));
    }
  }
  EXPECT_THROW(ablate<double>(tiny_spec(), d.train, d.test, c, {}), InputError);
}

TEST(Ablation, MedianFinalAccuracy) {
  std::vector<AblationRun> runs(3);
  const double finals[3] = {0.5, 0.9, 0.7};
  for (int i = 0; i < 3; ++i) {
    runs[i].residual.rows = {MetricsRow{0, 0.1, 1, 0, 0.1, 0}, MetricsRow{1, 0.1, 1, 0, finals[i], 0}};
    runs[i].plane.rows = {MetricsRow{0, 0.1, 1, 0, finals[i] / 2, 0}};
  }
  EXPECT_DOUBLE_EQ(median_final_accuracy(runs, true), 0.7);
  EXPECT_DOUBLE_EQ(median_final_accuracy(runs, false), 0.35);
  EXPECT_DOUBLE_EQ(median_final_accuracy(std::span(runs).first(2), true), 0.7);
}

}  // namespace
}  // namespace rdense
