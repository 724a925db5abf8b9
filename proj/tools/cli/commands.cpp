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

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "cli.hpp"
#include "rdense/analyzer.hpp"
#include "rdense/checkpoint.hpp"
#include "rdense/error.hpp"
#include "rdense/trainer.hpp"

namespace rdense::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kCheckpointFile = "checkpoint.bin";
constexpr const char* kMetricsFile = "metrics.csv";
constexpr const char* kConfigFile = "config.json";
constexpr const char* kSummaryFile = "summary.json";

struct DataOptions {
  std::string dataset;
  std::string data_root;
  std::size_t train_subset = 0;
  std::size_t test_subset = 0;
  bool no_augment = false;
};

struct TrainOptions {
  std::size_t epochs = 10;
  std::size_t batch_size = 128;
  std::size_t lr_step = 0;
  double lr = 0.1;
  double lr_decay = 10.0;
  double weight_decay = 1e-4;
  double momentum = 0.9;
  std::uint64_t seed = 0;
  std::string precision = "double";
  bool paper_schedule = false;
  std::string out;
  CLI::Option* epochs_flag = nullptr;
  CLI::Option* lr_step_flag = nullptr;
};

void add_arch_options(CLI::App* app, ArchOptions& a) {
  app->add_option("--arch", a.preset, "Preset name, e.g. rdense-12-100 or pdense-16-196");
  app->add_option("-k,--growth-rate", a.growth_rate, "Growth rate k (explicit architecture)");
  app->add_option("-m,--layers", a.layers_per_block, "Layers per dense block (explicit architecture)");
  app->add_option("-B,--blocks", a.num_blocks, "Number of dense blocks (explicit architecture)");
  app->add_flag("--plane", a.plane, "Drop the residual skip (explicit architecture)");
}

void add_data_options(CLI::App* app, DataOptions& d, bool required) {
  auto* opt = app->add_option("--dataset", d.dataset, "mnist, fmnist, cifar10 or cifar100");
  if (required) opt->required();
  app->add_option("--data-root", d.data_root,
                  std::string("Dataset root (default: $") + kDataRootEnv + ")");
  app->add_option("--train-subset", d.train_subset, "Use the first N training images (0: all)");
  app->add_option("--test-subset", d.test_subset, "Use the first N test images (0: all)");
}

void add_train_options(CLI::App* app, TrainOptions& t) {
  t.epochs_flag = app->add_option("--epochs", t.epochs, "Training epochs")->capture_default_str();
  app->add_option("--batch-size", t.batch_size, "Mini-batch size")->capture_default_str();
  app->add_option("--lr", t.lr, "Base learning rate")->capture_default_str();
  app->add_option("--lr-decay", t.lr_decay, "Learning-rate decay factor")->capture_default_str();
  t.lr_step_flag = app->add_option(
      "--lr-step", t.lr_step, "Epochs per decay step (default: ceil(epochs/3) below 90 epochs, else 30)");
  app->add_option("--weight-decay", t.weight_decay, "L2 weight decay")->capture_default_str();
  app->add_option("--momentum", t.momentum, "SGD momentum")->capture_default_str();
  app->add_option("--seed", t.seed, "Seed for initialization, batch order and augmentation")
      ->capture_default_str();
  app->add_option("--precision", t.precision, "float or double")->capture_default_str();
  app->add_flag("--paper-schedule", t.paper_schedule, "300 epochs, decay every 30");
  app->add_option("--out", t.out, "Run directory to create (must not exist)");
}

TrainConfig build_config(const TrainOptions& t) {
  TrainConfig c = t.paper_schedule ? TrainConfig::paper_schedule() : TrainConfig::desk_scale(t.epochs);
  if (t.paper_schedule && t.epochs_flag->count()) c.epochs = t.epochs;
  if (t.lr_step_flag->count()) c.lr_step = t.lr_step;
  c.base_lr = t.lr;
  c.lr_decay_factor = t.lr_decay;
  c.weight_decay = t.weight_decay;
  c.momentum = t.momentum;
  c.batch_size = t.batch_size;
  c.seed = t.seed;
  c.precision = parse_precision(t.precision);
  c.validate();
  return c;
}

json config_to_json(const TrainConfig& c) {
  return {{"base_lr", c.base_lr},       {"lr_decay_factor", c.lr_decay_factor},
          {"lr_step", c.lr_step},       {"weight_decay", c.weight_decay},
          {"momentum", c.momentum},     {"epochs", c.epochs},
          {"batch_size", c.batch_size}, {"seed", c.seed},
          {"precision", to_string(c.precision)}};
}

json dataset_to_json(const LoadedData& d, const DataOptions& o) {
  return {{"name", d.kind.name},
          {"dir", fs::absolute(d.dir).string()},
          {"train_size", d.train.size()},
          {"test_size", d.test.size()},
          {"train_subset", o.train_subset},
          {"test_subset", o.test_subset},
          {"preprocessing", "per_pixel_mean"},
          {"augmentation", d.train.augmentation() == Augmentation::kPadCropFlip},
          {"files", d.files}};
}

json row_to_json(const MetricsRow& r) {
  return {{"epoch", r.epoch},         {"lr", r.lr},
          {"train_loss", r.train_loss}, {"train_acc", r.train_acc},
          {"test_acc", r.test_acc},   {"seconds", r.seconds}};
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream f(path);
  if (!f) throw InputError("cannot write " + path.string());
  f << doc.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw MissingFileError("cannot open " + path.string());
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void create_run_dir(const fs::path& dir) {
  if (dir.has_parent_path()) fs::create_directories(dir.parent_path());
  if (!fs::create_directory(dir)) {
    throw UsageError("output directory " + dir.string() + " already exists");
  }
}

fs::path default_out(const ArchSpec& spec, const std::string& dataset, std::uint64_t seed,
                     const char* verb) {
  return fs::path("runs") /
         (std::string(verb) + "-" + spec.name + "-" + dataset + "-seed" + std::to_string(seed));
}

/// Append-only metrics CSV, flushed after every row.
class MetricsWriter {
 public:
  explicit MetricsWriter(const fs::path& path) : file_(path) {
    if (!file_) throw InputError("cannot write " + path.string());
    file_ << RunMetrics::csv_header() << '\n' << std::flush;
  }
  void append(const MetricsRow& row) { file_ << RunMetrics::csv_row(row) << '\n' << std::flush; }

 private:
  std::ofstream file_;
};

void print_row(std::ostream& out, const std::string& prefix, const MetricsRow& r) {
  char buf[192];
  std::snprintf(buf, sizeof buf, "epoch %3zu  lr %-8g  loss %.4f  train %.4f  test %.4f  %.1fs",
                r.epoch, r.lr, r.train_loss, r.train_acc, r.test_acc, r.seconds);
  out << prefix << buf << '\n' << std::flush;
}

void check_geometry(const ArchSpec& spec, const Dataset& ds) {
  if (ds.channels() != spec.input_channels || ds.height() != spec.input_height ||
      ds.width() != spec.input_width || ds.num_classes() > spec.num_classes) {
    throw DimensionError("dataset " + ds.name() + " (" + std::to_string(ds.channels()) + "x" +
                         std::to_string(ds.height()) + "x" + std::to_string(ds.width()) + ", " +
                         std::to_string(ds.num_classes()) + " classes) does not fit " +
                         spec.name + " (" + std::to_string(spec.input_channels) + "x" +
                         std::to_string(spec.input_height) + "x" +
                         std::to_string(spec.input_width) + ", " +
                         std::to_string(spec.num_classes) + " classes)");
  }
}

// analyze ------------------------------------------------------------------------

int cmd_analyze(const ArchOptions& arch, const std::string& dataset, const std::string& format,
                std::ostream& out) {
  std::optional<DatasetKind> kind;
  if (!dataset.empty()) kind = dataset_kind(dataset);
  const CostReport r = report(resolve_arch(arch, kind));
  out << (format == "json" ? render_json(r) + "\n" : render_table(r));
  return kOk;
}

// train --------------------------------------------------------------------------

template <typename T>
RunMetrics train_into(const ArchSpec& spec, const LoadedData& data, const TrainConfig& cfg,
                      const fs::path& dir, std::ostream& out) {
  Network<T> net = Network<T>::build(spec, cfg.seed);
  MetricsWriter metrics(dir / kMetricsFile);
  TrainHooks hooks;
  hooks.on_epoch = [&](const MetricsRow& row) {
    metrics.append(row);
    save_checkpoint(net, row.epoch + 1, dir / kCheckpointFile);
    print_row(out, "", row);
  };
  return train(net, data.train, data.test, cfg, hooks);
}

int cmd_train(const std::vector<std::string>& argv, const ArchOptions& arch,
              const DataOptions& dopt, const TrainOptions& topt, std::ostream& out) {
  const DatasetKind kind = dataset_kind(dopt.dataset);
  const ArchSpec spec = resolve_arch(arch, kind);
  const TrainConfig cfg = build_config(topt);
  const fs::path root = resolve_data_root(dopt.data_root);
  const LoadedData data = load_data(kind, root, dopt.train_subset, dopt.test_subset, !dopt.no_augment);
  check_geometry(spec, data.train);
  const fs::path dir = topt.out.empty() ? default_out(spec, kind.name, cfg.seed, "train") : fs::path(topt.out);
  create_run_dir(dir);

  write_json(dir / kConfigFile, {{"command", "train"},
                                 {"argv", argv},
                                 {"arch", spec_to_json(spec)},
                                 {"params", count_params(spec)},
                                 {"flops", count_flops(spec)},
                                 {"dataset", dataset_to_json(data, dopt)},
                                 {"train", config_to_json(cfg)}});
  out << "run directory " << dir.string() << '\n'
      << spec.name << ": " << count_params(spec) << " params, " << count_flops(spec) << " FLOPs; "
      << data.train.size() << " train / " << data.test.size() << " test images\n";

  const auto started = std::chrono::steady_clock::now();
  const RunMetrics m = cfg.precision == Precision::kFloat
                           ? train_into<float>(spec, data, cfg, dir, out)
                           : train_into<double>(spec, data, cfg, dir, out);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  double best = 0;
  for (const MetricsRow& r : m.rows) best = std::max(best, r.test_acc);
  write_json(dir / kSummaryFile, {{"arch", spec.name},
                                  {"params", count_params(spec)},
                                  {"flops", count_flops(spec)},
                                  {"epochs", m.rows.size()},
                                  {"final", row_to_json(m.rows.back())},
                                  {"best_test_acc", best},
                                  {"wall_seconds", seconds},
                                  {"checkpoint", kCheckpointFile}});
  out << "final test accuracy " << m.rows.back().test_acc << '\n';
  return kOk;
}

// eval ---------------------------------------------------------------------------

struct EvalOptions {
  std::string run;
  std::string checkpoint;
  std::size_t batch_size = 256;
  std::string format = "table";
};

template <typename T>
EvalResult evaluate_checkpoint(const fs::path& path, const ArchSpec& expected, const Dataset& test,
                               std::size_t batch_size, std::size_t& epoch) {
  Checkpoint<T> ck = load_checkpoint<T>(path, &expected);
  epoch = ck.epoch;
  return evaluate(ck.net, test, batch_size);
}

int cmd_eval(const EvalOptions& e, DataOptions d, std::ostream& out) {
  fs::path checkpoint = e.checkpoint;
  std::optional<ArchSpec> expected;
  if (!e.run.empty()) {
    const json config = read_json(fs::path(e.run) / kConfigFile);
    if (checkpoint.empty()) checkpoint = fs::path(e.run) / kCheckpointFile;
    expected = spec_from_json(config.at("arch"));
    const json& ds = config.at("dataset");
    if (d.dataset.empty()) d.dataset = ds.at("name").get<std::string>();
    if (d.data_root.empty()) d.data_root = ds.at("dir").get<std::string>();
    if (!d.train_subset) d.train_subset = ds.at("train_subset").get<std::size_t>();
    if (!d.test_subset) d.test_subset = ds.at("test_subset").get<std::size_t>();
  }
  if (checkpoint.empty()) throw UsageError("eval needs --run or --checkpoint");
  if (d.dataset.empty()) throw UsageError("eval needs --dataset (or --run)");
  const CheckpointInfo info = peek_checkpoint(checkpoint);
  if (!expected) expected = info.spec;

  const LoadedData data =
      load_data(dataset_kind(d.dataset), resolve_data_root(d.data_root), d.train_subset,
                d.test_subset, false);
  check_geometry(*expected, data.test);
  std::size_t epoch = 0;
  const EvalResult r =
      info.element_bytes == 4
          ? evaluate_checkpoint<float>(checkpoint, *expected, data.test, e.batch_size, epoch)
          : evaluate_checkpoint<double>(checkpoint, *expected, data.test, e.batch_size, epoch);
  if (e.format == "json") {
    out << json{{"checkpoint", checkpoint.string()}, {"arch", expected->name},
                {"epoch", epoch},                    {"dataset", d.dataset},
                {"samples", r.count},                {"correct", r.correct},
                {"loss", r.loss},                    {"accuracy", r.accuracy}}
               .dump(2)
        << '\n';
  } else {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "checkpoint  %s\narch        %s\nepoch       %zu\ndataset     %s\n"
                  "samples     %zu\nloss        %.6f\ntop-1       %.4f (%zu/%zu)\n",
                  checkpoint.string().c_str(), expected->name.c_str(), epoch, d.dataset.c_str(),
                  r.count, r.loss, r.accuracy, r.correct, r.count);
    out << buf;
  }
  return kOk;
}

// ablate -------------------------------------------------------------------------

template <typename T>
std::vector<AblationRun> ablate_into(const ArchSpec& spec, const LoadedData& data,
                                     const TrainConfig& cfg, const std::vector<std::uint64_t>& seeds,
                                     const fs::path& dir, std::ostream& out) {
  std::unique_ptr<MetricsWriter> writer;
  std::pair<std::uint64_t, bool> current{~0ull, false};
  auto run_dir = [&](std::uint64_t seed, bool residual) {
    return dir / (residual ? "residual" : "plane") / ("seed-" + std::to_string(seed));
  };
  AblationHooks<T> hooks;
  hooks.on_epoch = [&](std::uint64_t seed, bool residual, const MetricsRow& row) {
    if (current != std::make_pair(seed, residual)) {
      current = {seed, residual};
      fs::create_directories(run_dir(seed, residual));
      writer = std::make_unique<MetricsWriter>(run_dir(seed, residual) / kMetricsFile);
    }
    writer->append(row);
    print_row(out, std::string(residual ? "residual" : "plane   ") + " seed " + std::to_string(seed) + "  ", row);
  };
  hooks.on_finished = [&](std::uint64_t seed, bool residual, Network<T>& net) {
    save_checkpoint(net, cfg.epochs, run_dir(seed, residual) / kCheckpointFile);
  };
  return ablate<T>(spec, data.train, data.test, cfg, seeds, hooks);
}

int cmd_ablate(const std::vector<std::string>& argv, ArchOptions arch, const DataOptions& dopt,
               const TrainOptions& topt, const std::vector<std::uint64_t>& seeds,
               std::ostream& out) {
  if (seeds.empty()) throw UsageError("--seeds needs at least one seed");
  const DatasetKind kind = dataset_kind(dopt.dataset);
  ArchSpec spec = resolve_arch(arch, kind);
  spec.residual = true;
  const TrainConfig cfg = build_config(topt);
  const LoadedData data = load_data(kind, resolve_data_root(dopt.data_root), dopt.train_subset,
                                    dopt.test_subset, !dopt.no_augment);
  check_geometry(spec, data.train);
  const fs::path dir =
      topt.out.empty() ? default_out(spec, kind.name, seeds.front(), "ablate") : fs::path(topt.out);
  create_run_dir(dir);
  write_json(dir / kConfigFile, {{"command", "ablate"},
                                 {"argv", argv},
                                 {"arch", spec_to_json(spec)},
                                 {"seeds", seeds},
                                 {"dataset", dataset_to_json(data, dopt)},
                                 {"train", config_to_json(cfg)}});

  const auto runs = cfg.precision == Precision::kFloat
                        ? ablate_into<float>(spec, data, cfg, seeds, dir, out)
                        : ablate_into<double>(spec, data, cfg, seeds, dir, out);

  json rows = json::array();
  for (const AblationRun& r : runs) {
    for (const bool residual : {true, false}) {
      const MetricsRow& last = (residual ? r.residual : r.plane).rows.back();
      rows.push_back({{"seed", r.seed},
                      {"variant", residual ? "residual" : "plane"},
                      {"params", residual ? r.residual_params : r.plane_params},
                      {"final_train_loss", last.train_loss},
                      {"final_test_acc", last.test_acc}});
    }
  }
  const double med_residual = median_final_accuracy(runs, true);
  const double med_plane = median_final_accuracy(runs, false);
  const bool equal_params = std::all_of(runs.begin(), runs.end(), [](const AblationRun& r) {
    return r.residual_params == r.plane_params;
  });
  write_json(dir / kSummaryFile, {{"arch", spec.name},
                                  {"residual_params", runs.front().residual_params},
                                  {"plane_params", runs.front().plane_params},
                                  {"params_equal", equal_params},
                                  {"runs", rows},
                                  {"median_final_test_acc", {{"residual", med_residual},
                                                             {"plane", med_plane}}},
                                  {"residual_ge_plane", med_residual >= med_plane}});
  char buf[160];
  out << "seed        residual  plane\n";
  for (const AblationRun& r : runs) {
    std::snprintf(buf, sizeof buf, "%-10llu  %.4f    %.4f\n", static_cast<unsigned long long>(r.seed),
                  r.residual.rows.back().test_acc, r.plane.rows.back().test_acc);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "median      %.4f    %.4f   residual %s plane\n", med_residual,
                med_plane, med_residual >= med_plane ? ">=" : "<");
  out << buf << "params      " << runs.front().residual_params << " / "
      << runs.front().plane_params << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"RDenseCNN micro-engine: cost analysis, training, evaluation and ablation", "rdense"};
  app.require_subcommand(1, 1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  ArchOptions arch;
  DataOptions data;
  TrainOptions topt;
  EvalOptions eopt;
  std::string format = "table";
  std::vector<std::uint64_t> seeds{0, 1, 2};

  auto* analyze = app.add_subcommand("analyze", "Print parameter and FLOP counts per layer");
  add_arch_options(analyze, arch);
  analyze->add_option("--dataset", data.dataset, "Take input geometry and classes from a dataset");
  analyze->add_option("--input", arch.input, "Input geometry CxHxW");
  analyze->add_option("--classes", arch.classes, "Number of classes");
  analyze->add_option("--format", format, "table or json")
      ->check(CLI::IsMember({"table", "json"}))
      ->capture_default_str();

  auto* train_cmd = app.add_subcommand("train", "Train a network and write a run directory");
  add_arch_options(train_cmd, arch);
  add_data_options(train_cmd, data, true);
  add_train_options(train_cmd, topt);
  train_cmd->add_flag("--no-augment", data.no_augment, "Disable CIFAR pad/crop/flip augmentation");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a test split");
  eval_cmd->add_option("--run", eopt.run, "Run directory written by train");
  eval_cmd->add_option("--checkpoint", eopt.checkpoint, "Checkpoint file");
  add_data_options(eval_cmd, data, false);
  eval_cmd->add_option("--batch-size", eopt.batch_size, "Evaluation batch size")->capture_default_str();
  eval_cmd->add_option("--format", eopt.format, "table or json")
      ->check(CLI::IsMember({"table", "json"}))
      ->capture_default_str();

  auto* ablate_cmd = app.add_subcommand("ablate", "Train residual and plane variants side by side");
  add_arch_options(ablate_cmd, arch);
  add_data_options(ablate_cmd, data, true);
  add_train_options(ablate_cmd, topt);
  ablate_cmd->add_flag("--no-augment", data.no_augment, "Disable CIFAR pad/crop/flip augmentation");
  ablate_cmd->add_option("--seeds", seeds, "Comma-separated seeds")->delimiter(',')
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  try {
    if (analyze->parsed()) return cmd_analyze(arch, data.dataset, format, out);
    if (train_cmd->parsed()) return cmd_train(args, arch, data, topt, out);
    if (eval_cmd->parsed()) return cmd_eval(eopt, data, out);
    if (ablate_cmd->parsed()) return cmd_ablate(args, arch, data, topt, seeds, out);
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const DimensionError& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const InputError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  return run(std::vector<std::string>(argv + 1, argv + argc), out, err);
}

}  // namespace rdense::cli
