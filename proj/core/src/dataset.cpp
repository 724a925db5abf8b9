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

#include "rdense/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "rdense/error.hpp"

namespace rdense {

namespace fs = std::filesystem;

// Dataset ---------------------------------------------------------------------

Dataset::Dataset(std::string name, Split split, std::size_t channels, std::size_t height,
                 std::size_t width, std::size_t num_classes, std::vector<std::uint8_t> pixels,
                 std::vector<int> labels)
    : name_(std::move(name)),
      split_(split),
      channels_(channels),
      height_(height),
      width_(width),
      num_classes_(num_classes),
      pixels_(std::make_shared<const std::vector<std::uint8_t>>(std::move(pixels))),
      labels_(std::move(labels)) {
  if (pixels_->size() != labels_.size() * image_size()) {
    throw FormatError("dataset " + name_ + ": " + std::to_string(pixels_->size()) +
                      " pixel bytes do not hold " + std::to_string(labels_.size()) +
                      " images of " + std::to_string(image_size()));
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] < 0 || static_cast<std::size_t>(labels_[i]) >= num_classes_) {
      throw FormatError("dataset " + name_ + ": label " + std::to_string(labels_[i]) +
                        " of sample " + std::to_string(i) + " outside [0, " +
                        std::to_string(num_classes_) + ")");
    }
  }
}

std::span<const std::uint8_t> Dataset::pixels(std::size_t index) const {
  return std::span<const std::uint8_t>(*pixels_).subspan(index * image_size(), image_size());
}

void Dataset::image(std::size_t index, std::span<double> out) const {
  const auto px = pixels(index);
  for (std::size_t i = 0; i < px.size(); ++i) {
    out[i] = px[i] / 255.0 - (mean_.empty() ? 0.0 : mean_[i]);
  }
}

std::vector<double> Dataset::image(std::size_t index) const {
  std::vector<double> out(image_size());
  image(index, out);
  return out;
}

Dataset Dataset::subset(std::size_t count) const {
  count = std::min(count, size());
  std::vector<std::uint8_t> px(pixels_->begin(), pixels_->begin() + count * image_size());
  std::vector<int> labels(labels_.begin(), labels_.begin() + count);
  Dataset out(name_, split_, channels_, height_, width_, num_classes_, std::move(px),
              std::move(labels));
  if (!coarse_labels_.empty()) {
    out.coarse_labels_.assign(coarse_labels_.begin(), coarse_labels_.begin() + count);
  }
  out.mean_ = mean_;
  out.scheme_ = scheme_;
  out.augmentation_ = augmentation_;
  return out;
}

Dataset Dataset::with_mean(std::vector<double> mean, PreprocessScheme scheme) const {
  if (!mean.empty() && mean.size() != image_size()) {
    throw DimensionError("mean image has " + std::to_string(mean.size()) +
                         " values, images have " + std::to_string(image_size()));
  }
  Dataset out = *this;
  out.mean_ = std::move(mean);
  out.scheme_ = scheme;
  return out;
}

Dataset Dataset::with_augmentation(Augmentation a) const {
  Dataset out = *this;
  out.augmentation_ = a;
  return out;
}

Dataset Dataset::with_coarse_labels(std::vector<int> coarse) const {
  if (coarse.size() != size()) throw DimensionError("coarse label count mismatch");
  Dataset out = *this;
  out.coarse_labels_ = std::move(coarse);
  return out;
}

// IDX -------------------------------------------------------------------------

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset,
                        const std::string& what) {
  if (bytes.size() < offset + 4) {
    throw FormatError(what + ": truncated header at offset " + std::to_string(offset) +
                      " (file has " + std::to_string(bytes.size()) + " bytes)");
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void expect_magic(std::span<const std::uint8_t> bytes, std::uint32_t expected,
                  const std::string& what) {
  const std::uint32_t magic = read_be32(bytes, 0, what);
  if (magic != expected) {
    throw FormatError(what + ": bad magic " + std::to_string(magic) + " at offset 0, expected " +
                      std::to_string(expected));
  }
}

}  // namespace

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

Dataset decode_idx(std::span<const std::uint8_t> images, std::span<const std::uint8_t> labels,
                   Split split, std::string name) {
  expect_magic(images, kIdxImagesMagic, "IDX images");
  expect_magic(labels, kIdxLabelsMagic, "IDX labels");
  const std::size_t count = read_be32(images, 4, "IDX images");
  const std::size_t rows = read_be32(images, 8, "IDX images");
  const std::size_t cols = read_be32(images, 12, "IDX images");
  const std::size_t label_count = read_be32(labels, 4, "IDX labels");
  if (count != label_count) {
    throw FormatError("IDX count mismatch: images header at offset 4 says " +
                      std::to_string(count) + ", labels header at offset 4 says " +
                      std::to_string(label_count));
  }
  const std::size_t payload = count * rows * cols;
  if (images.size() != 16 + payload) {
    throw FormatError("IDX images: payload starting at offset 16 should hold " +
                      std::to_string(payload) + " bytes, file ends at offset " +
                      std::to_string(images.size()));
  }
  if (labels.size() != 8 + count) {
    throw FormatError("IDX labels: payload starting at offset 8 should hold " +
                      std::to_string(count) + " bytes, file ends at offset " +
                      std::to_string(labels.size()));
  }
  std::vector<std::uint8_t> px(images.begin() + 16, images.end());
  std::vector<int> lab(labels.begin() + 8, labels.end());
  return Dataset(std::move(name), split, 1, rows, cols, 10, std::move(px), std::move(lab));
}

Dataset load_idx(const fs::path& images_path, const fs::path& labels_path, Split split,
                 std::string name) {
  const auto images = read_file(images_path);
  const auto labels = read_file(labels_path);
  return decode_idx(images, labels, split, std::move(name));
}

std::pair<std::string, std::string> idx_file_names(Split split) {
  const std::string prefix = split == Split::kTrain ? "train" : "t10k";
  return {prefix + "-images-idx3-ubyte", prefix + "-labels-idx1-ubyte"};
}

Dataset load_mnist_dir(const fs::path& dir, Split split, std::string name) {
  const auto [images, labels] = idx_file_names(split);
  for (const std::string& f : {images, labels}) {
    if (!fs::exists(dir / f)) {
      throw MissingFileError("missing " + (dir / f).string() + "; expected files: " + images +
                             ", " + labels);
    }
  }
  return load_idx(dir / images, dir / labels, split, std::move(name));
}

std::vector<std::uint8_t> encode_idx_images(const Dataset& ds) {
  std::vector<std::uint8_t> out;
  out.reserve(16 + ds.size() * ds.image_size());
  write_be32(out, kIdxImagesMagic);
  write_be32(out, static_cast<std::uint32_t>(ds.size()));
  write_be32(out, static_cast<std::uint32_t>(ds.height()));
  write_be32(out, static_cast<std::uint32_t>(ds.width()));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto px = ds.pixels(i);
    out.insert(out.end(), px.begin(), px.end());
  }
  return out;
}

std::vector<std::uint8_t> encode_idx_labels(const Dataset& ds) {
  std::vector<std::uint8_t> out;
  write_be32(out, kIdxLabelsMagic);
  write_be32(out, static_cast<std::uint32_t>(ds.size()));
  for (int l : ds.labels()) out.push_back(static_cast<std::uint8_t>(l));
  return out;
}

// CIFAR -----------------------------------------------------------------------

Dataset decode_cifar(std::span<const std::uint8_t> bytes, CifarVariant variant, Split split) {
  const std::size_t label_bytes = variant == CifarVariant::kC10 ? 1 : 2;
  const std::size_t record = label_bytes + kCifarImageBytes;
  if (bytes.size() % record != 0) {
    throw FormatError("CIFAR: " + std::to_string(bytes.size()) +
                      " bytes is not a multiple of the " + std::to_string(record) +
                      "-byte record; trailing partial record at offset " +
                      std::to_string(bytes.size() - bytes.size() % record));
  }
  const std::size_t count = bytes.size() / record;
  std::vector<std::uint8_t> px;
  px.reserve(count * kCifarImageBytes);
  std::vector<int> labels(count), coarse;
  if (variant == CifarVariant::kC100) coarse.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint8_t* r = bytes.data() + i * record;
    if (variant == CifarVariant::kC10) {
      labels[i] = r[0];
    } else {
      coarse[i] = r[0];
      labels[i] = r[1];
    }
    px.insert(px.end(), r + label_bytes, r + record);
  }
  const bool c10 = variant == CifarVariant::kC10;
  Dataset ds(c10 ? "cifar10" : "cifar100", split, 3, 32, 32, c10 ? 10 : 100, std::move(px),
             std::move(labels));
  if (!c10) ds = ds.with_coarse_labels(std::move(coarse));
  return ds;
}

std::vector<std::string> cifar_file_names(CifarVariant variant, Split split) {
  if (variant == CifarVariant::kC100) {
    return {split == Split::kTrain ? "train.bin" : "test.bin"};
  }
  if (split == Split::kTest) return {"test_batch.bin"};
  std::vector<std::string> names;
  for (int b = 1; b <= 5; ++b) names.push_back("data_batch_" + std::to_string(b) + ".bin");
  return names;
}

Dataset load_cifar(const fs::path& dir, CifarVariant variant, Split split) {
  const auto names = cifar_file_names(variant, split);
  const fs::path nested =
      dir / (variant == CifarVariant::kC10 ? "cifar-10-batches-bin" : "cifar-100-binary");
  fs::path base = dir;
  if (!fs::exists(dir / names.front()) && fs::exists(nested / names.front())) base = nested;
  std::vector<std::uint8_t> bytes;
  for (const std::string& name : names) {
    if (!fs::exists(base / name)) {
      std::string expected;
      for (const std::string& n : names) expected += (expected.empty() ? "" : ", ") + n;
      throw MissingFileError("missing " + (base / name).string() + "; expected files in " +
                             dir.string() + ": " + expected);
    }
    auto chunk = read_file(base / name);
    const std::size_t record = (variant == CifarVariant::kC10 ? 1 : 2) + kCifarImageBytes;
    if (chunk.size() % record != 0) {
      throw FormatError((base / name).string() + ": size " + std::to_string(chunk.size()) +
                        " is not a multiple of the " + std::to_string(record) +
                        "-byte record");
    }
    bytes.insert(bytes.end(), chunk.begin(), chunk.end());
  }
  return decode_cifar(bytes, variant, split);
}

std::vector<std::uint8_t> encode_cifar(const Dataset& ds, CifarVariant variant) {
  std::vector<std::uint8_t> out;
  const auto coarse = ds.coarse_labels();
  if (variant == CifarVariant::kC100 && coarse.size() != ds.size()) {
    throw UsageError("encode_cifar: CIFAR-100 records need coarse labels");
  }
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (variant == CifarVariant::kC100) out.push_back(static_cast<std::uint8_t>(coarse[i]));
    out.push_back(static_cast<std::uint8_t>(ds.labels()[i]));
    const auto px = ds.pixels(i);
    out.insert(out.end(), px.begin(), px.end());
  }
  return out;
}

// Preprocessing ---------------------------------------------------------------

Dataset preprocess(const Dataset& ds, PreprocessScheme scheme, const Dataset* train_reference) {
  if (scheme == PreprocessScheme::kScaleOnly) return ds.with_mean({}, scheme);
  if (ds.split() == Split::kTest) {
    if (!train_reference || train_reference->mean_image().empty()) {
      throw UsageError("per-pixel mean centering of a test split needs the preprocessed train "
                       "split's mean image");
    }
    return ds.with_mean(std::vector<double>(train_reference->mean_image().begin(),
                                            train_reference->mean_image().end()),
                        scheme);
  }
  std::vector<double> mean(ds.image_size(), 0.0);
  for (std::size_t n = 0; n < ds.size(); ++n) {
    const auto px = ds.pixels(n);
    for (std::size_t i = 0; i < px.size(); ++i) mean[i] += px[i];
  }
  const double scale = 1.0 / (255.0 * static_cast<double>(std::max<std::size_t>(ds.size(), 1)));
  for (double& m : mean) m *= scale;
  return ds.with_mean(std::move(mean), scheme);
}

// Augmentation ----------------------------------------------------------------

AugmentDraw draw_augmentation(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> offset(0, 8);
  std::bernoulli_distribution coin(0.5);
  AugmentDraw d;
  d.offset_y = offset(rng);
  d.offset_x = offset(rng);
  d.flip = coin(rng);
  return d;
}

void augment(std::span<const double> image, std::size_t channels, std::size_t height,
             std::size_t width, const AugmentDraw& draw, std::span<double> out) {
  constexpr long kPad = 4;
  for (std::size_t c = 0; c < channels; ++c) {
    const double* src = image.data() + c * height * width;
    double* dst = out.data() + c * height * width;
    for (std::size_t y = 0; y < height; ++y) {
      const long sy = static_cast<long>(y + draw.offset_y) - kPad;
      for (std::size_t x = 0; x < width; ++x) {
        const std::size_t ox = draw.flip ? width - 1 - x : x;
        const long sx = static_cast<long>(ox + draw.offset_x) - kPad;
        const bool inside = sy >= 0 && sy < static_cast<long>(height) && sx >= 0 &&
                            sx < static_cast<long>(width);
        dst[y * width + x] = inside ? src[sy * static_cast<long>(width) + sx] : 0.0;
      }
    }
  }
}

// Batching --------------------------------------------------------------------

std::mt19937_64 seeded_rng(std::uint64_t seed, std::uint64_t epoch, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t dataset_size,
                                                    std::size_t batch_size, std::uint64_t seed,
                                                    std::uint64_t epoch) {
  if (batch_size == 0) throw InputError("batch size must be at least 1");
  std::vector<std::size_t> order(dataset_size);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = seeded_rng(seed, epoch, 0);
  // Explicit Fisher-Yates so the order does not depend on std::shuffle.
  for (std::size_t i = dataset_size; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < dataset_size; start += batch_size) {
    const std::size_t end = std::min(dataset_size, start + batch_size);
    batches.emplace_back(order.begin() + start, order.begin() + end);
  }
  return batches;
}

template <typename T>
Batch<T> make_batch(const Dataset& ds, std::span<const std::size_t> indices,
                    std::mt19937_64* rng) {
  const std::size_t size = ds.image_size();
  Batch<T> batch{Tensor<T>(Shape{indices.size(), ds.channels(), ds.height(), ds.width()}), {}};
  batch.labels.reserve(indices.size());
  std::vector<double> raw(size), aug(size);
  const bool do_augment = rng && ds.augmentation() == Augmentation::kPadCropFlip;
  for (std::size_t b = 0; b < indices.size(); ++b) {
    ds.image(indices[b], raw);
    const std::vector<double>* src = &raw;
    if (do_augment) {
      augment(raw, ds.channels(), ds.height(), ds.width(), draw_augmentation(*rng), aug);
      src = &aug;
    }
    T* dst = batch.images.ptr() + b * size;
    for (std::size_t i = 0; i < size; ++i) dst[i] = static_cast<T>((*src)[i]);
    batch.labels.push_back(ds.labels()[indices[b]]);
  }
  return batch;
}

template Batch<float> make_batch(const Dataset&, std::span<const std::size_t>, std::mt19937_64*);
template Batch<double> make_batch(const Dataset&, std::span<const std::size_t>,
                                  std::mt19937_64*);

}  // namespace rdense
