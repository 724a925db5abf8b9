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

// MNIST-family (IDX) and CIFAR (binary batch) decoding, per-pixel mean
// centering, crop/flip augmentation and seeded minibatch order.

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rdense/tensor.hpp"

namespace rdense {

enum class Split { kTrain, kTest };
enum class CifarVariant { kC10, kC100 };
enum class PreprocessScheme { kScaleOnly, kPerPixelMean };
enum class Augmentation { kNone, kPadCropFlip };

/// Decoded labeled images. Pixels stay as the source bytes; values are
/// produced on access as byte / 255 minus the per-pixel mean image (when one
/// has been applied). Immutable once built.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::string name, Split split, std::size_t channels, std::size_t height,
          std::size_t width, std::size_t num_classes, std::vector<std::uint8_t> pixels,
          std::vector<int> labels);

  const std::string& name() const { return name_; }
  Split split() const { return split_; }
  std::size_t size() const { return labels_.size(); }
  std::size_t channels() const { return channels_; }
  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t image_size() const { return channels_ * height_ * width_; }
  std::size_t num_classes() const { return num_classes_; }

  std::span<const int> labels() const { return labels_; }
  std::span<const std::uint8_t> pixels(std::size_t index) const;
  /// Fine/coarse pair of CIFAR-100 records; empty otherwise.
  std::span<const int> coarse_labels() const { return coarse_labels_; }

  /// Per-pixel mean image subtracted from every value (empty when none).
  std::span<const double> mean_image() const { return mean_; }
  PreprocessScheme scheme() const { return scheme_; }
  Augmentation augmentation() const { return augmentation_; }

  /// Preprocessed values of one image (C x H x W).
  void image(std::size_t index, std::span<double> out) const;
  std::vector<double> image(std::size_t index) const;

  /// First `count` samples (all if count >= size()).
  Dataset subset(std::size_t count) const;

  Dataset with_mean(std::vector<double> mean, PreprocessScheme scheme) const;
  Dataset with_augmentation(Augmentation a) const;
  Dataset with_coarse_labels(std::vector<int> coarse) const;

 private:
  std::string name_;
  Split split_ = Split::kTrain;
  std::size_t channels_ = 0, height_ = 0, width_ = 0, num_classes_ = 0;
  std::shared_ptr<const std::vector<std::uint8_t>> pixels_;
  std::vector<int> labels_;
  std::vector<int> coarse_labels_;
  std::vector<double> mean_;
  PreprocessScheme scheme_ = PreprocessScheme::kScaleOnly;
  Augmentation augmentation_ = Augmentation::kNone;
};

// Decoding ------------------------------------------------------------------

inline constexpr std::uint32_t kIdxImagesMagic = 2051;
inline constexpr std::uint32_t kIdxLabelsMagic = 2049;
inline constexpr std::size_t kCifarImageBytes = 3072;

/// Decodes an IDX image/label pair (big-endian headers). Throws FormatError
/// naming the byte offset on bad magic, truncation or count mismatch.
Dataset decode_idx(std::span<const std::uint8_t> images, std::span<const std::uint8_t> labels,
                   Split split, std::string name = "mnist");
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path, Split split,
                 std::string name = "mnist");

/// Expected file names of the MNIST-family layout for a split.
std::pair<std::string, std::string> idx_file_names(Split split);
/// Loads `<dir>/{train,t10k}-{images-idx3,labels-idx1}-ubyte`.
Dataset load_mnist_dir(const std::filesystem::path& dir, Split split,
                       std::string name = "mnist");

/// Decodes concatenated CIFAR records; throws FormatError unless the size is
/// a whole number of records.
Dataset decode_cifar(std::span<const std::uint8_t> bytes, CifarVariant variant, Split split);
/// Batch file names for a variant and split, e.g. data_batch_1.bin ... .
std::vector<std::string> cifar_file_names(CifarVariant variant, Split split);
/// Loads a split from `dir`, also looking inside cifar-10-batches-bin /
/// cifar-100-binary. Throws MissingFileError listing the expected names.
Dataset load_cifar(const std::filesystem::path& dir, CifarVariant variant, Split split);

std::vector<std::uint8_t> encode_idx_images(const Dataset& ds);
std::vector<std::uint8_t> encode_idx_labels(const Dataset& ds);
std::vector<std::uint8_t> encode_cifar(const Dataset& ds, CifarVariant variant);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

// Preprocessing ---------------------------------------------------------------

/// kPerPixelMean on a train split subtracts its own mean image; on a test
/// split it subtracts `train_reference`'s mean and throws UsageError when that
/// is absent. kScaleOnly drops any mean.
Dataset preprocess(const Dataset& ds, PreprocessScheme scheme,
                   const Dataset* train_reference = nullptr);

// Augmentation ----------------------------------------------------------------

struct AugmentDraw {
  std::size_t offset_y = 4;  // crop origin on the 4-padded image, in [0, 8]
  std::size_t offset_x = 4;
  bool flip = false;
};

AugmentDraw draw_augmentation(std::mt19937_64& rng);

/// Zero-pad 4 on each side, crop back to H x W at the drawn offset, then
/// optionally mirror horizontally. Padding contributes the value 0.
void augment(std::span<const double> image, std::size_t channels, std::size_t height,
             std::size_t width, const AugmentDraw& draw, std::span<double> out);

// Batching --------------------------------------------------------------------

/// Sample order for one epoch: a permutation seeded by (seed, epoch), cut into
/// batches of `batch_size`; the final partial batch is kept.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t dataset_size,
                                                    std::size_t batch_size, std::uint64_t seed,
                                                    std::uint64_t epoch);

/// Deterministic generator for a (seed, epoch, stream) triple.
std::mt19937_64 seeded_rng(std::uint64_t seed, std::uint64_t epoch, std::uint64_t stream);

template <typename T>
struct Batch {
  Tensor<T> images;  // [B, C, H, W]
  std::vector<int> labels;
};

/// Gathers `indices` into a batch. When `rng` is given and the dataset
/// allows it, each image is augmented with a fresh draw.
template <typename T>
Batch<T> make_batch(const Dataset& ds, std::span<const std::size_t> indices,
                    std::mt19937_64* rng = nullptr);

}  // namespace rdense
