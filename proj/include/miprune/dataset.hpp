#pragma once

#include <filesystem>
#include <utility>

#include "miprune/types.hpp"

namespace miprune {

enum class Split { Train, Test };

// Labeled feature matrix. Features are stored as handed to the trainer, i.e.
// already normalized at ingestion.
struct Dataset {
  MatF features;  // num_samples x dim
  VecI labels;    // values in [0, num_classes)
  int num_classes = 0;
  Split split = Split::Train;

  Index size() const { return features.rows(); }
  Index dim() const { return features.cols(); }

  void validate() const;
};

// Standard CIFAR-10 binary batches (data_batch_1..5.bin + test_batch.bin,
// 10000 records each, record = label byte + 3072 pixel bytes). Pixels are
// scaled to [0,1] and then standardized per feature with train-split stats.
std::pair<Dataset, Dataset> load_cifar10_binary(const std::filesystem::path& dir);

// Generic dataset container, magic "MIPD" (see save_dataset for the layout).
Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const Dataset& data, const std::filesystem::path& path);

// Gaussian blobs: class means pairwise `separation` apart, unit covariance,
// per-feature standardization with train-split stats, 80/20 split.
// Requires dim >= num_classes (means sit on a scaled standard basis).
std::pair<Dataset, Dataset> make_synthetic(int num_classes, Index dim,
                                           int samples_per_class, double separation,
                                           uint64_t seed);

// Per-feature z-scoring computed on `train` and applied to both splits.
// Zero-variance features are centered only.
void standardize_features(MatF& train, MatF& test);

}  // namespace miprune
