#include "miprune/dataset.hpp"

#include <cstdint>
#include <string>
#include <vector>

#include "miprune/errors.hpp"
#include "miprune/io_util.hpp"
#include "miprune/rng.hpp"

namespace miprune {

namespace {
constexpr std::array<char, 4> kMagic = {'M', 'I', 'P', 'D'};
constexpr uint32_t kVersion = 1;
constexpr uint32_t kMaxDim = 1u << 24;

constexpr Index kCifarDim = 3072;
constexpr Index kCifarPerBatch = 10000;
constexpr uintmax_t kCifarBatchBytes = 30730000;  // 10000 * (1 + 3072)
}  // namespace

void Dataset::validate() const {
  if (features.rows() != labels.size()) {
    throw InvalidInput("dataset has " + std::to_string(features.rows()) +
                       " feature rows but " + std::to_string(labels.size()) + " labels");
  }
  if (num_classes < 1) throw InvalidInput("dataset num_classes must be >= 1");
  for (Index i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) {
      throw InvalidInput("label " + std::to_string(labels[i]) + " at row " +
                         std::to_string(i) + " outside [0, " +
                         std::to_string(num_classes) + ")");
    }
  }
}

void standardize_features(MatF& train, MatF& test) {
  const Index dim = train.cols();
  const double n = static_cast<double>(train.rows());
  for (Index c = 0; c < dim; ++c) {
    const double mean = train.col(c).cast<double>().sum() / n;
    const double var =
        (train.col(c).cast<double>().array() - mean).square().sum() / n;
    const double sd = std::sqrt(var);
    const float fmean = static_cast<float>(mean);
    const float fscale = sd > 0.0 ? static_cast<float>(1.0 / sd) : 1.0f;
    train.col(c) = (train.col(c).array() - fmean) * fscale;
    if (test.cols() == dim && test.rows() > 0) {
      test.col(c) = (test.col(c).array() - fmean) * fscale;
    }
  }
}

namespace {
void read_cifar_batch(const std::filesystem::path& file, MatF& features, VecI& labels,
                      Index row_offset) {
  std::error_code ec;
  const uintmax_t size = std::filesystem::file_size(file, ec);
  if (ec) throw FormatError("cannot stat " + file.string());
  if (size != kCifarBatchBytes) {
    throw FormatError("CIFAR-10 batch " + file.string() + " has " +
                      std::to_string(size) + " bytes, expected " +
                      std::to_string(kCifarBatchBytes));
  }
  auto is = open_input(file);
  std::vector<unsigned char> record(1 + kCifarDim);
  for (Index i = 0; i < kCifarPerBatch; ++i) {
    read_bytes(is, record.data(), record.size(), "CIFAR-10 record in " + file.string());
    const int label = record[0];
    if (label > 9) {
      throw FormatError("CIFAR-10 label " + std::to_string(label) + " in " +
                        file.string());
    }
    labels[row_offset + i] = label;
    for (Index c = 0; c < kCifarDim; ++c) {
      features(row_offset + i, c) = static_cast<float>(record[c + 1]) / 255.0f;
    }
  }
}
}  // namespace

std::pair<Dataset, Dataset> load_cifar10_binary(const std::filesystem::path& dir) {
  Dataset train, test;
  train.split = Split::Train;
  test.split = Split::Test;
  train.num_classes = test.num_classes = 10;
  train.features.resize(5 * kCifarPerBatch, kCifarDim);
  train.labels.resize(5 * kCifarPerBatch);
  test.features.resize(kCifarPerBatch, kCifarDim);
  test.labels.resize(kCifarPerBatch);
  for (int b = 0; b < 5; ++b) {
    read_cifar_batch(dir / ("data_batch_" + std::to_string(b + 1) + ".bin"),
                     train.features, train.labels, b * kCifarPerBatch);
  }
  read_cifar_batch(dir / "test_batch.bin", test.features, test.labels, 0);
  standardize_features(train.features, test.features);
  return {std::move(train), std::move(test)};
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  data.validate();
  if (data.size() == 0) throw InvalidInput("refusing to save an empty dataset");
  auto os = open_output(path);
  write_magic(os, kMagic);
  write_u32(os, kVersion);
  write_u32(os, static_cast<uint32_t>(data.size()));
  write_u32(os, static_cast<uint32_t>(data.dim()));
  write_u32(os, static_cast<uint32_t>(data.num_classes));
  for (Index i = 0; i < data.labels.size(); ++i) {
    write_u32(os, static_cast<uint32_t>(data.labels[i]));
  }
  write_bytes(os, data.features.data(), sizeof(float) * data.features.size());
  if (!os) throw FormatError("failed writing dataset to " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  auto is = open_input(path);
  const std::string what = "dataset " + path.string();
  expect_magic(is, kMagic, what);
  const uint32_t version = read_u32(is, what + " version");
  if (version != kVersion) {
    throw FormatError("unsupported dataset version " + std::to_string(version) +
                      " in " + path.string());
  }
  const uint32_t num = read_u32(is, what + " sample count");
  const uint32_t dim = read_u32(is, what + " feature dim");
  const uint32_t classes = read_u32(is, what + " class count");
  if (num < 1 || dim < 1 || classes < 1 || num > kMaxDim || dim > kMaxDim) {
    throw FormatError("inconsistent dimensions in " + path.string());
  }
  Dataset data;
  data.num_classes = static_cast<int>(classes);
  data.labels.resize(num);
  for (uint32_t i = 0; i < num; ++i) {
    const uint32_t label = read_u32(is, what + " labels");
    if (label >= classes) {
      throw FormatError("label " + std::to_string(label) + " out of range in " +
                        path.string());
    }
    data.labels[static_cast<Index>(i)] = static_cast<int>(label);
  }
  data.features.resize(num, dim);
  read_bytes(is, data.features.data(), sizeof(float) * data.features.size(),
             what + " features");
  return data;
}

std::pair<Dataset, Dataset> make_synthetic(int num_classes, Index dim,
                                           int samples_per_class, double separation,
                                           uint64_t seed) {
  if (num_classes < 2) throw InvalidInput("synthetic data needs >= 2 classes");
  if (dim < num_classes) {
    throw InvalidInput("synthetic data needs dim >= num_classes (means sit on the "
                       "standard basis)");
  }
  if (samples_per_class < 5) throw InvalidInput("need >= 5 samples per class");
  if (separation < 0.0) throw InvalidInput("separation must be >= 0");

  // Mean of class k is (separation / sqrt(2)) * e_k, so all pairs of means
  // are exactly `separation` apart.
  const double mean_coord = separation / std::sqrt(2.0);
  Rng rng(seed);
  const int train_per_class = (samples_per_class * 8) / 10;
  const int test_per_class = samples_per_class - train_per_class;

  Dataset train, test;
  train.split = Split::Train;
  test.split = Split::Test;
  train.num_classes = test.num_classes = num_classes;
  train.features.resize(static_cast<Index>(train_per_class) * num_classes, dim);
  train.labels.resize(train.features.rows());
  test.features.resize(static_cast<Index>(test_per_class) * num_classes, dim);
  test.labels.resize(test.features.rows());

  Index train_row = 0, test_row = 0;
  for (int k = 0; k < num_classes; ++k) {
    for (int s = 0; s < samples_per_class; ++s) {
      const bool is_train = s < train_per_class;
      MatF& dst = is_train ? train.features : test.features;
      const Index row = is_train ? train_row : test_row;
      for (Index c = 0; c < dim; ++c) {
        double v = rng.normal();
        if (c == static_cast<Index>(k)) v += mean_coord;
        dst(row, c) = static_cast<float>(v);
      }
      if (is_train) {
        train.labels[train_row++] = k;
      } else {
        test.labels[test_row++] = k;
      }
    }
  }
  standardize_features(train.features, test.features);
  return {std::move(train), std::move(test)};
}

}  // namespace miprune
