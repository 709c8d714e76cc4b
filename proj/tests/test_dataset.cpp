#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "miprune/dataset.hpp"
#include "miprune/train.hpp"

using namespace miprune;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::create_directories(dir);
  return dir;
}

// Patterned stand-in for a CIFAR-10 batch: label = record % 10,
// pixel(c) = (record * 7 + c) % 256.
void write_fake_cifar_batch(const std::filesystem::path& file, int salt) {
  std::ofstream os(file, std::ios::binary);
  std::vector<unsigned char> record(3073);
  for (int i = 0; i < 10000; ++i) {
    record[0] = static_cast<unsigned char>((i + salt) % 10);
    for (int c = 0; c < 3072; ++c) {
      record[static_cast<size_t>(c) + 1] =
          static_cast<unsigned char>((i * 7 + c + salt) % 256);
    }
    os.write(reinterpret_cast<const char*>(record.data()),
             static_cast<std::streamsize>(record.size()));
  }
}

void write_fake_cifar_dir(const std::filesystem::path& dir) {
  for (int b = 1; b <= 5; ++b) {
    write_fake_cifar_batch(dir / ("data_batch_" + std::to_string(b) + ".bin"), b);
  }
  write_fake_cifar_batch(dir / "test_batch.bin", 99);
}

}  // namespace

TEST_CASE("make_synthetic: determinism and split sizes") {
  const auto [train_a, test_a] = make_synthetic(4, 8, 100, 3.0, 11);
  const auto [train_b, test_b] = make_synthetic(4, 8, 100, 3.0, 11);
  CHECK(train_a.size() == 4 * 80);
  CHECK(test_a.size() == 4 * 20);
  CHECK(train_a.dim() == 8);
  CHECK(train_a.num_classes == 4);
  CHECK((train_a.features.array() == train_b.features.array()).all());
  CHECK((train_a.labels.array() == train_b.labels.array()).all());
  CHECK((test_a.features.array() == test_b.features.array()).all());
  train_a.validate();
  test_a.validate();
}

TEST_CASE("make_synthetic: well-separated blobs are nearly solvable by a linear model") {
  const auto [train_d, test_d] = make_synthetic(10, 16, 200, 10.0, 7);
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.batch_size = 64;
  cfg.seed = 7;
  // single Identity layer = linear softmax classifier
  const Networkf net = train({16, 10}, train_d, cfg);
  CHECK(evaluate(net, test_d) <= 0.02);
}

TEST_CASE("make_synthetic: zero separation pins error at chance level") {
  const auto [train_d, test_d] = make_synthetic(4, 8, 250, 0.0, 3);
  TrainConfig cfg;
  cfg.epochs = 15;
  cfg.batch_size = 64;
  cfg.seed = 3;
  const Networkf net = train({8, 16, 4}, train_d, cfg);
  const double bayes = 1.0 - 1.0 / 4.0;
  CHECK(std::abs(evaluate(net, test_d) - bayes) <= 0.05);
}

TEST_CASE("make_synthetic: argument validation") {
  CHECK_THROWS_AS(make_synthetic(10, 4, 100, 1.0, 0), InvalidInput);  // dim < classes
  CHECK_THROWS_AS(make_synthetic(1, 4, 100, 1.0, 0), InvalidInput);
  CHECK_THROWS_AS(make_synthetic(3, 4, 100, -1.0, 0), InvalidInput);
}

TEST_CASE("generic dataset io: round trip") {
  const auto [train_d, test_d] = make_synthetic(3, 5, 40, 2.0, 21);
  const auto path = std::filesystem::temp_directory_path() / "miprune_data.bin";
  save_dataset(train_d, path);
  const Dataset loaded = load_dataset(path);
  CHECK(loaded.num_classes == train_d.num_classes);
  CHECK(loaded.size() == train_d.size());
  CHECK(loaded.dim() == train_d.dim());
  CHECK((loaded.features.array() == train_d.features.array()).all());
  CHECK((loaded.labels.array() == train_d.labels.array()).all());
  std::filesystem::remove(path);
}

TEST_CASE("generic dataset io: format errors") {
  const auto path = std::filesystem::temp_directory_path() / "miprune_data_bad.bin";
  SUBCASE("bad magic") {
    std::ofstream os(path, std::ios::binary);
    os << "JUNKJUNKJUNKJUNKJUNK";
    os.close();
    CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("magic"), FormatError);
  }
  SUBCASE("zero samples") {
    std::ofstream os(path, std::ios::binary);
    os << "MIPD";
    const unsigned char rest[] = {1, 0, 0, 0,   // version
                                  0, 0, 0, 0,   // num = 0
                                  4, 0, 0, 0,   // dim
                                  2, 0, 0, 0};  // classes
    os.write(reinterpret_cast<const char*>(rest), sizeof(rest));
    os.close();
    CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("dimensions"), FormatError);
  }
  SUBCASE("truncated features") {
    const auto [train_d, test_d] = make_synthetic(3, 5, 40, 2.0, 2);
    save_dataset(test_d, path);
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 32);
    CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("truncated"), FormatError);
  }
  std::filesystem::remove(path);
}

TEST_CASE("cifar10: loads format-defined counts and standardizes") {
  const auto dir = temp_dir("miprune_fake_cifar");
  write_fake_cifar_dir(dir);
  const auto [train_d, test_d] = load_cifar10_binary(dir);
  CHECK(train_d.size() == 50000);
  CHECK(test_d.size() == 10000);
  CHECK(train_d.dim() == 3072);
  CHECK(train_d.num_classes == 10);
  CHECK(train_d.labels.minCoeff() >= 0);
  CHECK(train_d.labels.maxCoeff() <= 9);
  // per-feature standardization on the train split
  for (Index c : {Index(0), Index(1536), Index(3071)}) {
    const double mean = train_d.features.col(c).cast<double>().mean();
    const double var =
        (train_d.features.col(c).cast<double>().array() - mean).square().mean();
    CHECK(std::abs(mean) <= 1e-3);
    CHECK(std::abs(std::sqrt(var) - 1.0) <= 1e-3);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("cifar10: wrong batch size is a format error naming the file") {
  const auto dir = temp_dir("miprune_fake_cifar_bad");
  write_fake_cifar_dir(dir);
  std::filesystem::resize_file(dir / "data_batch_3.bin", 1000);
  CHECK_THROWS_WITH_AS(load_cifar10_binary(dir), doctest::Contains("data_batch_3.bin"),
                       FormatError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("cifar10: bad label byte is a format error") {
  const auto dir = temp_dir("miprune_fake_cifar_lbl");
  write_fake_cifar_dir(dir);
  // corrupt the first record's label of batch 1
  std::fstream fs(dir / "data_batch_1.bin",
                  std::ios::binary | std::ios::in | std::ios::out);
  fs.put(static_cast<char>(250));
  fs.close();
  CHECK_THROWS_WITH_AS(load_cifar10_binary(dir), doctest::Contains("label"), FormatError);
  std::filesystem::remove_all(dir);
}
