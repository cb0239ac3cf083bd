#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "mnb/serialize.hpp"
#include "support/oracles.hpp"

using namespace mnb;

namespace {

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

Model random_model(std::uint64_t seed) {
  SplitRng rng = SplitRng(seed).stream("init");
  Model model({DenseLayer{5, 7}, BatchNormLayer{7}, ReluLayer{}, DenseLayer{7, 4}, ReluLayer{}},
              {3, 1, 4}, rng, 0.1);
  // perturb the BN stats so the round trip covers non-default values
  auto& stats = model.bn_stats()[0];
  for (std::size_t i = 0; i < stats.running_mean.size(); ++i) {
    stats.running_mean[i] = rng.normal();
    stats.running_var[i] = 1.0 + rng.next_double();
  }
  return model;
}

void corrupt_byte(const std::filesystem::path& path, std::size_t offset, char value) {
  std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
  f.seekp(static_cast<std::streamoff>(offset));
  f.write(&value, 1);
}

void truncate_to(const std::filesystem::path& path, std::size_t size) {
  std::filesystem::resize_file(path, size);
}

}  // namespace

TEST_SUITE_BEGIN("serialize");

TEST_CASE("parameter sets round-trip bitwise") {
  const ParameterSet params = oracles::random_parameter_set(7);
  const auto path = temp_file("mnb_params.mnbw");
  save_parameter_set(params, path);
  const ParameterSet loaded = load_parameter_set(path);
  CHECK(oracles::bitwise_equal(params, loaded));
  std::filesystem::remove(path);
}

TEST_CASE("models round-trip bitwise including stats and class ids") {
  const Model model = random_model(11);
  const auto path = temp_file("mnb_model.mnbw");
  save_model(model, path);
  const Model loaded = load_model(path);

  CHECK(oracles::bitwise_equal(model.trainable_params(), loaded.trainable_params()));
  CHECK(model.class_ids() == loaded.class_ids());
  CHECK(model.bn_momentum() == loaded.bn_momentum());
  CHECK(oracles::bitwise_equal(model.bn_stats()[0].running_mean,
                               loaded.bn_stats()[0].running_mean));
  CHECK(oracles::bitwise_equal(model.bn_stats()[0].running_var,
                               loaded.bn_stats()[0].running_var));
  CHECK(is_model_checkpoint(path));

  // a second save of the loaded model reproduces the file byte for byte
  const auto path2 = temp_file("mnb_model2.mnbw");
  save_model(loaded, path2);
  CHECK(oracles::read_file_bytes(path) == oracles::read_file_bytes(path2));
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

TEST_CASE("corrupted magic is rejected at offset zero") {
  const auto path = temp_file("mnb_badmagic.mnbw");
  save_parameter_set(oracles::random_parameter_set(13), path);
  corrupt_byte(path, 0, 'X');
  try {
    load_parameter_set(path);
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(e.offset() == 0);
  }
  std::filesystem::remove(path);
}

TEST_CASE("unsupported version is rejected") {
  const auto path = temp_file("mnb_badversion.mnbw");
  save_parameter_set(oracles::random_parameter_set(17), path);
  corrupt_byte(path, 4, 9);
  CHECK_THROWS_AS(load_parameter_set(path), FormatError);
  std::filesystem::remove(path);
}

TEST_CASE("truncation mid-tensor reports the offset") {
  const auto path = temp_file("mnb_trunc.mnbw");
  save_parameter_set(oracles::random_parameter_set(19), path);
  const std::size_t full = std::filesystem::file_size(path);
  truncate_to(path, full - 11);
  try {
    load_parameter_set(path);
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(e.offset() <= full - 11);
    CHECK(e.offset() > 0);
  }
  std::filesystem::remove(path);
}

TEST_CASE("trailing bytes after the entries are rejected") {
  const auto path = temp_file("mnb_trailing.mnbw");
  save_parameter_set(oracles::random_parameter_set(23), path);
  std::ofstream(path, std::ios::binary | std::ios::app) << "junk";
  CHECK_THROWS_AS(load_parameter_set(path), FormatError);
  std::filesystem::remove(path);
}

TEST_CASE("model loader rejects a bare parameter-set file") {
  const auto path = temp_file("mnb_notmodel.mnbw");
  save_parameter_set(oracles::random_parameter_set(29), path);
  CHECK_THROWS_AS(load_model(path), FormatError);
  CHECK_FALSE(is_model_checkpoint(path));
  std::filesystem::remove(path);
}

TEST_SUITE_END();
