#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mnb/harness.hpp"

namespace mnb {

/// Invalid or unparseable experiment configuration; messages name the field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class MethodPreset { kFinetune, kMnb, kMnbNoInter, kMnbNoIntra, kMnbNoBound, kMnbEma };
enum class DatasetKind { kBlobs, kIdx, kCsv };

/// Full description of one run. File form is flat UTF-8 key=value; every key
/// can also be set on the command line as `--key value`. Unknown keys are
/// hard errors.
struct ExperimentConfig {
  // dataset
  DatasetKind dataset = DatasetKind::kBlobs;
  std::size_t num_classes = 10;
  std::size_t blob_dim = 16;
  std::size_t blob_train_per_class = 100;
  std::size_t blob_test_per_class = 50;
  double blob_separation = 6.0;
  std::string idx_train_images, idx_train_labels, idx_test_images, idx_test_labels;
  std::string csv_train, csv_test;

  // task split
  std::size_t stages = 5;
  double initial_fraction = 0.5;

  // model
  std::vector<std::size_t> hidden_dims{64, 64};
  bool use_bn = true;
  double bn_momentum = 0.1;

  // optimization
  std::uint64_t seed = 1;
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double lr = 0.05;
  double momentum = 0.9;

  // merge-and-bound knobs (config keys e_a, e_b, B)
  MethodPreset method = MethodPreset::kMnb;
  std::size_t intra_period = 1;
  std::size_t bound_period = 15;
  double bound_radius = 10.0;
  std::optional<double> ema_alpha;
  BnStrategy bn_strategy = BnStrategy::kOurs;

  // exemplar memory
  std::size_t memory_per_class = 20;
  ExemplarMethod exemplar_method = ExemplarMethod::kHerding;

  // diagnostics and output
  std::vector<std::size_t> cka_baselines;  // empty = {1, ceil(K/2)}
  std::string out_dir;                     // empty = keep results in memory only
};

ExperimentConfig parse_config_file(const std::filesystem::path& path);
void apply_override(ExperimentConfig& config, const std::string& key, const std::string& value);
void validate_config(const ExperimentConfig& config);

/// Copy with derived defaults filled in (EMA smoothing factor for the EMA
/// preset, concrete CKA baseline stages). Echo and execution both use this.
ExperimentConfig resolved(const ExperimentConfig& config);

/// Reparseable key=value dump, keys sorted; running from the echo reproduces
/// the run.
std::string echo_config(const ExperimentConfig& config);

StageConfig stage_config_of(const ExperimentConfig& config);
HarnessConfig harness_config_of(const ExperimentConfig& config);

std::string to_string(MethodPreset method);
std::string to_string(DatasetKind kind);
std::string to_string(BnStrategy strategy);
std::string to_string(ExemplarMethod method);
MethodPreset method_from_string(const std::string& text);
DatasetKind dataset_from_string(const std::string& text);
BnStrategy bn_strategy_from_string(const std::string& text);
ExemplarMethod exemplar_method_from_string(const std::string& text);

}  // namespace mnb
