#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "mnb/experiment.hpp"
#include "mnb/serialize.hpp"
#include "support/oracles.hpp"

using namespace mnb;

namespace {

ExperimentConfig tiny_config() {
  ExperimentConfig config;
  config.num_classes = 6;
  config.blob_dim = 4;
  config.blob_train_per_class = 10;
  config.blob_test_per_class = 5;
  config.blob_separation = 5.0;
  config.stages = 3;
  config.hidden_dims = {8};
  config.epochs = 2;
  config.batch_size = 8;
  config.memory_per_class = 2;
  config.seed = 3;
  return config;
}

std::filesystem::path fresh_dir(const char* name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_SUITE_BEGIN("experiment");

TEST_CASE("presets map onto the expected hook combinations") {
  ExperimentConfig config = tiny_config();

  config.method = MethodPreset::kFinetune;
  StageConfig stage = stage_config_of(config);
  CHECK_FALSE(stage.enable_inter);
  CHECK_FALSE(stage.enable_intra);
  CHECK_FALSE(stage.enable_bound);

  config.method = MethodPreset::kMnb;
  stage = stage_config_of(config);
  CHECK(stage.enable_inter);
  CHECK(stage.enable_intra);
  CHECK(stage.enable_bound);
  CHECK_FALSE(stage.ema_alpha.has_value());

  config.method = MethodPreset::kMnbNoInter;
  stage = stage_config_of(config);
  CHECK_FALSE(stage.enable_inter);
  CHECK(stage.enable_intra);
  CHECK(stage.enable_bound);

  config.method = MethodPreset::kMnbNoIntra;
  stage = stage_config_of(config);
  CHECK(stage.enable_inter);
  CHECK_FALSE(stage.enable_intra);
  CHECK(stage.enable_bound);

  config.method = MethodPreset::kMnbNoBound;
  stage = stage_config_of(config);
  CHECK(stage.enable_inter);
  CHECK(stage.enable_intra);
  CHECK_FALSE(stage.enable_bound);

  config.method = MethodPreset::kMnbEma;
  stage = stage_config_of(resolved(config));
  CHECK(stage.enable_inter);
  CHECK(stage.ema_alpha == 0.9);  // defaulted smoothing factor
}

TEST_CASE("run writes the full artifact set") {
  ExperimentConfig config = tiny_config();
  const auto dir = fresh_dir("mnb_run_artifacts");
  config.out_dir = dir.string();
  const RunResult result = run_experiment(config);

  CHECK(std::filesystem::exists(dir / "metrics.csv"));
  CHECK(std::filesystem::exists(dir / "task_cosine.csv"));
  CHECK(std::filesystem::exists(dir / "cka_1.csv"));
  CHECK(std::filesystem::exists(dir / "cka_2.csv"));
  CHECK(std::filesystem::exists(dir / "resolved_config.cfg"));
  for (std::size_t k = 1; k <= 3; ++k) {
    CHECK(std::filesystem::exists(dir / ("stage_" + std::to_string(k) + ".mnbw")));
    CHECK(is_model_checkpoint(dir / ("stage_" + std::to_string(k) + ".mnbw")));
  }
  for (std::size_t k = 2; k <= 4; ++k) {
    CHECK(std::filesystem::exists(dir / ("base_" + std::to_string(k) + ".mnbw")));
  }

  CHECK(result.log.stages.size() == 3);
  CHECK(result.task_cosine.size() == 3);
  CHECK(result.cka.count(1) == 1);
  CHECK(result.cka.count(2) == 1);
  CHECK(result.cka.at(1).size() == 3);

  // summary values recompute from the log
  CHECK(result.avg_inc_acc == doctest::Approx(average_incremental_accuracy(result.log)));
  std::filesystem::remove_all(dir);
}

TEST_CASE("identical configs give byte-identical artifacts") {
  ExperimentConfig config = tiny_config();
  const auto dir_a = fresh_dir("mnb_det_a");
  const auto dir_b = fresh_dir("mnb_det_b");

  config.out_dir = dir_a.string();
  run_experiment(config);
  config.out_dir = dir_b.string();
  run_experiment(config);

  for (const char* name : {"metrics.csv", "task_cosine.csv", "cka_1.csv", "cka_2.csv",
                           "stage_1.mnbw", "stage_2.mnbw", "stage_3.mnbw", "base_2.mnbw"}) {
    CHECK(oracles::read_file_bytes(dir_a / name) == oracles::read_file_bytes(dir_b / name));
  }
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
}

TEST_CASE("rerunning from the resolved-config echo reproduces the run") {
  ExperimentConfig config = tiny_config();
  const auto dir_a = fresh_dir("mnb_echo_a");
  config.out_dir = dir_a.string();
  run_experiment(config);

  ExperimentConfig from_echo = parse_config_file(dir_a / "resolved_config.cfg");
  const auto dir_b = fresh_dir("mnb_echo_b");
  from_echo.out_dir = dir_b.string();
  run_experiment(from_echo);

  CHECK(oracles::read_file_bytes(dir_a / "metrics.csv") ==
        oracles::read_file_bytes(dir_b / "metrics.csv"));
  CHECK(oracles::read_file_bytes(dir_a / "stage_3.mnbw") ==
        oracles::read_file_bytes(dir_b / "stage_3.mnbw"));
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
}

TEST_CASE("different seeds change the results") {
  ExperimentConfig config = tiny_config();
  const RunResult a = run_experiment(config);
  config.seed = 4;
  const RunResult b = run_experiment(config);
  bool any_difference = false;
  for (std::size_t k = 0; k < a.log.stages.size(); ++k) {
    if (a.log.stages[k].overall_acc != b.log.stages[k].overall_acc) any_difference = true;
  }
  CHECK(any_difference);
}

TEST_CASE("sweep runs one cell per value and matches standalone runs") {
  ExperimentConfig config = tiny_config();
  const auto dir = fresh_dir("mnb_sweep");
  config.out_dir = dir.string();

  const auto cells = run_sweep(config, "bn_strategy", {"OURS", "RESET", "NOCHANGE"});
  CHECK(cells.size() == 3);
  CHECK(std::filesystem::exists(dir / "sweep_summary.csv"));
  CHECK(std::filesystem::exists(dir / "bn_strategy_RESET" / "metrics.csv"));

  const std::string summary = oracles::read_file_bytes(dir / "sweep_summary.csv");
  CHECK(summary.find("axis,value,forgetting,avg_new_acc,avg_inc_acc\n") == 0);
  CHECK(summary.find("bn_strategy,OURS,") != std::string::npos);
  CHECK(summary.find("bn_strategy,RESET,") != std::string::npos);
  CHECK(summary.find("bn_strategy,NOCHANGE,") != std::string::npos);

  // one cell cross-checked against an individually launched run
  ExperimentConfig lone = tiny_config();
  lone.bn_strategy = BnStrategy::kReset;
  const auto lone_dir = fresh_dir("mnb_sweep_lone");
  lone.out_dir = lone_dir.string();
  run_experiment(lone);
  CHECK(oracles::read_file_bytes(dir / "bn_strategy_RESET" / "metrics.csv") ==
        oracles::read_file_bytes(lone_dir / "metrics.csv"));

  std::filesystem::remove_all(dir);
  std::filesystem::remove_all(lone_dir);
}

TEST_CASE("sweep rejects unknown axes and empty value lists") {
  const ExperimentConfig config = tiny_config();
  CHECK_THROWS_AS(run_sweep(config, "lr", {"0.1"}), ConfigError);
  CHECK_THROWS_AS(run_sweep(config, "e_b", {}), ConfigError);
}

TEST_CASE("config parsing round-trips and rejects junk") {
  const auto path = std::filesystem::temp_directory_path() / "mnb_test.cfg";
  std::ofstream(path) << "# comment\nseed=9\nlr=0.125\nmethod=MNB_NO_BOUND\nhidden_dims=16,8\n";
  ExperimentConfig config = parse_config_file(path);
  CHECK(config.seed == 9);
  CHECK(config.lr == 0.125);
  CHECK(config.method == MethodPreset::kMnbNoBound);
  CHECK(config.hidden_dims == std::vector<std::size_t>{16, 8});

  CHECK_THROWS_AS(apply_override(config, "no_such_key", "1"), ConfigError);
  CHECK_THROWS_AS(apply_override(config, "lr", "fast"), ConfigError);
  CHECK_THROWS_WITH_AS(apply_override(config, "momentum", "1.5"); validate_config(config),
                       doctest::Contains("momentum"), ConfigError);
  std::filesystem::remove(path);

  // echo -> parse -> echo is a fixed point
  const ExperimentConfig base = tiny_config();
  const std::string echo = echo_config(base);
  const auto echo_path = std::filesystem::temp_directory_path() / "mnb_echo.cfg";
  std::ofstream(echo_path) << echo;
  const ExperimentConfig reparsed = parse_config_file(echo_path);
  CHECK(echo_config(reparsed) == echo);
  std::filesystem::remove(echo_path);
}

TEST_SUITE_END();
