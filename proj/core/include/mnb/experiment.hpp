#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mnb/config.hpp"
#include "mnb/harness.hpp"
#include "mnb/metrics.hpp"

namespace mnb {

struct RunResult {
  MetricsLog log;
  double avg_inc_acc = 0.0;
  double forgetting = 0.0;
  double avg_new_acc = 0.0;
  std::vector<std::vector<double>> task_cosine;
  std::map<std::size_t, std::vector<std::vector<double>>> cka;  // baseline stage -> matrix
  std::vector<StageReport> stage_reports;
  std::filesystem::path out_dir;  // empty when nothing was written
};

/// Executes one full class-incremental run: dataset provision, task split,
/// stages 1..K with evaluation after each, metric summaries and diagnostics.
/// When the config names an output directory it receives metrics.csv,
/// task_cosine.csv, one cka_<b>.csv per baseline stage, per-stage checkpoints
/// (stage_<k>.mnbw, base_<k+1>.mnbw) and the resolved-config echo.
RunResult run_experiment(const ExperimentConfig& config);

struct SweepCell {
  std::string value;
  RunResult result;
};

inline constexpr const char* kSweepAxes[] = {"ema_alpha", "e_a", "e_b", "B",
                                             "bn_strategy", "method"};

/// Runs one independent experiment per value of the axis. Each run lands in
/// <out_dir>/<axis>_<value>/ and a sweep_summary.csv joins every value to its
/// headline metrics.
std::vector<SweepCell> run_sweep(const ExperimentConfig& base, const std::string& axis,
                                 const std::vector<std::string>& values);

}  // namespace mnb
