#include "mnb/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <optional>

#include "mnb/serialize.hpp"

namespace mnb {

namespace {

std::pair<Dataset, Dataset> provide_data(const ExperimentConfig& cfg) {
  switch (cfg.dataset) {
    case DatasetKind::kBlobs: {
      const std::uint64_t blob_seed = SplitRng(cfg.seed).stream("data").stream("blobs").seed();
      return gen_blobs(cfg.num_classes, cfg.blob_dim, cfg.blob_train_per_class,
                       cfg.blob_test_per_class, cfg.blob_separation, blob_seed);
    }
    case DatasetKind::kIdx:
      return {load_idx(cfg.idx_train_images, cfg.idx_train_labels, Split::kTrain),
              load_idx(cfg.idx_test_images, cfg.idx_test_labels, Split::kTest)};
    case DatasetKind::kCsv:
      return {load_csv(cfg.csv_train, Split::kTrain), load_csv(cfg.csv_test, Split::kTest)};
  }
  throw ConfigError("key 'dataset': unhandled dataset kind");
}

Tensor extract_test_features(const Model& model, const Dataset& test) {
  Tensor features({test.size(), model.feature_dim()});
  constexpr std::size_t kBatch = 256;
  for (std::size_t start = 0; start < test.size(); start += kBatch) {
    const std::size_t stop = std::min(test.size(), start + kBatch);
    std::vector<std::size_t> indices(stop - start);
    for (std::size_t i = start; i < stop; ++i) indices[i - start] = i;
    const Tensor chunk = forward_eval(model, test.gather(indices)).features;
    std::copy(chunk.values().begin(), chunk.values().end(),
              features.data() + start * model.feature_dim());
  }
  return features;
}

Tensor gather_rows(const Tensor& matrix, const std::vector<std::size_t>& rows) {
  const std::size_t cols = matrix.dim(1);
  Tensor out({rows.size(), cols});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(matrix.data() + rows[i] * cols, matrix.data() + (rows[i] + 1) * cols,
              out.data() + i * cols);
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << text;
}

ParameterSet base_checkpoint(const BaseModelState& base) {
  ParameterSet out = base.theta;
  out.add("head.weight", base.phi.weight);
  out.add("head.bias", base.phi.bias);
  return out;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& raw_config) {
  const ExperimentConfig cfg = resolved(raw_config);
  validate_config(cfg);

  const auto [train, test] = provide_data(cfg);
  const std::uint64_t order_seed = SplitRng(cfg.seed).stream("data").stream("order").seed();
  TaskSequence tasks =
      build_task_sequence(train, test, cfg.stages, order_seed, cfg.initial_fraction);
  CilHarness harness(&train, &test, std::move(tasks), harness_config_of(cfg), cfg.seed);

  RunResult result;
  const bool write_artifacts = !cfg.out_dir.empty();
  if (write_artifacts) {
    result.out_dir = cfg.out_dir;
    std::filesystem::create_directories(result.out_dir);
    write_text_file(result.out_dir / "resolved_config.cfg", echo_config(cfg));
  }

  std::vector<Tensor> stage_features;  // test-set features per finalized stage
  std::optional<StageState> prev;
  for (std::size_t k = 1; k <= cfg.stages; ++k) {
    StageState state = harness.init_stage(k, prev ? &*prev : nullptr);
    const std::vector<double> start = state.model.extractor_params().flatten();
    result.stage_reports.push_back(harness.run_stage(state));
    const std::vector<double> end = state.model.extractor_params().flatten();

    std::vector<double> update(end.size());
    for (std::size_t i = 0; i < end.size(); ++i) update[i] = end[i] - start[i];
    result.log.update_vectors.push_back(std::move(update));
    result.log.stages.push_back(harness.evaluate(state.model, k));
    stage_features.push_back(extract_test_features(state.model, test));

    if (write_artifacts) {
      save_model(state.model, result.out_dir / ("stage_" + std::to_string(k) + ".mnbw"));
      if (state.next_base) {
        save_parameter_set(base_checkpoint(*state.next_base),
                           result.out_dir / ("base_" + std::to_string(k + 1) + ".mnbw"));
      }
    }
    prev = std::move(state);
  }

  result.avg_inc_acc = average_incremental_accuracy(result.log);
  result.forgetting = forgetting(result.log);
  result.avg_new_acc = average_new_accuracy(result.log);
  result.task_cosine = task_update_cosine_matrix(result.log.update_vectors);

  for (std::size_t b : cfg.cka_baselines) {
    std::vector<std::size_t> rows;
    for (std::size_t k = 1; k <= b; ++k) {
      const auto& test_idx = harness.tasks().test_indices[k - 1];
      rows.insert(rows.end(), test_idx.begin(), test_idx.end());
    }
    std::vector<Tensor> sliced;
    sliced.reserve(cfg.stages);
    for (const Tensor& features : stage_features) sliced.push_back(gather_rows(features, rows));
    std::vector<std::vector<double>> matrix(cfg.stages, std::vector<double>(cfg.stages, 1.0));
    for (std::size_t i = 0; i < cfg.stages; ++i) {
      for (std::size_t j = i + 1; j < cfg.stages; ++j) {
        matrix[i][j] = matrix[j][i] = linear_cka(sliced[i], sliced[j]);
      }
    }
    result.cka[b] = std::move(matrix);
  }

  if (write_artifacts) {
    std::ofstream metrics(result.out_dir / "metrics.csv", std::ios::binary | std::ios::trunc);
    write_metrics_csv(metrics, result.log);
    std::ofstream cosine(result.out_dir / "task_cosine.csv", std::ios::binary | std::ios::trunc);
    write_matrix_csv(cosine, result.task_cosine);
    for (const auto& [b, matrix] : result.cka) {
      std::ofstream cka(result.out_dir / ("cka_" + std::to_string(b) + ".csv"),
                        std::ios::binary | std::ios::trunc);
      write_matrix_csv(cka, matrix);
    }
  }
  return result;
}

std::vector<SweepCell> run_sweep(const ExperimentConfig& base, const std::string& axis,
                                 const std::vector<std::string>& values) {
  const bool known = std::any_of(std::begin(kSweepAxes), std::end(kSweepAxes),
                                 [&](const char* a) { return axis == a; });
  if (!known) throw ConfigError("unknown sweep axis '" + axis + "'");
  if (values.empty()) throw ConfigError("sweep needs at least one value");

  std::vector<SweepCell> cells;
  for (const std::string& value : values) {
    ExperimentConfig cfg = base;
    apply_override(cfg, axis, value);
    if (!base.out_dir.empty()) {
      cfg.out_dir = (std::filesystem::path(base.out_dir) / (axis + "_" + value)).string();
    }
    cells.push_back(SweepCell{value, run_experiment(cfg)});
  }

  if (!base.out_dir.empty()) {
    std::filesystem::create_directories(base.out_dir);
    std::ofstream summary(std::filesystem::path(base.out_dir) / "sweep_summary.csv",
                          std::ios::binary | std::ios::trunc);
    summary << "axis,value,forgetting,avg_new_acc,avg_inc_acc\n";
    for (const SweepCell& cell : cells) {
      summary << axis << ',' << cell.value << ',' << format_double(cell.result.forgetting) << ','
              << format_double(cell.result.avg_new_acc) << ','
              << format_double(cell.result.avg_inc_acc) << '\n';
    }
  }
  return cells;
}

}  // namespace mnb
